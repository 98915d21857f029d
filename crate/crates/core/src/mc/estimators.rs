use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_lr};

use super::{derive_seed, run_paths, McConfig, McEstimate, PathSim, Point, MAX_DIM};
use crate::error::{Error, Result};
use crate::mc::paths::Seg;
use crate::potentials::Potential;
use crate::specfun::{dist2, gaussian_q, log_gaussian_q_dist};

fn to_point(d: usize, x: &[f64], what: &'static str) -> Result<Point> {
    if x.len() != d {
        return Err(Error::domain(what, format!("expected {d} coordinates, got {}", x.len())));
    }
    if d > MAX_DIM {
        return Err(Error::domain(what, format!("dimension {d} exceeds {MAX_DIM}")));
    }
    if x.iter().any(|c| !c.is_finite()) {
        return Err(Error::domain(what, "coordinates must be finite"));
    }
    let mut p = [0.0; MAX_DIM];
    p[..d].copy_from_slice(x);
    Ok(p)
}

fn check_time(t: f64, what: &'static str) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(what, format!("t={t} must be positive and finite")))
    }
}

fn base_steps(t: f64, dt: f64) -> (usize, f64) {
    let n = ((t / dt).ceil() as usize).max(1);
    (n, t / n as f64)
}

/// Trapezoid integral of `V` along sampled points, `+∞` if a sample enters the
/// cutoff of a singular potential.
pub fn integrate_potential_along_path(v: &Potential, times: &[f64], points: &[Vec<f64>], r_min: f64) -> Result<f64> {
    if times.len() != points.len() {
        return Err(Error::domain("integrate_potential_along_path", "times and points differ in length"));
    }
    if times.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::domain("integrate_potential_along_path", "times must be nondecreasing"));
    }
    let d = v.params.d;
    let mut vals = Vec::with_capacity(points.len());
    for p in points {
        if p.len() != d {
            return Err(Error::domain("integrate_potential_along_path", "point dimension mismatch"));
        }
        let r = p.iter().map(|c| c * c).sum::<f64>().sqrt();
        if v.singular_at_origin() && r < r_min {
            return Ok(f64::INFINITY);
        }
        vals.push(v.eval(r));
    }
    Ok(times
        .windows(2)
        .zip(vals.windows(2))
        .map(|(t, f)| 0.5 * (t[1] - t[0]) * (f[0] + f[1]))
        .sum())
}

/// `E_x[exp(-∫_0^t V(B_s) ds)]`.
pub fn survival_probability(v: &Potential, x: &[f64], t: f64, cfg: &McConfig) -> Result<McEstimate> {
    cfg.validate()?;
    check_time(t, "survival_probability")?;
    let d = v.params.d;
    let x0 = to_point(d, x, "survival_probability")?;
    let probe = PathSim::new(v, cfg, None);
    let r0 = probe.norm(&x0);
    if probe.cut(r0) {
        return Ok(McEstimate::exact(0.0, cfg.paths));
    }
    let v0 = probe.potential(r0);
    let (n, h) = base_steps(t, cfg.dt);
    let sd = (2.0 * h).sqrt();
    Ok(run_paths(cfg, |rng: &mut ChaCha8Rng| {
        let mut sim = PathSim::new(v, cfg, None);
        sim.start();
        let (mut a, mut ra, mut va) = (x0, r0, v0);
        for _ in 0..n {
            let b = sim.gaussian_step(rng, &a, sd);
            let rb = sim.norm(&b);
            let vb = sim.potential(rb);
            if sim.segment(rng, &a, ra, va, &b, rb, vb, h) == Seg::Killed {
                return sim.killed();
            }
            (a, ra, va) = (b, rb, vb);
        }
        sim.finish()
    }))
}

/// `p(t,x,y) = q(t,x,y) · E[exp(-∫V)]` over Brownian bridges from `x` to `y`.
pub fn heat_kernel(v: &Potential, t: f64, x: &[f64], y: &[f64], cfg: &McConfig) -> Result<McEstimate> {
    let bridge = bridge_factor(v, t, x, y, cfg)?;
    Ok(bridge.scaled(gaussian_q(v.params.d, t, x, y)?))
}

fn bridge_factor(v: &Potential, t: f64, x: &[f64], y: &[f64], cfg: &McConfig) -> Result<McEstimate> {
    cfg.validate()?;
    check_time(t, "heat_kernel")?;
    let d = v.params.d;
    let x0 = to_point(d, x, "heat_kernel")?;
    let y0 = to_point(d, y, "heat_kernel")?;
    let probe = PathSim::new(v, cfg, None);
    let (r0, ry) = (probe.norm(&x0), probe.norm(&y0));
    if probe.cut(r0) || probe.cut(ry) {
        return Ok(McEstimate::exact(0.0, cfg.paths));
    }
    if d == 1 && v.singular_at_origin() && x0[0] * y0[0] <= 0.0 {
        return Ok(McEstimate::exact(0.0, cfg.paths));
    }
    let v0 = probe.potential(r0);
    let vy = probe.potential(ry);
    let (n, h) = base_steps(t, cfg.dt);
    Ok(run_paths(cfg, |rng: &mut ChaCha8Rng| {
        let mut sim = PathSim::new(v, cfg, None);
        sim.start();
        let (mut a, mut ra, mut va) = (x0, r0, v0);
        for k in 0..n {
            let (b, rb, vb) = if k + 1 == n {
                (y0, ry, vy)
            } else {
                let remaining = t - k as f64 * h;
                let frac = h / remaining;
                let mut m = a;
                for i in 0..d {
                    m[i] += frac * (y0[i] - a[i]);
                }
                let sd = (2.0 * h * (remaining - h) / remaining).sqrt();
                let b = sim.gaussian_step(rng, &m, sd);
                let rb = sim.norm(&b);
                (b, rb, sim.potential(rb))
            };
            if sim.segment(rng, &a, ra, va, &b, rb, vb, h) == Seg::Killed {
                return sim.killed();
            }
            (a, ra, va) = (b, rb, vb);
        }
        sim.finish()
    }))
}

/// `E_x[exp(-∫_0^τ V) ; τ ≤ t_cap]` with `τ` the exit time from the open ball of
/// radius `big_r`. `t_cap = None` means no time limit.
pub fn exit_before_death(
    v: &Potential,
    x: &[f64],
    big_r: f64,
    t_cap: Option<f64>,
    cfg: &McConfig,
) -> Result<McEstimate> {
    cfg.validate()?;
    if !(big_r > 0.0) || !big_r.is_finite() {
        return Err(Error::domain("exit_before_death", format!("R={big_r} must be positive")));
    }
    if let Some(tc) = t_cap {
        check_time(tc, "exit_before_death")?;
    }
    let d = v.params.d;
    let x0 = to_point(d, x, "exit_before_death")?;
    let probe = PathSim::new(v, cfg, Some(big_r));
    let r0 = probe.norm(&x0);
    if r0 >= big_r {
        return Ok(McEstimate::exact(1.0, cfg.paths));
    }
    if probe.cut(r0) {
        return Ok(McEstimate::exact(0.0, cfg.paths));
    }
    let v0 = probe.potential(r0);
    let (n_steps, h) = match t_cap {
        Some(tc) => {
            let (n, h) = base_steps(tc, cfg.dt);
            (Some(n), h)
        }
        None => (None, cfg.dt),
    };
    let sd = (2.0 * h).sqrt();
    Ok(run_paths(cfg, |rng: &mut ChaCha8Rng| {
        let mut sim = PathSim::new(v, cfg, Some(big_r));
        sim.start();
        let (mut a, mut ra, mut va) = (x0, r0, v0);
        let mut k = 0usize;
        loop {
            if n_steps.is_some_and(|n| k >= n) || sim.exhausted {
                return sim.killed();
            }
            k += 1;
            let b = sim.gaussian_step(rng, &a, sd);
            let rb = sim.norm(&b);
            let vb = sim.potential(rb);
            match sim.segment(rng, &a, ra, va, &b, rb, vb, h) {
                Seg::Alive => {}
                Seg::Exited => return sim.finish(),
                Seg::Killed => return sim.killed(),
            }
            (a, ra, va) = (b, rb, vb);
        }
    }))
}

/// Green function estimate: the time integral of the Monte Carlo heat kernel
/// plus, for `d ≥ 3`, a tail for `t > t_max`. The tail is the free kernel
/// integrated beyond `t_max` times the bridge survival factor measured at
/// `t_max`, since `p/q` settles to a constant at large times when `d ≥ 3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenEstimate {
    pub estimate: McEstimate,
    /// Contribution added for `t > t_max` (zero when `d ≤ 2`).
    pub tail: f64,
    pub t_max: f64,
    pub nodes: usize,
}

/// `∫_T^∞ q(t, ρ) dt` for `d ≥ 3`.
fn free_tail(d: usize, rho: f64, t_max: f64) -> f64 {
    let s = 0.5 * d as f64 - 1.0;
    let z = rho * rho / (4.0 * t_max);
    let lower = if z == 0.0 { 0.0 } else { gamma(s) * gamma_lr(s, z) };
    if rho == 0.0 {
        // Limit of the expression below as ρ → 0.
        return (4.0 * std::f64::consts::PI).powf(-0.5 * d as f64) * t_max.powf(-s) / s;
    }
    (4.0 * std::f64::consts::PI).powf(-0.5 * d as f64) * (rho * rho / 4.0).powf(-s) * lower
}

pub const GREEN_NODES_PER_DECADE: f64 = 40.0;

pub fn green_mc(v: &Potential, x: &[f64], y: &[f64], cfg: &McConfig, t_max: f64) -> Result<GreenEstimate> {
    cfg.validate()?;
    let d = v.params.d;
    to_point(d, x, "green_mc")?;
    to_point(d, y, "green_mc")?;
    let rho2 = dist2(x, y);
    if rho2 == 0.0 && d >= 2 {
        return Err(Error::domain("green_mc", "the Green function is infinite on the diagonal for d >= 2"));
    }
    let t_lo = if rho2 > 0.0 { rho2 / 32.0 } else { 1e-8 };
    if !(t_max > t_lo) || !t_max.is_finite() {
        return Err(Error::domain("green_mc", format!("t_max={t_max} must exceed {t_lo}")));
    }
    let span = (t_max / t_lo).ln();
    let intervals = ((GREEN_NODES_PER_DECADE * span / std::f64::consts::LN_10).ceil() as usize).max(1);
    let step = span / intervals as f64;
    let mut sum = 0.0;
    let mut var = 0.0;
    let mut zero = 0.0;
    let mut n_total = 0u64;
    let mut exhausted = 0u64;
    let free = if d >= 3 { free_tail(d, rho2.sqrt(), t_max) } else { 0.0 };
    let mut tail = 0.0;
    for i in 0..=intervals {
        let t = t_lo * (step * i as f64).exp();
        let w = if i == 0 || i == intervals { 0.5 * step } else { step } * t;
        let node_cfg = McConfig {
            dt: cfg.dt.max(t / 32.0),
            seed: derive_seed(cfg.seed, i as u64),
            ..cfg.clone()
        };
        let q = log_gaussian_q_dist(d, t, rho2.sqrt())?.exp();
        if q == 0.0 {
            n_total += cfg.paths;
            zero += cfg.paths as f64;
            continue;
        }
        let e = bridge_factor(v, t, x, y, &node_cfg)?;
        let coef = if i == intervals { w * q + free } else { w * q };
        if i == intervals {
            tail = free * e.mean;
        }
        sum += coef * e.mean;
        var += (coef * e.stderr).powi(2);
        zero += e.zero_weight_frac * e.n as f64;
        n_total += e.n;
        exhausted += e.exhausted;
    }
    if d <= 2 {
        log::warn!("green_mc in d={d}: no tail correction, the integral is truncated at t_max={t_max}");
    }
    Ok(GreenEstimate {
        estimate: McEstimate {
            mean: sum,
            stderr: var.sqrt(),
            n: n_total,
            zero_weight_frac: zero / n_total as f64,
            exhausted,
        },
        tail,
        t_max,
        nodes: intervals + 1,
    })
}
