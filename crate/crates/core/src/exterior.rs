//! Heat kernels of Brownian motion killed on entering a closed ball `B̄(0,R)`.
//!
//! In d=1 the kernel is the reflection formula on each half-line. For `d ≥ 2`
//! it is the free kernel times the probability that a Brownian bridge avoids
//! the ball, estimated by simulation.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::envelopes::psi;
use crate::error::{Error, Result};
use crate::mc::{derive_seed, run_paths, McConfig, McEstimate, PathOutcome, MAX_DIM};
use crate::specfun::{gaussian_q, log_gaussian_q};
use crate::verify::{golden_min, GridSpec, RatioEntry, RatioReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExteriorDomain {
    pub radius: f64,
    pub d: usize,
}

impl ExteriorDomain {
    pub fn new(radius: f64, d: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::domain("ExteriorDomain", format!("R={radius} must be positive")));
        }
        if d == 0 || d > MAX_DIM {
            return Err(Error::domain("ExteriorDomain", format!("d={d} must lie in 1..={MAX_DIM}")));
        }
        Ok(ExteriorDomain { radius, d })
    }

    fn check_outside(&self, what: &'static str, x: &[f64]) -> Result<f64> {
        if x.len() != self.d {
            return Err(Error::domain(what, format!("expected {} coordinates", self.d)));
        }
        let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(r > self.radius) || !r.is_finite() {
            return Err(Error::domain(what, format!("|x|={r} must exceed R={}", self.radius)));
        }
        Ok(r)
    }
}

fn q1(t: f64, z: f64) -> f64 {
    (4.0 * std::f64::consts::PI * t).powf(-0.5) * (-z * z / (4.0 * t)).exp()
}

/// `q(t,x,y) − q(t,x,2R−y)` for `x, y > R`; mirrored for `x, y < −R`; zero when
/// the points lie on opposite sides of the ball.
pub fn dhk_exact_1d(big_r: f64, t: f64, x: f64, y: f64) -> Result<f64> {
    if !(big_r > 0.0) || !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain("dhk_exact_1d", format!("need R>0 and t>0, got R={big_r}, t={t}")));
    }
    if !(x.abs() > big_r) || !(y.abs() > big_r) {
        return Err(Error::domain("dhk_exact_1d", format!("points x={x}, y={y} must satisfy |x|,|y| > R={big_r}")));
    }
    if x * y < 0.0 {
        return Ok(0.0);
    }
    let (x, y) = (x.abs(), y.abs());
    // The difference of Gaussians loses digits when both are close; factor it.
    // q(x−y) − q(x+y−2R) = q(x−y)·(1 − exp(−(x−R)(y−R)/t)).
    let gap = (x - big_r) * (y - big_r) / t;
    Ok(q1(t, x - y) * -(-gap).exp_m1())
}

/// Probability that a bridge segment between two points outside the ball, at
/// distances `a` and `b` from its surface, touches it: the half-space formula
/// against the tangent plane.
fn crossing_probability(a: f64, b: f64, dt: f64) -> f64 {
    (-a * b / dt).exp()
}

struct Bridge<'a> {
    dom: &'a ExteriorDomain,
    budget: u64,
    segments: u64,
    exhausted: bool,
}

impl Bridge<'_> {
    fn norm(&self, p: &[f64; MAX_DIM]) -> f64 {
        p[..self.dom.d].iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Survival factor of the segment `a → b`, or `None` if the path enters the ball.
    fn segment(
        &mut self,
        rng: &mut ChaCha8Rng,
        a: &[f64; MAX_DIM],
        da: f64,
        b: &[f64; MAX_DIM],
        db: f64,
        dt: f64,
    ) -> Option<f64> {
        if db <= 0.0 {
            return None;
        }
        if self.dom.d == 1 && a[0] * b[0] < 0.0 {
            return None;
        }
        self.segments += 1;
        let near = da.min(db);
        let refine = dt > near * near / 16.0 && self.dom.d >= 2;
        if refine && self.segments <= self.budget {
            let mut mid = [0.0; MAX_DIM];
            let sd = (0.5 * dt).sqrt();
            for i in 0..self.dom.d {
                let z: f64 = rng.sample(StandardNormal);
                mid[i] = 0.5 * (a[i] + b[i]) + sd * z;
            }
            let dm = self.norm(&mid) - self.dom.radius;
            let left = self.segment(rng, a, da, &mid, dm, 0.5 * dt)?;
            let right = self.segment(rng, &mid, dm, b, db, 0.5 * dt)?;
            return Some(left * right);
        }
        if refine {
            self.exhausted = true;
        }
        Some(1.0 - crossing_probability(da, db, dt))
    }
}

/// Monte Carlo Dirichlet heat kernel outside `B̄(0,R)`.
pub fn dhk_bridge_mc(dom: &ExteriorDomain, t: f64, x: &[f64], y: &[f64], cfg: &McConfig) -> Result<McEstimate> {
    cfg.validate()?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain("dhk_bridge_mc", format!("t={t} must be positive")));
    }
    dom.check_outside("dhk_bridge_mc", x)?;
    dom.check_outside("dhk_bridge_mc", y)?;
    let q = gaussian_q(dom.d, t, x, y)?;
    if dom.d == 1 && x[0] * y[0] < 0.0 {
        return Ok(McEstimate::exact(0.0, cfg.paths));
    }
    let d = dom.d;
    let mut x0 = [0.0; MAX_DIM];
    let mut y0 = [0.0; MAX_DIM];
    x0[..d].copy_from_slice(x);
    y0[..d].copy_from_slice(y);
    let n = ((t / cfg.dt).ceil() as usize).max(1);
    let h = t / n as f64;
    let est = run_paths(cfg, |rng: &mut ChaCha8Rng| {
        let mut br = Bridge {
            dom,
            budget: cfg.max_segments,
            segments: 0,
            exhausted: false,
        };
        let mut a = x0;
        let mut da = br.norm(&a) - dom.radius;
        let mut w = 1.0;
        for k in 0..n {
            let b = if k + 1 == n {
                y0
            } else {
                let remaining = t - k as f64 * h;
                let frac = h / remaining;
                let sd = (2.0 * h * (remaining - h) / remaining).sqrt();
                let mut b = a;
                for i in 0..d {
                    let z: f64 = rng.sample(StandardNormal);
                    b[i] += frac * (y0[i] - a[i]) + sd * z;
                }
                b
            };
            let db = br.norm(&b) - dom.radius;
            match br.segment(rng, &a, da, &b, db, h) {
                Some(f) => w *= f,
                None => {
                    return PathOutcome {
                        weight: 0.0,
                        exhausted: br.exhausted,
                    }
                }
            }
            a = b;
            da = db;
        }
        PathOutcome {
            weight: w,
            exhausted: br.exhausted,
        }
    });
    Ok(est.scaled(q))
}

/// Exterior kernel from the exact formula (d=1) or bridge simulation.
fn exterior_kernel(dom: &ExteriorDomain, t: f64, x: &[f64], y: &[f64], cfg: &McConfig) -> Result<(f64, f64)> {
    if dom.d == 1 {
        Ok((dhk_exact_1d(dom.radius, t, x[0], y[0])?, 0.0))
    } else {
        let e = dhk_bridge_mc(dom, t, x, y, cfg)?;
        Ok((e.mean, e.stderr))
    }
}

/// Ratio of the exterior kernel to `ψ(t,|x|) ψ(t,|y|) q(c t, x, y)` with `c`
/// chosen to minimise the spread of the log-ratio.
pub fn psi_ratio_report(dom: &ExteriorDomain, grid: &GridSpec, cfg: &McConfig) -> Result<RatioReport> {
    let points = grid.points(dom.d)?;
    struct Row {
        t: f64,
        x: Vec<f64>,
        y: Vec<f64>,
        numeric: f64,
        stderr: f64,
        log_psi: f64,
    }
    let mut rows = Vec::with_capacity(points.len());
    let mut skipped = 0;
    for (i, pt) in points.iter().enumerate() {
        let rx = dom.check_outside("psi_ratio_report", &pt.x)?;
        let ry = dom.check_outside("psi_ratio_report", &pt.y)?;
        let point_cfg = McConfig {
            seed: derive_seed(cfg.seed, i as u64),
            ..cfg.clone()
        };
        let (numeric, stderr) = exterior_kernel(dom, pt.t, &pt.x, &pt.y, &point_cfg)?;
        if !(numeric > 0.0) {
            skipped += 1;
            continue;
        }
        let log_psi = psi(dom.d, dom.radius, pt.t, rx)?.ln() + psi(dom.d, dom.radius, pt.t, ry)?.ln();
        rows.push(Row {
            t: pt.t,
            x: pt.x.clone(),
            y: pt.y.clone(),
            numeric,
            stderr,
            log_psi,
        });
    }
    let log_ratios = |c: f64| -> Result<Vec<f64>> {
        rows.iter()
            .map(|r| Ok(r.numeric.ln() - r.log_psi - log_gaussian_q(dom.d, c * r.t, &r.x, &r.y)?))
            .collect()
    };
    let spread_at = |log_c: f64| -> f64 {
        match log_ratios(log_c.exp()) {
            Ok(v) => spread(&v),
            Err(_) => f64::INFINITY,
        }
    };
    let (log_c, _) = golden_min(&spread_at, (0.05f64).ln(), (20.0f64).ln(), 1e-8);
    let c = log_c.exp();
    let ratios = log_ratios(c)?;
    let entries = rows
        .into_iter()
        .zip(ratios)
        .map(|(r, lr)| RatioEntry {
            t: r.t,
            x: r.x,
            y: r.y,
            numeric: r.numeric,
            stderr: r.stderr,
            log_envelope: r.numeric.ln() - lr,
            log_ratio: lr,
        })
        .collect();
    let mut report = RatioReport::from_entries(
        "psi_ratio",
        "exterior",
        entries,
        crate::envelopes::EnvelopeConstants {
            c_gauss: c,
            ..Default::default()
        },
        f64::INFINITY,
    );
    report.skipped = skipped;
    Ok(report)
}

fn spread(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    hi - lo
}
