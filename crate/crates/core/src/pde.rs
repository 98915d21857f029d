//! Radial parabolic solver for `∂_t u = u'' + (d-1)/r u' - V(r) u`.
//!
//! The spatial operator is a finite-volume discretisation with flux weight
//! `r^{d-1}`, so it is symmetric in the volume-weighted inner product and the
//! discrete d=1 kernel is exactly symmetric in its two arguments. Nodes are
//! log-spaced near the origin, where `u` behaves like `exp(-√κ/(β r^β))`, and
//! uniform further out.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::Potential;

/// Potential values at or above this are treated as instantaneous killing.
pub const V_CAP: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    CrankNicolson,
    /// TR-BDF2 with `γ = 2 - √2`; L-stable, so stiff modes near the origin are damped.
    TrBdf2,
    ImplicitEuler,
}

impl Scheme {
    pub fn parse(s: &str) -> Result<Scheme> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cn" | "crank_nicolson" => Ok(Scheme::CrankNicolson),
            "trbdf2" | "tr_bdf2" => Ok(Scheme::TrBdf2),
            "ie" | "implicit_euler" => Ok(Scheme::ImplicitEuler),
            other => Err(Error::Parse(format!("unknown scheme {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Boundary {
    /// Zero flux.
    Reflecting,
    /// `u = 0`.
    Absorbing,
    /// `u = value`.
    Dirichlet(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub nodes: Vec<f64>,
    pub dt: f64,
    pub scheme: Scheme,
    pub inner: Boundary,
    pub outer: Boundary,
}

/// Builder for [`RadialGrid`]. Unset radii and step are chosen from the potential and horizon.
#[derive(Debug, Clone)]
pub struct GridBuilder {
    pub per_decade: usize,
    pub outer_spacing: f64,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub dt: Option<f64>,
    pub steps: usize,
    pub scheme: Scheme,
    pub inner: Option<Boundary>,
    pub outer: Boundary,
}

impl Default for GridBuilder {
    fn default() -> Self {
        GridBuilder {
            per_decade: 200,
            outer_spacing: 0.02,
            r_min: None,
            r_max: None,
            dt: None,
            steps: 1000,
            scheme: Scheme::TrBdf2,
            inner: None,
            outer: Boundary::Reflecting,
        }
    }
}

/// Radius where `√κ/(β r^β) = 200`, i.e. where `h` is about `e^{-200}`.
pub fn default_r_min(v: &Potential) -> f64 {
    if v.singular_at_origin() {
        let p = &v.params;
        (p.kappa.sqrt() / (200.0 * p.beta)).powf(1.0 / p.beta).min(0.05)
    } else {
        1e-6
    }
}

/// Smallest outer radius for a reflecting boundary at horizon `t`.
pub fn min_reflecting_radius(t: f64) -> f64 {
    8.0 * t.sqrt() + 1.0
}

impl GridBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn per_decade(mut self, n: usize) -> Self {
        self.per_decade = n;
        self
    }

    pub fn outer_spacing(mut self, h: f64) -> Self {
        self.outer_spacing = h;
        self
    }

    pub fn r_min(mut self, r: f64) -> Self {
        self.r_min = Some(r);
        self
    }

    pub fn r_max(mut self, r: f64) -> Self {
        self.r_max = Some(r);
        self
    }

    pub fn dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn steps(mut self, n: usize) -> Self {
        self.steps = n;
        self
    }

    pub fn scheme(mut self, s: Scheme) -> Self {
        self.scheme = s;
        self
    }

    pub fn inner(mut self, b: Boundary) -> Self {
        self.inner = Some(b);
        self
    }

    pub fn outer(mut self, b: Boundary) -> Self {
        self.outer = b;
        self
    }

    /// Build a grid for potential `v` up to horizon `t`.
    pub fn build(&self, v: &Potential, t: f64) -> Result<RadialGrid> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::domain("RadialGrid", format!("horizon t={t} must be positive")));
        }
        if self.per_decade < 10 || !(self.outer_spacing > 0.0) || self.steps == 0 {
            return Err(Error::Config(
                "grid needs per_decade >= 10, outer_spacing > 0 and steps >= 1".into(),
            ));
        }
        let r_min = self.r_min.unwrap_or_else(|| default_r_min(v));
        let r_max = self.r_max.unwrap_or_else(|| min_reflecting_radius(t));
        if !(r_min > 0.0 && r_min < r_max) {
            return Err(Error::Config(format!("need 0 < r_min < r_max, got {r_min} and {r_max}")));
        }
        if self.outer == Boundary::Reflecting && r_max < min_reflecting_radius(t) * (1.0 - 1e-12) {
            return Err(Error::Config(format!(
                "reflecting r_max={r_max} is below 8√t+1={} for t={t}",
                min_reflecting_radius(t)
            )));
        }
        let dt = self.dt.unwrap_or(t / self.steps as f64);
        if !(dt > 0.0) {
            return Err(Error::Config(format!("time step dt={dt} must be positive")));
        }
        let inner = self.inner.unwrap_or(if v.singular_at_origin() {
            Boundary::Absorbing
        } else {
            Boundary::Reflecting
        });
        let nodes = make_nodes(r_min, r_max, self.per_decade, self.outer_spacing);
        if nodes.len() < 3 {
            return Err(Error::Config("grid has fewer than 3 nodes".into()));
        }
        Ok(RadialGrid {
            r_min,
            r_max,
            nodes,
            dt,
            scheme: self.scheme,
            inner,
            outer: self.outer,
        })
    }
}

fn make_nodes(r_min: f64, r_max: f64, per_decade: usize, spacing: f64) -> Vec<f64> {
    let q = 10f64.powf(1.0 / per_decade as f64);
    let mut nodes = vec![r_min];
    let mut r = r_min;
    loop {
        let step = (r * (q - 1.0)).min(spacing);
        let next = r + step;
        if next >= r_max {
            break;
        }
        nodes.push(next);
        r = next;
    }
    let last = *nodes.last().unwrap();
    let final_step = (last * (q - 1.0)).min(spacing);
    if nodes.len() > 1 && r_max - last < 0.5 * final_step {
        nodes.pop();
    }
    nodes.push(r_max);
    nodes
}

/// Potential sampled at the grid nodes, clamped at [`V_CAP`].
pub fn cap_potential(v: &Potential, g: &RadialGrid) -> Vec<f64> {
    g.nodes.iter().map(|&r| v.eval(r).min(V_CAP)).collect()
}

/// Tridiagonal operator `A` with rows that may be pinned to fixed values.
#[derive(Debug, Clone)]
struct Operator {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    fixed: Vec<Option<f64>>,
    volumes: Vec<f64>,
}

impl Operator {
    fn assemble(d: usize, g: &RadialGrid, vcap: &[f64]) -> Operator {
        let r = &g.nodes;
        let n = r.len();
        let face = |i: usize| 0.5 * (r[i] + r[i + 1]);
        let dm1 = d as i32 - 1;
        let df = d as f64;
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut volumes = vec![0.0; n];
        for i in 0..n {
            let left = if i == 0 { 0.0 } else { face(i - 1) };
            let right = if i + 1 == n { r[n - 1] } else { face(i) };
            let w = (right.powi(d as i32) - left.powi(d as i32)) / df;
            volumes[i] = w;
            let a_left = if i == 0 { 0.0 } else { left.powi(dm1) / (r[i] - r[i - 1]) };
            let a_right = if i + 1 == n { 0.0 } else { right.powi(dm1) / (r[i + 1] - r[i]) };
            lower[i] = a_left / w;
            upper[i] = a_right / w;
            diag[i] = -(lower[i] + upper[i]) - vcap[i];
        }
        let mut fixed = vec![None; n];
        match g.inner {
            Boundary::Reflecting => {}
            Boundary::Absorbing => fixed[0] = Some(0.0),
            Boundary::Dirichlet(x) => fixed[0] = Some(x),
        }
        match g.outer {
            Boundary::Reflecting => {}
            Boundary::Absorbing => fixed[n - 1] = Some(0.0),
            Boundary::Dirichlet(x) => fixed[n - 1] = Some(x),
        }
        for i in 0..n {
            if vcap[i] >= V_CAP && fixed[i].is_none() {
                fixed[i] = Some(0.0);
            }
        }
        Operator {
            lower,
            diag,
            upper,
            fixed,
            volumes,
        }
    }

    fn len(&self) -> usize {
        self.diag.len()
    }

    /// `out = u + c A u` on free rows, boundary values on fixed rows.
    fn explicit(&self, c: f64, u: &[f64], out: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            out[i] = match self.fixed[i] {
                Some(x) => x,
                None => {
                    let mut au = self.diag[i] * u[i];
                    if i > 0 {
                        au += self.lower[i] * u[i - 1];
                    }
                    if i + 1 < n {
                        au += self.upper[i] * u[i + 1];
                    }
                    u[i] + c * au
                }
            };
        }
    }

    /// Coefficients of `I - c A` (or `-A` when `c` is infinite) with identity on fixed rows.
    fn shifted(&self, c: f64) -> Tridiagonal {
        let n = self.len();
        let mut t = Tridiagonal {
            sub: vec![0.0; n],
            diag: vec![0.0; n],
            sup: vec![0.0; n],
        };
        for i in 0..n {
            if self.fixed[i].is_some() {
                t.diag[i] = 1.0;
                continue;
            }
            if c.is_infinite() {
                t.sub[i] = -self.lower[i];
                t.diag[i] = -self.diag[i];
                t.sup[i] = -self.upper[i];
            } else {
                t.sub[i] = -c * self.lower[i];
                t.diag[i] = 1.0 - c * self.diag[i];
                t.sup[i] = -c * self.upper[i];
            }
        }
        t
    }
}

#[derive(Debug, Clone)]
struct Tridiagonal {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
}

/// LU factors of a diagonally dominant tridiagonal matrix (Thomas algorithm).
#[derive(Debug, Clone)]
struct Factored {
    sub: Vec<f64>,
    inv_pivot: Vec<f64>,
    sup_scaled: Vec<f64>,
}

impl Tridiagonal {
    fn factor(&self) -> Factored {
        let n = self.diag.len();
        let mut inv_pivot = vec![0.0; n];
        let mut sup_scaled = vec![0.0; n];
        let mut prev = 0.0;
        for i in 0..n {
            let pivot = self.diag[i] - if i > 0 { self.sub[i] * prev } else { 0.0 };
            inv_pivot[i] = 1.0 / pivot;
            prev = self.sup[i] * inv_pivot[i];
            sup_scaled[i] = prev;
        }
        Factored {
            sub: self.sub.clone(),
            inv_pivot,
            sup_scaled,
        }
    }
}

impl Factored {
    fn solve(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        let mut prev = 0.0;
        for i in 0..n {
            let v = (rhs[i] - if i > 0 { self.sub[i] * prev } else { 0.0 }) * self.inv_pivot[i];
            rhs[i] = v;
            prev = v;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            rhs[i] -= self.sup_scaled[i] * rhs[i + 1];
        }
    }
}

const GAMMA_TRBDF2: f64 = 2.0 - std::f64::consts::SQRT_2;

/// Time integrator holding factorisations for the step sizes it needs.
struct Stepper<'a> {
    op: &'a Operator,
    scheme: Scheme,
    dt: f64,
    half_ie: Factored,
    main: Factored,
    scratch: Vec<f64>,
    scratch2: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(op: &'a Operator, scheme: Scheme, dt: f64) -> Self {
        let c = match scheme {
            Scheme::CrankNicolson => 0.5 * dt,
            Scheme::ImplicitEuler => dt,
            // γ/2 and (1-γ)/(2-γ) coincide for γ = 2-√2, so both stages share one matrix.
            Scheme::TrBdf2 => 0.5 * GAMMA_TRBDF2 * dt,
        };
        Stepper {
            op,
            scheme,
            dt,
            half_ie: op.shifted(0.5 * dt).factor(),
            main: op.shifted(c).factor(),
            scratch: vec![0.0; op.len()],
            scratch2: vec![0.0; op.len()],
        }
    }

    /// Implicit Euler over `dt/2`.
    fn half_implicit(&mut self, u: &mut [f64]) {
        let mut rhs = self.op.fixed_rhs(u);
        self.half_ie.solve(&mut rhs);
        u.copy_from_slice(&rhs);
    }

    fn step(&mut self, u: &mut [f64]) {
        let dt = self.dt;
        match self.scheme {
            Scheme::ImplicitEuler => {
                let mut rhs = self.op.fixed_rhs(u);
                self.main.solve(&mut rhs);
                u.copy_from_slice(&rhs);
            }
            Scheme::CrankNicolson => {
                self.op.explicit(0.5 * dt, u, &mut self.scratch);
                self.main.solve(&mut self.scratch);
                u.copy_from_slice(&self.scratch);
            }
            Scheme::TrBdf2 => {
                let g = GAMMA_TRBDF2;
                self.op.explicit(0.5 * g * dt, u, &mut self.scratch);
                self.main.solve(&mut self.scratch);
                let a = 1.0 / (g * (2.0 - g));
                let b = (1.0 - g) * (1.0 - g) / (g * (2.0 - g));
                for i in 0..u.len() {
                    self.scratch2[i] = match self.op.fixed[i] {
                        Some(x) => x,
                        None => a * self.scratch[i] - b * u[i],
                    };
                }
                self.main.solve(&mut self.scratch2);
                u.copy_from_slice(&self.scratch2);
            }
        }
    }
}

impl Operator {
    fn fixed_rhs(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.fixed)
            .map(|(&x, f)| f.unwrap_or(x))
            .collect()
    }
}

/// Evolve `u0` to each time in `times` (sorted ascending), returning snapshots.
///
/// Starts with two implicit-Euler half steps to damp rough initial data.
fn evolve(op: &Operator, g: &RadialGrid, u0: Vec<f64>, times: &[f64]) -> Result<Vec<Vec<f64>>> {
    let mut u = op.fixed_rhs(&u0);
    let hi = u.iter().cloned().fold(0.0f64, f64::max);
    let lo_tol = -1e-8 * hi.max(1.0);
    let hi_tol = hi + 1e-8 * hi.max(1.0);
    let mut out = Vec::with_capacity(times.len());
    let mut now = 0.0;
    let mut stepper: Option<Stepper> = None;
    let mut started = false;
    for &target in times {
        if !(target > now) {
            if target == now {
                out.push(u.clone());
                continue;
            }
            return Err(Error::Config("snapshot times must be positive and ascending".into()));
        }
        let span = target - now;
        let n = (span / g.dt).ceil().max(1.0) as usize;
        let dt = span / n as f64;
        let st = match &mut stepper {
            Some(s) if (s.dt - dt).abs() <= 1e-12 * dt => s,
            _ => stepper.insert(Stepper::new(op, g.scheme, dt)),
        };
        let mut first = 0;
        if !started {
            st.half_implicit(&mut u);
            st.half_implicit(&mut u);
            started = true;
            first = 1;
        }
        for k in first..n {
            st.step(&mut u);
            if k % 64 == 0 || k + 1 == n {
                check_range(&u, g, now + (k + 1) as f64 * dt, lo_tol, hi_tol)?;
            }
        }
        check_range(&u, g, target, lo_tol, hi_tol)?;
        now = target;
        out.push(u.clone());
    }
    Ok(out)
}

fn check_range(u: &[f64], g: &RadialGrid, t: f64, lo: f64, hi: f64) -> Result<()> {
    for (i, &x) in u.iter().enumerate() {
        if !(x >= lo && x <= hi) {
            return Err(Error::Instability { t, r: g.nodes[i], value: x });
        }
    }
    Ok(())
}

/// A function of `r` sampled on grid nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialSolution {
    pub t: f64,
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
}

impl RadialSolution {
    fn bracket(&self, r: f64) -> Result<(usize, f64)> {
        let n = self.nodes.len();
        if !(r >= self.nodes[0] && r <= self.nodes[n - 1]) {
            return Err(Error::domain(
                "RadialSolution",
                format!("r={r} outside [{}, {}]", self.nodes[0], self.nodes[n - 1]),
            ));
        }
        let j = match self.nodes.binary_search_by(|x| x.partial_cmp(&r).unwrap()) {
            Ok(j) => return Ok((j.min(n - 2), if j == n - 1 { 1.0 } else { 0.0 })),
            Err(j) => j - 1,
        };
        let s = (r - self.nodes[j]) / (self.nodes[j + 1] - self.nodes[j]);
        Ok((j, s))
    }

    /// Piecewise-linear interpolation.
    pub fn linear_at(&self, r: f64) -> Result<f64> {
        let (j, s) = self.bracket(r)?;
        Ok((1.0 - s) * self.values[j] + s * self.values[j + 1])
    }

    /// Interpolation of `ln u` where both neighbours are positive, linear otherwise.
    /// Tracks `exp(-c/r^β)` profiles much better than linear interpolation.
    pub fn at(&self, r: f64) -> Result<f64> {
        let (j, s) = self.bracket(r)?;
        let (a, b) = (self.values[j], self.values[j + 1]);
        if a > 0.0 && b > 0.0 {
            Ok(((1.0 - s) * a.ln() + s * b.ln()).exp())
        } else {
            Ok((1.0 - s) * a + s * b)
        }
    }
}

/// `P_x(ζ > t)` for `|x| = r`: the backward equation with `u(0, ·) = 1`.
pub fn solve_survival(v: &Potential, g: &RadialGrid, t: f64) -> Result<RadialSolution> {
    Ok(solve_survival_times(v, g, &[t])?.pop().unwrap())
}

/// Survival snapshots at several ascending times from one run.
pub fn solve_survival_times(v: &Potential, g: &RadialGrid, times: &[f64]) -> Result<Vec<RadialSolution>> {
    let vcap = cap_potential(v, g);
    let op = Operator::assemble(v.params.d, g, &vcap);
    let u0 = vec![1.0; g.nodes.len()];
    let snaps = evolve(&op, g, u0, times)?;
    Ok(times
        .iter()
        .zip(snaps)
        .map(|(&t, values)| RadialSolution {
            t,
            nodes: g.nodes.clone(),
            values,
        })
        .collect())
}

/// `P_x(τ_R < ζ ∧ t)` with `R = g.r_max`: initial data 0 and `u = 1` on the outer boundary.
/// The grid's outer boundary is overridden.
pub fn solve_exit_by_time(v: &Potential, g: &RadialGrid, t: f64) -> Result<RadialSolution> {
    let mut g = g.clone();
    g.outer = Boundary::Dirichlet(1.0);
    let vcap = cap_potential(v, &g);
    let op = Operator::assemble(v.params.d, &g, &vcap);
    let u0 = vec![0.0; g.nodes.len()];
    let values = evolve(&op, &g, u0, &[t])?.pop().unwrap();
    Ok(RadialSolution {
        t,
        nodes: g.nodes,
        values,
    })
}

/// `P_x(τ_R < ζ)` with `R = g.r_max`: the steady problem `L^V u = 0`, `u(R) = 1`.
pub fn solve_exit_probability(v: &Potential, g: &RadialGrid) -> Result<RadialSolution> {
    let mut g = g.clone();
    g.outer = Boundary::Dirichlet(1.0);
    let vcap = cap_potential(v, &g);
    let op = Operator::assemble(v.params.d, &g, &vcap);
    let mut rhs = op.fixed_rhs(&vec![0.0; g.nodes.len()]);
    op.shifted(f64::INFINITY).factor().solve(&mut rhs);
    Ok(RadialSolution {
        t: f64::INFINITY,
        nodes: g.nodes,
        values: rhs,
    })
}

/// Heat kernel of the d=1 process on the half-line (killed on reaching `r_min`)
/// at `(t, x, y)`, with `y`'s unit mass split linearly between its neighbouring nodes.
pub fn solve_kernel_1d(v: &Potential, t: f64, x: f64, y: f64, g: &RadialGrid) -> Result<f64> {
    Ok(kernel_1d_row(v, t, y, g)?.linear_at(x)?)
}

/// `x ↦ p(t, x, y)` on the grid for the d=1 half-line process.
pub fn kernel_1d_row(v: &Potential, t: f64, y: f64, g: &RadialGrid) -> Result<RadialSolution> {
    if v.params.d != 1 {
        return Err(Error::domain("solve_kernel_1d", format!("needs d=1, got d={}", v.params.d)));
    }
    let mut g = g.clone();
    if g.inner == Boundary::Reflecting {
        g.inner = Boundary::Absorbing;
    }
    let probe = RadialSolution {
        t: 0.0,
        nodes: g.nodes.clone(),
        values: vec![0.0; g.nodes.len()],
    };
    if !(y > g.r_min && y < g.r_max) {
        return Err(Error::domain("solve_kernel_1d", format!("y={y} outside (r_min, r_max)")));
    }
    let (j, s) = probe.bracket(y)?;
    let vcap = cap_potential(v, &g);
    let op = Operator::assemble(1, &g, &vcap);
    let mut u0 = vec![0.0; g.nodes.len()];
    u0[j] += (1.0 - s) / op.volumes[j];
    u0[j + 1] += s / op.volumes[j + 1];
    let values = evolve(&op, &g, u0, &[t])?.pop().unwrap();
    Ok(RadialSolution {
        t,
        nodes: g.nodes,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelopes::{self, ModelParams};
    use crate::specfun;

    fn params(d: usize, beta: f64, kappa: f64) -> ModelParams {
        ModelParams::new(d, beta, kappa).unwrap()
    }

    #[test]
    fn cap_examples() {
        let p = params(3, 1.0, 1.0);
        let v = Potential::canonical(p);
        let g = GridBuilder::new().r_min(1e-4).build(&v, 0.1).unwrap();
        let capped = cap_potential(&v, &g);
        assert_eq!(capped[0], 1e12);
        for (i, &r) in g.nodes.iter().enumerate() {
            assert!(capped[i] <= v.eval(r));
        }
        let z = Potential::zero(p);
        assert!(cap_potential(&z, &g).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn thomas_solves_random_system() {
        let n = 7;
        let t = Tridiagonal {
            sub: (0..n).map(|i| -0.3 - 0.01 * i as f64).collect(),
            diag: (0..n).map(|i| 2.0 + 0.1 * i as f64).collect(),
            sup: (0..n).map(|i| -0.5 + 0.02 * i as f64).collect(),
        };
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 2.0).collect();
        let mut b = vec![0.0; n];
        for i in 0..n {
            b[i] = t.diag[i] * x[i];
            if i > 0 {
                b[i] += t.sub[i] * x[i - 1];
            }
            if i + 1 < n {
                b[i] += t.sup[i] * x[i + 1];
            }
        }
        t.factor().solve(&mut b);
        for i in 0..n {
            assert!((b[i] - x[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn nodes_cover_range_monotonically() {
        let nodes = make_nodes(0.005, 7.0, 200, 0.02);
        assert_eq!(nodes[0], 0.005);
        assert_eq!(*nodes.last().unwrap(), 7.0);
        assert!(nodes.windows(2).all(|w| w[1] > w[0]));
        let near_tenth = nodes.iter().filter(|&&r| r > 0.1 && r < 1.0).count();
        assert!((195..=205).contains(&near_tenth));
    }

    #[test]
    fn zero_potential_survives_in_d3() {
        let p = params(3, 1.0, 1.0);
        let v = Potential::zero(p);
        let g = GridBuilder::new().r_min(1e-6).inner(Boundary::Absorbing).build(&v, 0.5).unwrap();
        let u = solve_survival(&v, &g, 0.5).unwrap();
        for &r in &[0.1, 0.5, 1.0, 3.0] {
            assert!((u.at(r).unwrap() - 1.0).abs() < 1e-4, "r={r}: {}", u.at(r).unwrap());
        }
    }

    #[test]
    fn constant_potential_decays_exactly() {
        let p = params(2, 1.0, 1.0);
        let v = Potential::constant(p, 0.7).unwrap();
        let g = GridBuilder::new().build(&v, 1.0).unwrap();
        let u = solve_survival(&v, &g, 1.0).unwrap();
        assert!((u.at(0.5).unwrap() - (-0.7f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn survival_in_unit_interval_and_increasing() {
        let p = params(3, 1.0, 1.0);
        let v = Potential::canonical(p);
        let g = GridBuilder::new().build(&v, 0.2).unwrap();
        let u = solve_survival(&v, &g, 0.2).unwrap();
        assert!(u.values.iter().all(|&x| (-1e-8..=1.0 + 1e-8).contains(&x)));
        assert!(u.at(0.3).unwrap() < u.at(0.6).unwrap());
        assert!(u.at(0.6).unwrap() < u.at(1.5).unwrap());
    }

    #[test]
    fn survival_self_convergence() {
        let p = params(3, 1.0, 1.0);
        let v = Potential::canonical(p);
        let coarse = GridBuilder::new().per_decade(200).outer_spacing(0.02).steps(400);
        let fine = GridBuilder::new().per_decade(400).outer_spacing(0.01).steps(800);
        let a = solve_survival(&v, &coarse.build(&v, 0.2).unwrap(), 0.2).unwrap().at(0.6).unwrap();
        let b = solve_survival(&v, &fine.build(&v, 0.2).unwrap(), 0.2).unwrap().at(0.6).unwrap();
        assert!((a - b).abs() < 0.005 * b, "{a} vs {b}");
    }

    #[test]
    fn r_min_insensitivity() {
        let p = params(3, 1.0, 1.0);
        let v = Potential::canonical(p);
        let r0 = default_r_min(&v);
        let a = solve_survival(&v, &GridBuilder::new().build(&v, 0.2).unwrap(), 0.2).unwrap();
        let b = solve_survival(&v, &GridBuilder::new().r_min(0.5 * r0).build(&v, 0.2).unwrap(), 0.2).unwrap();
        for &r in &[0.1, 0.3, 0.6, 1.0] {
            let (x, y) = (a.at(r).unwrap(), b.at(r).unwrap());
            assert!((x - y).abs() < 1e-3 * y, "r={r}: {x} vs {y}");
        }
    }

    #[test]
    fn exit_capped_survival_below_killing_bound() {
        let p = params(3, 1.0, 1.0);
        let v = Potential::canonical(p);
        let big_r = 0.5;
        let g = GridBuilder::new().r_max(big_r).outer(Boundary::Absorbing).build(&v, 1.0).unwrap();
        let times = [0.01, 0.02, 0.05, 0.1];
        let snaps = solve_survival_times(&v, &g, &times).unwrap();
        for s in &snaps {
            let bound = (-3.0 * p.kappa * s.t / (4.0 * big_r.powf(2.0 + 2.0 * p.beta))).exp();
            assert!(s.values.iter().all(|&x| x <= bound + 1e-9), "t={}", s.t);
        }
    }

    #[test]
    fn reflecting_radius_enforced() {
        let v = Potential::canonical(params(3, 1.0, 1.0));
        assert!(GridBuilder::new().r_max(2.0).build(&v, 1.0).is_err());
        assert!(GridBuilder::new().r_max(2.0).outer(Boundary::Absorbing).build(&v, 1.0).is_ok());
    }

    #[test]
    fn kernel_1d_free_matches_reflection_formula() {
        let p = params(1, 1.0, 1.0);
        let v = Potential::zero(p);
        let g = GridBuilder::new().r_min(1e-6).outer_spacing(0.005).steps(2000).build(&v, 0.5).unwrap();
        let got = solve_kernel_1d(&v, 0.5, 1.0, 2.0, &g).unwrap();
        let oracle = specfun::gaussian_q(1, 0.5, &[1.0], &[2.0]).unwrap() - specfun::gaussian_q(1, 0.5, &[1.0], &[-2.0]).unwrap();
        assert!((got - oracle).abs() < 1e-3 * oracle, "{got} vs {oracle}");
    }

    #[test]
    fn kernel_1d_symmetric_and_below_gaussian() {
        let p = params(1, 1.0, 1.0);
        let v = Potential::canonical(p);
        let g = GridBuilder::new().build(&v, 0.5).unwrap();
        for &(x, y) in &[(1.0, 2.0), (0.5, 1.0), (0.3, 2.5)] {
            let a = solve_kernel_1d(&v, 0.5, x, y, &g).unwrap();
            let b = solve_kernel_1d(&v, 0.5, y, x, &g).unwrap();
            assert!((a - b).abs() < 1e-3 * a, "{a} vs {b}");
            assert!(a < specfun::gaussian_q(1, 0.5, &[x], &[y]).unwrap());
        }
    }

    #[test]
    fn chapman_kolmogorov_d1() {
        let p = params(1, 1.0, 1.0);
        let v = Potential::canonical(p);
        let t = 0.5;
        let g = GridBuilder::new().build(&v, t).unwrap();
        let (x, y) = (1.0, 2.0);
        let row_x = kernel_1d_row(&v, t / 2.0, x, &g).unwrap();
        let row_y = kernel_1d_row(&v, t / 2.0, y, &g).unwrap();
        let vcap = cap_potential(&v, &g);
        let op = Operator::assemble(1, &g, &vcap);
        let conv: f64 = (0..g.nodes.len()).map(|i| row_x.values[i] * row_y.values[i] * op.volumes[i]).sum();
        let direct = solve_kernel_1d(&v, t, x, y, &g).unwrap();
        assert!((conv - direct).abs() < 0.02 * direct, "{conv} vs {direct}");
    }

    #[test]
    fn exit_probability_matches_barrier_ratio_for_canonical() {
        // L^V h̃ = 0, so P_x(τ_R < ζ) = h̃(|x|)/h̃(R) exactly
        let p = params(3, 1.0, 1.0);
        let v = Potential::canonical(p);
        let g = GridBuilder::new().r_max(0.5).outer(Boundary::Dirichlet(1.0)).build(&v, 1.0).unwrap();
        let u = solve_exit_probability(&v, &g).unwrap();
        for &r in &[0.15, 0.25, 0.4] {
            let exact = (envelopes::log_h_tilde(&p, r).unwrap() - envelopes::log_h_tilde(&p, 0.5).unwrap()).exp();
            assert!((u.at(r).unwrap() - exact).abs() < 5e-3 * exact, "r={r}");
        }
        let capped = solve_exit_by_time(&v, &g, 50.0).unwrap();
        assert!((capped.at(0.25).unwrap() - u.at(0.25).unwrap()).abs() < 1e-3 * u.at(0.25).unwrap());
    }

    #[test]
    fn schemes_agree_on_smooth_problem() {
        let p = params(3, 1.0, 1.0);
        let v = Potential::custom(p, "bump", |r| 2.0 / (1.0 + r * r), false).unwrap();
        let mut vals = vec![];
        for s in [Scheme::TrBdf2, Scheme::CrankNicolson, Scheme::ImplicitEuler] {
            let g = GridBuilder::new().scheme(s).steps(4000).build(&v, 0.5).unwrap();
            vals.push(solve_survival(&v, &g, 0.5).unwrap().at(0.5).unwrap());
        }
        assert!((vals[0] - vals[1]).abs() < 1e-5 * vals[0]);
        assert!((vals[0] - vals[2]).abs() < 1e-3 * vals[0]);
    }

    #[test]
    fn crank_nicolson_not_damped_at_singularity() {
        let p = params(3, 1.0, 1.0);
        let v = Potential::canonical(p);
        let cn = GridBuilder::new().scheme(Scheme::CrankNicolson).steps(4000).build(&v, 0.2).unwrap();
        assert!(matches!(solve_survival(&v, &cn, 0.2), Err(Error::Instability { .. })));
        let tr = GridBuilder::new().steps(4000).build(&v, 0.2).unwrap();
        assert!(solve_survival(&v, &tr, 0.2).is_ok());
    }
}
