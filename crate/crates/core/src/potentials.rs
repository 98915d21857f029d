//! Radial killing potentials, class membership checks on log grids and the
//! generator `L^V = Δ - V` acting on radial functions.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::envelopes::{self, BarrierKind, ModelParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn parse(s: &str) -> Result<Sign> {
        match s.trim() {
            "+1" | "1" | "+" | "plus" => Ok(Sign::Plus),
            "-1" | "-" | "minus" => Ok(Sign::Minus),
            other => Err(Error::Parse(format!("sign must be +1 or -1, got {other:?}"))),
        }
    }
}

type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user-supplied radial potential.
#[derive(Clone)]
pub struct CustomRadial {
    pub name: String,
    f: RadialFn,
    /// Whether `∫_{B(0,1)} V = ∞`; verified by quadrature on construction.
    pub singular_origin: bool,
}

impl fmt::Debug for CustomRadial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomRadial")
            .field("name", &self.name)
            .field("singular_origin", &self.singular_origin)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum PotentialForm {
    /// `κ r^{-2-2β}`.
    Canonical,
    /// `(κ + sign·C r^θ)_+ r^{-2-2β}` inside the unit ball.
    Perturbed { c: f64, theta: f64, sign: Sign },
    /// `κ r^{-2-2β} + sign·C r^{-2-β}` inside the unit ball.
    Critical { c: f64, sign: Sign },
    /// `V ≡ 0`.
    Zero,
    /// `V ≡ λ`.
    Constant { lambda: f64 },
    Custom(CustomRadial),
}

/// Tail `C3 r^{-2-γ}` used for `r > 1` instead of the canonical continuation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuterTail {
    pub c3: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassTag {
    KlocGe,
    KlocLe,
    Kloc,
    K,
    CriticalUpper,
    CriticalLower,
}

impl ClassTag {
    pub const ALL: [ClassTag; 6] = [
        ClassTag::KlocGe,
        ClassTag::KlocLe,
        ClassTag::Kloc,
        ClassTag::K,
        ClassTag::CriticalUpper,
        ClassTag::CriticalLower,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassTag::KlocGe => "Kloc_ge",
            ClassTag::KlocLe => "Kloc_le",
            ClassTag::Kloc => "Kloc",
            ClassTag::K => "K",
            ClassTag::CriticalUpper => "critical_upper",
            ClassTag::CriticalLower => "critical_lower",
        }
    }

    pub fn parse(s: &str) -> Result<ClassTag> {
        ClassTag::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Parse(format!("unknown class tag {s:?}")))
    }
}

#[derive(Debug, Clone)]
pub struct Potential {
    pub form: PotentialForm,
    pub params: ModelParams,
    pub outer: Option<OuterTail>,
}

impl Potential {
    pub fn canonical(params: ModelParams) -> Potential {
        Potential {
            form: PotentialForm::Canonical,
            params,
            outer: None,
        }
    }

    pub fn perturbed(params: ModelParams, c: f64, theta: f64, sign: Sign) -> Result<Potential> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Config(format!("perturbation constant C={c} must be positive")));
        }
        if !(theta > params.beta) || !theta.is_finite() {
            return Err(Error::Config(format!(
                "perturbation exponent theta={theta} must exceed beta={}",
                params.beta
            )));
        }
        Ok(Potential {
            form: PotentialForm::Perturbed { c, theta, sign },
            params,
            outer: None,
        })
    }

    pub fn critical(params: ModelParams, c: f64, sign: Sign) -> Result<Potential> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Config(format!("critical constant C={c} must be positive")));
        }
        if sign == Sign::Minus && c > params.kappa {
            return Err(Error::Config(format!(
                "critical(-1) needs C <= kappa for V >= 0, got C={c} > {}",
                params.kappa
            )));
        }
        Ok(Potential {
            form: PotentialForm::Critical { c, sign },
            params,
            outer: None,
        })
    }

    pub fn zero(params: ModelParams) -> Potential {
        Potential {
            form: PotentialForm::Zero,
            params,
            outer: None,
        }
    }

    pub fn constant(params: ModelParams, lambda: f64) -> Result<Potential> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::Config(format!("constant potential {lambda} must be >= 0")));
        }
        Ok(Potential {
            form: PotentialForm::Constant { lambda },
            params,
            outer: None,
        })
    }

    /// A custom radial potential. Nonnegativity is spot-checked on a log grid and a
    /// claimed singularity at the origin is checked by quadrature of `∫ r^{d-1} V`.
    pub fn custom<F>(params: ModelParams, name: &str, f: F, singular_origin: bool) -> Result<Potential>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        for i in 0..=1200 {
            let r = 10f64.powf(-8.0 + i as f64 / 100.0);
            let v = f(r);
            if v.is_nan() || v < 0.0 {
                return Err(Error::Config(format!("custom potential {name} is {v} at r={r:.3e}")));
            }
        }
        if singular_origin {
            let inner = log_quadrature(&f, params.d, 1e-12, 1e-6);
            let outer = log_quadrature(&f, params.d, 1e-6, 1.0);
            if !(inner >= 0.5 * outer) || !(inner > 0.0) {
                return Err(Error::Config(format!(
                    "custom potential {name} claims a non-integrable singularity but ∫ r^(d-1) V \
                     over [1e-12,1e-6] is {inner:.3e} against {outer:.3e} over [1e-6,1]"
                )));
            }
        }
        Ok(Potential {
            form: PotentialForm::Custom(CustomRadial {
                name: name.to_string(),
                f: Arc::new(f),
                singular_origin,
            }),
            params,
            outer: None,
        })
    }

    pub fn with_outer(mut self, tail: OuterTail) -> Result<Potential> {
        if !(tail.c3 >= 0.0) || !(tail.gamma > 0.0) {
            return Err(Error::Config(format!(
                "outer tail needs C3 >= 0 and gamma > 0, got C3={} gamma={}",
                tail.c3, tail.gamma
            )));
        }
        self.outer = Some(tail);
        Ok(self)
    }

    /// `V(r)` for `r > 0`.
    pub fn eval(&self, r: f64) -> f64 {
        let p = &self.params;
        match &self.form {
            PotentialForm::Zero => return 0.0,
            PotentialForm::Constant { lambda } => return *lambda,
            PotentialForm::Custom(c) => return (c.f)(r),
            _ => {}
        }
        if r > 1.0 {
            return match self.outer {
                Some(t) => t.c3 * r.powf(-2.0 - t.gamma),
                None => p.kappa * r.powf(-2.0 - 2.0 * p.beta),
            };
        }
        let base = r.powf(-2.0 - 2.0 * p.beta);
        match &self.form {
            PotentialForm::Canonical => p.kappa * base,
            PotentialForm::Perturbed { c, theta, sign } => (p.kappa + sign.as_f64() * c * r.powf(*theta)).max(0.0) * base,
            PotentialForm::Critical { c, sign } => p.kappa * base + sign.as_f64() * c * r.powf(-2.0 - p.beta),
            _ => unreachable!(),
        }
    }

    /// Whether `∫_{B(0,1)} V = ∞`, which makes the origin inaccessible.
    pub fn singular_at_origin(&self) -> bool {
        match &self.form {
            PotentialForm::Zero | PotentialForm::Constant { .. } => false,
            PotentialForm::Custom(c) => c.singular_origin,
            _ => true,
        }
    }

    /// Whether the potential vanishes identically.
    pub fn is_zero(&self) -> bool {
        match &self.form {
            PotentialForm::Zero => true,
            PotentialForm::Constant { lambda } => *lambda == 0.0,
            _ => false,
        }
    }

    /// Short label for reports.
    pub fn label(&self) -> String {
        match &self.form {
            PotentialForm::Canonical => "canonical".into(),
            PotentialForm::Perturbed { c, theta, sign } => {
                format!("perturbed(C={c},theta={theta},sign={:+})", sign.as_f64())
            }
            PotentialForm::Critical { c, sign } => format!("critical(C={c},sign={:+})", sign.as_f64()),
            PotentialForm::Zero => "zero".into(),
            PotentialForm::Constant { lambda } => format!("constant({lambda})"),
            PotentialForm::Custom(c) => format!("custom({})", c.name),
        }
    }

    /// Tags guaranteed by construction, without a grid check.
    pub fn constructed_tags(&self) -> Vec<ClassTag> {
        match &self.form {
            PotentialForm::Canonical | PotentialForm::Perturbed { .. } => {
                vec![ClassTag::KlocGe, ClassTag::KlocLe, ClassTag::Kloc, ClassTag::K]
            }
            PotentialForm::Critical { sign: Sign::Plus, .. } => vec![ClassTag::KlocGe, ClassTag::CriticalLower],
            PotentialForm::Critical { sign: Sign::Minus, .. } => vec![ClassTag::KlocLe, ClassTag::CriticalUpper],
            _ => vec![],
        }
    }
}

/// `∫_a^b r^{d-1} f(r) dr` by the trapezoid rule in `ln r`.
fn log_quadrature(f: &dyn Fn(f64) -> f64, d: usize, a: f64, b: f64) -> f64 {
    let n = ((b / a).log10() * 200.0).ceil().max(2.0) as usize;
    let (la, lb) = (a.ln(), b.ln());
    let h = (lb - la) / n as f64;
    let g = |l: f64| {
        let r = l.exp();
        r.powi(d as i32) * f(r)
    };
    let mut s = 0.5 * (g(la) + g(lb));
    for i in 1..n {
        s += g(la + i as f64 * h);
    }
    s * h
}

/// Radii used by [`classify`]: log-spaced inside the unit ball and beyond it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassGrid {
    pub inner: Vec<f64>,
    pub outer: Vec<f64>,
}

impl ClassGrid {
    /// `n_inner` log-spaced radii on `[r_lo, 1]` and `n_outer` on `[1, r_hi]`.
    pub fn log(r_lo: f64, n_inner: usize, r_hi: f64, n_outer: usize) -> Result<ClassGrid> {
        if !(r_lo > 0.0 && r_lo < 1.0 && r_hi > 1.0) || n_inner < 100 || n_outer < 2 {
            return Err(Error::Config(
                "class grid needs 0 < r_lo < 1 < r_hi and at least 100 inner points".into(),
            ));
        }
        let inner = log_space(r_lo, 1.0, n_inner);
        let outer = log_space(1.0, r_hi, n_outer).into_iter().skip(1).collect();
        Ok(ClassGrid { inner, outer })
    }
}

impl Default for ClassGrid {
    fn default() -> Self {
        ClassGrid::log(1e-4, 1000, 1e4, 400).expect("valid default grid")
    }
}

pub(crate) fn log_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| {
            if i + 1 == n {
                b
            } else {
                (la + (lb - la) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Outcome of a membership check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassReport {
    pub tag: ClassTag,
    pub member: bool,
    /// Witnessing constant (`C1`, `C2`, `C3` or the critical `C`), when found.
    pub constant: Option<f64>,
    /// Witnessing exponent (`β'` or `γ`), when the class has one.
    pub exponent: Option<f64>,
    /// Radius where the required constant is largest (or the critical margin smallest).
    pub worst_radius: f64,
}

/// Required constant over the full grid and over the grid with its innermost
/// (or outermost) decade removed. A finite grid always admits some constant;
/// membership means the constant has stopped growing as the grid extends.
fn stabilised_sup(radii: &[f64], g: &dyn Fn(f64) -> f64, trim_inner: bool) -> (f64, f64, f64) {
    let (lo, hi) = (radii[0], radii[radii.len() - 1]);
    let mut full = (0.0f64, radii[0]);
    let mut trimmed = 0.0f64;
    for &r in radii {
        let v = g(r);
        if v > full.0 {
            full = (v, r);
        }
        let keep = if trim_inner { r >= 10.0 * lo } else { r <= hi / 10.0 };
        if keep {
            trimmed = trimmed.max(v);
        }
    }
    (full.0, trimmed, full.1)
}

fn stabilised_inf(radii: &[f64], g: &dyn Fn(f64) -> f64) -> (f64, f64, f64) {
    let lo = radii[0];
    let mut full = (f64::INFINITY, radii[0]);
    let mut trimmed = f64::INFINITY;
    for &r in radii {
        let v = g(r);
        if v < full.0 {
            full = (v, r);
        }
        if r >= 10.0 * lo {
            trimmed = trimmed.min(v);
        }
    }
    (full.0, trimmed, full.1)
}

const STABLE_TOL: f64 = 1e-6;

fn stable(full: f64, trimmed: f64) -> bool {
    full <= trimmed * (1.0 + STABLE_TOL) + 1e-300
}

/// `V(r) - κ r^{-2-2β}`, with rounding-level differences flushed to zero.
fn excess(v: &Potential, r: f64) -> f64 {
    let p = &v.params;
    let base = p.kappa * r.powf(-2.0 - 2.0 * p.beta);
    let e = v.eval(r) - base;
    if e.abs() <= 1e-12 * base {
        0.0
    } else {
        e
    }
}

/// One-sided local condition `±(V - κ r^{-2-2β}) <= C r^{-2-β'}` on `(0,1]`.
fn classify_local(v: &Potential, grid: &ClassGrid, tag: ClassTag) -> ClassReport {
    let p = v.params;
    let sgn = if tag == ClassTag::KlocGe { -1.0 } else { 1.0 };
    let mut best: Option<(f64, f64)> = None;
    let mut worst_radius = grid.inner[0];
    let mut worst_growth = 0.0f64;
    for k in 1..20 {
        let bp = p.beta * (1.0 - k as f64 / 20.0);
        let g = |r: f64| sgn * excess(v, r) * r.powf(2.0 + bp);
        let (full, trimmed, at) = stabilised_sup(&grid.inner, &g, true);
        if stable(full, trimmed) {
            if best.is_none_or(|(c, _)| full.max(0.0) < c) {
                best = Some((full.max(0.0), bp));
                worst_radius = at;
            }
        } else if full / trimmed.max(1e-300) > worst_growth {
            worst_growth = full / trimmed.max(1e-300);
            if best.is_none() {
                worst_radius = at;
            }
        }
    }
    ClassReport {
        tag,
        member: best.is_some(),
        constant: best.map(|b| b.0),
        exponent: best.map(|b| b.1),
        worst_radius,
    }
}

fn classify_tail(v: &Potential, grid: &ClassGrid) -> ClassReport {
    let mut best: Option<(f64, f64, f64)> = None;
    for k in 1..=40 {
        let gamma = 0.1 * k as f64;
        let g = |r: f64| v.eval(r) * r.powf(2.0 + gamma);
        let (full, trimmed, at) = stabilised_sup(&grid.outer, &g, false);
        if stable(full, trimmed) {
            best = Some((full, gamma, at));
        }
    }
    ClassReport {
        tag: ClassTag::K,
        member: best.is_some(),
        constant: best.map(|b| b.0),
        exponent: best.map(|b| b.1),
        worst_radius: best.map_or(grid.outer[grid.outer.len() - 1], |b| b.2),
    }
}

fn classify_critical(v: &Potential, grid: &ClassGrid, tag: ClassTag) -> ClassReport {
    let p = v.params;
    let sgn = if tag == ClassTag::CriticalLower { 1.0 } else { -1.0 };
    let g = |r: f64| sgn * excess(v, r) * r.powf(2.0 + p.beta);
    let (full, trimmed, at) = stabilised_inf(&grid.inner, &g);
    let member = full > 0.0 && full >= trimmed * (1.0 - STABLE_TOL);
    ClassReport {
        tag,
        member,
        constant: member.then_some(full),
        exponent: None,
        worst_radius: at,
    }
}

/// Decide membership of `v` in `tag` on the radii of `grid`.
pub fn classify(v: &Potential, tag: ClassTag, grid: &ClassGrid) -> ClassReport {
    match tag {
        ClassTag::KlocGe | ClassTag::KlocLe => classify_local(v, grid, tag),
        ClassTag::Kloc => {
            let ge = classify_local(v, grid, ClassTag::KlocGe);
            let le = classify_local(v, grid, ClassTag::KlocLe);
            let member = ge.member && le.member;
            let failing = if ge.member { &le } else { &ge };
            ClassReport {
                tag,
                member,
                constant: if member { Some(ge.constant.unwrap().max(le.constant.unwrap())) } else { None },
                exponent: if member { Some(ge.exponent.unwrap().min(le.exponent.unwrap())) } else { None },
                worst_radius: if member { ge.worst_radius } else { failing.worst_radius },
            }
        }
        ClassTag::K => {
            let local = classify(v, ClassTag::Kloc, grid);
            if !local.member {
                return ClassReport { tag, ..local };
            }
            classify_tail(v, grid)
        }
        ClassTag::CriticalUpper | ClassTag::CriticalLower => classify_critical(v, grid, tag),
    }
}

/// Value and first two radial derivatives of `f`, all multiplied by `exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialJet {
    pub log_scale: f64,
    pub f: f64,
    pub df: f64,
    pub d2f: f64,
}

/// A radial function with two derivatives.
pub trait RadialFunction {
    fn jet(&self, r: f64) -> Result<RadialJet>;
}

/// `h̃` with analytic derivatives, scaled by `h̃` itself so it never underflows.
#[derive(Debug, Clone, Copy)]
pub struct HTilde {
    pub params: ModelParams,
}

fn h_tilde_logderivs(p: &ModelParams, r: f64) -> Result<(f64, f64, f64)> {
    let log_v = envelopes::log_h_tilde(p, r)?;
    let d1 = (envelopes::log_h_tilde_prime(p, r)? - log_v).exp();
    let d2 = p.kappa * r.powf(-2.0 - 2.0 * p.beta) - (p.df() - 1.0) / r * d1;
    Ok((log_v, d1, d2))
}

impl RadialFunction for HTilde {
    fn jet(&self, r: f64) -> Result<RadialJet> {
        let (log_scale, d1, d2) = h_tilde_logderivs(&self.params, r)?;
        Ok(RadialJet {
            log_scale,
            f: 1.0,
            df: d1,
            d2f: d2,
        })
    }
}

/// `(c0 + c1 r^a) h̃(r)`; covers `r^a h̃` and both barriers.
#[derive(Debug, Clone, Copy)]
pub struct WeightedHTilde {
    pub params: ModelParams,
    pub c0: f64,
    pub c1: f64,
    pub a: f64,
}

impl WeightedHTilde {
    pub fn power(params: ModelParams, a: f64) -> Self {
        WeightedHTilde { params, c0: 0.0, c1: 1.0, a }
    }

    pub fn barrier(kind: BarrierKind, params: ModelParams, beta_prime: f64) -> Result<Self> {
        let a = envelopes::barrier_exponent(&params, beta_prime)?;
        let (c0, c1) = kind.coefficients();
        Ok(WeightedHTilde { params, c0, c1, a })
    }
}

impl RadialFunction for WeightedHTilde {
    fn jet(&self, r: f64) -> Result<RadialJet> {
        let (log_scale, h1, h2) = h_tilde_logderivs(&self.params, r)?;
        let a = self.a;
        let m = self.c0 + self.c1 * r.powf(a);
        let m1 = self.c1 * a * r.powf(a - 1.0);
        let m2 = self.c1 * a * (a - 1.0) * r.powf(a - 2.0);
        Ok(RadialJet {
            log_scale,
            f: m,
            df: m1 + m * h1,
            d2f: m2 + 2.0 * m1 * h1 + m * h2,
        })
    }
}

/// Any closure, differentiated by central differences with step `1e-4·r`.
pub struct FnRadial<F: Fn(f64) -> f64>(pub F);

impl<F: Fn(f64) -> f64> RadialFunction for FnRadial<F> {
    fn jet(&self, r: f64) -> Result<RadialJet> {
        if !(r > 0.0) {
            return Err(Error::domain("apply_generator", format!("r={r} must be positive")));
        }
        let h = 1e-4 * r;
        let (fm, f0, fp) = ((self.0)(r - h), (self.0)(r), (self.0)(r + h));
        Ok(RadialJet {
            log_scale: 0.0,
            f: f0,
            df: (fp - fm) / (2.0 * h),
            d2f: (fp - 2.0 * f0 + fm) / (h * h),
        })
    }
}

/// `L^V f` divided by `exp(jet.log_scale)`, i.e. on the scale of the jet.
pub fn apply_generator_scaled(v: &Potential, f: &dyn RadialFunction, r: f64) -> Result<f64> {
    let j = f.jet(r)?;
    let d = v.params.df();
    Ok(j.d2f + (d - 1.0) / r * j.df - v.eval(r) * j.f)
}

/// `f''(r) + (d-1)/r f'(r) - V(r) f(r)`.
pub fn apply_generator(v: &Potential, f: &dyn RadialFunction, r: f64) -> Result<f64> {
    let j = f.jet(r)?;
    Ok(apply_generator_scaled(v, f, r)? * j.log_scale.exp())
}

/// Whether `sign · L^V f >= 0` at every one of `n` log-spaced radii in `[lo, hi]`.
fn generator_sign_holds(v: &Potential, f: &dyn RadialFunction, lo: f64, hi: f64, n: usize, sign: f64) -> Result<bool> {
    for r in log_space(lo, hi, n) {
        if sign * apply_generator_scaled(v, f, r)? < 0.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Largest `R` in `(0, 1]` on a geometric ladder such that the barrier has the
/// required generator sign (`≤ 0` for `u₁`, `≥ 0` for `u₂`) on `[0.02R, R]`.
pub fn barrier_radius(v: &Potential, kind: BarrierKind, beta_prime: f64) -> Result<Option<f64>> {
    let f = WeightedHTilde::barrier(kind, v.params, beta_prime)?;
    let sign = match kind {
        BarrierKind::U1 => -1.0,
        BarrierKind::U2 => 1.0,
    };
    let mut r = 1.0;
    while r > 1e-4 {
        if generator_sign_holds(v, &f, 0.02 * r, r, 200, sign)? {
            return Ok(Some(r));
        }
        r *= 0.9;
    }
    Ok(None)
}

/// Power `a > 0` and radius `R` with `L^V(r^{∓a} h̃)` of the required sign on `[0.02R, R]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerWitness {
    pub a: f64,
    pub radius: f64,
}

/// For a `critical_upper` potential: `a₁ > 0` with `L^V(r^{-a₁} h̃) >= 0`.
/// For a `critical_lower` potential: `a₂ > 0` with `L^V(r^{a₂} h̃) <= 0`.
/// Scans `a` downward from 4 and returns the largest one that works.
pub fn counterexample_power(v: &Potential, tag: ClassTag) -> Result<Option<PowerWitness>> {
    let (dir, sign) = match tag {
        ClassTag::CriticalUpper => (-1.0, 1.0),
        ClassTag::CriticalLower => (1.0, -1.0),
        other => return Err(Error::NotInClass(format!("{} is not a critical class", other.name()))),
    };
    let mut a = 4.0;
    while a > 1e-3 {
        let f = WeightedHTilde::power(v.params, dir * a);
        let mut r = 1.0;
        while r > 1e-3 {
            if generator_sign_holds(v, &f, 0.02 * r, r, 200, sign)? {
                return Ok(Some(PowerWitness { a, radius: r }));
            }
            r *= 0.8;
        }
        a *= 0.9;
    }
    Ok(None)
}
