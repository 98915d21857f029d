//! Comparison of numerical kernels, survival probabilities and Green functions
//! against the closed-form envelopes.
//!
//! A two-sided estimate `f ≍ E` holds on a set of points when `ln(f/E)` stays in
//! a bounded window there. The harness therefore reports the spread
//! `max ln(f/E) − min ln(f/E)`, after fitting the free constants inside `E` to
//! make it as small as possible.
//!
//! With `a = 1/c_gauss`, every log-ratio is affine in `(a, c_kill)` up to a
//! term common to all points. The spread is a maximum of affine functions
//! minus a minimum of affine functions, hence convex, and nested
//! golden-section searches find its minimum. `η₂` enters non-linearly and is
//! handled by a grid search followed by a local golden-section refinement.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::envelopes::{
    eta0, green_envelope, large_time_envelope, log_h, log_h_tilde, small_time_envelope, EnvelopeConstants,
    ModelParams,
};
use crate::error::{Error, Result};
use crate::mc::{derive_seed, green_mc, heat_kernel, McConfig};
use crate::pde::{
    kernel_1d_row, solve_exit_by_time, solve_exit_probability, solve_survival, solve_survival_times, Boundary,
    GridBuilder,
};
use crate::potentials::{classify, ClassGrid, ClassTag, Potential};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnglePolicy {
    /// `x` and `y` on the positive first axis.
    Aligned,
    /// `y` on the negative first axis (not allowed in d=1).
    Antipodal,
    /// `y` at `n` equally spaced angles in `[0, π]` in the first coordinate plane.
    Sampled(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t_values: Vec<f64>,
    pub radii_x: Vec<f64>,
    pub radii_y: Vec<f64>,
    pub angle: AnglePolicy,
    /// Explicit `(|x|, |y|)` pairs used instead of the product `radii_x × radii_y`.
    #[serde(default)]
    pub pairs: Option<Vec<(f64, f64)>>,
}

/// One `(t, x, y)` evaluation point.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl GridSpec {
    pub fn new(t_values: Vec<f64>, radii_x: Vec<f64>, radii_y: Vec<f64>, angle: AnglePolicy) -> Result<Self> {
        for (name, v) in [("t_values", &t_values), ("radii_x", &radii_x), ("radii_y", &radii_y)] {
            if v.is_empty() {
                return Err(Error::Config(format!("grid {name} is empty")));
            }
            if v.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
                return Err(Error::Config(format!("grid {name} must be positive and finite")));
            }
        }
        if let AnglePolicy::Sampled(0) = angle {
            return Err(Error::Config("sampled angle policy needs at least one angle".into()));
        }
        Ok(GridSpec {
            t_values,
            radii_x,
            radii_y,
            angle,
            pairs: None,
        })
    }

    /// A grid over the given `(|x|, |y|)` pairs rather than a product of radii.
    pub fn from_pairs(t_values: Vec<f64>, pairs: Vec<(f64, f64)>, angle: AnglePolicy) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Config("grid pairs are empty".into()));
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
        let mut g = GridSpec::new(t_values, xs, ys, angle)?;
        g.pairs = Some(pairs);
        Ok(g)
    }

    fn radius_pairs(&self) -> Vec<(f64, f64)> {
        match &self.pairs {
            Some(p) => p.clone(),
            None => self
                .radii_x
                .iter()
                .flat_map(|&rx| self.radii_y.iter().map(move |&ry| (rx, ry)))
                .collect(),
        }
    }

    /// All points of the grid in dimension `d`, in `t`-major order.
    pub fn points(&self, d: usize) -> Result<Vec<GridPoint>> {
        if d == 1 && self.angle != AnglePolicy::Aligned {
            return Err(Error::Config("d=1 grids must keep x and y on the same side".into()));
        }
        let angles: Vec<f64> = match self.angle {
            AnglePolicy::Aligned => vec![0.0],
            AnglePolicy::Antipodal => vec![std::f64::consts::PI],
            AnglePolicy::Sampled(n) if n == 1 => vec![0.0],
            AnglePolicy::Sampled(n) => (0..n)
                .map(|k| std::f64::consts::PI * k as f64 / (n - 1) as f64)
                .collect(),
        };
        let mut out = Vec::new();
        let pairs = self.radius_pairs();
        for &t in &self.t_values {
            for &(rx, ry) in &pairs {
                for &th in &angles {
                    let mut x = vec![0.0; d];
                    let mut y = vec![0.0; d];
                    x[0] = rx;
                    y[0] = ry * th.cos();
                    if d >= 2 {
                        y[1] = ry * th.sin();
                    }
                    out.push(GridPoint { t, x, y });
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioEntry {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub numeric: f64,
    /// Monte Carlo standard error, zero for deterministic sources.
    pub stderr: f64,
    pub log_envelope: f64,
    pub log_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Verdict {
    Bounded { spread: f64 },
    /// The entry furthest from the middle of the window.
    Violated { index: usize, spread: f64 },
}

impl Verdict {
    pub fn is_bounded(&self) -> bool {
        matches!(self, Verdict::Bounded { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub experiment: String,
    pub regime: String,
    pub entries: Vec<RatioEntry>,
    pub fitted: EnvelopeConstants,
    pub spread: f64,
    pub min_log_ratio: f64,
    pub max_log_ratio: f64,
    pub verdict: Verdict,
    /// Points dropped because the numerical value was exactly zero.
    pub skipped: usize,
    pub diagnostics: BTreeMap<String, f64>,
}

impl RatioReport {
    /// Summarise `entries`; the verdict is bounded when the spread is at most `max_spread`.
    pub fn from_entries(
        experiment: &str,
        regime: &str,
        entries: Vec<RatioEntry>,
        fitted: EnvelopeConstants,
        max_spread: f64,
    ) -> RatioReport {
        let (lo, hi) = entries.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
            (lo.min(e.log_ratio), hi.max(e.log_ratio))
        });
        let (lo, hi, spread) = if entries.is_empty() { (0.0, 0.0, 0.0) } else { (lo, hi, hi - lo) };
        let finite = entries.iter().all(|e| e.log_ratio.is_finite());
        let verdict = if finite && spread <= max_spread {
            Verdict::Bounded { spread }
        } else {
            let mid = 0.5 * (lo + hi);
            let index = entries
                .iter()
                .enumerate()
                .max_by(|a, b| {
                    let da = if a.1.log_ratio.is_finite() { (a.1.log_ratio - mid).abs() } else { f64::INFINITY };
                    let db = if b.1.log_ratio.is_finite() { (b.1.log_ratio - mid).abs() } else { f64::INFINITY };
                    da.total_cmp(&db)
                })
                .map(|(i, _)| i)
                .unwrap_or(0);
            Verdict::Violated { index, spread }
        };
        RatioReport {
            experiment: experiment.to_string(),
            regime: regime.to_string(),
            entries,
            fitted,
            spread,
            min_log_ratio: lo,
            max_log_ratio: hi,
            verdict,
            skipped: 0,
            diagnostics: BTreeMap::new(),
        }
    }
}

/// Minimise a unimodal `f` on `[lo, hi]` by golden-section search.
pub fn golden_min(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol * (1.0 + a.abs() + b.abs()) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    // The end points can win when the minimum sits on the boundary.
    let best = [(c, fc), (d, fd), (lo, f(lo)), (hi, f(hi))]
        .into_iter()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .unwrap();
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitKind {
    SmallTime,
    LargeTime,
    Green,
}

impl FitKind {
    pub fn name(self) -> &'static str {
        match self {
            FitKind::SmallTime => "small_time",
            FitKind::LargeTime => "large_time",
            FitKind::Green => "green",
        }
    }

    pub fn parse(s: &str) -> Result<FitKind> {
        match s {
            "small_time" => Ok(FitKind::SmallTime),
            "large_time" => Ok(FitKind::LargeTime),
            "green" => Ok(FitKind::Green),
            _ => Err(Error::Parse(format!("unknown fit kind '{s}'"))),
        }
    }
}

/// Where numerical values come from.
#[derive(Debug, Clone)]
pub enum Source {
    /// d=1 kernels from the radial solver.
    Pde(GridBuilder),
    Mc(McConfig),
}

/// Search ranges for the fitted constants.
const C_GAUSS_RANGE: (f64, f64) = (0.02, 50.0);
const C_KILL_RANGE: (f64, f64) = (1e-9, 100.0);
const ETA2_RANGE: (f64, f64) = (1e-2, 1e2);

fn log_ratios(
    kind: FitKind,
    p: &ModelParams,
    c: &EnvelopeConstants,
    rows: &[(GridPoint, f64, f64)],
) -> Result<Vec<f64>> {
    rows.iter()
        .map(|(pt, num, _)| {
            let env = match kind {
                FitKind::SmallTime => small_time_envelope(p, c, pt.t, &pt.x, &pt.y)?,
                FitKind::LargeTime => large_time_envelope(p, c, pt.t, &pt.x, &pt.y)?,
                FitKind::Green => green_envelope(p, c, &pt.x, &pt.y)?,
            };
            Ok(num.ln() - env.log_value)
        })
        .collect()
}

fn spread_of(v: &[f64]) -> f64 {
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if v.is_empty() {
        0.0
    } else if lo.is_finite() && hi.is_finite() {
        hi - lo
    } else {
        f64::INFINITY
    }
}

fn numeric_values(
    kind: FitKind,
    v: &Potential,
    grid: &GridSpec,
    source: &Source,
    t_max: f64,
) -> Result<(Vec<(GridPoint, f64, f64)>, usize)> {
    let d = v.params.d;
    let points: Vec<GridPoint> = if kind == FitKind::Green {
        // Time plays no role; keep one copy of each spatial pair.
        let spatial = GridSpec {
            t_values: vec![grid.t_values[0]],
            ..grid.clone()
        };
        spatial.points(d)?
    } else {
        grid.points(d)?
    };
    let mut rows = Vec::with_capacity(points.len());
    let mut skipped = 0;
    let mut rows_cache: HashMap<(u64, u64), crate::pde::RadialSolution> = HashMap::new();
    for (i, pt) in points.into_iter().enumerate() {
        let (num, se) = match (kind, source) {
            (FitKind::Green, Source::Mc(cfg)) => {
                let c = McConfig {
                    seed: derive_seed(cfg.seed, i as u64),
                    ..cfg.clone()
                };
                let g = green_mc(v, &pt.x, &pt.y, &c, t_max)?;
                (g.estimate.mean, g.estimate.stderr)
            }
            (FitKind::Green, Source::Pde(_)) => {
                return Err(Error::Config("Green function fits need a Monte Carlo source".into()));
            }
            (_, Source::Mc(cfg)) => {
                let c = McConfig {
                    seed: derive_seed(cfg.seed, i as u64),
                    ..cfg.clone()
                };
                let e = heat_kernel(v, pt.t, &pt.x, &pt.y, &c)?;
                (e.mean, e.stderr)
            }
            (_, Source::Pde(builder)) => {
                if d != 1 {
                    return Err(Error::Config(format!("PDE kernels are only available in d=1, got d={d}")));
                }
                let (x, y) = (pt.x[0].abs(), pt.y[0].abs());
                let key = (pt.t.to_bits(), y.to_bits());
                if !rows_cache.contains_key(&key) {
                    let g = builder.build(v, pt.t)?;
                    rows_cache.insert(key, kernel_1d_row(v, pt.t, y, &g)?);
                }
                (rows_cache[&key].linear_at(x)?, 0.0)
            }
        };
        if num > 0.0 && num.is_finite() {
            rows.push((pt, num, se));
        } else {
            skipped += 1;
        }
    }
    Ok((rows, skipped))
}

/// Fit the envelope constants of `kind` to numerical values on `grid`, minimising
/// the log-ratio spread. The verdict is bounded when the fitted spread is at most
/// `max_spread`. `t_max` is the time horizon of Green function quadrature.
pub fn fit_constants(
    kind: FitKind,
    v: &Potential,
    grid: &GridSpec,
    source: &Source,
    max_spread: f64,
    t_max: f64,
) -> Result<RatioReport> {
    let p = v.params;
    match kind {
        FitKind::SmallTime if grid.t_values.iter().any(|&t| t > 4.0) => {
            return Err(Error::Config("small-time fits need t <= 4".into()));
        }
        FitKind::LargeTime if grid.t_values.iter().any(|&t| t < 4.0) => {
            return Err(Error::Config("large-time fits need t >= 4".into()));
        }
        _ => {}
    }
    let (rows, skipped) = numeric_values(kind, v, grid, source, t_max)?;
    let spread_with = |c: &EnvelopeConstants| -> f64 {
        log_ratios(kind, &p, c, &rows).map(|v| spread_of(&v)).unwrap_or(f64::INFINITY)
    };
    let (a_lo, a_hi) = (1.0 / C_GAUSS_RANGE.1, 1.0 / C_GAUSS_RANGE.0);
    let fitted = match kind {
        FitKind::SmallTime => {
            let best_kill = |a: f64| {
                golden_min(
                    &|k| spread_with(&EnvelopeConstants { c_gauss: 1.0 / a, c_kill: k, eta2: 1.0 }),
                    C_KILL_RANGE.0,
                    C_KILL_RANGE.1,
                    1e-9,
                )
            };
            let (a, _) = golden_min(&|a| best_kill(a).1, a_lo, a_hi, 1e-9);
            let (k, _) = best_kill(a);
            EnvelopeConstants::new(1.0 / a, k, 1.0)?
        }
        FitKind::LargeTime => {
            let (a, _) = golden_min(
                &|a| spread_with(&EnvelopeConstants { c_gauss: 1.0 / a, ..Default::default() }),
                a_lo,
                a_hi,
                1e-10,
            );
            EnvelopeConstants::new(1.0 / a, 1.0, 1.0)?
        }
        FitKind::Green => {
            let best_kill = |eta2: f64| {
                golden_min(
                    &|k| spread_with(&EnvelopeConstants { c_gauss: 1.0, c_kill: k, eta2 }),
                    C_KILL_RANGE.0,
                    C_KILL_RANGE.1,
                    1e-9,
                )
            };
            let (l_lo, l_hi) = (ETA2_RANGE.0.ln(), ETA2_RANGE.1.ln());
            let n: usize = 64;
            let step = (l_hi - l_lo) / n as f64;
            let (best_i, _) = (0..=n)
                .map(|i| (i, best_kill((l_lo + step * i as f64).exp()).1))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            let lo = l_lo + step * best_i.saturating_sub(1) as f64;
            let hi = (l_lo + step * (best_i + 1) as f64).min(l_hi);
            let (l, _) = golden_min(&|l| best_kill(l.exp()).1, lo, hi, 1e-9);
            let (k, _) = best_kill(l.exp());
            EnvelopeConstants::new(1.0, k, l.exp())?
        }
    };
    let ratios = log_ratios(kind, &p, &fitted, &rows)?;
    let entries = rows
        .into_iter()
        .zip(ratios)
        .map(|((pt, num, se), lr)| RatioEntry {
            t: if kind == FitKind::Green { f64::INFINITY } else { pt.t },
            x: pt.x,
            y: pt.y,
            numeric: num,
            stderr: se,
            log_envelope: num.ln() - lr,
            log_ratio: lr,
        })
        .collect();
    let regime = match source {
        Source::Pde(_) => "pde",
        Source::Mc(_) => "mc",
    };
    let mut report = RatioReport::from_entries(kind.name(), regime, entries, fitted, max_spread);
    report.skipped = skipped;
    Ok(report)
}

/// Least-squares line through `(x_i, y_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<(f64, f64)>,
}

pub fn least_squares(points: Vec<(f64, f64)>) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::Degenerate(format!("{} points, need at least 3", points.len())));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::Degenerate("non-finite regression data".into()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("regressor has no spread".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(SlopeFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
        points,
    })
}

fn check_radii(radii: &[f64], limit: f64, what: &'static str) -> Result<()> {
    if radii.len() < 3 {
        return Err(Error::Degenerate(format!("{what} needs at least 3 radii")));
    }
    if let Some(&r) = radii.iter().find(|&&r| !(r > 0.0 && r < limit)) {
        return Err(Error::domain(what, format!("radius {r} outside (0, {limit})")));
    }
    Ok(())
}

/// Slope of `ln u(t, r)` against `r^{-β}`, with `u` the survival probability.
/// For potentials comparable to the canonical one it estimates `-√κ/β`.
pub fn decay_slope(v: &Potential, t: f64, radii: &[f64], builder: &GridBuilder) -> Result<SlopeFit> {
    let p = v.params;
    check_radii(radii, eta0(&p) * t.powf(p.time_exponent()), "decay_slope")?;
    let g = builder.build(v, t)?;
    let u = solve_survival(v, &g, t)?;
    let pts = radii
        .iter()
        .map(|&r| Ok((r.powf(-p.beta), u.at(r)?.ln())))
        .collect::<Result<Vec<_>>>()?;
    least_squares(pts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CounterexampleMode {
    /// `ln[u(t,r)/h(r)]` against `ln r`, `u` the survival probability at time `t`.
    Survival { t: f64 },
    /// `ln[P_r(τ_R < ζ)/h̃(r)]` against `ln r`.
    Exit { radius: f64 },
}

/// Power of `r` left over after dividing by the harmonic profile. Zero for
/// potentials in the canonical class; nonzero for critical perturbations.
pub fn counterexample_exponent(
    v: &Potential,
    mode: CounterexampleMode,
    radii: &[f64],
    builder: &GridBuilder,
) -> Result<SlopeFit> {
    let p = v.params;
    match mode {
        CounterexampleMode::Survival { t } => {
            check_radii(radii, eta0(&p) * t.powf(p.time_exponent()), "counterexample_exponent")?;
            let g = builder.build(v, t)?;
            let u = solve_survival(v, &g, t)?;
            let pts = radii
                .iter()
                .map(|&r| Ok((r.ln(), u.at(r)?.ln() - log_h(&p, r)?)))
                .collect::<Result<Vec<_>>>()?;
            least_squares(pts)
        }
        CounterexampleMode::Exit { radius } => {
            check_radii(radii, radius, "counterexample_exponent")?;
            let g = builder.clone().r_max(radius).outer(Boundary::Absorbing).build(v, 1.0)?;
            let u = solve_exit_probability(v, &g)?;
            let pts = radii
                .iter()
                .map(|&r| Ok((r.ln(), u.at(r)?.ln() - log_h_tilde(&p, r)?)))
                .collect::<Result<Vec<_>>>()?;
            least_squares(pts)
        }
    }
}

/// Threshold below which the exit-capped lower ratio no longer counts as positive.
pub const LOWER_RATIO_FLOOR: f64 = 1e-3;

/// Survival probability at `r = frac·η₀t^{1/(2+β)}` compared with
/// `h(r)/h(η₀t^{1/(2+β)})` over `t_values`.
///
/// Diagnostics carry the lower side: the probability of leaving
/// `B(0, η₀(t/4)^{1/(2+β)})` before dying and before `t/3`, divided by the same
/// profile ratio. `t0` is the largest grid time up to which that ratio stays
/// above [`LOWER_RATIO_FLOOR`].
pub fn survival_sandwich(
    v: &Potential,
    t_values: &[f64],
    frac: f64,
    builder: &GridBuilder,
    max_spread: f64,
) -> Result<RatioReport> {
    if !classify(v, ClassTag::Kloc, &ClassGrid::default()).member {
        return Err(Error::NotInClass(ClassTag::Kloc.name().into()));
    }
    if !(frac > 0.0 && frac < 1.0) {
        return Err(Error::domain("survival_sandwich", format!("fraction {frac} outside (0,1)")));
    }
    let mut ts = t_values.to_vec();
    ts.sort_by(f64::total_cmp);
    if ts.is_empty() || !(ts[0] > 0.0) {
        return Err(Error::Config("survival_sandwich needs positive times".into()));
    }
    let p = v.params;
    let te = p.time_exponent();
    let t_hi = *ts.last().unwrap();
    let g = builder.build(v, t_hi)?;
    let sols = solve_survival_times(v, &g, &ts)?;
    let mut entries = Vec::with_capacity(ts.len());
    let mut diagnostics = BTreeMap::new();
    let mut lower_min = f64::INFINITY;
    let mut t0 = 0.0;
    let mut lower_ok = true;
    for (k, (t, sol)) in ts.iter().zip(&sols).enumerate() {
        let scale = eta0(&p) * t.powf(te);
        let r = frac * scale;
        let numeric = sol.at(r)?;
        let log_env = log_h(&p, r)? - log_h(&p, scale)?;
        entries.push(RatioEntry {
            t: *t,
            x: vec![r],
            y: vec![],
            numeric,
            stderr: 0.0,
            log_envelope: log_env,
            log_ratio: numeric.ln() - log_env,
        });
        let rho = eta0(&p) * (t / 4.0).powf(te);
        if r < rho {
            let ge = builder.clone().r_max(rho).outer(Boundary::Absorbing).build(v, t / 3.0)?;
            let exit = solve_exit_by_time(v, &ge, t / 3.0)?.at(r)?;
            let lower = exit.ln() - log_env;
            diagnostics.insert(format!("lower_log_ratio_{k}"), lower);
            lower_min = lower_min.min(lower);
            if lower_ok && lower > LOWER_RATIO_FLOOR.ln() {
                t0 = *t;
            } else {
                lower_ok = false;
            }
        }
    }
    diagnostics.insert("lower_log_ratio_min".into(), lower_min);
    diagnostics.insert("t0".into(), t0);
    let mut report = RatioReport::from_entries(
        "survival_sandwich",
        "small_time",
        entries,
        EnvelopeConstants::default(),
        max_spread,
    );
    report.diagnostics = diagnostics;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_grids_visit_only_the_listed_pairs() {
        let pairs = vec![(0.5, 1.0), (2.0, 3.0), (1.0, 1.5)];
        let g = GridSpec::from_pairs(vec![1.0, 2.0], pairs.clone(), AnglePolicy::Aligned).unwrap();
        let pts = g.points(3).unwrap();
        assert_eq!(pts.len(), 6);
        for (i, p) in pts.iter().enumerate() {
            let (rx, ry) = pairs[i % 3];
            assert_eq!(p.t, [1.0, 2.0][i / 3]);
            assert!((p.x[0] - rx).abs() < 1e-15 && (p.y[0] - ry).abs() < 1e-15);
        }
        assert!(GridSpec::from_pairs(vec![1.0], vec![], AnglePolicy::Aligned).is_err());
    }

    #[test]
    fn golden_finds_minimum() {
        let (x, fx) = golden_min(&|x| (x - 1.3).powi(2) + 2.0, -5.0, 5.0, 1e-12);
        assert!((x - 1.3).abs() < 1e-6);
        assert!((fx - 2.0).abs() < 1e-12);
        let (x, _) = golden_min(&|x| x, 0.0, 1.0, 1e-12);
        assert_eq!(x, 0.0);
    }

    #[test]
    fn least_squares_recovers_line() {
        let f = least_squares((0..5).map(|i| (i as f64, 2.0 - 0.5 * i as f64)).collect()).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-14);
        assert!((f.intercept - 2.0).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
        assert!(least_squares(vec![(0.0, 1.0), (1.0, 2.0)]).is_err());
    }

    #[test]
    fn single_point_report_has_zero_spread() {
        let e = RatioEntry {
            t: 1.0,
            x: vec![1.0],
            y: vec![1.0],
            numeric: 0.3,
            stderr: 0.0,
            log_envelope: -1.0,
            log_ratio: 0.3f64.ln() + 1.0,
        };
        let r = RatioReport::from_entries("one", "test", vec![e], EnvelopeConstants::default(), 0.0);
        assert_eq!(r.spread, 0.0);
        assert!(r.verdict.is_bounded());
    }

    #[test]
    fn grid_points_layout() {
        let g = GridSpec::new(vec![1.0, 2.0], vec![0.5], vec![1.0, 2.0], AnglePolicy::Sampled(3)).unwrap();
        let pts = g.points(3).unwrap();
        assert_eq!(pts.len(), 2 * 2 * 3);
        assert!((pts[2].y[0] + 1.0).abs() < 1e-15);
        assert!(pts[2].y[1].abs() < 1e-15);
        assert!(GridSpec::new(vec![], vec![1.0], vec![1.0], AnglePolicy::Aligned).is_err());
        let g1 = GridSpec::new(vec![1.0], vec![1.0], vec![1.0], AnglePolicy::Antipodal).unwrap();
        assert!(g1.points(1).is_err());
    }

    #[test]
    fn spread_is_infinite_with_nonfinite_entries() {
        assert_eq!(spread_of(&[1.0, f64::NEG_INFINITY]), f64::INFINITY);
        assert_eq!(spread_of(&[]), 0.0);
    }
}
