//! Named experiment suites shared by the command line and the acceptance tests.
//!
//! Each suite runs a fixed experiment and returns a list of [`Check`]s, each a
//! measured value with the interval it must fall in. A suite passes when every
//! check does.

use std::f64::consts::{E, PI};

use serde::Serialize;

use crate::envelopes::{
    barrier_u, eta0, eta1, eta1_closed_form, f0, g0, h, h_tilde, psi, BarrierKind, ModelParams, H,
};
use crate::error::{Error, Result};
use crate::exterior::{dhk_bridge_mc, dhk_exact_1d, psi_ratio_report, ExteriorDomain};
use crate::mc::{
    derive_seed, exit_before_death, green_mc, heat_kernel, survival_probability, with_threads, McConfig,
};
use crate::pde::{solve_kernel_1d, solve_survival, solve_survival_times, GridBuilder};
use crate::potentials::{barrier_radius, Potential, Sign};
use crate::report::estimate_csv;
use crate::specfun::{bessel_k, bessel_k_scaled, gaussian_q, log_shift, BesselOrder};
use crate::verify::{
    counterexample_exponent, decay_slope, fit_constants, survival_sandwich, AnglePolicy, CounterexampleMode,
    FitKind, GridSpec, RatioReport, Source,
};

/// Suite names accepted by [`run_suite`], in criterion order.
pub const SUITES: [&str; 13] = [
    "bessel",
    "goldens",
    "exterior-1d",
    "kernel-1d",
    "survival-3d",
    "decay-slope",
    "sandwich",
    "barrier",
    "small-time",
    "large-time",
    "green",
    "counterexample",
    "determinism",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `lower ≤ value ≤ upper`.
    pub fn within(name: &str, value: f64, lower: f64, upper: f64) -> Check {
        Check {
            name: name.into(),
            value,
            lower,
            upper,
            passed: value >= lower && value <= upper,
        }
    }

    /// A yes/no property, recorded as 1 or 0 against `[1, 1]`.
    pub fn holds(name: &str, ok: bool) -> Check {
        Check::within(name, if ok { 1.0 } else { 0.0 }, 1.0, 1.0)
    }

    /// A recorded quantity with no pass condition.
    pub fn info(name: &str, value: f64) -> Check {
        Check {
            name: name.into(),
            value,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
            passed: true,
        }
    }
}

/// A named two-column data series for plotting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteOutcome {
    pub suite: String,
    pub checks: Vec<Check>,
    pub reports: Vec<RatioReport>,
    pub curves: Vec<Curve>,
}

impl SuiteOutcome {
    fn new(suite: &str) -> Self {
        SuiteOutcome {
            suite: suite.into(),
            checks: Vec::new(),
            reports: Vec::new(),
            curves: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    /// One line: suite name, PASS or FAIL, and every check with its bounds.
    pub fn summary(&self) -> String {
        let parts: Vec<String> = self
            .checks
            .iter()
            .map(|c| {
                let mark = if c.passed { "" } else { " (!)" };
                if c.lower == f64::NEG_INFINITY && c.upper == f64::INFINITY {
                    format!("{}={:.6e}", c.name, c.value)
                } else {
                    format!("{}={:.6e} in [{:.3e}, {:.3e}]{mark}", c.name, c.value, c.lower, c.upper)
                }
            })
            .collect();
        format!(
            "{} {}: {}",
            self.suite,
            if self.passed() { "PASS" } else { "FAIL" },
            parts.join("; ")
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Replaces the suite's Monte Carlo path counts when set.
    pub paths: Option<u64>,
}

impl SuiteOptions {
    fn mc(&self, default_paths: u64, index: u64) -> McConfig {
        McConfig {
            paths: self.paths.unwrap_or(default_paths),
            seed: derive_seed(self.seed, index),
            ..McConfig::default()
        }
    }
}

pub fn run_suite(name: &str, opts: &SuiteOptions) -> Result<SuiteOutcome> {
    match name {
        "bessel" => bessel(),
        "goldens" => goldens(),
        "exterior-1d" => exterior_1d(opts),
        "kernel-1d" => kernel_1d(opts),
        "survival-3d" => survival_3d(opts),
        "decay-slope" => decay(),
        "sandwich" => sandwich(),
        "barrier" => barrier(opts),
        "small-time" => small_time(),
        "large-time" => large_time(),
        "green" => green(opts),
        "counterexample" => counterexample(),
        "determinism" => determinism(opts),
        _ => Err(Error::Config(format!(
            "unknown suite '{name}' (expected one of {})",
            SUITES.join(", ")
        ))),
    }
}

fn canonical(d: usize, beta: f64, kappa: f64) -> Result<Potential> {
    Ok(Potential::canonical(ModelParams::new(d, beta, kappa)?))
}

fn rel_err(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

const BESSEL_ORDERS: [f64; 7] = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0];

fn bessel() -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new("bessel");
    let target = (0.5 * PI).sqrt();
    let large: [f64; 8] = [100.0, 200.0, 500.0, 1e3, 3e3, 1e4, 1e5, 1e6];
    let mut worst = 0.0f64;
    // Smallest grid point from which every order stays within 1e-3.
    let mut onset = 0.0f64;
    for nu in BESSEL_ORDERS {
        let o = BesselOrder::new(nu)?;
        let mut pts = Vec::new();
        for &x in &large {
            let dev = (x.sqrt() * bessel_k_scaled(o, x)? - target).abs();
            worst = worst.max(dev);
            if dev >= 1e-3 {
                onset = onset.max(x);
            }
            pts.push((x, dev));
        }
        out.curves.push(Curve {
            name: format!("asymptotic_deviation_nu_{nu}"),
            points: pts,
        });
    }
    out.checks.push(Check::within("asymptotic_max_deviation", worst, 0.0, 1e-3));
    let first_ok = large.iter().copied().find(|&x| x > onset).unwrap_or(f64::INFINITY);
    out.checks.push(Check::info("asymptotic_holds_from_x", first_ok));

    let mut rec = 0.0f64;
    for nu in BESSEL_ORDERS {
        let (o, om1) = (BesselOrder::new(nu)?, BesselOrder::new(nu - 1.0)?);
        for x in [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0] {
            let step = 1e-5 * x;
            let deriv = (bessel_k(o, x + step)? - bessel_k(o, x - step)?) / (2.0 * step);
            let km1 = bessel_k(om1, x)?;
            rec = rec.max((deriv + nu / x * bessel_k(o, x)? + km1).abs() / km1);
        }
    }
    out.checks.push(Check::within("recurrence_max_relative_residual", rec, 0.0, 1e-6));

    let half = BesselOrder::new(0.5)?;
    let mut closed = 0.0f64;
    for x in [1e-3, 0.1, 1.0, 5.0, 20.0, 100.0, 600.0] {
        closed = closed.max(rel_err(bessel_k_scaled(half, x)?, (PI / (2.0 * x)).sqrt()));
    }
    out.checks.push(Check::within("half_order_closed_form_rel_error", closed, 0.0, 1e-10));

    let mut sym = 0.0f64;
    for nu in [0.3, 0.5, 1.0, 1.7, 2.0] {
        for x in [0.1, 1.0, 10.0] {
            sym = sym.max(rel_err(bessel_k(BesselOrder::new(-nu)?, x)?, bessel_k(BesselOrder::new(nu)?, x)?));
        }
    }
    out.checks.push(Check::within("order_symmetry_rel_error", sym, 0.0, 1e-12));
    Ok(out)
}

fn goldens() -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new("goldens");
    let p3 = ModelParams::new(3, 1.0, 1.0)?;
    let p1 = ModelParams::new(1, 1.0, 1.0)?;
    let p2 = ModelParams::new(2, 1.0, 1.0)?;
    let ln = |r: f64| (E - 1.0 + r).ln();
    let cases: Vec<(&str, f64, f64)> = vec![
        ("h_d3_r0.5", h(&p3, 0.5)?, (-2.0f64).exp()),
        ("h_d3_r2", h(&p3, 2.0)?, (-1.0f64).exp()),
        ("h_d1_r0.5", h(&p1, 0.5)?, 0.5 * (-2.0f64).exp()),
        ("H_d3_t7_r0.5", H(&p3, 7.0, 0.5)?, (-2.0f64).exp()),
        ("H_d1_t100_r3", H(&p1, 100.0, 3.0)?, 0.3),
        ("H_d2_t100_r5", H(&p2, 100.0, 5.0)?, ln(5.0) / ln(10.0)),
        ("psi_d3_R1_t4_r1.25", psi(3, 1.0, 4.0, 1.25)?, 0.25),
        ("psi_d1_R1_t1_r1.5", psi(1, 1.0, 1.0, 1.5)?, 0.5),
        ("psi_d2_R1_t0.5_r3", psi(2, 1.0, 0.5, 3.0)?, 1.0),
        ("eta0_b1_k1", eta0(&p3), 2f64.powf(-13.0 / 9.0)),
        ("eta0_b2_k1", eta0(&ModelParams::new(3, 2.0, 1.0)?), 2f64.powf(-7.0 / 8.0)),
        ("eta1_b1_k1", eta1(&p3), 2f64.powf(-19.0 / 9.0)),
        ("Log_0", log_shift(0.0)?, (E - 1.0).ln()),
        ("Log_1", log_shift(1.0)?, 1.0),
        ("Log_10", log_shift(10.0)?, (E + 9.0).ln()),
        ("q_d1_t1_same", gaussian_q(1, 1.0, &[0.3], &[0.3])?, (4.0 * PI).powf(-0.5)),
        (
            "q_d3_t1_dist1",
            gaussian_q(3, 1.0, &[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0])?,
            (4.0 * PI).powf(-1.5) * (-0.25f64).exp(),
        ),
        ("g0_d1_3_5", g0(1, &[3.0], &[5.0])?, 3.0),
        ("f0_d2_far0.5_dist0.1", f0(&p2, &[0.4, 0.0], &[0.5, 0.0])?, ln(2.5)),
    ];
    let mut worst = 0.0f64;
    for (name, got, want) in &cases {
        let e = rel_err(*got, *want);
        worst = worst.max(e);
        out.checks.push(Check::within(name, e, 0.0, 1e-9));
    }
    out.checks.push(Check::info("max_rel_error", worst));
    let mut dual = 0.0f64;
    for beta in [0.25, 0.5, 1.0, 2.0, 3.0] {
        for kappa in [0.1, 1.0, 4.0, 25.0] {
            let p = ModelParams::new(3, beta, kappa)?;
            dual = dual.max(rel_err(eta1(&p), eta1_closed_form(&p)));
        }
    }
    out.checks.push(Check::within("eta1_dual_formula_rel_error", dual, 0.0, 1e-12));
    Ok(out)
}

fn exterior_1d(opts: &SuiteOptions) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new("exterior-1d");
    let dom = ExteriorDomain::new(1.0, 1)?;
    let exact = dhk_exact_1d(1.0, 1.0, 2.0, 3.0)?;
    let e = dhk_bridge_mc(&dom, 1.0, &[2.0], &[3.0], &opts.mc(100_000, 0))?;
    out.checks.push(Check::info("exact", exact));
    out.checks.push(Check::info("mc_mean", e.mean));
    out.checks.push(Check::within(
        "mc_deviation_in_stderr",
        (e.mean - exact).abs() / e.stderr,
        0.0,
        3.0,
    ));
    // p_{λR}(λ²t, λx, λy) = p_R(t, x, y)/λ in d=1.
    let mut scaling = 0.0f64;
    for (t, x, y) in [(1.0, 2.0, 3.0), (0.3, 1.2, 1.5), (2.0, -1.5, -4.0)] {
        let base = dhk_exact_1d(1.0, t, x, y)?;
        for lambda in [0.5, 2.0, 3.7] {
            let scaled = lambda * dhk_exact_1d(lambda, lambda * lambda * t, lambda * x, lambda * y)?;
            scaling = scaling.max(rel_err(scaled, base));
        }
    }
    out.checks.push(Check::within("brownian_scaling_rel_error", scaling, 0.0, 1e-12));
    let grid = GridSpec::new(vec![0.25, 1.0, 4.0], vec![1.2, 2.0, 4.0], vec![1.5, 3.0], AnglePolicy::Aligned)?;
    let report = psi_ratio_report(&dom, &grid, &opts.mc(1, 1))?;
    out.checks.push(Check::info("psi_ratio_spread", report.spread));
    out.reports.push(report);
    Ok(out)
}

fn kernel_1d(opts: &SuiteOptions) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new("kernel-1d");
    let v = canonical(1, 1.0, 1.0)?;
    let builder = GridBuilder::new().per_decade(400).steps(4000);
    let mut worst = 0.0f64;
    let mut i = 0;
    for t in [0.2, 0.5, 1.0] {
        let g = builder.build(&v, t)?;
        for x in [0.5, 1.0, 2.0] {
            for y in [0.5, 1.0, 2.0] {
                let reference = solve_kernel_1d(&v, t, x, y, &g)?;
                let e = heat_kernel(&v, t, &[x], &[y], &opts.mc(100_000, i))?;
                i += 1;
                let tol = (3.0 * e.stderr).max(0.03 * reference);
                worst = worst.max((e.mean - reference).abs() / tol);
            }
        }
    }
    out.checks.push(Check::info("points", i as f64));
    out.checks.push(Check::within("max_deviation_over_tolerance", worst, 0.0, 1.0));
    Ok(out)
}

fn survival_3d(opts: &SuiteOptions) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new("survival-3d");
    let v = canonical(3, 1.0, 1.0)?;
    let builder = GridBuilder::new().per_decade(400).steps(4000);
    let mut worst = 0.0f64;
    let mut i = 0;
    for t in [0.1, 0.2, 0.4] {
        let sol = solve_survival(&v, &builder.build(&v, t)?, t)?;
        for r in [0.4, 0.6, 1.0] {
            let reference = sol.at(r)?;
            let e = survival_probability(&v, &[r, 0.0, 0.0], t, &opts.mc(40_000, i))?;
            i += 1;
            let tol = (3.0 * e.stderr).max(0.02 * reference);
            worst = worst.max((e.mean - reference).abs() / tol);
        }
    }
    out.checks.push(Check::within("max_deviation_over_tolerance", worst, 0.0, 1.0));
    Ok(out)
}

fn decay() -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new("decay-slope");
    let radii = [0.20, 0.16, 0.13, 0.11, 0.09];
    for kappa in [1.0, 4.0] {
        let v = canonical(3, 1.0, kappa)?;
        let fit = decay_slope(&v, 0.5, &radii, &GridBuilder::new())?;
        let want = -kappa.sqrt();
        out.checks.push(Check::within(
            &format!("slope_kappa_{kappa}"),
            fit.slope,
            want * 1.1,
            want * 0.9,
        ));
        out.curves.push(Curve {
            name: format!("log_u_vs_r_pow_minus_beta_kappa_{kappa}"),
            points: fit.points.clone(),
        });
    }
    Ok(out)
}

fn sandwich() -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new("sandwich");
    let v = canonical(3, 1.0, 1.0)?;
    let ts = [0.05, 0.1, 0.2, 0.4];
    let report = survival_sandwich(&v, &ts, 0.5, &GridBuilder::new(), 10f64.ln())?;
    out.checks.push(Check::within("spread", report.spread, 0.0, 10f64.ln()));
    out.checks.push(Check::holds("verdict_bounded", report.verdict.is_bounded()));
    for (k, v) in &report.diagnostics {
        out.checks.push(Check::info(k, *v));
    }
    out.curves.push(Curve {
        name: "upper_log_ratio_vs_t".into(),
        points: report.entries.iter().map(|e| (e.t, e.log_ratio)).collect(),
    });
    out.reports.push(report);
    Ok(out)
}

fn barrier(opts: &SuiteOptions) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new("barrier");
    let mut smallest = f64::INFINITY;
    for d in [1, 2, 3] {
        for beta in [0.5, 1.0, 2.0] {
            for kappa in [0.5, 1.0, 4.0] {
                let v = canonical(d, beta, kappa)?;
                for kind in [BarrierKind::U1, BarrierKind::U2] {
                    let r = barrier_radius(&v, kind, 0.5 * beta)?.unwrap_or(0.0);
                    smallest = smallest.min(r);
                }
            }
        }
    }
    out.checks.push(Check::within("min_barrier_radius", smallest, 0.02, f64::INFINITY));

    let p = ModelParams::new(3, 1.0, 1.0)?;
    let v = Potential::canonical(p);
    let bp = 0.5;
    let r1 = barrier_radius(&v, BarrierKind::U1, bp)?.unwrap_or(0.0);
    let r2 = barrier_radius(&v, BarrierKind::U2, bp)?.unwrap_or(0.0);
    let big_r = 0.5 * r1.min(r2);
    if !(big_r > 0.0) {
        out.checks.push(Check::holds("barrier_radius_found", false));
        return Ok(out);
    }
    let x = 0.5 * big_r;
    let e = exit_before_death(&v, &[x, 0.0, 0.0], big_r, None, &opts.mc(100_000, 0))?;
    let lower = barrier_u(BarrierKind::U2, &p, bp, x)? / barrier_u(BarrierKind::U2, &p, bp, big_r)?;
    let upper = barrier_u(BarrierKind::U1, &p, bp, x)? / barrier_u(BarrierKind::U1, &p, bp, big_r)?;
    out.checks.push(Check::info("R", big_r));
    out.checks.push(Check::info("estimate", e.mean));
    out.checks.push(Check::info("h_tilde_ratio", h_tilde(&p, x)? / h_tilde(&p, big_r)?));
    out.checks.push(Check::within(
        "above_lower_in_stderr",
        (e.mean - lower) / e.stderr,
        -3.0,
        f64::INFINITY,
    ));
    out.checks.push(Check::within(
        "below_upper_in_stderr",
        (upper - e.mean) / e.stderr,
        -3.0,
        f64::INFINITY,
    ));
    Ok(out)
}

fn small_time() -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new("small-time");
    let v = canonical(1, 1.0, 1.0)?;
    let radii = vec![0.1, 0.3, 1.0, 3.0];
    let grid = GridSpec::new(vec![0.25, 0.5, 1.0, 2.0, 4.0], radii.clone(), radii, AnglePolicy::Aligned)?;
    let builder = GridBuilder::new().per_decade(200).steps(1000);
    let report = fit_constants(FitKind::SmallTime, &v, &grid, &Source::Pde(builder), 50f64.ln(), 0.0)?;
    out.checks.push(Check::within("spread", report.spread, 0.0, 50f64.ln()));
    out.checks.push(Check::holds("verdict_bounded", report.verdict.is_bounded()));
    out.checks.push(Check::info("c_gauss", report.fitted.c_gauss));
    out.checks.push(Check::info("c_kill", report.fitted.c_kill));
    out.reports.push(report);
    Ok(out)
}

fn large_time() -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new("large-time");
    let ts = [1e2, 1e3, 1e4];
    let builder = GridBuilder::new().outer_spacing(0.25).steps(20_000);
    for d in [2usize, 1] {
        let v = canonical(d, 1.0, 1.0)?;
        let g = builder.build(&v, ts[2])?;
        let sols = solve_survival_times(&v, &g, &ts)?;
        let mut pts = Vec::new();
        for (t, s) in ts.iter().zip(&sols) {
            let norm = if d == 2 { log_shift(t.sqrt())? } else { t.sqrt() };
            pts.push((*t, s.at(5.0)? * norm));
        }
        let (lo, hi) = pts
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &(_, y)| (lo.min(y), hi.max(y)));
        out.checks.push(Check::within(&format!("variation_factor_d{d}"), hi / lo, 1.0, 3.0));
        out.curves.push(Curve {
            name: format!("normalised_survival_d{d}"),
            points: pts,
        });
    }
    Ok(out)
}

/// Aligned pairs `(|x|, |y|)` covering `|x|∧|y| ∈ [0.3, 2]` and `|x−y| ∈ [0.1, 3]`.
pub const GREEN_PAIRS: [(f64, f64); 10] = [
    (0.3, 0.4),
    (0.3, 1.0),
    (0.5, 0.8),
    (0.6, 2.0),
    (0.8, 0.9),
    (1.0, 2.5),
    (1.0, 4.0),
    (1.5, 2.0),
    (2.0, 2.1),
    (2.0, 5.0),
];

fn green(opts: &SuiteOptions) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new("green");
    let p = ModelParams::new(3, 1.0, 1.0)?;
    let free = green_mc(&Potential::zero(p), &[0.0; 3], &[1.0, 0.0, 0.0], &opts.mc(64, 0), 100.0)?;
    let newton = 1.0 / (4.0 * PI);
    out.checks.push(Check::within("free_rel_error", rel_err(free.estimate.mean, newton), 0.0, 0.05));
    let grid = GridSpec::from_pairs(vec![1.0], GREEN_PAIRS.to_vec(), AnglePolicy::Aligned)?;
    let report = fit_constants(
        FitKind::Green,
        &Potential::canonical(p),
        &grid,
        &Source::Mc(opts.mc(200, 1)),
        100f64.ln(),
        100.0,
    )?;
    out.checks.push(Check::within("spread", report.spread, 0.0, 100f64.ln()));
    out.checks.push(Check::holds("verdict_bounded", report.verdict.is_bounded()));
    out.checks.push(Check::info("eta2", report.fitted.eta2));
    out.checks.push(Check::info("c_kill", report.fitted.c_kill));
    out.reports.push(report);
    Ok(out)
}

fn counterexample() -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new("counterexample");
    let p = ModelParams::new(3, 1.0, 1.0)?;
    let radii = [0.10, 0.07, 0.05, 0.035, 0.025];
    let builder = GridBuilder::new().per_decade(800).steps(4000);
    let mode = CounterexampleMode::Survival { t: 0.5 };
    let plus = counterexample_exponent(&Potential::critical(p, 5.0, Sign::Plus)?, mode, &radii, &builder)?;
    let canon = counterexample_exponent(&Potential::canonical(p), mode, &radii, &builder)?;
    out.checks.push(Check::within("exponent_critical_plus", plus.slope, 0.05, f64::INFINITY));
    out.checks.push(Check::within("exponent_canonical", canon.slope, -0.05, 0.05));
    let exit = CounterexampleMode::Exit { radius: 0.2 };
    let minus = counterexample_exponent(&Potential::critical(p, 0.5, Sign::Minus)?, exit, &radii, &builder)?;
    out.checks.push(Check::within("exit_exponent_critical_minus", minus.slope, f64::NEG_INFINITY, 0.0));
    for (name, fit) in [("critical_plus", &plus), ("canonical", &canon), ("critical_minus_exit", &minus)] {
        out.curves.push(Curve {
            name: format!("log_ratio_vs_log_r_{name}"),
            points: fit.points.clone(),
        });
    }
    Ok(out)
}

fn determinism(opts: &SuiteOptions) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new("determinism");
    let v3 = canonical(3, 1.0, 1.0)?;
    let cfg = opts.mc(5000, 0);
    let run = || -> Result<String> {
        let e = survival_probability(&v3, &[0.5, 0.1, 0.0], 0.3, &cfg)?;
        let dom = ExteriorDomain::new(1.0, 2)?;
        let k = dhk_bridge_mc(&dom, 0.5, &[1.3, 0.0], &[0.0, 1.6], &cfg)?;
        Ok(estimate_csv(&[("t", 0.3)], &e) + &estimate_csv(&[("t", 0.5)], &k))
    };
    let one = with_threads(1, run)??;
    let eight = with_threads(8, run)??;
    out.checks.push(Check::holds("csv_identical_1_vs_8_threads", one == eight));

    let v1 = canonical(1, 1.0, 1.0)?;
    let across = heat_kernel(&v1, 1.0, &[-0.5], &[0.7], &opts.mc(1000, 1))?;
    out.checks.push(Check::holds(
        "d1_opposite_sides_exactly_zero",
        across.mean == 0.0 && across.stderr == 0.0,
    ));

    let builder = GridBuilder::new().per_decade(400).steps(4000);
    let mut q_excess = f64::NEG_INFINITY;
    let mut mc_asym = 0.0f64;
    let mut pde_asym = 0.0f64;
    let mut i = 2;
    for t in [0.2, 0.5, 1.0] {
        let g = builder.build(&v1, t)?;
        for x in [0.5, 1.0, 2.0] {
            for y in [0.5, 1.0, 2.0] {
                let q = gaussian_q(1, t, &[x], &[y])?;
                let a = heat_kernel(&v1, t, &[x], &[y], &opts.mc(10_000, i))?;
                let b = heat_kernel(&v1, t, &[y], &[x], &opts.mc(10_000, i + 1))?;
                i += 2;
                q_excess = q_excess.max((a.mean - 3.0 * a.stderr - q) / q);
                let se = a.stderr.hypot(b.stderr);
                if se > 0.0 {
                    mc_asym = mc_asym.max((a.mean - b.mean).abs() / se);
                }
                let pa = solve_kernel_1d(&v1, t, x, y, &g)?;
                let pb = solve_kernel_1d(&v1, t, y, x, &g)?;
                pde_asym = pde_asym.max(rel_err(pa, pb));
            }
        }
    }
    out.checks.push(Check::within("max_rel_excess_over_q", q_excess, f64::NEG_INFINITY, 0.0));
    out.checks.push(Check::within("mc_asymmetry_in_stderr", mc_asym, 0.0, 4.0));
    out.checks.push(Check::within("pde_asymmetry_rel", pde_asym, 0.0, 1e-2));
    Ok(out)
}
