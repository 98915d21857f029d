//! Batch front-end for the `supercrit` numerics.
//!
//! Every flag can also be given in a config file of `key = value` lines. The
//! file is expanded into flags placed before the command-line flags, so the
//! command line wins when both set the same key.

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use supercrit::envelopes::{self, BarrierKind, ModelParams};
use supercrit::exterior::{dhk_bridge_mc, dhk_exact_1d, ExteriorDomain};
use supercrit::mc::{self, McConfig, McEstimate};
use supercrit::pde::{self, GridBuilder};
use supercrit::potentials::{Potential, Sign};
use supercrit::report::{self, Format};
use supercrit::suites::{self, SuiteOptions, SUITES};
use supercrit::specfun::log_shift;

#[derive(Parser, Debug)]
#[command(
    name = "supercrit",
    version,
    about = "Heat kernels, survival probabilities and Green functions for Δ - V with a supercritical killing potential",
    args_override_self = true
)]
struct Cli {
    /// Config file of `key = value` lines; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for Monte Carlo; 0 uses all cores. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Csv)]
    format: OutFormat,
    /// Directory for two-column plot data, one file per curve.
    #[arg(long, global = true)]
    plot_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Format {
        match f {
            OutFormat::Csv => Format::Csv,
            OutFormat::Json => Format::Json,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a closed-form envelope function and print it.
    Envelope(EnvelopeArgs),
    /// Survival probability `P_x(ζ > t)`.
    Survival(SurvivalArgs),
    /// Heat kernel `p(t, x, y)`.
    Kernel(KernelArgs),
    /// Green function `G(x, y)`.
    Green(GreenArgs),
    /// Run a named verification suite.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    #[arg(long, default_value_t = 3)]
    d: usize,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
}

impl ModelArgs {
    fn params(&self) -> supercrit::Result<ModelParams> {
        ModelParams::new(self.d, self.beta, self.kappa)
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Form {
    Canonical,
    Perturbed,
    Critical,
    Zero,
}

#[derive(Args, Debug, Clone)]
struct PotentialArgs {
    #[arg(long, value_enum, default_value_t = Form::Canonical)]
    form: Form,
    /// Perturbation or critical-term coefficient.
    #[arg(long = "c", default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    /// `+` or `-`.
    #[arg(long, default_value = "+", allow_hyphen_values = true)]
    sign: String,
}

impl PotentialArgs {
    fn build(&self, p: ModelParams) -> supercrit::Result<Potential> {
        let sign = Sign::parse(&self.sign)?;
        match self.form {
            Form::Canonical => Ok(Potential::canonical(p)),
            Form::Perturbed => Potential::perturbed(p, self.c, self.theta, sign),
            Form::Critical => Potential::critical(p, self.c, sign),
            Form::Zero => Ok(Potential::zero(p)),
        }
    }
}

#[derive(Args, Debug, Clone)]
struct McArgs {
    #[arg(long, default_value_t = 10_000)]
    paths: u64,
    /// Base time step of the path discretisation.
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
}

impl McArgs {
    fn config(&self, seed: u64) -> McConfig {
        McConfig {
            paths: self.paths,
            dt: self.dt,
            seed,
            ..McConfig::default()
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Method {
    Mc,
    Pde,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Eval {
    H,
    #[value(name = "big-h")]
    BigH,
    HTilde,
    Psi,
    Eta0,
    Eta1,
    Log,
    U1,
    U2,
}

#[derive(Args, Debug)]
struct EnvelopeArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum)]
    eval: Eval,
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Ball radius for `psi`.
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Barrier exponent parameter for `u1`/`u2`; defaults to β/2.
    #[arg(long)]
    beta_prime: Option<f64>,
}

#[derive(Args, Debug)]
struct SurvivalArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    potential: PotentialArgs,
    #[command(flatten)]
    mc: McArgs,
    /// Starting point, comma separated; a single number `r` means `(r, 0, …)`.
    #[arg(long, default_value = "1")]
    x: String,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, value_enum, default_value_t = Method::Mc)]
    method: Method,
}

#[derive(Args, Debug)]
struct KernelArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    potential: PotentialArgs,
    #[command(flatten)]
    mc: McArgs,
    #[arg(long, default_value = "1")]
    x: String,
    #[arg(long, default_value = "1")]
    y: String,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// `pde` is available for `d = 1` only.
    #[arg(long, value_enum, default_value_t = Method::Mc)]
    method: Method,
    /// Kill on a ball of this radius instead of by the potential.
    #[arg(long)]
    exterior_radius: Option<f64>,
}

#[derive(Args, Debug)]
struct GreenArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    potential: PotentialArgs,
    #[command(flatten)]
    mc: McArgs,
    #[arg(long, default_value = "1")]
    x: String,
    #[arg(long, default_value = "2")]
    y: String,
    /// Time horizon of the simulated part of the time integral.
    #[arg(long, default_value_t = 100.0)]
    t_max: f64,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(SUITES))]
    suite: String,
    /// Overrides the suite's Monte Carlo path counts.
    #[arg(long)]
    paths: Option<u64>,
}

/// Parses `key = value` lines into `--key value` flags.
///
/// Blank lines and lines starting with `#` are skipped. Underscores in keys
/// become dashes. The key `command` names the subcommand.
fn parse_config(text: &str) -> Result<(Option<String>, Vec<OsString>), String> {
    let mut command = None;
    let mut flags = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(format!("line {}: expected key = value, got '{line}'", no + 1));
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(format!("line {}: empty key", no + 1));
        }
        if k == "command" {
            command = Some(v.to_string());
        } else {
            flags.push(format!("--{}", k.replace('_', "-")).into());
            flags.push(v.into());
        }
    }
    Ok((command, flags))
}

/// Finds `--config <path>` or `--config=<path>` in raw arguments.
fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

const COMMANDS: [&str; 5] = ["envelope", "survival", "kernel", "green", "verify"];

/// Splices config flags in right after the subcommand token.
fn expand_args(args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let (command, flags) = parse_config(&text)?;
    let pos = args
        .iter()
        .position(|a| COMMANDS.contains(&a.to_string_lossy().as_ref()));
    let mut out = args.clone();
    match (pos, command) {
        (Some(i), _) => {
            out.splice(i + 1..i + 1, flags);
        }
        (None, Some(c)) => {
            out.insert(1, c.into());
            out.splice(2..2, flags);
        }
        (None, None) => {}
    }
    Ok(out)
}

fn point(s: &str, d: usize) -> supercrit::Result<Vec<f64>> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| supercrit::Error::Parse(format!("point '{s}': {e}")))?;
    match parts.len() {
        1 => {
            let mut p = vec![0.0; d];
            p[0] = parts[0];
            Ok(p)
        }
        n if n == d => Ok(parts),
        n => Err(supercrit::Error::Parse(format!("point '{s}' has {n} coordinates, expected {d}"))),
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

enum Outcome {
    Ok,
    Violated,
}

struct Output<'a> {
    cli: &'a Cli,
}

impl Output<'_> {
    fn emit(&self, content: &str) -> supercrit::Result<()> {
        match &self.cli.out {
            Some(p) => report::write_file(p, content),
            None => {
                print!("{content}");
                Ok(())
            }
        }
    }

    fn estimate(&self, inputs: &[(&str, f64)], e: &McEstimate) -> supercrit::Result<()> {
        match Format::from(self.cli.format) {
            Format::Csv => self.emit(&report::estimate_csv(inputs, e)),
            Format::Json => self.emit(&report::to_json(e)?),
        }
    }

    fn curve(&self, name: &str, points: &[(f64, f64)]) -> supercrit::Result<()> {
        let Some(dir) = &self.cli.plot_dir else {
            return Ok(());
        };
        std::fs::create_dir_all(dir)?;
        report::write_file(&dir.join(format!("{name}.dat")), &report::curve_text(points))
    }
}

fn envelope(a: &EnvelopeArgs) -> supercrit::Result<f64> {
    let p = a.model.params()?;
    let bp = a.beta_prime.unwrap_or_else(|| envelopes::default_beta_prime(&p));
    match a.eval {
        Eval::H => envelopes::h(&p, a.r),
        Eval::BigH => envelopes::H(&p, a.t, a.r),
        Eval::HTilde => envelopes::h_tilde(&p, a.r),
        Eval::Psi => envelopes::psi(p.d, a.radius, a.t, a.r),
        Eval::Eta0 => Ok(envelopes::eta0(&p)),
        Eval::Eta1 => Ok(envelopes::eta1(&p)),
        Eval::Log => log_shift(a.r),
        Eval::U1 => envelopes::barrier_u(BarrierKind::U1, &p, bp, a.r),
        Eval::U2 => envelopes::barrier_u(BarrierKind::U2, &p, bp, a.r),
    }
}

fn run(cli: &Cli) -> supercrit::Result<Outcome> {
    let out = Output { cli };
    let seed = cli.seed;
    match &cli.command {
        Command::Envelope(a) => {
            let v = envelope(a)?;
            match Format::from(cli.format) {
                Format::Csv => out.emit(&format!("{v}\n"))?,
                Format::Json => out.emit(&report::to_json(&v)?)?,
            }
        }
        Command::Survival(a) => {
            let v = a.potential.build(a.model.params()?)?;
            let x = point(&a.x, a.model.d)?;
            let e = match a.method {
                Method::Mc => mc::with_threads(cli.threads, || mc::survival_probability(&v, &x, a.t, &a.mc.config(seed)))??,
                Method::Pde => {
                    let g = GridBuilder::new().build(&v, a.t)?;
                    let sol = pde::solve_survival(&v, &g, a.t)?;
                    out.curve("survival_profile", &sol.nodes.iter().copied().zip(sol.values.iter().copied()).collect::<Vec<_>>())?;
                    McEstimate::exact(sol.at(norm(&x))?, 0)
                }
            };
            out.estimate(&[("t", a.t), ("x_norm", norm(&x))], &e)?;
        }
        Command::Kernel(a) => {
            let p = a.model.params()?;
            let v = a.potential.build(p)?;
            let (x, y) = (point(&a.x, p.d)?, point(&a.y, p.d)?);
            let e = match (a.exterior_radius, a.method) {
                (Some(r), Method::Pde) if p.d == 1 => McEstimate::exact(dhk_exact_1d(r, a.t, x[0], y[0])?, 0),
                (Some(r), _) => {
                    let dom = ExteriorDomain::new(r, p.d)?;
                    mc::with_threads(cli.threads, || dhk_bridge_mc(&dom, a.t, &x, &y, &a.mc.config(seed)))??
                }
                (None, Method::Pde) => {
                    if p.d != 1 {
                        return Err(supercrit::Error::Config("method=pde for the kernel needs d = 1".into()));
                    }
                    let g = GridBuilder::new().per_decade(400).steps(4000).build(&v, a.t)?;
                    McEstimate::exact(pde::solve_kernel_1d(&v, a.t, x[0], y[0], &g)?, 0)
                }
                (None, Method::Mc) => {
                    mc::with_threads(cli.threads, || mc::heat_kernel(&v, a.t, &x, &y, &a.mc.config(seed)))??
                }
            };
            out.estimate(&[("t", a.t), ("x_norm", norm(&x)), ("y_norm", norm(&y))], &e)?;
        }
        Command::Green(a) => {
            let p = a.model.params()?;
            let v = a.potential.build(p)?;
            let (x, y) = (point(&a.x, p.d)?, point(&a.y, p.d)?);
            let g = mc::with_threads(cli.threads, || mc::green_mc(&v, &x, &y, &a.mc.config(seed), a.t_max))??;
            out.estimate(&[("x_norm", norm(&x)), ("y_norm", norm(&y)), ("t_max", a.t_max)], &g.estimate)?;
        }
        Command::Verify(a) => {
            let opts = SuiteOptions { seed, paths: a.paths };
            let o = mc::with_threads(cli.threads, || suites::run_suite(&a.suite, &opts))??;
            match Format::from(cli.format) {
                Format::Csv => {
                    let mut text = report::suite_csv(&o);
                    for r in &o.reports {
                        text.push('\n');
                        text.push_str(&report::ratio_report_csv(r));
                    }
                    out.emit(&text)?;
                }
                Format::Json => out.emit(&report::to_json(&o)?)?,
            }
            for c in &o.curves {
                out.curve(&c.name, &c.points)?;
            }
            eprintln!("{}", o.summary());
            if !o.passed() {
                return Ok(Outcome::Violated);
            }
        }
    }
    Ok(Outcome::Ok)
}

fn usage_exit(msg: &str) -> ExitCode {
    let mut cmd = <Cli as clap::CommandFactory>::command();
    eprintln!("error: {msg}\n\n{}", cmd.render_usage());
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let args = match expand_args(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => return usage_exit(&e),
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Violated) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
