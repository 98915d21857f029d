//! Fixed-schema CSV and JSON output.
//!
//! Floats are written with 17 significant digits so a CSV file round-trips
//! every value exactly and two runs with the same inputs produce identical
//! bytes.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mc::McEstimate;
use crate::pde::RadialSolution;
use crate::suites::SuiteOutcome;
use crate::verify::{RatioReport, SlopeFit, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Result<Format> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Parse(format!("unknown output format '{s}' (expected csv or json)"))),
        }
    }
}

/// A float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Header `<inputs...>,mean,stderr,n,zero_weight_frac` and one row.
pub fn estimate_csv(inputs: &[(&str, f64)], e: &McEstimate) -> String {
    let mut head: Vec<&str> = inputs.iter().map(|(k, _)| *k).collect();
    head.extend(["mean", "stderr", "n", "zero_weight_frac"]);
    let mut row: Vec<String> = inputs.iter().map(|(_, v)| fmt_f64(*v)).collect();
    row.extend([fmt_f64(e.mean), fmt_f64(e.stderr), e.n.to_string(), fmt_f64(e.zero_weight_frac)]);
    format!("{}\n{}\n", head.join(","), row.join(","))
}

pub const RATIO_HEADER: &str = "t,x_norm,y_norm,distance,numeric,stderr,log_envelope,log_ratio";

/// Per-point rows, then a footer row `fitted,c_gauss,c_kill,eta2,spread,<s>,verdict,<v>`.
pub fn ratio_report_csv(r: &RatioReport) -> String {
    let mut out = String::new();
    writeln!(out, "{RATIO_HEADER}").unwrap();
    for e in &r.entries {
        let dist = if e.y.len() == e.x.len() {
            e.x.iter().zip(&e.y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
        } else {
            f64::NAN
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_f64(e.t),
            fmt_f64(norm(&e.x)),
            fmt_f64(norm(&e.y)),
            fmt_f64(dist),
            fmt_f64(e.numeric),
            fmt_f64(e.stderr),
            fmt_f64(e.log_envelope),
            fmt_f64(e.log_ratio)
        )
        .unwrap();
    }
    let verdict = match r.verdict {
        Verdict::Bounded { .. } => "bounded",
        Verdict::Violated { .. } => "violated",
    };
    writeln!(
        out,
        "fitted,{},{},{},spread,{},verdict,{verdict}",
        fmt_f64(r.fitted.c_gauss),
        fmt_f64(r.fitted.c_kill),
        fmt_f64(r.fitted.eta2),
        fmt_f64(r.spread)
    )
    .unwrap();
    out
}

pub const SUITE_HEADER: &str = "suite,check,value,lower,upper,passed";

/// One row per check of a suite.
pub fn suite_csv(o: &SuiteOutcome) -> String {
    let mut out = String::new();
    writeln!(out, "{SUITE_HEADER}").unwrap();
    for c in &o.checks {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            o.suite,
            c.name,
            fmt_f64(c.value),
            fmt_f64(c.lower),
            fmt_f64(c.upper),
            c.passed
        )
        .unwrap();
    }
    out
}

/// Header `r,u` and one row per node.
pub fn solution_csv(s: &RadialSolution) -> String {
    let mut out = String::from("r,u\n");
    for (r, u) in s.nodes.iter().zip(&s.values) {
        writeln!(out, "{},{}", fmt_f64(*r), fmt_f64(*u)).unwrap();
    }
    out
}

/// Header `x,y` then regression points; footer `slope,<s>,r_squared,<r2>`.
pub fn slope_csv(f: &SlopeFit) -> String {
    let mut out = String::from("x,y\n");
    for (x, y) in &f.points {
        writeln!(out, "{},{}", fmt_f64(*x), fmt_f64(*y)).unwrap();
    }
    writeln!(out, "slope,{},r_squared,{}", fmt_f64(f.slope), fmt_f64(f.r_squared)).unwrap();
    out
}

/// Whitespace-separated two-column text for plotting.
pub fn curve_text(points: &[(f64, f64)]) -> String {
    let mut out = String::new();
    for (x, y) in points {
        writeln!(out, "{} {}", fmt_f64(*x), fmt_f64(*y)).unwrap();
    }
    out
}

/// Pretty JSON with keys in declaration order.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelopes::EnvelopeConstants;
    use crate::verify::RatioEntry;

    #[test]
    fn seventeen_significant_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17);
        }
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
    }

    #[test]
    fn estimate_schema() {
        let e = McEstimate {
            mean: 0.5,
            stderr: 0.01,
            n: 100,
            zero_weight_frac: 0.0,
            exhausted: 0,
        };
        let csv = estimate_csv(&[], &e);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "mean,stderr,n,zero_weight_frac");
        assert_eq!(lines.next().unwrap().split(',').count(), 4);
        assert!(lines.next().is_none());
        assert!(estimate_csv(&[("t", 1.0)], &e).starts_with("t,mean,"));
    }

    #[test]
    fn ratio_report_schema_and_determinism() {
        let entries = vec![RatioEntry {
            t: 1.0,
            x: vec![1.0],
            y: vec![2.0],
            numeric: 0.1,
            stderr: 0.0,
            log_envelope: -2.0,
            log_ratio: 0.1f64.ln() + 2.0,
        }];
        let r = RatioReport::from_entries("x", "y", entries, EnvelopeConstants::default(), 1.0);
        let a = ratio_report_csv(&r);
        let lines: Vec<&str> = a.lines().collect();
        assert_eq!(lines[0], RATIO_HEADER);
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("fitted,"));
        assert!(lines[2].ends_with("verdict,bounded"));
        assert_eq!(a, ratio_report_csv(&r));
        assert_eq!(to_json(&r).unwrap(), to_json(&r).unwrap());
    }

    #[test]
    fn format_parse() {
        assert_eq!(Format::parse("csv").unwrap(), Format::Csv);
        assert!(Format::parse("xml").is_err());
    }
}
