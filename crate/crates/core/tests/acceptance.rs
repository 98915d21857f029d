//! End-to-end acceptance run: one test per criterion, each printing a single
//! PASS or FAIL line with the measured values and the wall time.

use std::time::{Duration, Instant};

use supercrit::suites::{run_suite, SuiteOptions};

fn criterion(number: u32, suite: &str, budget_secs: u64) {
    let start = Instant::now();
    let outcome = run_suite(suite, &SuiteOptions::default()).expect("suite runs");
    let elapsed = start.elapsed();
    let in_time = elapsed <= Duration::from_secs(budget_secs);
    let ok = outcome.passed() && in_time;
    println!(
        "criterion {number:>2} [{suite}] {} ({:.1}s of {budget_secs}s) {}",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        outcome.summary()
    );
    for c in outcome.failures() {
        println!("    violated: {} = {} outside [{}, {}]", c.name, c.value, c.lower, c.upper);
    }
    assert!(in_time, "{suite} took {elapsed:?}, budget {budget_secs}s");
    assert!(outcome.passed(), "{suite} failed: {}", outcome.summary());
}

#[test]
fn criterion_01_bessel() {
    criterion(1, "bessel", 1);
}

#[test]
fn criterion_02_goldens() {
    criterion(2, "goldens", 1);
}

#[test]
fn criterion_03_exterior_1d() {
    criterion(3, "exterior-1d", 30);
}

#[test]
fn criterion_04_kernel_1d() {
    criterion(4, "kernel-1d", 300);
}

#[test]
fn criterion_05_survival_3d() {
    criterion(5, "survival-3d", 180);
}

#[test]
fn criterion_06_decay_slope() {
    criterion(6, "decay-slope", 120);
}

#[test]
fn criterion_07_sandwich() {
    criterion(7, "sandwich", 180);
}

#[test]
fn criterion_08_barrier() {
    criterion(8, "barrier", 180);
}

#[test]
fn criterion_09_small_time() {
    criterion(9, "small-time", 300);
}

#[test]
fn criterion_10_large_time() {
    criterion(10, "large-time", 300);
}

#[test]
fn criterion_11_green() {
    criterion(11, "green", 600);
}

#[test]
fn criterion_12_counterexample() {
    criterion(12, "counterexample", 180);
}

#[test]
fn criterion_13_determinism() {
    criterion(13, "determinism", 300);
}
