use std::process::{Command, Output};

fn supercrit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_supercrit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn envelope_prints_h() {
    let o = supercrit(&["envelope", "--d", "3", "--beta", "1", "--kappa", "1", "--eval", "h", "--r", "0.5"]);
    assert!(o.status.success());
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - (-2.0f64).exp()).abs() < 1e-15);
}

#[test]
fn missing_command_exits_one_with_usage() {
    let o = supercrit(&[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.cfg");
    std::fs::write(&cfg, "# nothing here\n").unwrap();
    let o = supercrit(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn bad_values_exit_one_and_help_exits_zero() {
    assert_eq!(supercrit(&["envelope", "--eval", "nope"]).status.code(), Some(1));
    assert_eq!(supercrit(&["envelope", "--eval", "h", "--r", "-1"]).status.code(), Some(1));
    assert_eq!(supercrit(&["verify", "--suite", "unknown"]).status.code(), Some(1));
    assert_eq!(supercrit(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "command = envelope\neval = h\n# a comment\nr = 0.5\n").unwrap();
    let path = cfg.to_str().unwrap();

    let from_file: f64 = stdout(&supercrit(&["--config", path])).trim().parse().unwrap();
    assert!((from_file - (-2.0f64).exp()).abs() < 1e-15);

    let o = supercrit(&["--config", path, "envelope", "--r", "2"]);
    assert!(o.status.success());
    let overridden: f64 = stdout(&o).trim().parse().unwrap();
    assert!((overridden - (-1.0f64).exp()).abs() < 1e-15);

    std::fs::write(&cfg, "eval h\n").unwrap();
    assert_eq!(supercrit(&["--config", path, "envelope"]).status.code(), Some(1));
}

#[test]
fn csv_identical_across_thread_counts_and_runs() {
    let base = ["kernel", "--d", "1", "--x", "1", "--y", "0.5", "--t", "0.5", "--paths", "5000", "--seed", "9"];
    let run = |threads: &str| {
        let mut args = base.to_vec();
        args.extend(["--threads", threads]);
        let o = supercrit(&args);
        assert!(o.status.success());
        o.stdout
    };
    let one = run("1");
    assert_eq!(one, run("8"));
    assert_eq!(one, run("1"));
    let text = String::from_utf8(one).unwrap();
    assert!(text.starts_with("t,x_norm,y_norm,mean,stderr,n,zero_weight_frac\n"));
}

#[test]
fn survival_writes_output_file_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = supercrit(&[
        "survival", "--x", "0.5", "--t", "0.1", "--paths", "2000", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let mean: f64 = row[2].parse().unwrap();
    assert!(mean > 0.0 && mean < 1.0);

    let o = supercrit(&["survival", "--x", "0.5", "--t", "0.1", "--paths", "2000", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["stderr"].as_f64().unwrap() > 0.0);
}

#[test]
fn verify_exit_codes_follow_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let plots = dir.path().join("plots");
    let o = supercrit(&["verify", "--suite", "counterexample", "--plot-dir", plots.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("suite,check,value,lower,upper,passed\n"));
    let plus = text.lines().find(|l| l.contains("exponent_critical_plus")).unwrap();
    let exponent: f64 = plus.split(',').nth(2).unwrap().parse().unwrap();
    assert!(exponent > 0.05);
    assert!(plots.join("log_ratio_vs_log_r_critical_plus.dat").exists());

    let o = supercrit(&["verify", "--suite", "sandwich"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("verdict,violated"));
}
