use std::path::Path;
use std::process::{Command, Output};

fn cregular(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cregular"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const EXP_TRIG: &str = r#"{"dim":1,"kind":"builtin","name":"scalar_exp_trig","params":{"cos":[0.3]}}"#;

#[test]
fn analyze_writes_report_and_profiles() {
    let dir = tempfile::tempdir().unwrap();
    let w = write(dir.path(), "w.json", EXP_TRIG);
    let out = dir.path().join("out");
    let o = cregular(&[
        "analyze", &w, "--grid", "2^10", "--criteria", "a2-interval,rho", "--k", "16", "--n-list", "0,4,8",
        "--out", out.to_str().unwrap(), "--workers", "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["overall"]["label"], "trend-consistent with completely regular");
    assert_eq!(report["config"]["n_points"], 1024);
    assert!(out.join("a2-interval.csv").exists());
    let rho = std::fs::read_to_string(out.join("rho.csv")).unwrap();
    assert_eq!(rho.lines().count(), 4);
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let w = write(dir.path(), "w.json", EXP_TRIG);
    let run = || {
        let o = cregular(&["analyze", &w, "--grid", "512", "--criteria", "a2-interval,oscillation"]);
        assert!(o.status.success());
        let mut v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        v["timestamp"] = serde_json::Value::Null;
        serde_json::to_string(&v).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn validation_failures_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{\"dim\": 1,\n \"kind\": ");
    let o = cregular(&["analyze", &bad, "--grid", "64"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let mut samples = [r#"[[[1,0],[0,0]],[[0,0],[1,0]]]"#; 8];
    samples[3] = r#"[[[1,0],[0.5,0]],[[0,0],[1,0]]]"#;
    let body = format!(r#"{{"dim":2,"kind":"grid","n_points":8,"samples":[{}]}}"#, samples.join(","));
    let nh = write(dir.path(), "nh.json", &body);
    let o = cregular(&["analyze", &nh]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sample 3"));

    let w = write(dir.path(), "w.json", EXP_TRIG);
    let o = cregular(&["analyze", &w, "--grid", "100"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let w = write(dir.path(), "w.json", EXP_TRIG);
    // K = 64 needs Fourier coefficients far beyond a 64-point grid
    let o = cregular(&["rho", &w, "--grid", "64", "--k", "64"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn export_round_trip_and_factorize() {
    let dir = tempfile::tempdir().unwrap();
    let w = write(dir.path(), "w.json", r#"{"dim":2,"kind":"builtin","name":"peller_counterexample","params":{}}"#);
    let grid_file = dir.path().join("grid.json");
    let o = cregular(&["export-weight", &w, "--grid", "256", "--out", grid_file.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&grid_file).unwrap()).unwrap();
    assert_eq!(v["kind"], "grid");
    assert_eq!(v["samples"].as_array().unwrap().len(), 256);
    assert_eq!(v["sample_offset"], 0.5);

    let e = write(dir.path(), "e.json", EXP_TRIG);
    let o = cregular(&["factorize", &e, "--grid", "256", "--order", "8"]);
    assert!(o.status.success());
    let csv = String::from_utf8(o.stdout).unwrap();
    assert!(csv.starts_with("k,row,col,re,im\n"));
    assert_eq!(csv.lines().count(), 10);
}

#[test]
fn counterexample_small_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ce");
    let o = cregular(&["counterexample", "--grid", "2^12", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["counterexample"]["a2_diverging"], true);
    assert!(out.join("oscillation-log-w.csv").exists());
}
