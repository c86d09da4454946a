use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_median-prior");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("MEDIAN_PRIOR_BITS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn construct_to(dir: &Path, m: usize, extra: &[&str]) -> std::path::PathBuf {
    let path = dir.join(format!("prior_{m}.json"));
    let m = m.to_string();
    let mut args = vec!["construct", "--a", "0.3", "--b", "0.3", "--M", &m, "-o", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    path
}

#[test]
fn construct_m2_writes_exact_weights() {
    let dir = tempfile::tempdir().unwrap();
    let path = construct_to(dir.path(), 2, &[]);
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(doc["M"], 2);
    assert_eq!(doc["weights_pw"], serde_json::json!(["0.5", "0.2", "0.3"]));
    assert_eq!(doc["support"], serde_json::json!(["0.3", "0.6", "0.9"]));
    let px: f64 = doc["weights_px"][0].as_str().unwrap()[..14].parse().unwrap();
    assert!((px - 0.379763929156).abs() < 1e-11);
}

#[test]
fn construct_to_stdout() {
    let out = run(&["construct", "--a", "0.3", "--b", "0.3", "--M", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["weights_pw"], serde_json::json!(["0.5", "0.5"]));
}

#[test]
fn inadmissible_slope_warns_but_succeeds() {
    let out = run(&["construct", "--a", "0.5", "--b", "0.3", "--M", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("summability check failed"));
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["construct", "--a", "0.3", "--b", "0.3", "--M", "0"][..],
        &["construct", "--a", "x", "--b", "0.3", "--M", "2"],
        &["construct", "--a", "0.3", "--b", "0.3", "--M", "4", "--c0", "2"],
        &["construct", "--a", "0.3", "--b", "0.3", "--M", "2", "--bits", "8"],
        &["figure", "nope"],
        &["verify", "/nonexistent/prior.json"],
        &["frobnicate"],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn round_trip_verifies() {
    let dir = tempfile::tempdir().unwrap();
    for m in [1, 2, 4, 8] {
        let path = construct_to(dir.path(), m, &[]);
        let out = run(&["verify", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "M = {m}: {}", stdout(&out));
        assert!(stdout(&out).contains("result: PASS"));
    }
}

#[test]
fn bigfloat_round_trip_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let path = construct_to(dir.path(), 8, &["--backend", "bigfloat", "--bits", "512"]);
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["backend"]["kind"], "bigfloat");
    assert!(doc.get("exact").is_none_or(Value::is_null));
    let out = run(&["verify", path.to_str().unwrap(), "--ymax", "16"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}

#[test]
fn reverify_gives_same_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = construct_to(dir.path(), 4, &[]);
    let first = stdout(&run(&["verify", path.to_str().unwrap()]));
    let second = stdout(&run(&["verify", path.to_str().unwrap()]));
    assert_eq!(first, second);
}

#[test]
fn verify_accepts_decimal_only_rational_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = construct_to(dir.path(), 2, &[]);
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    doc.as_object_mut().unwrap().remove("exact");
    std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = run(&["verify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}

#[test]
fn corrupted_weights_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let path = construct_to(dir.path(), 2, &[]);
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    doc["weights_pw"] = serde_json::json!(["0.4", "0.2", "0.3"]);
    std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = run(&["verify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("weights do not normalize"));
}

#[test]
fn unbalanced_weights_report_first_failing_y() {
    let dir = tempfile::tempdir().unwrap();
    let path = construct_to(dir.path(), 2, &[]);
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    doc.as_object_mut().unwrap().remove("exact");
    doc["weights_pw"] = serde_json::json!(["0.3", "0.4", "0.3"]);
    std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = run(&["verify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    let report = stdout(&out);
    assert!(report.contains("moment condition violated at y = 0"), "{report}");
    assert!(report.contains("0,0.6,0.3,FAIL"), "{report}");
}

#[test]
fn relabelled_estimator_fails_support_check() {
    let dir = tempfile::tempdir().unwrap();
    let path = construct_to(dir.path(), 2, &[]);
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    doc["estimator"]["b"] = serde_json::json!("0.4");
    std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = run(&["verify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("support"), "{}", stderr(&out));
}

#[test]
fn figure_gap_matches_table_head() {
    let out = run(&["figure", "gap"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "y,gap");
    assert_eq!(lines[1], "0,-0.153426409720027");
    assert_eq!(lines.len(), 52);
}

#[test]
fn figure_medians_single_row() {
    let out = run(&["figure", "medians", "--ymax", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "y,med_M2,med_M4,med_M8\n0,0.3,0.3,0.3\n");
}

#[test]
fn figure_medians_float_backend_matches_rational() {
    let exact = stdout(&run(&["figure", "medians", "--ymax", "7"]));
    let float = stdout(&run(&["figure", "medians", "--ymax", "7", "--backend", "bigfloat"]));
    assert_eq!(exact, float);
}

#[test]
fn figure_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = run(&["figure", "cdf", "--points", "11", "-o", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    let a = std::fs::read(a).unwrap();
    assert_eq!(a, std::fs::read(b).unwrap());
    assert!(String::from_utf8(a).unwrap().starts_with("series,x,cdf\nM=2,0.3,"));
}

#[test]
fn bits_from_environment() {
    let out = Command::new(BIN)
        .args(["construct", "--a", "0.3", "--b", "0.3", "--M", "2", "--backend", "bigfloat"])
        .env("MEDIAN_PRIOR_BITS", "128")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["backend"]["bits"], 128);
}
