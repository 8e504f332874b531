use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn qcgraft(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcgraft")).args(args).output().expect("binary runs")
}

fn write_doc(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn report(dir: &Path, sub: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{sub}.json"))).unwrap()).unwrap()
}

#[test]
fn unit_square_modulus_passes() {
    let out = tempfile::tempdir().unwrap();
    let s = scenario("unit_square_modulus.json");
    let o = qcgraft(&["modulus", "--scenario", s.to_str().unwrap(), "--out", out.path().to_str().unwrap(), "--grid", "48"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(out.path(), "modulus");
    assert!(r["pass"].as_bool().unwrap());
    assert!((r["headline"]["modulus"].as_f64().unwrap() - 1.0).abs() < 5e-3);
    assert!(out.path().join("modulus.csv").exists());
}

#[test]
fn svg_flag_writes_heatmap() {
    let out = tempfile::tempdir().unwrap();
    let s = scenario("unit_square_modulus.json");
    let o = qcgraft(&["modulus", "--scenario", s.to_str().unwrap(), "--out", out.path().to_str().unwrap(), "--grid", "16", "--svg"]);
    assert_eq!(o.status.code(), Some(0));
    let svg = std::fs::read_to_string(out.path().join("modulus.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn track_round_reproduces_split_merge_weights() {
    let out = tempfile::tempdir().unwrap();
    let s = scenario("split_merge_round.json");
    let o = qcgraft(&["track-round", "--scenario", s.to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(out.path(), "track-round");
    let k: Vec<i64> = serde_json::from_value(r["headline"]["k"].clone()).unwrap();
    assert_eq!(k, vec![10, 7, 3]);
    assert_eq!(r["headline"]["components"], 10);
}

#[test]
fn csv_body_is_deterministic() {
    let s = scenario("split_merge_round.json");
    let bodies: Vec<String> = (0..2)
        .map(|_| {
            let out = tempfile::tempdir().unwrap();
            qcgraft(&["track-round", "--scenario", s.to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
            let csv = std::fs::read_to_string(out.path().join("track-round.csv")).unwrap();
            let (head, body) = csv.split_once('\n').unwrap();
            assert!(head.starts_with("# generated "));
            body.to_string()
        })
        .collect();
    assert_eq!(bodies[0], bodies[1]);
}

#[test]
fn unknown_field_is_a_schema_violation() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_doc(
        dir.path(),
        "bad.json",
        r#"{"schema": "track-round/v1", "payload": {"branches": 1, "switches": [], "weights": [1], "t": 2, "colour": 3}}"#,
    );
    let o = qcgraft(&["track-round", "--scenario", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn mismatched_schema_tag_is_rejected() {
    let s = scenario("split_merge_round.json");
    let o = qcgraft(&["modulus", "--scenario", s.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("modulus/v1"));
}

#[test]
fn malformed_tolerance_is_rejected() {
    let s = scenario("split_merge_round.json");
    let o = qcgraft(&["track-round", "--scenario", s.to_str().unwrap(), "--tolerance", "distance"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn scale_below_threshold_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_doc(
        dir.path(),
        "small_t.json",
        r#"{"schema": "track-round/v1", "payload": {"branches": 3,
            "switches": [{"incoming": [0], "outgoing": [1, 2]}, {"incoming": [1, 2], "outgoing": [0]}],
            "weights": [1.0, 0.9, 0.1], "t": 1.0}}"#,
    );
    let o = qcgraft(&["track-round", "--scenario", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn tightened_tolerance_reports_bound_violation() {
    let out = tempfile::tempdir().unwrap();
    let s = scenario("horocyclic_dilatation.json");
    let o = qcgraft(&[
        "dilatation",
        "--scenario",
        s.to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
        "--grid",
        "16",
        "--tolerance",
        "k_slope=0.1",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let r = report(out.path(), "dilatation");
    assert_eq!(r["tolerances"]["k_slope"], 0.1);
    assert!(!r["pass"].as_bool().unwrap());
}

#[test]
fn sector_scenario_is_conformal() {
    let s = scenario("sector_dilatation.json");
    let o = qcgraft(&["dilatation", "--scenario", s.to_str().unwrap(), "--grid", "20"]);
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("PASS sector map is conformal"));
}

#[test]
fn interp_demo_decreases() {
    let out = tempfile::tempdir().unwrap();
    let s = scenario("cylinder_glue.json");
    let o = qcgraft(&["interp-demo", "--scenario", s.to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(out.path(), "interp-demo");
    let k: Vec<f64> = serde_json::from_value(r["headline"]["k_max"].clone()).unwrap();
    assert_eq!(k.len(), 3);
    assert!(k.windows(2).all(|w| w[1] < w[0]));
}
