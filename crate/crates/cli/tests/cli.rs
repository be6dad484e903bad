use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_melonforge"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&run_ok(args)).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn recognize_lists_the_d4_multiset() {
    let tsv = run_ok(&["--format", "tsv", "recognize", path(&data("gm_d4_v14.json"))]);
    let rows: Vec<&str> = tsv.lines().skip(1).collect();
    assert_eq!(rows, ["1\t1", "1,2\t1", "1,3\t1", "1,4\t1", "4\t2"]);
}

#[test]
fn certificate_roundtrips_through_validate() {
    let dir = tempfile::tempdir().unwrap();
    let cert = run_ok(&["recognize", path(&data("gm_d4_v14.json"))]);
    let f = dir.path().join("cert.json");
    std::fs::write(&f, &cert).unwrap();
    let v = json(&["validate", path(&f)]);
    assert_eq!(v["kind"], "certificate");
    assert_eq!(v["valid"], true);
    // a certificate is accepted wherever a bubble is
    assert_eq!(json(&["scaling", path(&f)])["s"], "-15");
}

#[test]
fn seeded_recognition_is_deterministic_and_confluent() {
    let input = data("gm_d4_v14.json");
    let a = run_ok(&["recognize", "--seed", "5", path(&input)]);
    let b = run_ok(&["recognize", "--seed", "5", path(&input)]);
    assert_eq!(a, b);
    let c: Value = serde_json::from_str(&run_ok(&["recognize", "--seed", "6", path(&input)])).unwrap();
    let first: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(c["multiset"], first["multiset"]);
    assert_eq!(c["pairing"], first["pairing"]);
}

#[test]
fn scaling_of_quartic_and_melonic() {
    assert_eq!(json(&["scaling", path(&data("q1_d3.json"))])["s"], "-2");
    assert_eq!(json(&["scaling", path(&data("melonic_d3_v6.json"))])["s"], "-4");
}

#[test]
fn covariance_series_and_value() {
    let s = json(&["covariance", "--V", "4", "--series", "--order", "3"]);
    let coeffs: Vec<&str> = s["terms"].as_array().unwrap().iter().map(|t| t["coeff"].as_str().unwrap()).collect();
    assert_eq!(coeffs, ["1", "2", "8", "40"]);
    let v = json(&["covariance", "--V", "4", "--t", "0.1"]);
    assert!((v["value"].as_f64().unwrap() - 1.381966011250105).abs() < 1e-12);
}

#[test]
fn tree_feeds_the_matrix_model_commands() {
    let dir = tempfile::tempdir().unwrap();
    let tree = dir.path().join("tree.json");
    std::fs::write(&tree, run_ok(&["tree", path(&data("melonic_d3_v6.json"))])).unwrap();
    let t = path(&tree);
    assert_eq!(json(&["validate", t])["kind"], "tree");
    let eta = json(&["eta", "--tree", t]);
    assert_eq!(eta["constraints_hold"], true);
    assert!(eta["eta"]["eta"].as_object().unwrap().values().all(|x| x == "0"));
    let s = json(&["saddle", "--tree", t, "--t", "0.02"]);
    assert!(s["gradient_norm"].as_f64().unwrap() <= 1e-8);
    let d = json(&["verify-determinant", "--tree", t, "--n", "2", "--trials", "20"]);
    assert_eq!(d["passed"], true);
    assert!(d["report"]["max_rel_error"].as_f64().unwrap() <= 1e-9);
    let dot = run_ok(&["--format", "dot", "export-dot", t]);
    assert!(dot.starts_with("graph plane_tree {"));
    let log = json(&["expand-log", "--tree", t, "--order", "2", "--check"]);
    assert!(log.to_string().contains("\"passed\":true"));
}

#[test]
fn determinant_check_is_seeded() {
    let t = data("melonic_d3_v6.json");
    let args = ["verify-determinant", "--tree", path(&t), "--trials", "10", "--seed", "3"];
    assert_eq!(run_ok(&args), run_ok(&args));
}

#[test]
fn gmax_of_two_quartics() {
    let q = format!("{}:2", path(&data("q1_d3.json")));
    let g = json(&["gmax", "--bubble", &q]);
    assert_eq!(g["delta_max"], "3");
}

#[test]
fn crosscheck_passes_for_the_quartic_model() {
    let r = json(&["crosscheck", path(&data("q1_d3.json")), "--order", "3"]);
    assert_eq!(r["passed"], true);
}

#[test]
fn exit_codes() {
    // usage errors
    assert_eq!(run(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(run(&["--format", "dot", "covariance", "--V", "4", "--t", "0.1"]).status.code(), Some(64));
    // missing file
    assert_eq!(run(&["validate", "/nonexistent/bubble.json"]).status.code(), Some(74));
    // invalid document
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"d": 3, "whites": [0], "blacks": [1], "edges": []}"#).unwrap();
    assert_eq!(run(&["validate", path(&bad)]).status.code(), Some(2));
    // the literal relation does not give a stationary point
    let t = data("melonic_d3_v6.json");
    assert_eq!(run(&["saddle", "--tree", path(&t), "--t", "0.02", "--relation", "unweighted"]).status.code(), Some(3));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
