//! End-to-end runs of the `fcanon` binary.

use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;

fn fcanon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fcanon"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn spec_file(body: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::Builder::new().suffix(".json").tempfile().unwrap();
    f.write_all(body.as_bytes()).unwrap();
    f
}

#[test]
fn sphere_dump_shows_scalar_curvature() {
    let o = fcanon(&["tensors", "--geometry", "sphere", "--dim", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("R = 6.000000000000"), "{}", stdout(&o));
}

#[test]
fn warped_gaussian_dump_has_cotton() {
    let o = fcanon(&[
        "--json",
        "tensors",
        "--geometry",
        "warped_gaussian",
        "--dim",
        "4",
        "--depth",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let tensors = v["tensors"].as_array().unwrap();
    let cotton = tensors
        .iter()
        .find(|t| t["name"] == "cotton")
        .expect("cotton present");
    assert_eq!(cotton["components"].as_array().unwrap().len(), 64);
}

#[test]
fn classify_exit_codes_follow_verdicts() {
    let member = fcanon(&[
        "classify",
        "--geometry",
        "warped_gaussian",
        "--dim",
        "4",
        "--class",
        "HCf",
        "--seed",
        "7",
        "--count",
        "32",
    ]);
    assert_eq!(member.status.code(), Some(0), "{}", stdout(&member));
    let non = fcanon(&[
        "--json",
        "classify",
        "--geometry",
        "warped_gaussian",
        "--dim",
        "4",
        "--class",
        "Ef",
    ]);
    assert_eq!(non.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&non.stdout).unwrap();
    assert_eq!(v[0]["verdict"], "non-member");
}

#[test]
fn bochner_on_the_two_sphere_passes() {
    let o = fcanon(&["obstruction", "--which", "bochner", "--dim", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn malformed_spec_reports_a_located_json_error() {
    let f = spec_file("{ \"name\": \"broken\",\n  \"dim\": 3,\n  \"metric\": ");
    let o = fcanon(&["tensors", "--spec", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_slice(&o.stderr).expect("stderr is JSON");
    assert_eq!(v["error"]["kind"], "json");
    assert_eq!(v["error"]["line"], 3);
}

#[test]
fn bad_expression_reports_its_field_and_position() {
    let f = spec_file(
        r#"{ "name": "bad", "dim": 2,
             "chart": { "ranges": [[-1, 1], [-1, 1]], "margin": 0.1 },
             "metric": { "kind": "expression", "params": { "diagonal": ["1 + x1^", "1"] } } }"#,
    );
    let o = fcanon(&["tensors", "--spec", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["error"]["kind"], "expression");
    assert!(v["error"]["field"].as_str().unwrap().contains("metric"));
}

#[test]
fn missing_file_is_an_io_error() {
    let o = fcanon(&["tensors", "--spec", "/nonexistent/geometry.json"]);
    assert_eq!(o.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["error"]["kind"], "io");
}

#[test]
fn spec_file_classifies_like_its_catalog_twin() {
    // The Gaussian shrinker on flat space, written out by hand.
    let f = spec_file(
        r#"{ "name": "shrinker", "dim": 3,
             "chart": { "ranges": [[-1, 1], [-1, 1], [-1, 1]], "margin": 0.1 },
             "metric": { "kind": "expression", "params": { "diagonal": ["1", "1", "1"] } },
             "potential": { "kind": "expression", "params": { "expr": "(x1^2 + x2^2 + x3^2) / 2" } },
             "vector_field": { "kind": "gradient" } }"#,
    );
    let o = fcanon(&[
        "--json",
        "classify",
        "--spec",
        f.path().to_str().unwrap(),
        "--class",
        "Ef",
        "--class",
        "LSf",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let lambda = v[0]["lambda_estimate"].as_f64().unwrap();
    assert!((lambda - 1.0).abs() < 1e-10, "{lambda}");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = [
        "--json",
        "classify",
        "--geometry",
        "product_lsef",
        "--seed",
        "3",
        "--count",
        "12",
    ];
    let (a, b) = (fcanon(&args), fcanon(&args));
    assert_eq!(a.status.code(), b.status.code());
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn out_flag_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let o = fcanon(&[
        "--json",
        "--out",
        path.to_str().unwrap(),
        "identities",
        "--geometry",
        "sphere",
        "--dim",
        "3",
        "--count",
        "4",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert!(v.is_object());
}

#[test]
fn compact_construction_reports_the_failed_stage() {
    let o = fcanon(&["--json", "construct"]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["stage"], "recover_f", "{v}");
}

#[test]
fn explicit_construction_verifies() {
    let o = fcanon(&["construct", "--explicit", "--dim", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn plot_emits_two_numeric_columns() {
    let o = fcanon(&["plot", "--series", "phi"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(rows.len() > 100);
    for row in rows {
        let cols: Vec<f64> = row.split_whitespace().map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols.len(), 2);
    }
}

#[test]
fn unknown_class_is_a_usage_error() {
    let o = fcanon(&["classify", "--geometry", "sphere", "--class", "NotAClass"]);
    assert_ne!(o.status.code(), Some(0));
}
