use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_supertransport"))
}

fn spec(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("specs").join(name)
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().arg("run").args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn write_spec(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("spec.json");
    std::fs::write(&p, text).unwrap();
    p
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn list_checks_names_the_suite() {
    let out = bin().args(["list-checks", "--json"]).output().unwrap();
    assert!(out.status.success());
    let items: Vec<Value> = serde_json::from_slice(&out.stdout).unwrap();
    assert!(items.len() >= 20);
    let names: Vec<&str> = items.iter().map(|i| i["name"].as_str().unwrap()).collect();
    for want in ["odd-flatness", "trotter-group-law", "connection-roundtrip", "transport-gluing"] {
        assert!(names.contains(&want), "missing {want}");
    }
}

#[test]
fn verify_all_passes_within_a_minute() {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let out = run(&[], dir.path());
    let elapsed = start.elapsed().as_secs_f64();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(elapsed < 60.0, "suite took {elapsed:.1}s");
    let r = report(&dir.path().join("verify-all.json"));
    assert_eq!(r["report_version"], 1);
    assert_eq!(r["passed"], true);
    let results = r["results"].as_array().unwrap();
    assert!(results.len() >= 20);
    assert!(results.iter().all(|c| c["passed"] == true));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS ")).count(), results.len());
}

#[test]
fn trotter_csv_reports_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["--spec", spec("trotter.json").to_str().unwrap(), "--csv"], dir.path());
    assert!(out.status.success());
    let mut rdr = csv::Reader::from_path(dir.path().join("trotter.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["n", "error", "observed_order"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 11);
    assert_eq!(&rows[10][0], "1024");
    let last: f64 = rows[10][1].parse().unwrap();
    assert!(last < 5e-3);
    let order: f64 = rows[10][2].parse().unwrap();
    assert!(order >= 0.9, "observed order {order}");
}

#[test]
fn sample_specs_pass() {
    for (name, kind) in [("flow.json", "flow"), ("odd_flow.json", "odd-flow"), ("transport.json", "transport"), ("roundtrip.json", "roundtrip")] {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&["--spec", spec(name).to_str().unwrap()], dir.path());
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stdout));
        assert_eq!(report(&dir.path().join(format!("{kind}.json")))["passed"], true);
    }
}

#[test]
fn reports_are_deterministic() {
    let subset = r#"{ "kind": "verify-all", "checks": ["cartan-formula", "trotter-group-law", "transport-gluing", "odd-triviality"] }"#;
    let work = tempfile::tempdir().unwrap();
    let s = write_spec(work.path(), subset);
    let mut texts = Vec::new();
    for extra in [&[][..], &[][..], &["--sequential"][..]] {
        let dir = tempfile::tempdir().unwrap();
        let mut args = vec!["--spec", s.to_str().unwrap(), "--seed", "7"];
        args.extend_from_slice(extra);
        assert!(run(&args, dir.path()).status.success());
        texts.push(std::fs::read(dir.path().join("verify-all.json")).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
    assert_eq!(texts[0], texts[2]);
}

#[test]
fn malformed_spec_exits_with_schema_code_and_location() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_spec(dir.path(), "{ \"kind\": \"flow\",\n  \"x0\": [1.0,, 2.0] }");
    let out = run(&["--spec", s.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn unknown_fields_and_bad_shapes_are_schema_errors() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = r#"{ "kind": "flow", "field": { "dim": 1, "components": [[]] }, "x0": [0.0], "t": 1.0, "colour": 3 }"#;
    let out = run(&["--spec", write_spec(dir.path(), unknown).to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let shape = r#"{ "kind": "flow", "field": { "dim": 2, "components": [[]] }, "x0": [0.0, 0.0], "t": 1.0 }"#;
    let out = run(&["--spec", write_spec(dir.path(), shape).to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("field.components"));
}

#[test]
fn non_positive_tolerance_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["--tol", "0"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--tol"));
}

#[test]
fn blow_up_exits_with_divergence_code() {
    // x' = x² from x = 1 leaves every bounded set before t = 1
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{ "kind": "flow", "field": { "dim": 1, "components": [[{ "exp": [2], "c": 1.0 }]] }, "x0": [1.0], "t": 2.0 }"#;
    let out = run(&["--spec", write_spec(dir.path(), text).to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn failed_expectation_exits_with_assertion_code() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{ "kind": "flow", "field": { "dim": 1, "components": [[{ "exp": [1], "c": 1.0 }]] }, "x0": [1.0], "t": 1.0, "expected": [3.0] }"#;
    let out = run(&["--spec", write_spec(dir.path(), text).to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&dir.path().join("flow.json"))["passed"], false);
}
