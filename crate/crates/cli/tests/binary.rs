use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};

fn qiso(args: &[&str], dir: &Path) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_qiso")).args(args).current_dir(dir).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn put(dir: &Path, name: &str, v: Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, v.to_string()).unwrap();
    p
}

fn json_out(stdout: &str) -> Value {
    serde_json::from_str(stdout).unwrap()
}

fn two_point(dir: &Path) {
    put(dir, "space.json", json!({"n": 2, "dist": [["0", "1"], ["1", "0"]]}));
    put(dir, "mu.json", json!({"mass": ["3/4", "1/4"]}));
    put(dir, "nu.json", json!({"mass": ["1/4", "3/4"]}));
}

#[test]
fn wasserstein_worked_examples() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    two_point(d);
    let base = ["wasserstein", "--space", "space.json", "--mu", "mu.json", "--nu", "nu.json"];
    let (code, out, _) = qiso(&base, d);
    assert_eq!(code, 0);
    let v = json_out(&out);
    assert_eq!(v["cost"], "1/2");
    assert_eq!(v["plan"], json!([["1/4", "1/2"], ["0", "1/4"]]));
    assert_eq!(v["certificate"]["gap"], "0");
    assert_eq!(v["certificate"]["dual_feasible"], true);

    let (code, out, _) = qiso(&[&base[..], &["--p", "2"]].concat(), d);
    assert_eq!(code, 0);
    assert!((json_out(&out)["value"].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-12);

    let (_, out, _) = qiso(&[&base[..], &["--mode", "float"]].concat(), d);
    assert_eq!(json_out(&out)["cost"], 0.5);
}

#[test]
fn winf_worked_example_has_a_certificate_below() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    two_point(d);
    let (code, out, _) = qiso(&["winf", "--space", "space.json", "--mu", "mu.json", "--nu", "nu.json"], d);
    assert_eq!(code, 0);
    let v = json_out(&out);
    assert_eq!(v["value"], "1");
    assert_eq!(v["certificate"]["below"]["subset"], json!([0]));
}

#[test]
fn coupling_on_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    put(d, "half.json", json!({"mass": ["1/2", "1/2"]}));
    put(d, "anti.json", json!({"pairs": [[0, 1], [1, 0]]}));
    let (code, out, _) = qiso(&["coupling-on", "--mu", "half.json", "--nu", "half.json", "--pairs", "anti.json"], d);
    assert_eq!(code, 0);
    assert_eq!(json_out(&out)["plan"], json!([["0", "1/2"], ["1/2", "0"]]));

    two_point(d);
    put(d, "diag.json", json!({"pairs": [[0, 0], [1, 1]]}));
    let (code, out, _) = qiso(&["coupling-on", "--mu", "mu.json", "--nu", "nu.json", "--pairs", "diag.json"], d);
    assert_eq!(code, 3);
    assert_eq!(json_out(&out)["violator"]["subset"], json!([0]));

    let (code, out, _) =
        qiso(&["coupling-on", "--mu", "mu.json", "--nu", "nu.json", "--space", "space.json", "--sublevel", "1"], d);
    assert_eq!(code, 0);
    assert_eq!(json_out(&out)["feasible"], true);
}

#[test]
fn hall_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    put(d, "ok.json", json!({"mu": ["2/3", "1/3"], "nu": ["1/3", "2/3"], "pairs": [[0, 0], [0, 1], [1, 1]]}));
    let (code, out, _) = qiso(&["hall", "ok.json"], d);
    assert_eq!(code, 0);
    assert_eq!(json_out(&out)["coupling"], json!([["1/3", "1/3"], ["0", "1/3"]]));

    put(d, "bad.json", json!({"mu": ["1/2", "1/2"], "nu": ["1/2", "1/2"], "pairs": [[0, 0], [1, 0]]}));
    let (code, out, _) = qiso(&["hall", "bad.json"], d);
    assert_eq!(code, 3);
    assert_eq!(json_out(&out)["violator"]["subset"], json!([0, 1]));
}

#[test]
fn invalid_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    put(d, "tri.json", json!({"dist": [[0, 1, 3], [1, 0, 1], [3, 1, 0]]}));
    let (code, _, err) = qiso(&["validate", "tri.json"], d);
    assert_eq!(code, 2);
    assert!(err.contains("triangle"), "{err}");

    put(d, "ok.json", json!({"dist": [[0, 1, 2], [1, 0, 2], [2, 2, 0]]}));
    let (code, out, _) = qiso(&["validate", "ok.json"], d);
    assert_eq!(code, 0);
    assert_eq!(json_out(&out)["kind"], "metric");

    let (code, _, _) = qiso(&["hall", "missing.json"], d);
    assert_eq!(code, 2);
    let (code, _, _) = qiso(&["wasserstein", "--space", "ok.json"], d);
    assert_eq!(code, 2);
}

fn export(d: &Path) -> Vec<(String, String)> {
    let (code, out, _) = qiso(&["catalog", "export", "cat"], d);
    assert_eq!(code, 0);
    json_out(&out)
        .as_array()
        .unwrap()
        .iter()
        .map(|e| (e["name"].as_str().unwrap().to_string(), format!("cat/{}", e["file"].as_str().unwrap())))
        .collect()
}

fn file_for<'a>(entries: &'a [(String, String)], needle: &str) -> &'a str {
    &entries.iter().find(|(n, _)| n.contains(needle)).unwrap().1
}

#[test]
fn check_reports_verdicts_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let entries = export(d);
    let iso = file_for(&entries, "C(S3@isosceles");
    let cyc = file_for(&entries, "C(Z4@4-cycle)");

    let (code, out, _) = qiso(&["check", iso, "--condition", "d"], d);
    assert_eq!(code, 3);
    assert!(json_out(&out)["witness"].is_object());
    let (code, out, _) = qiso(&["check", iso, "--condition", "lip", "--p", "1", "--universal"], d);
    assert_eq!(code, 3);
    assert_eq!(json_out(&out)["holds"], false);

    for cond in ["d", "lip", "winf", "thm-main"] {
        let (code, out, _) = qiso(&["check", cyc, "--condition", cond, "--p", "inf"], d);
        assert_eq!(code, 0, "{cond}");
        assert_eq!(json_out(&out)["holds"], true);
    }

    // the counit of C(S3) is the identity, which is an isometry
    let blocks = vec![json!([[[0, 0]]]); 6];
    let mut counit = blocks.clone();
    counit[0] = json!([[[1, 0]]]);
    put(d, "counit.json", json!({"densities": counit}));
    let (code, _, _) = qiso(&["check", iso, "--condition", "lip", "--p", "2", "--state", "counit.json"], d);
    assert_eq!(code, 0);
    let (code, _, _) = qiso(&["check", iso, "--condition", "d", "--state", "counit.json"], d);
    assert_eq!(code, 2);
}

#[test]
fn size_guard_exits_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let n = 9;
    let dist: Vec<Vec<i32>> = (0..n).map(|i| (0..n).map(|j| i32::from(i != j)).collect()).collect();
    let u: Vec<Vec<Value>> =
        (0..n).map(|i| (0..n).map(|j| json!([if i == j { 1 } else { 0 }])).collect()).collect();
    let group = json!({
        "blocks": [1],
        "delta": [[[1, 0]]],
        "epsilon": [[1, 0]],
        "kappa": [[[1, 0]]],
    });
    put(d, "group.json", group);
    put(d, "space.json", json!({"n": n, "dist": dist}));
    put(d, "nine.json", json!({"group": "group.json", "space": "space.json", "u": u}));
    let (code, _, err) = qiso(&["check", "nine.json", "--condition", "lip", "--p", "2"], d);
    assert_eq!(code, 4, "{err}");
    let (code, _, _) = qiso(&["check", "nine.json", "--condition", "d"], d);
    assert_eq!(code, 0);
}

#[test]
fn envelope_writes_a_valid_quotient() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let entries = export(d);
    let iso = file_for(&entries, "C(S3@isosceles");
    let (code, out, err) = qiso(&["envelope", iso, "--group-out", "q.json"], d);
    assert_eq!(code, 0, "{err}");
    let v = json_out(&out);
    assert_eq!(v["verification"]["passed"], true);
    // only the swap of the two equal legs and the identity survive
    assert_eq!(v["block_map"]["surviving"].as_array().unwrap().len(), 2);
    let (code, out, _) = qiso(&["validate", "q.json"], d);
    assert_eq!(code, 0);
    assert_eq!(json_out(&out)["kind"], "group");
}

#[test]
fn catalog_verify_emits_every_format() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    put(d, "cfg.json", json!({"include": ["isosceles"], "random_actions": 2, "state_samples": 2}));
    let (code, _, err) = qiso(&["catalog", "verify", "--config", "cfg.json", "--out", "r.csv"], d);
    assert_eq!(code, 0, "{err}");
    let rows = csv::Reader::from_path(d.join("r.csv")).unwrap().records().count();
    let (_, out, _) = qiso(&["catalog", "verify", "--config", "cfg.json"], d);
    assert_eq!(json_out(&out)["instances"].as_array().unwrap().len(), rows);
    let (code, out, _) = qiso(&["catalog", "verify", "--config", "cfg.json", "--format", "markdown"], d);
    assert_eq!(code, 0);
    assert!(out.contains("## Implication matrix"));

    put(d, "bad.json", json!({"n_min": 9, "n_max": 3}));
    let (code, _, _) = qiso(&["catalog", "verify", "--config", "bad.json"], d);
    assert_eq!(code, 2);
}

#[test]
fn searches_replay_from_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    put(d, "cfg.json", json!({"builtin": false, "random_actions": 4, "state_samples": 4, "span_samples": 6}));
    for which in ["sublevel", "span"] {
        let run = |jobs: &str| {
            let (code, out, err) = qiso(&["search", which, "--config", "cfg.json", "--seed", "5", "--jobs", jobs], d);
            assert_eq!(code, 0, "{err}");
            let mut v = json_out(&out);
            v["timing"] = Value::Null;
            v["config"]["jobs"] = Value::Null;
            v
        };
        let a = run("1");
        assert_eq!(a, run("3"));
        assert_eq!(a["config"]["seed"], 5);
    }
}
