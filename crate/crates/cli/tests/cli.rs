use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn uep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uep"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &TempDir, name: &str, extra: &[&str]) -> PathBuf {
    let path = dir.path().join(name);
    let mut args = vec!["gen", "--out", path_str(&path)];
    args.extend_from_slice(extra);
    let out = uep(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn decide(instance: &Path, out: &Path, extra: &[&str]) -> (i32, Value) {
    let mut args = vec!["decide", path_str(instance), "--out", path_str(out), "--seed", "11"];
    args.extend_from_slice(extra);
    let o = uep(&args);
    let doc = std::fs::read_to_string(out).map(|t| serde_json::from_str(&t).unwrap()).unwrap_or(Value::Null);
    (code(&o), doc)
}

#[test]
fn yes_instance_round_trip() {
    let dir = TempDir::new().unwrap();
    let witness = dir.path().join("witness.json");
    let inst = gen(&dir, "yes.json", &["--yes", "--d1", "3", "--d2", "4", "--m", "2", "--seed", "7", "--witness", path_str(&witness)]);
    let verdict = dir.path().join("verdict.json");
    let (c, doc) = decide(&inst, &verdict, &[]);
    assert_eq!(c, 0);
    assert_eq!(doc["verdict"], "YES");
    assert!(doc["residual"].as_f64().unwrap() <= 1e-8);
    assert_eq!(doc["seed"], 11);
    assert_eq!(code(&uep(&["verify", path_str(&inst), path_str(&verdict)])), 0);
    assert_eq!(code(&uep(&["verify", path_str(&inst), path_str(&witness)])), 0);
}

#[test]
fn no_instance_is_exact_no() {
    let dir = TempDir::new().unwrap();
    let inst = gen(&dir, "no.json", &["--no", "--d1", "2", "--d2", "2", "--m", "0", "--seed", "3"]);
    let (c, doc) = decide(&inst, &dir.path().join("v.json"), &[]);
    assert_eq!(c, 1);
    assert_eq!(doc["verdict"], "NO");
    assert_eq!(doc["certainty"], "exact");
    assert!(doc["U"].is_null());
}

#[test]
fn every_mode_round_trips() {
    let dir = TempDir::new().unwrap();
    for mode in ["matrix-pairs", "matpoly", "pure-sets", "unilocal-mixed", "generic-mixed"] {
        for (answer, expected) in [("--yes", 0), ("--no", 1)] {
            let name = format!("{mode}{answer}.json");
            let inst = gen(&dir, &name, &[answer, "--mode", mode, "--d1", "2", "--d2", "3", "--seed", "5"]);
            let verdict = dir.path().join(format!("verdict-{name}"));
            let (c, doc) = decide(&inst, &verdict, &[]);
            assert_eq!(c, expected, "{mode} {answer}: {doc}");
            if expected == 0 {
                assert_eq!(doc["mode"], mode);
                let v = uep(&["verify", path_str(&inst), path_str(&verdict)]);
                assert_eq!(code(&v), 0, "{mode}: {}", String::from_utf8_lossy(&v.stdout));
            } else {
                assert_eq!(doc["certainty"], "exact", "{mode}");
            }
        }
    }
}

#[test]
fn generation_is_byte_identical() {
    let args = ["gen", "--yes", "--d1", "3", "--d2", "4", "--m", "2", "--seed", "7"];
    let a = uep(&args);
    let b = uep(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let doc: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(doc["seed"], 7);
    assert_eq!(doc["pairs"].as_array().unwrap().len(), 3);
}

#[test]
fn factor_descriptor_is_written() {
    let out = uep(&["gen", "--yes", "--d1", "4", "--d2", "2", "--seed", "1", "--g1", "factor:2,2"]);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["G1"], serde_json::json!({"kind": "factor", "a": 2, "b": 2}));
    assert_eq!(doc["G2"], serde_json::json!({"kind": "full"}));
}

#[test]
fn verdicts_are_deterministic_apart_from_timing() {
    let dir = TempDir::new().unwrap();
    let inst = gen(&dir, "i.json", &["--yes", "--d1", "3", "--d2", "3", "--m", "1", "--seed", "9", "--g2", "factor:1,3"]);
    let strip = |p: &Path| {
        let mut v: Value = serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("timing");
        serde_json::to_vec(&v).unwrap()
    };
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    decide(&inst, &a, &[]);
    decide(&inst, &b, &[]);
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn truncated_file_names_the_field() {
    let dir = TempDir::new().unwrap();
    let inst = gen(&dir, "full.json", &["--yes", "--d1", "2", "--d2", "2", "--seed", "2"]);
    let text = std::fs::read_to_string(&inst).unwrap();
    let cut = dir.path().join("cut.json");
    std::fs::write(&cut, &text[..text.len() / 2]).unwrap();
    let out = uep(&["decide", path_str(&cut), "--seed", "1"]);
    assert_eq!(code(&out), 3);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("field `pairs"), "{err}");
    assert!(err.contains("line"), "{err}");
}

#[test]
fn shape_errors_are_malformed_input() {
    let dir = TempDir::new().unwrap();
    let inst = dir.path().join("bad.json");
    std::fs::write(&inst, r#"{"d1": 2, "d2": 1, "pairs": [{"X": [[[1, 0]], [[0, 0]]], "Y": [[[1, 0]]]}]}"#).unwrap();
    let out = uep(&["decide", path_str(&inst), "--seed", "1"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("pairs[0].Y"));
}

#[test]
fn invalid_algebras_exit_4() {
    let dir = TempDir::new().unwrap();
    let pairs = r#""pairs": [{"X": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]], "Y": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]}]"#;
    let non_unital = format!(
        r#"{{"d1": 2, "d2": 2, {pairs}, "G1": {{"kind": "span", "basis": [[[[0, 0], [1, 0]], [[0, 0], [0, 0]]]]}}}}"#
    );
    let wrong_factor = format!(r#"{{"d1": 2, "d2": 2, {pairs}, "G2": {{"kind": "factor", "a": 3, "b": 1}}}}"#);
    for (k, text) in [non_unital, wrong_factor].iter().enumerate() {
        let inst = dir.path().join(format!("alg{k}.json"));
        std::fs::write(&inst, text).unwrap();
        let out = uep(&["decide", path_str(&inst), "--seed", "1"]);
        assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn identity_certificate_on_identical_pairs() {
    let dir = TempDir::new().unwrap();
    let inst = dir.path().join("same.json");
    std::fs::write(
        &inst,
        r#"{"d1": 2, "d2": 1, "pairs": [{"X": [[[1, 2]], [[3, -1]]], "Y": [[[1, 2]], [[3, -1]]]}]}"#,
    )
    .unwrap();
    let cert = dir.path().join("id.json");
    std::fs::write(&cert, r#"{"U": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]], "V": [[[1, 0]]]}"#).unwrap();
    assert_eq!(code(&uep(&["verify", path_str(&inst), path_str(&cert)])), 0);
}

#[test]
fn perturbed_certificate_is_rejected() {
    let dir = TempDir::new().unwrap();
    let inst = gen(&dir, "y.json", &["--yes", "--d1", "2", "--d2", "3", "--seed", "4"]);
    let verdict = dir.path().join("v.json");
    decide(&inst, &verdict, &[]);
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&verdict).unwrap()).unwrap();
    let entry = &mut doc["U"][0][0][0];
    *entry = Value::from(entry.as_f64().unwrap() + 1e-3);
    std::fs::write(&verdict, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = uep(&["verify", path_str(&inst), path_str(&verdict)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("max residual"));
}

#[test]
fn certificate_with_wrong_shape_is_malformed() {
    let dir = TempDir::new().unwrap();
    let inst = gen(&dir, "y.json", &["--yes", "--d1", "2", "--d2", "2", "--seed", "4"]);
    let cert = dir.path().join("c.json");
    std::fs::write(&cert, r#"{"U": [[[1, 0]]], "V": [[[1, 0]]]}"#).unwrap();
    assert_eq!(code(&uep(&["verify", path_str(&inst), path_str(&cert)])), 3);
}

#[test]
fn usage_errors_exit_5() {
    let dir = TempDir::new().unwrap();
    let inst = gen(&dir, "y.json", &["--yes", "--d1", "2", "--d2", "2", "--seed", "4"]);
    assert_eq!(code(&uep(&["decide", path_str(&inst)])), 5);
    assert_eq!(code(&uep(&["decide", path_str(&inst), "--seed", "1", "--sample-max", "3"])), 5);
    assert_eq!(code(&uep(&["decide", path_str(&inst), "--seed", "1", "--tol-rank", "0"])), 5);
    assert_eq!(code(&uep(&["gen", "--yes", "--d1", "0", "--d2", "2", "--seed", "1"])), 5);
    assert_eq!(code(&uep(&["gen", "--yes", "--d1", "4", "--d2", "2", "--seed", "1", "--g1", "factor:3,1"])), 5);
    assert_eq!(code(&uep(&["gen", "--d1", "2", "--d2", "2", "--seed", "1"])), 5);
    assert_eq!(code(&uep(&["--help"])), 0);
}

#[test]
fn verbose_reports_both_bounds() {
    let dir = TempDir::new().unwrap();
    let inst = gen(&dir, "y.json", &["--yes", "--d1", "2", "--d2", "2", "--seed", "4"]);
    let out = uep(&["decide", path_str(&inst), "--seed", "1", "--verbose"]);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("failure bound") && err.contains("coarse"), "{err}");
}

#[test]
fn low_trial_budget_on_singular_space_is_probabilistic_no() {
    // Both pairs share a kernel direction: the solution space has no invertible element.
    let dir = TempDir::new().unwrap();
    let inst = dir.path().join("k.json");
    std::fs::write(
        &inst,
        r#"{"d1": 2, "d2": 2, "pairs": [{"X": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]], "Y": [[[0, 0], [0, 0]], [[0, 0], [1, 0]]]}]}"#,
    )
    .unwrap();
    let (c, doc) = decide(&inst, &dir.path().join("v.json"), &["--trials", "4"]);
    assert!(c == 0 || c == 1, "{doc}");
    if c == 1 {
        assert_eq!(doc["certainty"], "probabilistic");
        assert!(doc["failure_bound"].as_f64().unwrap() > 0.0);
    }
}
