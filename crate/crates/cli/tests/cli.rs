use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_treebeam"));
    c.env_remove("TREEBEAM_MODEL");
    c
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn run_with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = bin().args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

#[test]
fn check_reports_types_and_rejects_ill_typed_programs() {
    let ok = bin().args(["check", "(reduce a 0 +)", "--args", "a:int[]"]).output().unwrap();
    assert!(ok.status.success());
    assert_eq!(stdout(&ok).trim(), "(reduce a 0 +) : int");

    let bad = bin().args(["check", "(head)"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(!bad.stderr.is_empty());
}

#[test]
fn run_evaluates_each_input_line() {
    let o = run_with_stdin(&["run", "(map a (lambda1 (* arg1 2)))", "--args", "a:int[]"], "[[1,2,3]]\n[[]]\n");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o), "[2,4,6]\n[]\n");
}

#[test]
fn generated_data_feeds_frequency_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let g = bin().args(["gen", "--n", "120", "--seed", "4", "--out"]).arg(&data).output().unwrap();
    assert!(g.status.success(), "{}", String::from_utf8_lossy(&g.stderr));
    for split in ["train", "dev", "test"] {
        assert!(data.join(format!("{split}.jsonl")).exists());
    }

    let report = dir.path().join("freq.json");
    let e = bin()
        .args(["eval", "--split", "dev", "--mode", "search-freq", "--max-visited", "5", "--data"])
        .arg(&data)
        .arg("--report")
        .arg(&report)
        .output()
        .unwrap();
    assert!(e.status.success(), "{}", String::from_utf8_lossy(&e.stderr));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let n = json["n"].as_u64().unwrap();
    assert_eq!(json["tasks"].as_array().unwrap().len() as u64, n);
    assert!(json["accuracy"].as_f64().unwrap() <= 1.0);
    assert!(report.with_extension("depth.csv").exists());
}

#[test]
fn neural_synthesis_solves_a_dev_task() {
    let model = fixtures().join("model.nta");
    let dev = std::fs::read_to_string(fixtures().join("data/dev.jsonl")).unwrap();
    let first = dev.lines().next().unwrap();
    let o = run_with_stdin(&["synth", "--task-json", "-", "--model", model.to_str().unwrap()], first);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().last(), Some("PASS"));
}

#[test]
fn neural_modes_require_a_model() {
    let dev = fixtures().join("data/dev.jsonl");
    let first = std::fs::read_to_string(dev).unwrap();
    let o = run_with_stdin(&["synth", "--task-json", "-", "--mode", "search-neural"], first.lines().next().unwrap());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn exported_weights_match_the_parity_fixture() {
    let o = bin()
        .arg("train-export-verify")
        .arg("--model")
        .arg(fixtures().join("model.nta"))
        .arg("--fixture")
        .arg(fixtures().join("parity.json"))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().last(), Some("PASS"));
}
