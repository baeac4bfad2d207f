use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_peetre"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn run(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn exit_codes_follow_verdicts() {
    let cases = [
        ("reconstruct", "reconstruct_three_plus_x_d2.json", 0),
        ("reconstruct", "reconstruct_zero.json", 0),
        ("reconstruct", "reconstruct_shift.json", 1),
        ("classify", "classify_identity_forced_zero.json", 1),
        ("classify", "classify_five_multiplication.json", 0),
        ("check-locality", "locality_derivative.json", 0),
        ("check-locality", "locality_shift.json", 1),
    ];
    for (cmd, file, code) in cases {
        let path = scenario(file);
        let (status, stdout) = run(&[cmd, "--scenario", path.to_str().unwrap()]);
        assert_eq!(status, code, "{cmd} {file}");
        let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
        assert_eq!(report["schema_version"], "peetre-report/1");
        assert_eq!(report["pass"], code == 0);
    }
}

#[test]
fn scenario_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\n  \"dimension\": 1,\n  \"source_class\": \"two\"\n}\n").unwrap();
    let out = bin().args(["classify", "--scenario", bad.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 3"), "{err}");

    let missing = dir.path().join("missing.json");
    let (status, _) = run(&["reconstruct", "--scenario", missing.to_str().unwrap()]);
    assert_eq!(status, 2);
    let (status, _) = run(&["reconstruct"]);
    assert_eq!(status, 2);
}

#[test]
fn reports_are_byte_stable_and_written_to_out() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario("locality_derivative.json");
    let mut texts = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("r{i}.json"));
        let status = bin()
            .args(["check-locality", "--scenario", path.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
        texts.push(fs::read(&out).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn overrides_are_echoed() {
    let path = scenario("reconstruct_three_plus_x_d2.json");
    let (status, stdout) =
        run(&["reconstruct", "--scenario", path.to_str().unwrap(), "--seed", "42", "--tolerance", "1e-6"]);
    assert_eq!(status, 0);
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["scenario"]["seed"], 42);
    assert_eq!(report["scenario"]["tolerance"], 1e-6);
}

#[test]
fn demo_runs_all_builtins() {
    let (status, stdout) = run(&["demo"]);
    assert_eq!(status, 0);
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let runs = report["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 9);
    assert!(runs.iter().all(|r| r["pass"] == r["expected_pass"]));
}
