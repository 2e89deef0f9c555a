use std::process::{Command, Output};

use serde_json::Value;

fn belldist(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_belldist")).args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn beta(args: &[&str]) -> f64 {
    let out = belldist(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    report(&out)["results"]["beta"].as_f64().unwrap()
}

#[test]
fn eval_examples() {
    assert!((beta(&["eval", "--state", "ghz:3", "--op", "mbk:optimal"]) - 2.0).abs() < 1e-12);
    assert!(beta(&["eval", "--state", "mixed:3", "--op", "mbk:optimal"]).abs() < 1e-12);
    let w = beta(&["--restarts", "4", "eval", "--state", "w-mixture:0.3927", "--op", "uffink:auto"]);
    assert!((w - 1.0).abs() < 1e-2, "{w}");
}

#[test]
fn reports_are_deterministic() {
    let args = ["--seed", "3", "--restarts", "2", "eval", "--state", "noisy-ghz:3:0.8", "--op", "mbk:auto"];
    let a = belldist(&args);
    let b = belldist(&args);
    assert_eq!(a.stdout, b.stdout);
    let r = report(&a);
    assert_eq!(r["inputs_digest"].as_str().unwrap().len(), 64);
    assert_eq!(r["status"], "ok");
}

#[test]
fn bad_input_exits_with_two() {
    for args in [
        &["eval", "--state", "no-such-file.json", "--op", "mbk"][..],
        &["eval", "--state", "ghz:3", "--op", "nope"],
        &["eval", "--state", "rho-r:3:1.5", "--op", "mbk"],
        &["classify", "--state", "ghz:3"],
    ] {
        let out = belldist(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert_eq!(report(&out)["status"], "input-error");
    }
}

#[test]
fn parse_errors_carry_a_byte_offset() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"schema_version\": 1,\n  \"n_qubits\": ]\n}\n").unwrap();
    let out = belldist(&["eval", "--state", path.to_str().unwrap(), "--op", "mbk"]);
    assert_eq!(out.status.code(), Some(2));
    let msg = report(&out)["results"]["error"].as_str().unwrap().to_string();
    assert!(msg.contains("parse error at byte 39"), "{msg}");
}

#[test]
fn json_out_matches_stdout_and_state_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let out = belldist(&["--json-out", json.to_str().unwrap(), "eval", "--state", "rho-r:3:0.9", "--op", "mbk:optimal"]);
    assert_eq!(std::fs::read(&json).unwrap(), out.stdout);

    let state_path = dir.path().join("state.json");
    let state = report(&out)["inputs"]["state"].clone();
    std::fs::write(&state_path, serde_json::to_string(&state).unwrap()).unwrap();
    let from_file = beta(&["eval", "--state", state_path.to_str().unwrap(), "--op", "mbk:optimal"]);
    assert_eq!(from_file, report(&out)["results"]["beta"].as_f64().unwrap());
}

#[test]
fn classify_and_bounds() {
    let out = belldist(&["classify", "--beta", "5.656854249492381", "--qubits", "7"]);
    assert_eq!(report(&out)["results"]["max_group_size"], 2);
    let out = belldist(&["classify", "--state", "padded-ghz:4", "--op", "mbk:optimal"]);
    let r = report(&out);
    assert_eq!(r["results"]["fully_distillable"], false);
    let out = belldist(&["bounds", "--qubits", "3", "--p", "2", "--r", "0.9"]);
    let r = report(&out);
    assert!((r["results"]["overlap_requirement"]["r"].as_f64().unwrap() - (1.0 + 3f64.sqrt()) / 4.0).abs() < 1e-12);
}

#[test]
fn repro_and_certify_exit_codes() {
    assert_eq!(belldist(&["repro", "r3"]).status.code(), Some(0));
    assert_eq!(belldist(&["repro", "constraint-sum"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let out = belldist(&["certify", "--count", "5", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}
