use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdesign"))
        .args(args)
        .current_dir(concat!(env!("CARGO_MANIFEST_DIR"), "/../.."))
        .env_remove("QDESIGN_WORKERS")
        .output()
        .unwrap()
}

fn json(args: &[&str]) -> (Value, String) {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    let out = run(&full);
    let text = String::from_utf8(out.stdout).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap_or_else(|e| panic!("{args:?}: {e}\n{text}"));
    (v, text)
}

#[test]
fn json_reports_round_trip() {
    let cases: &[&[&str]] = &[
        &["qbinom", "--q", "2", "--n", "35", "--k", "17", "--bounds"],
        &["enumerate", "--q", "3", "--n", "3", "--k", "1"],
        &["incidence", "--q", "2", "--n", "4", "--k", "2", "--t", "1", "--weights-only"],
        &["verify", "--design", "docs/data/trivial-4-2.txt", "--t", "1"],
        &["decode", "--q", "3", "--t", "2", "--k", "4", "--bounds"],
        &["decode", "--q", "2", "--t", "1", "--k", "2", "--certify", "--n", "4"],
        &["lemma2-check", "--q", "2", "--n", "4", "--t", "2"],
        &["klp-report", "--q", "2", "--n", "1000", "--k", "25", "--t", "1"],
        &["search", "--q", "2", "--n", "4", "--k", "2", "--t", "1"],
    ];
    for args in cases {
        let (v, text) = json(args);
        assert_eq!(serde_json::to_string_pretty(&v).unwrap() + "\n", text, "{args:?}");
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["command"], args[0]);
    }
}

#[test]
fn big_integers_are_decimal_strings() {
    let (v, _) = json(&["qbinom", "--q", "2", "--n", "35", "--k", "17"]);
    let s = v["value"].as_str().unwrap();
    assert!(s.len() > 20 && s.bytes().all(|b| b.is_ascii_digit()));
    let (v, _) = json(&["klp-report", "--q", "2", "--n", "1000", "--k", "25", "--t", "1"]);
    assert_eq!(v["feasible"], true);
    assert_eq!(v["c2"], "1");
    assert_eq!(v["rhs_final"].as_str().unwrap().len(), 7062);
}

#[test]
fn verify_json_fields() {
    let (v, _) = json(&["verify", "--design", "docs/data/trivial-4-2.txt", "--t", "1"]);
    assert_eq!(v["is_design"], true);
    assert_eq!(v["lambda"], "7");
    assert_eq!(v["is_trivial"], true);
    assert_eq!(v["counts_histogram"][0]["coverage"], 7);
    assert_eq!(v["counts_histogram"][0]["t_subspaces"], 15);
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| run(args).status.code().unwrap();
    assert_eq!(code(&["qbinom", "--q", "2", "--n", "4", "--k", "2"]), 0);
    assert_eq!(code(&["qbinom", "--q", "6", "--n", "4", "--k", "2"]), 2);
    assert_eq!(code(&["qbinom", "--q", "2", "--n", "4"]), 2);
    assert_eq!(code(&["--workers", "0", "selftest"]), 2);
    assert_eq!(code(&["verify", "--design", "docs/data/missing.txt", "--t", "1"]), 2);
    assert_eq!(code(&["search", "--q", "2", "--n", "3", "--k", "2", "--t", "1"]), 1);
    assert_eq!(code(&["enumerate", "--q", "2", "--n", "10", "--k", "5", "--max-subspaces", "10"]), 3);
    assert_eq!(code(&["qbinom", "--q", "2", "--n", "40", "--k", "20", "--via-sum"]), 3);
}

#[test]
fn spread_written_by_search_verifies() {
    let path = std::env::temp_dir().join(format!("qdesign-spread-{}.txt", std::process::id()));
    let p = path.to_str().unwrap();
    assert!(run(&["search", "--q", "2", "--n", "6", "--k", "3", "--t", "1", "--out", p]).status.success());
    let (v, _) = json(&["verify", "--design", p, "--t", "1"]);
    std::fs::remove_file(&path).unwrap();
    assert_eq!(v["lambda"], "1");
    assert_eq!(v["blocks"], 9);
    assert_eq!(v["is_simple"], true);
}
