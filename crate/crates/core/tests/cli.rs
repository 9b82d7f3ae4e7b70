//! End-to-end runs of the `sprite-check` binary.

mod common;

use std::process::{Command, Output};

use common::manifest_path;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sprite-check"))
        .current_dir(manifest_path(""))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn horn_with_seed_qualifiers_is_sat() {
    let o = run(&["horn", "tests/data/abs_main.horn", "-q", "tests/data/seed.quals"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("k := 0 <= v && x <= v"), "{}", stdout(&o));
}

#[test]
fn horn_without_qualifiers_fails_at_the_assertion() {
    let o = run(&["horn", "tests/data/abs_main.horn"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.starts_with("UNSAT\nclause 2:"), "{out}");
}

#[test]
fn empty_horn_file_is_sat() {
    let o = run(&["horn", "tests/data/empty.horn"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "SAT\n");
}

#[test]
fn rejected_program_reports_its_span() {
    let o = run(&["check", "tests/corpus/reject/bad_list.re"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("bad_list.re:5:24: error"), "{}", stdout(&o));
}

#[test]
fn missing_input_is_an_error() {
    let o = run(&["check", "tests/corpus/does_not_exist.re"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn json_report_is_parseable() {
    let o = run(&["check", "--json", "tests/corpus/accept/inc.re"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).expect("json");
    assert_eq!(v[0]["status"], "safe");
}

#[test]
fn emitted_horn_files_solve_to_the_same_verdict() {
    let dir = tempfile::tempdir().expect("tempdir");
    for (file, code) in [
        ("tests/corpus/accept/abs_main.re", 0),
        ("tests/corpus/accept/app_assoc.re", 0),
        ("tests/corpus/reject/bad_pair.re", 1),
    ] {
        let out = dir.path().join("out.horn");
        let out = out.to_str().expect("utf-8 path");
        let o = run(&["check", file, "--emit-horn", out]);
        assert_eq!(o.status.code(), Some(code), "{file}");
        let o = run(&["horn", out]);
        assert_eq!(o.status.code(), Some(code), "{file}: {}", stdout(&o));
    }
}

#[test]
fn suite_mode_counts_expected_outcomes() {
    let o = run(&["check", "--suite", "tests/corpus/reject", "--expect", "reject", "-j", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("suite: 7/7 as expected"), "{}", stdout(&o));
}
