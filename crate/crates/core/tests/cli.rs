mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

use common::*;

fn write(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shiftequiv"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Fixture {
        Fixture {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn file(&self, name: &str, v: Value) -> PathBuf {
        write(self.dir.path(), name, &v)
    }

    fn worked_pair(&self) -> (PathBuf, PathBuf) {
        let pair = self.file(
            "pair.json",
            json!({ "A": m(&[&[1, 1], &[1, 1]]), "B": m(&[&[2]]) }),
        );
        let se = self.file(
            "se.json",
            json!({ "m": 1, "R": m(&[&[1], &[1]]), "S": m(&[&[1, 1]]) }),
        );
        (pair, se)
    }
}

#[test]
fn verify_se_accepts_the_worked_pair() {
    let fx = Fixture::new();
    let (pair, se) = fx.worked_pair();
    let o = run(&["verify-se", "--pair", s(&pair), "--witness", s(&se)]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let cert = stdout_json(&o);
    assert_eq!(cert["command"], "verify-se");
    assert!(cert["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c[1] == true));
}

#[test]
fn invariants_separate_two_from_four() {
    let fx = Fixture::new();
    let pair = fx.file("p.json", json!({ "A": m(&[&[2]]), "B": m(&[&[4]]) }));
    let o = run(&["invariants", "--pair", s(&pair)]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout_json(&o)["result"]["verdict"], "NotSE");
}

#[test]
fn non_square_matrix_is_an_input_error() {
    let fx = Fixture::new();
    let pair = fx.file(
        "p.json",
        json!({ "A": m(&[&[1, 1, 0], &[0, 1, 1]]), "B": m(&[&[2]]) }),
    );
    let o = run(&["invariants", "--pair", s(&pair)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    assert!(
        String::from_utf8_lossy(&o.stderr).contains("square"),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn malformed_field_is_named() {
    let fx = Fixture::new();
    let (pair, _) = fx.worked_pair();
    let se = fx.file(
        "bad.json",
        json!({ "m": "one", "R": m(&[&[1], &[1]]), "S": m(&[&[1, 1]]) }),
    );
    let o = run(&["verify-se", "--pair", s(&pair), "--witness", s(&se)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        String::from_utf8_lossy(&o.stderr).contains("`m`"),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let budget = fx.file("budget.json", json!({ "nodes": 5 }));
    let o = run(&["search-se", "--pair", s(&pair), "--budget", s(&budget)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nodes"));
}

#[test]
fn failed_verification_exits_one() {
    let fx = Fixture::new();
    let (pair, _) = fx.worked_pair();
    let se = fx.file(
        "se.json",
        json!({ "m": 1, "R": m(&[&[1], &[0]]), "S": m(&[&[1, 1]]) }),
    );
    let o = run(&["verify-se", "--pair", s(&pair), "--witness", s(&se)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout_json(&o)["checks"]
        .as_array()
        .unwrap()
        .iter()
        .any(|c| c[1] == false));
}

#[test]
fn out_writes_the_certificate_and_replay_accepts_it() {
    let fx = Fixture::new();
    let (pair, se) = fx.worked_pair();
    let out = fx.dir.path().join("cert.json");
    let o = run(&[
        "search-cse",
        "--pair",
        s(&pair),
        "--witness",
        s(&se),
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let written: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(written["command"], "search-cse");
    let o = run(&["replay", "--certificate", s(&out), "--workers", "4"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn replay_rejects_a_tampered_certificate() {
    let fx = Fixture::new();
    let (pair, _) = fx.worked_pair();
    let o = run(&["search-elementary", "--pair", s(&pair)]);
    assert_eq!(o.status.code(), Some(0));
    let mut cert = stdout_json(&o);
    cert["result"]["found"] = json!(false);
    let path = fx.file("tampered.json", cert);
    let o = run(&["replay", "--certificate", s(&path)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn exhausted_budget_is_reported() {
    let fx = Fixture::new();
    let pair = fx.file(
        "p.json",
        json!({ "A": m(&[&[3]]), "B": m(&[&[1, 1], &[2, 2]]) }),
    );
    let budget = fx.file("b.json", json!({ "node_limit": 3 }));
    let o = run(&["search-se", "--pair", s(&pair), "--budget", s(&budget)]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout_json(&o)["result"]["budget_exceeded"], true);
}

#[test]
fn progress_goes_to_stderr_as_json_lines() {
    let fx = Fixture::new();
    let (pair, _) = fx.worked_pair();
    let o = run(&["search-sse", "--pair", s(&pair)]);
    assert_eq!(o.status.code(), Some(0));
    let stderr = String::from_utf8_lossy(&o.stderr);
    for line in stderr.lines().filter(|l| !l.is_empty()) {
        serde_json::from_str::<Value>(line).unwrap();
    }
}

#[test]
fn rep_commands_report_relations() {
    let fx = Fixture::new();
    let a = m(&[&[1, 1], &[1, 1]]);
    let b = m(&[&[2]]);
    let step = shiftequiv::ElementaryStep {
        r: m(&[&[1], &[1]]),
        s: m(&[&[1, 1]]),
    };
    let c = step_cse(&a, &b, &step);
    let bundle = fx.file("cse.json", c.to_bundle(&a, &b));
    let o = run(&["rep-verify", "--witness", s(&bundle)]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let o = run(&["rep-twist", "--witness", s(&bundle), "--twist", "1/4"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["rep-build", "--witness", s(&bundle), "--depth", "3"]);
    assert_eq!(o.status.code(), Some(2));
}
