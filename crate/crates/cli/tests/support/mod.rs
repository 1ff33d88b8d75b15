//! Sample documents and a runner for the `caseval` binary.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

pub const CYCLIC: &str = r#"{
  "format_version": "1.0.0",
  "case": {
    "name": "cyclic",
    "top": "A",
    "nodes": [
      {"kind": "claim", "id": "A", "text": "A holds"},
      {"kind": "claim", "id": "B", "text": "B holds"}
    ],
    "blocks": [
      {"id": "BA", "kind": "concretion", "parent": "A", "subchildren": ["B"]},
      {"id": "BB", "kind": "concretion", "parent": "B", "subchildren": ["A"]}
    ]
  }
}
"#;

pub const ASSUMPTION_ONLY: &str = r#"{
  "format_version": "1.0.0",
  "case": {
    "name": "assumed",
    "top": "A",
    "nodes": [
      {"kind": "claim", "id": "A", "text": "The environment is benign", "designation": "assumption",
       "assumption_justification": "Agreed with the operator"}
    ],
    "blocks": []
  }
}
"#;

/// Two claims, each confirmed by present evidence with P(E|C) = 0.9 and
/// P(E|not C) = 0.1 at prior 0.5, so each has posterior 0.9. Good's measure
/// is log10(9), so thresholds must sit below that for the confirmation to
/// count as strongly positive.
pub const CONFIRMED: &str = r#"{
  "format_version": "1.0.0",
  "case": {
    "name": "confirmed",
    "top": "G",
    "nodes": [
      {"kind": "claim", "id": "G", "text": "Both parts are sound"},
      {"kind": "claim", "id": "A", "text": "Part A is sound"},
      {"kind": "claim", "id": "B", "text": "Part B is sound"},
      {"kind": "claim", "id": "MA", "text": "Part A passed its test"},
      {"kind": "claim", "id": "MB", "text": "Part B passed its test"},
      {"kind": "evidence", "id": "EA", "description": "Test log A", "present": true},
      {"kind": "evidence", "id": "EB", "description": "Test log B", "present": true}
    ],
    "blocks": [
      {"id": "BG", "kind": "decomposition", "mode": "conjunctive", "parent": "G", "subchildren": ["A", "B"]},
      {"id": "SA", "kind": "substitution", "parent": "A", "subchildren": ["MA"],
       "confirmation": {"mode": "numeric", "p_e_given_c": 0.9, "p_e_given_not_c": 0.1, "prior_c": 0.5}},
      {"id": "SB", "kind": "substitution", "parent": "B", "subchildren": ["MB"],
       "confirmation": {"mode": "numeric", "p_e_given_c": 0.9, "p_e_given_not_c": 0.1, "prior_c": 0.5}},
      {"id": "IA", "kind": "evidence_incorporation", "parent": "MA", "subchildren": ["EA"]},
      {"id": "IB", "kind": "evidence_incorporation", "parent": "MB", "subchildren": ["EB"]}
    ]
  }
}
"#;

pub const LOW_THRESHOLDS: &str = "0.5,-0.5";

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_caseval")
}

/// Runs `caseval` with the given arguments and extra environment.
pub fn caseval(args: &[&str], env: &[(&str, &str)], cwd: &Path) -> Run {
    let mut cmd = Command::new(bin());
    cmd.args(args).current_dir(cwd).env_remove("CASEVAL_THRESHOLDS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("caseval runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).expect("utf-8 stdout"),
        stderr: String::from_utf8(out.stderr).expect("utf-8 stderr"),
    }
}

/// Writes `text` to `dir/name` and returns the path as a string.
pub fn write(dir: &Path, name: &str, text: &str) -> String {
    let path: PathBuf = dir.join(name);
    std::fs::write(&path, text).expect("write sample");
    path.to_str().expect("utf-8 path").to_string()
}

/// Writes the bundled fixture to `dir` through the CLI itself.
pub fn lightbulb(dir: &Path) -> String {
    let path = dir.join("lightbulb.json");
    let p = path.to_str().unwrap();
    let run = caseval(&["fixture", "lightbulb", "--output", p], &[], dir);
    assert_eq!(run.code, 0, "{}", run.stderr);
    p.to_string()
}
