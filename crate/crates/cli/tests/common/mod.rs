#![allow(dead_code)]

use std::path::{Path, PathBuf};

use domania_cli::{run, Outcome};

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn data(name: &str) -> String {
    format!("tests/data/{name}")
}

/// Cargo runs integration tests from the crate directory, so data paths and
/// the equations echoed in reports stay relative.
pub fn domania(args: &[&str]) -> Outcome {
    let mut v = vec!["domania"];
    v.extend_from_slice(args);
    run(v)
}

pub fn json(out: &Outcome) -> serde_json::Value {
    serde_json::from_str(&out.stdout).unwrap_or_else(|e| panic!("bad report ({e}): {}{}", out.stdout, out.stderr))
}

pub fn checks(v: &serde_json::Value) -> &Vec<serde_json::Value> {
    v["checks"].as_array().unwrap()
}

pub fn statuses(v: &serde_json::Value, anchor: &str) -> Vec<String> {
    checks(v)
        .iter()
        .filter(|c| c["paper_anchor"] == anchor)
        .map(|c| c["status"].as_str().unwrap().to_string())
        .collect()
}

pub fn all_pass(v: &serde_json::Value, anchor: &str) -> bool {
    let s = statuses(v, anchor);
    !s.is_empty() && s.iter().all(|s| s == "pass")
}

pub fn counts(v: &serde_json::Value) -> Vec<Option<u64>> {
    v["stages"].as_array().unwrap().iter().map(|r| r["compact_count"].as_u64()).collect()
}

/// One golden case: file stem, arguments and expected exit code.
pub struct Case {
    pub name: &'static str,
    pub args: Vec<String>,
    pub code: i32,
}

fn case(name: &'static str, code: i32, args: &[&str]) -> Case {
    let args = args
        .iter()
        .map(|a| match a.strip_prefix('@') {
            Some(f) => data(f),
            None => a.to_string(),
        })
        .collect();
    Case { name, args, code }
}

/// Small bounds throughout; the stem before `__` names the subcommand.
pub fn golden_cases() -> Vec<Case> {
    vec![
        case("solve-domain", 0, &["solve-domain", "--eq", "@running.eq", "--stages", "3"]),
        case("solve-domain__const", 0, &["solve-domain", "--eq", "@const.eq", "--stages", "2"]),
        case("solve-domain__inline", 0, &["solve-domain", "--eq", "param A = flatbool; X = A * A", "--stages", "1"]),
        case("per-lfp", 0, &["per-lfp", "--eq", "@running.eq", "--rank-bound", "2"]),
        case("per-lfp__const", 0, &["per-lfp", "--eq", "@const.eq"]),
        case("per-lfp__nat", 0, &["per-lfp", "--eq", "@nat.eq", "--nat-bound", "4", "--rank-bound", "2"]),
        case("per-lfp__file_per", 0, &["per-lfp", "--eq", "@perfile.eq", "--rank-bound", "1"]),
        case("dense", 0, &["dense", "--eq", "@running.eq", "--rank-bound", "2"]),
        case(
            "eta-roundtrip",
            0,
            &["eta-roundtrip", "--eq", "@running.eq", "--rank-bound", "2", "--adjunction-rank-bound", "1", "--max-pairs", "1"],
        ),
        case("qcb", 0, &["qcb", "--eq", "@running_qcb.eq", "--rank-bound", "1"]),
        case(
            "qcb__space_files",
            0,
            &["qcb", "--eq", "@running.eq", "--space-files", "A=tests/data/bool.json", "--rank-bound", "1"],
        ),
        case("counterexample", 0, &["counterexample", "--param", "sierpinski", "--nat-bound", "6", "--check-bound", "4"]),
        case("oracle__fun_space", 0, &["oracle", "--suite", "fun-space", "--max-size", "3"]),
        case("oracle__per_preservation", 0, &["oracle", "--suite", "per-preservation", "--max-size", "2"]),
        case("oracle__standard_reps", 0, &["oracle", "--suite", "standard-reps", "--max-size", "3", "--max-sets", "3"]),
        case("oracle__limit_chains", 1, &["oracle", "--suite", "limit-chains", "--max-size", "3", "--chains", "8"]),
        case(
            "independence",
            0,
            &[
                "independence",
                "--eq",
                "@running_qcb.eq",
                "--eq2",
                "@running_qcb2.eq",
                "--iso",
                "A=A2:tt>yes,ff>no",
                "B=B2:bot>lo,top>hi",
                "--rank-bound",
                "1",
            ],
        ),
    ]
}

pub fn golden_path(name: &str) -> PathBuf {
    crate_dir().join("tests/golden").join(format!("{name}.json"))
}

pub fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}
