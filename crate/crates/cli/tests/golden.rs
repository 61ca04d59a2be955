//! Golden reports for every subcommand. `UPDATE_GOLDEN=1` rewrites them.

mod common;

use std::collections::BTreeSet;

use clap::CommandFactory;
use common::*;
use domania_cli::Cli;

fn args(c: &Case) -> Vec<&str> {
    c.args.iter().map(String::as_str).collect()
}

#[test]
fn reports_match_golden_files() {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let mut stale = Vec::new();
    for c in golden_cases() {
        let out = domania(&args(&c));
        assert_eq!(out.code, c.code, "{}: exit {}\n{}{}", c.name, out.code, out.stdout, out.stderr);
        assert!(out.stderr.is_empty(), "{}: {}", c.name, out.stderr);
        let p = golden_path(c.name);
        if update {
            std::fs::write(&p, &out.stdout).unwrap();
        } else if read(&p) != out.stdout {
            stale.push(c.name);
        }
    }
    assert!(stale.is_empty(), "reports differ from golden files: {stale:?}");
}

#[test]
fn every_subcommand_has_a_golden_case() {
    let covered: BTreeSet<&str> = golden_cases().iter().map(|c| c.name.split("__").next().unwrap()).collect();
    for sub in Cli::command().get_subcommands() {
        assert!(covered.contains(sub.get_name()), "no golden case for {}", sub.get_name());
    }
}

#[test]
fn no_orphan_golden_files() {
    let names: BTreeSet<String> = golden_cases().iter().map(|c| format!("{}.json", c.name)).collect();
    for e in std::fs::read_dir(crate_dir().join("tests/golden")).unwrap() {
        let f = e.unwrap().file_name().into_string().unwrap();
        assert!(names.contains(&f), "golden file {f} has no case");
    }
}

#[test]
fn identical_invocations_are_byte_identical() {
    for c in golden_cases().iter().filter(|c| !c.name.starts_with("oracle__per")) {
        let (a, b) = (domania(&args(c)), domania(&args(c)));
        assert_eq!(a, b, "{}", c.name);
    }
}

#[test]
fn seed_only_reorders_scans() {
    for seed in [0, 1, 7] {
        let r = domania::oracle::limit_chain_oracle(3, 40, seed);
        assert_eq!(r.cases, 80);
        assert!(r.failures.iter().all(|f| f.contains(": rank:")), "seed {seed}: {:?}", r.failures);
    }
}

#[test]
fn anchors_are_traced() {
    let table = read(&crate_dir().join("../../docs/traceability.md"));
    let listed: BTreeSet<&str> = table
        .lines()
        .filter_map(|l| l.strip_prefix("| `"))
        .filter_map(|l| l.split('`').next())
        .collect();
    for a in domania_cli::report::ANCHORS {
        assert!(listed.contains(a), "anchor {a} missing from docs/traceability.md");
    }
    for c in golden_cases() {
        let v: serde_json::Value = serde_json::from_str(&read(&golden_path(c.name))).unwrap();
        for ch in checks(&v) {
            let a = ch["paper_anchor"].as_str().unwrap();
            assert!(domania_cli::report::ANCHORS.contains(&a), "{}: unlisted anchor {a}", c.name);
        }
    }
}

#[test]
fn dot_export() {
    let p = std::env::temp_dir().join(format!("domania-d1-{}.dot", std::process::id()));
    let ps = p.to_str().unwrap();
    let out = domania(&["solve-domain", "--eq", &data("running.eq"), "--stages", "2", "--dot", ps, "--dot-stage", "1"]);
    assert_eq!(out.code, 0);
    let d = read(&p);
    std::fs::remove_file(&p).ok();
    let n = |pat: &str| d.lines().filter(|l| l.starts_with("  n") && l.contains(pat)).count();
    assert_eq!((n("[label="), n(" -> "), n("peripheries=2")), (4, 3, 1), "{d}");
}

#[test]
fn usage_errors_exit_2() {
    let bad: &[&[&str]] = &[
        &["per-lfp", "--eq", "X = (A*A)+X"],
        &["per-lfp", "--eq", "param A = sierpinski; X = [X -> A]"],
        &["solve-domain", "--eq", "X = A +"],
        &["qcb", "--eq", "param A = file(missing.json); X = A"],
        &["independence", "--eq", "@running_qcb.eq", "--eq2", "@running_qcb2.eq", "--iso", "A=A2:tt"],
        &["oracle", "--suite", "nope"],
        &["frobnicate"],
    ];
    for b in bad {
        let a: Vec<String> = b.iter().map(|s| s.strip_prefix('@').map_or(s.to_string(), data)).collect();
        let a: Vec<&str> = a.iter().map(String::as_str).collect();
        let out = domania(&a);
        assert_eq!(out.code, 2, "{b:?}: {}", out.stdout);
        assert!(out.stdout.is_empty() && !out.stderr.is_empty(), "{b:?}");
    }
    assert_eq!(domania(&["--help"]).code, 0);
}
