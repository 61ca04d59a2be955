//! One line per acceptance criterion. Criterion 4 asks for equal ranks of
//! related limit elements, which small chains refute; it is reported as FAIL
//! and the test insists the refutation is exactly that and nothing else.

mod common;

use std::time::{Duration, Instant};

use common::*;
use serde_json::Value;

type Res = Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Res {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn report(args: &[&str]) -> Result<Value, String> {
    let out = domania(args);
    if out.code == 2 {
        return Err(format!("{args:?}: {}", out.stderr));
    }
    Ok(json(&out))
}

fn timed(limit: Duration, f: impl FnOnce() -> Res) -> Res {
    let t = Instant::now();
    f()?;
    let el = t.elapsed();
    ensure(el < limit, || format!("took {el:?}, limit {limit:?}"))
}

fn passes(v: &Value, anchor: &str) -> Res {
    ensure(all_pass(v, anchor), || format!("{anchor}: {:?}", statuses(v, anchor)))
}

fn name_has(v: &Value, anchor: &str, text: &str) -> bool {
    checks(v).iter().any(|c| c["paper_anchor"] == anchor && c["name"].as_str().unwrap().contains(text))
}

fn crit1() -> Res {
    timed(Duration::from_secs(5), || {
        let v = report(&["oracle", "--suite", "fun-space", "--max-size", "4"])?;
        passes(&v, "fun-space-oracle")?;
        ensure(name_has(&v, "fun-space-oracle", "25 cases"), || "expected all 25 ordered pairs".into())
    })
}

fn crit2() -> Res {
    let v = report(&["solve-domain", "--eq", &data("running.eq"), "--stages", "3"])?;
    let c = counts(&v);
    ensure(c[..3] == [Some(1), Some(4), Some(11)], || format!("counts {c:?}"))?;
    passes(&v, "domain-axioms")?;
    passes(&v, "chain-coherence")?;
    passes(&v, "fixed-point-iso")?;
    let bound = checks(&v).iter().find(|c| c["paper_anchor"] == "fixed-point-iso").unwrap()["bound"].as_u64();
    ensure(bound == Some(3), || format!("iso checked through {bound:?}"))
}

fn crit3() -> Res {
    timed(Duration::from_secs(60), || {
        let v = report(&["oracle", "--suite", "per-preservation", "--max-size", "3"])?;
        passes(&v, "per-preservation")
    })
}

/// `Ok` when the criterion holds; `Err` carries the reason otherwise.
fn crit4() -> Result<Res, String> {
    let v = report(&["oracle", "--suite", "limit-chains", "--max-size", "3", "--chains", "20"])?;
    passes(&v, "limit-per")?;
    ensure(name_has(&v, "limit-per", "20 cases"), || "expected 20 chains".into())?;
    if all_pass(&v, "limit-rank") {
        return Ok(Ok(()));
    }
    let w = checks(&v).iter().find(|c| c["paper_anchor"] == "limit-rank").unwrap()["witness"].as_str().unwrap_or("").to_string();
    Ok(Err(w))
}

fn crit5() -> Res {
    let v = report(&["dense", "--eq", &data("running.eq"), "--rank-bound", "3"])?;
    ensure(statuses(&v, "delta-retraction").len() == 3, || "expected Delta_1..Delta_3".into())?;
    passes(&v, "delta-retraction")?;
    passes(&v, "dense-links")?;
    passes(&v, "dense-union")
}

fn eta_report() -> Result<Value, String> {
    report(&[
        "eta-roundtrip",
        "--eq",
        &data("running.eq"),
        "--rank-bound",
        "3",
        "--adjunction-rank-bound",
        "2",
        "--max-pairs",
        "2",
    ])
}

fn crit6(v: &Value) -> Res {
    passes(v, "eta-theta-adjunction")?;
    ensure(name_has(v, "eta-theta-adjunction", "at most 2 step pairs"), || "scan scope".into())
}

fn crit7(v: &Value) -> Res {
    ensure(statuses(v, "eta-bar-weak-iso").len() == 4, || "expected four weak-iso checks".into())?;
    passes(v, "eta-bar-weak-iso")
}

fn crit8() -> Res {
    let v = report(&["counterexample", "--param", "sierpinski", "--nat-bound", "8", "--check-bound", "5"])?;
    passes(&v, "nonstabilization-ranks")?;
    ensure(name_has(&v, "nonstabilization-ranks", "n <= 5"), || "rank bound".into())?;
    passes(&v, "nonstabilization-witness")?;
    let p = report(&["per-lfp", "--eq", &data("nat.eq"), "--nat-bound", "8"])?;
    ensure(p["stabilized_at"].is_null(), || format!("stabilized at {}", p["stabilized_at"]))?;
    passes(&p, "nonstabilization-witness")?;
    ensure(name_has(&p, "nonstabilization-witness", "NotStabilizedWitness"), || "probe verdict".into())
}

fn crit9() -> Res {
    for rb in 0..=4 {
        let v = report(&["per-lfp", "--eq", &data("running.eq"), "--rank-bound", &rb.to_string()])?;
        ensure(v["stabilized_at"] == "omega", || format!("rank bound {rb}: {}", v["stabilized_at"]))?;
        passes(&v, "stabilization")?;
    }
    Ok(())
}

fn crit10() -> Res {
    timed(Duration::from_secs(120), || {
        let v = report(&["oracle", "--suite", "standard-reps", "--max-size", "4", "--max-sets", "5"])?;
        passes(&v, "standard-representation")
    })
}

fn crit11() -> Res {
    let v = report(&[
        "independence",
        "--eq",
        &data("running_qcb.eq"),
        "--eq2",
        &data("running_qcb2.eq"),
        "--iso",
        "A=A2:tt>yes,ff>no",
        "B=B2:bot>lo,top>hi",
        "--rank-bound",
        "2",
    ])?;
    for a in ["parameter-isos", "stage-weak-isos", "uniform-families", "independence-matching", "independence-round-trip"] {
        passes(&v, a)?;
    }
    Ok(())
}

fn crit12() -> Res {
    for c in golden_cases() {
        let a: Vec<&str> = c.args.iter().map(String::as_str).collect();
        let (x, y) = (domania(&a), domania(&a));
        ensure(x == y, || format!("{} differs between runs", c.name))?;
        ensure(x.stdout == read(&golden_path(c.name)), || format!("{} differs from its golden file", c.name))?;
    }
    use clap::CommandFactory;
    for sub in domania_cli::Cli::command().get_subcommands() {
        let n = sub.get_name();
        ensure(golden_cases().iter().any(|c| c.name.split("__").next() == Some(n)), || format!("{n} has no golden case"))?;
    }
    Ok(())
}

#[test]
fn acceptance() {
    let eta = eta_report();
    let eta = || eta.clone();
    let mut results: Vec<(u32, Res)> = vec![
        (1, crit1()),
        (2, crit2()),
        (3, crit3()),
        (5, crit5()),
        (6, eta().and_then(|v| crit6(&v))),
        (7, eta().and_then(|v| crit7(&v))),
        (8, crit8()),
        (9, crit9()),
        (10, crit10()),
        (11, crit11()),
        (12, crit12()),
    ];
    let c4 = crit4();
    results.push((4, c4.clone().and_then(|r| r)));
    results.sort_by_key(|r| r.0);
    for (n, r) in &results {
        match r {
            Ok(()) => println!("criterion {n}: pass"),
            Err(e) => println!("criterion {n}: FAIL ({e})"),
        }
    }
    for (n, r) in &results {
        if *n != 4 {
            assert!(r.is_ok(), "criterion {n}: {:?}", r);
        }
    }
    // The per part of criterion 4 must hold; the rank part fails on a chain
    // one -> chain2 -> vee where bot and a are related but of ranks 0 and 1.
    match c4 {
        Err(e) => panic!("criterion 4 per part: {e}"),
        Ok(Ok(())) => panic!("criterion 4 rank part passed; the known counterexample is missing from the scan"),
        Ok(Err(w)) => assert!(w.contains(": rank:") && w.contains("their ranks are"), "unexpected criterion 4 failure: {w}"),
    }
}
