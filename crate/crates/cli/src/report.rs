//! The JSON report and the DOT export.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use domania::basis::{Basis, Tok};
use domania::per::{Flags, Per, Verdict};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Unknown,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub paper_anchor: &'static str,
    pub status: Status,
    pub bound: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl Check {
    pub fn new(name: impl Into<String>, anchor: &'static str, bound: u64, v: &Verdict) -> Check {
        let (status, witness) = match v {
            Verdict::Holds => (Status::Pass, None),
            Verdict::Fails(w) => (Status::Fail, Some(w.clone())),
            Verdict::Unknown(n) => (Status::Unknown, Some(format!("no failure among the first {n} tokens"))),
        };
        Check { name: name.into(), paper_anchor: anchor, status, bound, witness }
    }

    pub fn pass(name: impl Into<String>, anchor: &'static str, bound: u64) -> Check {
        Check::new(name, anchor, bound, &Verdict::Holds)
    }

    pub fn fail(name: impl Into<String>, anchor: &'static str, bound: u64, witness: impl Into<String>) -> Check {
        Check::new(name, anchor, bound, &Verdict::Fails(witness.into()))
    }

    pub fn with_witness(mut self, w: impl Into<String>) -> Check {
        self.witness = Some(w.into());
        self
    }
}

/// Stage indices: a number for finite stages, `"omega"` or `"omega+k"` beyond.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Index {
    Fin(u32),
    Named(String),
}

#[derive(Clone, Debug, Serialize)]
pub struct StageRow {
    pub index: Index,
    pub compact_count: Option<usize>,
    pub total_class_count: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Pedigree {
    pub weakly_convex: &'static str,
    pub convex: &'static str,
    pub local: &'static str,
    pub strongly_local: &'static str,
    pub complete: &'static str,
    pub upwards_closed: &'static str,
    pub dense: &'static str,
    pub admissible_pedigree: &'static str,
    pub countably_based: &'static str,
}

impl From<Flags> for Pedigree {
    fn from(f: Flags) -> Pedigree {
        Pedigree {
            weakly_convex: f.weakly_convex.as_str(),
            convex: f.convex.as_str(),
            local: f.local.as_str(),
            strongly_local: f.strongly_local.as_str(),
            complete: f.complete.as_str(),
            upwards_closed: f.upwards_closed.as_str(),
            dense: f.dense.as_str(),
            admissible_pedigree: f.admissible_pedigree.as_str(),
            countably_based: f.countably_based.as_str(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub equation: Option<String>,
    pub mode: &'static str,
    pub stages: Vec<StageRow>,
    pub stabilized_at: Option<Index>,
    pub checks: Vec<Check>,
    pub pedigree: Pedigree,
}

impl Report {
    pub fn new(mode: &'static str, equation: Option<String>) -> Report {
        Report {
            equation,
            mode,
            stages: Vec::new(),
            stabilized_at: None,
            checks: Vec::new(),
            pedigree: Flags::default().into(),
        }
    }

    pub fn failed(&self) -> bool {
        self.checks.iter().any(|c| c.status == Status::Fail)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

/// Every anchor a report may carry; the traceability table lists the same ids.
pub const ANCHORS: &[&str] = &[
    "domain-axioms",
    "chain-coherence",
    "fixed-point-iso",
    "per-chain-equiembeddings",
    "stabilization",
    "nonstabilization-ranks",
    "nonstabilization-witness",
    "delta-retraction",
    "dense-links",
    "dense-union",
    "eta-theta-adjunction",
    "eta-bar-weak-iso",
    "functorial-representation",
    "fixed-point-classes",
    "qcb-constructions",
    "fun-space-oracle",
    "per-preservation",
    "limit-per",
    "limit-rank",
    "standard-representation",
    "parameter-isos",
    "stage-weak-isos",
    "uniform-families",
    "independence-matching",
    "independence-round-trip",
];

/// Hasse diagram of a finite basis, bottom up. With a per, totals are drawn
/// double and carry the index of their class, classes numbered in token order.
pub fn dot(b: &Basis, per: Option<&Per>, budget: usize) -> Option<String> {
    let toks = b.finite_tokens(budget)?;
    let n = toks.len();
    let lt = |i: usize, j: usize| i != j && b.leq(&toks[i], &toks[j]);
    let mut classes: BTreeMap<Tok, usize> = BTreeMap::new();
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", escape(b.name()));
    out.push_str("  rankdir=BT;\n  node [shape=box];\n");
    for (i, t) in toks.iter().enumerate() {
        let mut label = escape(&b.pretty(t));
        let mut extra = "";
        if let Some(k) = per.and_then(|p| p.key(t)) {
            let next = classes.len();
            let c = *classes.entry(k).or_insert(next);
            let _ = write!(label, "\\nclass {c}");
            extra = ", peripheries=2";
        }
        let _ = writeln!(out, "  n{i} [label=\"{label}\"{extra}];");
    }
    for i in 0..n {
        for j in 0..n {
            if lt(i, j) && !(0..n).any(|k| lt(i, k) && lt(k, j)) {
                let _ = writeln!(out, "  n{i} -> n{j};");
            }
        }
    }
    out.push_str("}\n");
    Some(out)
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
