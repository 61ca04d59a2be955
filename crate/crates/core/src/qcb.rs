//! Finite qcb₀ spaces, pseudobases and their standard representations,
//! strictly positive qcb₀ operations and their fixed points.
//!
//! Spaces are finite, so sequentialisation is the identity and every
//! topology is Alexandrov. Point sets are `u64` bitmasks.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::basis::{mk_finite_basis, Basis, BasisError, Kind, Tok, DEFAULT_BUDGET};
use crate::construct::apply_fun;
use crate::dense::{dense_lfp, DenseError, DenseLfp};
use crate::functor::{Env, FunctorError, FunctorExpr};
use crate::lfp::{limit_tokens_upto, LfpError, Ordinal, PerChain};
use crate::per::{
    apply_functor_per, check_property, uniform_limit_map, weak_iso_check, Flags, Map, MapKind, Per, PerError,
    PerKind, Prop, Tri, Verdict,
};

pub const MAX_POINTS: usize = 20;

/// Token budget for the stage-level weak-iso checks.
const STAGE_BOUND: usize = 5000;

/// Largest pseudobase whose ideals are found by scanning all subfamilies.
const EXHAUSTIVE_IDEALS: usize = 12;

/// Most candidate continuous maps enumerated for a function-space comparison.
const MAP_LIMIT: usize = 100_000;

#[derive(Debug, Error)]
pub enum QcbError {
    #[error("{0} points, at most {MAX_POINTS} supported")]
    TooManyPoints(usize),
    #[error("duplicate point `{0}`")]
    DuplicatePoint(String),
    #[error("unknown point `{0}`")]
    UnknownPoint(String),
    #[error("not a topology: {0}")]
    NotATopology(String),
    #[error("not T0: `{0}` and `{1}` have the same open neighbourhoods")]
    NotT0(String, String),
    #[error("not a pseudobase: {0}")]
    NotAPseudobase(String),
    #[error("unbound space `{0}`")]
    UnboundName(String),
    #[error("parameter `{0}` has {1} = {2}")]
    BadParameterPedigree(String, &'static str, &'static str),
    #[error("not weakly equivalent: {0}")]
    NotWeaklyEquivalent(String),
    #[error(transparent)]
    Dense(#[from] DenseError),
    #[error(transparent)]
    Per(#[from] PerError),
    #[error(transparent)]
    Functor(#[from] FunctorError),
    #[error(transparent)]
    Lfp(#[from] LfpError),
    #[error(transparent)]
    Basis(#[from] BasisError),
}

type Result<T> = std::result::Result<T, QcbError>;

fn bits(m: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |i| m >> i & 1 == 1)
}

// ---------------------------------------------------------------------------
// Finite spaces

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteSpace {
    points: Vec<String>,
    /// Sorted by size, then mask.
    opens: Vec<u64>,
    /// Least open neighbourhood of each point.
    nbhd: Vec<u64>,
}

fn by_size(v: &mut Vec<u64>) {
    v.sort_by_key(|m| (m.count_ones(), *m));
    v.dedup();
}

impl FiniteSpace {
    pub fn new(points: Vec<String>, opens: Vec<u64>) -> Result<FiniteSpace> {
        let n = points.len();
        if n > MAX_POINTS {
            return Err(QcbError::TooManyPoints(n));
        }
        for (i, p) in points.iter().enumerate() {
            if points[..i].contains(p) {
                return Err(QcbError::DuplicatePoint(p.clone()));
            }
        }
        let full = (1u64 << n) - 1;
        let mut opens = opens;
        by_size(&mut opens);
        let s = FiniteSpace { points, opens: Vec::new(), nbhd: Vec::new() };
        if let Some(&m) = opens.iter().find(|&&m| m & !full != 0) {
            return Err(QcbError::NotATopology(format!("open set {m:#b} has bits beyond the points")));
        }
        if !opens.contains(&0) {
            return Err(QcbError::NotATopology("the empty set is not open".into()));
        }
        if !opens.contains(&full) {
            return Err(QcbError::NotATopology("the whole space is not open".into()));
        }
        for &a in &opens {
            for &b in &opens {
                for (c, op) in [(a | b, "union"), (a & b, "intersection")] {
                    if opens.binary_search_by_key(&(c.count_ones(), c), |m| (m.count_ones(), *m)).is_err() {
                        return Err(QcbError::NotATopology(format!(
                            "{op} of {} and {} is not open",
                            s.set_name(a),
                            s.set_name(b)
                        )));
                    }
                }
            }
        }
        let nbhd = (0..n).map(|x| opens.iter().filter(|&&u| u >> x & 1 == 1).fold(full, |a, &u| a & u)).collect();
        Ok(FiniteSpace { points: s.points, opens, nbhd })
    }

    pub fn from_lists(points: &[&str], opens: &[Vec<&str>]) -> Result<FiniteSpace> {
        let names: Vec<String> = points.iter().map(|s| s.to_string()).collect();
        let probe = FiniteSpace { points: names.clone(), opens: Vec::new(), nbhd: Vec::new() };
        let masks = opens.iter().map(|u| probe.mask(u)).collect::<Result<Vec<u64>>>()?;
        FiniteSpace::new(names, masks)
    }

    /// `bot`, `top` with `{top}` open.
    pub fn sierpinski() -> FiniteSpace {
        FiniteSpace::new(vec!["bot".into(), "top".into()], vec![0, 0b10, 0b11]).unwrap()
    }

    pub fn discrete_named(names: &[&str]) -> FiniteSpace {
        let n = names.len();
        let opens = (0..1u64 << n).collect();
        FiniteSpace::new(names.iter().map(|s| s.to_string()).collect(), opens).unwrap()
    }

    pub fn discrete(n: usize) -> FiniteSpace {
        let names: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        FiniteSpace::discrete_named(&refs)
    }

    pub fn indiscrete(n: usize) -> FiniteSpace {
        FiniteSpace::new((0..n).map(|i| i.to_string()).collect(), vec![0, (1u64 << n) - 1]).unwrap()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn full(&self) -> u64 {
        (1u64 << self.len()) - 1
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn opens(&self) -> &[u64] {
        &self.opens
    }

    pub fn nbhd(&self, x: usize) -> u64 {
        self.nbhd[x]
    }

    pub fn is_open(&self, m: u64) -> bool {
        self.opens.contains(&m)
    }

    /// Specialisation order: every open around `x` contains `y`.
    pub fn leq(&self, x: usize, y: usize) -> bool {
        self.nbhd[x] >> y & 1 == 1
    }

    pub fn point(&self, name: &str) -> Result<usize> {
        self.points.iter().position(|p| p == name).ok_or_else(|| QcbError::UnknownPoint(name.to_string()))
    }

    pub fn mask(&self, names: &[&str]) -> Result<u64> {
        names.iter().try_fold(0u64, |m, s| Ok(m | 1 << self.point(s)?))
    }

    pub fn set_name(&self, m: u64) -> String {
        let v: Vec<&str> = bits(m).filter(|&i| i < self.len()).map(|i| self.points[i].as_str()).collect();
        format!("{{{}}}", v.join(","))
    }

    pub fn check_t0(&self) -> Result<()> {
        for x in 0..self.len() {
            for y in x + 1..self.len() {
                if self.nbhd[x] >> y & 1 == 1 && self.nbhd[y] >> x & 1 == 1 {
                    return Err(QcbError::NotT0(self.points[x].clone(), self.points[y].clone()));
                }
            }
        }
        Ok(())
    }

    /// Distinct points have disjoint neighbourhoods.
    pub fn is_hausdorff(&self) -> bool {
        (0..self.len()).all(|x| (x + 1..self.len()).all(|y| self.nbhd[x] & self.nbhd[y] == 0))
    }

    /// The same topology with the points renamed and permuted: point `x`
    /// becomes point `perm[x]` called `names[perm[x]]`.
    pub fn relabeled(&self, names: &[&str], perm: &[usize]) -> Result<FiniteSpace> {
        let m = |u: u64| bits(u).fold(0u64, |a, x| a | 1 << perm[x]);
        FiniteSpace::new(names.iter().map(|s| s.to_string()).collect(), self.opens.iter().map(|&u| m(u)).collect())
    }
}

/// Every T₀ topology on `n` labelled points, by brute force over families of
/// proper nonempty subsets. Meant for `n <= 4`.
pub fn finite_t0_spaces(n: usize) -> Vec<FiniteSpace> {
    let full = (1u64 << n) - 1;
    let proper: Vec<u64> = (1..full).collect();
    let names: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    let mut out = Vec::new();
    for fam in 0..1u64 << proper.len() {
        let mut opens: Vec<u64> = vec![0, full];
        opens.extend(bits(fam).map(|i| proper[i]));
        let closed = opens.iter().all(|&a| opens.iter().all(|&b| opens.contains(&(a | b)) && opens.contains(&(a & b))));
        if !closed {
            continue;
        }
        if let Ok(s) = FiniteSpace::new(names.clone(), opens) {
            if s.check_t0().is_ok() {
                out.push(s);
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Pseudobases

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pseudobase {
    /// Largest sets first; the whole space, when present, comes first.
    sets: Vec<u64>,
}

impl Pseudobase {
    pub fn new(sets: Vec<u64>) -> Pseudobase {
        let mut sets = sets;
        sets.sort_by_key(|m| (std::cmp::Reverse(m.count_ones()), *m));
        sets.dedup();
        Pseudobase { sets }
    }

    pub fn from_lists(x: &FiniteSpace, lists: &[Vec<&str>]) -> Result<Pseudobase> {
        Ok(Pseudobase::new(lists.iter().map(|l| x.mask(l)).collect::<Result<Vec<u64>>>()?))
    }

    /// All nonempty open sets.
    pub fn opens(x: &FiniteSpace) -> Pseudobase {
        Pseudobase::new(x.opens().iter().copied().filter(|&u| u != 0).collect())
    }

    /// The family with the whole space added, closed under nonempty intersections.
    pub fn closure(x: &FiniteSpace, sets: &[u64]) -> Pseudobase {
        let mut s: BTreeSet<u64> = sets.iter().copied().filter(|&m| m != 0).collect();
        s.insert(x.full());
        loop {
            let add: Vec<u64> =
                s.iter().flat_map(|&a| s.iter().map(move |&b| a & b)).filter(|&c| c != 0 && !s.contains(&c)).collect();
            if add.is_empty() {
                break;
            }
            s.extend(add);
        }
        Pseudobase::new(s.into_iter().collect())
    }

    pub fn sets(&self) -> &[u64] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn index(&self, m: u64) -> Option<usize> {
        self.sets.iter().position(|&s| s == m)
    }

    pub fn pretty(&self, x: &FiniteSpace) -> String {
        let v: Vec<String> = self.sets.iter().map(|&m| x.set_name(m)).collect();
        format!("{{{}}}", v.join(", "))
    }
}

/// Checks the pseudobase axioms on a finite space.
///
/// A sequence converging to `x` may visit every point of the least
/// neighbourhood `N(x)` infinitely often, so the convergence clause asks, for
/// every open `U` around `x`, for some `B` with `N(x) ⊆ B ⊆ U`.
pub fn validate_pseudobase(x: &FiniteSpace, p: &Pseudobase) -> Verdict {
    let full = x.full();
    if let Some(&m) = p.sets.iter().find(|&&m| m == 0) {
        return Verdict::Fails(format!("contains the empty set {}", x.set_name(m)));
    }
    if let Some(&m) = p.sets.iter().find(|&&m| m & !full != 0) {
        return Verdict::Fails(format!("set {m:#b} has bits beyond the points"));
    }
    if !p.sets.contains(&full) {
        return Verdict::Fails("does not contain the whole space".into());
    }
    for &a in &p.sets {
        for &b in &p.sets {
            let c = a & b;
            if c != 0 && !p.sets.contains(&c) {
                return Verdict::Fails(format!(
                    "{} ∩ {} = {} is missing",
                    x.set_name(a),
                    x.set_name(b),
                    x.set_name(c)
                ));
            }
        }
    }
    for pt in 0..x.len() {
        let n = x.nbhd(pt);
        for &u in x.opens().iter().filter(|&&u| u >> pt & 1 == 1) {
            if !p.sets.iter().any(|&b| b & n == n && b & !u == 0) {
                return Verdict::Fails(format!(
                    "convergence clause fails at x = {}, U = {}",
                    x.points[pt],
                    x.set_name(u)
                ));
            }
        }
    }
    Verdict::Holds
}

/// Every valid pseudobase of `x` with at most `max_sets` sets.
pub fn pseudobases_upto(x: &FiniteSpace, max_sets: usize) -> Vec<Pseudobase> {
    let full = x.full();
    let others: Vec<u64> = (1..full).collect();
    let mut out = Vec::new();
    let mut pick = Vec::new();
    fn rec(
        i: usize,
        others: &[u64],
        left: usize,
        pick: &mut Vec<u64>,
        x: &FiniteSpace,
        out: &mut Vec<Pseudobase>,
    ) {
        if i == others.len() {
            let mut sets = pick.clone();
            sets.push(x.full());
            let p = Pseudobase::new(sets);
            if validate_pseudobase(x, &p).holds() {
                out.push(p);
            }
            return;
        }
        rec(i + 1, others, left, pick, x, out);
        if left > 0 {
            pick.push(others[i]);
            rec(i + 1, others, left - 1, pick, x, out);
            pick.pop();
        }
    }
    if max_sets > 0 {
        rec(0, &others, max_sets - 1, &mut pick, x, &mut out);
    }
    out
}

/// Ideals of `(P, ⊇)`, as masks over the set indices: nonempty, down-closed
/// and directed. Exhaustive over all subfamilies, so only for small `P`.
pub fn ideals(p: &Pseudobase) -> Vec<u64> {
    let k = p.len();
    assert!(k <= 20, "ideal enumeration over {k} sets");
    let s = &p.sets;
    let mut out = Vec::new();
    for fam in 1..1u64 << k {
        let members: Vec<usize> = bits(fam).collect();
        let down = members.iter().all(|&i| (0..k).all(|j| s[j] & s[i] != s[i] || fam >> j & 1 == 1));
        let directed = members
            .iter()
            .all(|&a| members.iter().all(|&b| members.iter().any(|&c| s[c] & !(s[a] & s[b]) == 0)));
        if down && directed {
            out.push(fam);
        }
    }
    out
}

/// The ideals `{C : C ⊇ B}`, one per set.
pub fn principal_ideals(p: &Pseudobase) -> Vec<u64> {
    let s = &p.sets;
    (0..s.len()).map(|i| (0..s.len()).filter(|&j| s[j] & s[i] == s[i]).fold(0u64, |m, j| m | 1 << j)).collect()
}

// ---------------------------------------------------------------------------
// Standard representations

#[derive(Clone, Debug)]
pub struct StandardRep {
    pub space: FiniteSpace,
    pub pseudobase: Pseudobase,
    /// Atom `j` is the principal ideal of set `j`.
    pub per: Per,
    /// The point the ideal of set `j` converges to.
    pub delta: Vec<Option<usize>>,
    /// `I^x` for each point.
    pub greatest: Vec<Tok>,
    /// Ideals enumerated and tested for convergence.
    pub ideals_checked: usize,
}

impl StandardRep {
    pub fn decode(&self, t: &Tok) -> Option<usize> {
        match t {
            Tok::Atom(j) => self.delta.get(*j as usize).copied().flatten(),
            _ => None,
        }
    }
}

/// `I →_P x`: every member contains `x`, and every open around `x` contains
/// some member containing `x`. For the ideal of `B` this is `x ∈ B ⊆ N(x)`.
fn converges(x: &FiniteSpace, p: &Pseudobase, ideal: u64, pt: usize) -> bool {
    let members: Vec<u64> = bits(ideal).map(|i| p.sets[i]).collect();
    members.iter().all(|&b| b >> pt & 1 == 1)
        && x.opens()
            .iter()
            .filter(|&&u| u >> pt & 1 == 1)
            .all(|&u| members.iter().any(|&b| b >> pt & 1 == 1 && b & !u == 0))
}

pub fn standard_representation(x: &FiniteSpace, p: &Pseudobase) -> Result<StandardRep> {
    x.check_t0()?;
    if let Verdict::Fails(w) = validate_pseudobase(x, p) {
        return Err(QcbError::NotAPseudobase(w));
    }
    let names: Vec<String> = p.sets.iter().map(|&m| x.set_name(m)).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut order = Vec::new();
    for (i, &a) in p.sets.iter().enumerate() {
        for (j, &b) in p.sets.iter().enumerate() {
            if i != j && a & b == b {
                order.push((refs[i], refs[j]));
            }
        }
    }
    let carrier = mk_finite_basis("Idl", &refs, &order)?;
    let k = p.len();
    let all = if k <= EXHAUSTIVE_IDEALS { ideals(p) } else { principal_ideals(p) };
    let mut delta = vec![None; k];
    for &i in &all {
        let pts: Vec<usize> = (0..x.len()).filter(|&pt| converges(x, p, i, pt)).collect();
        if pts.is_empty() {
            continue;
        }
        // A finite ideal is principal; its least member is its lub.
        let lub = bits(i).min_by_key(|&j| p.sets[j].count_ones()).expect("nonempty");
        delta[lub] = Some(pts[0]);
    }
    let classes: Vec<Vec<Tok>> = (0..x.len())
        .map(|pt| (0..k).filter(|&j| delta[j] == Some(pt)).map(|j| Tok::Atom(j as u32)).collect())
        .collect();
    let greatest = (0..x.len())
        .map(|pt| {
            let m = p.sets.iter().filter(|&&b| b >> pt & 1 == 1).fold(x.full(), |a, &b| a & b);
            Tok::Atom(p.index(m).expect("closed under intersections") as u32)
        })
        .collect();
    let base = Per::classes("Std", &carrier, &classes, Flags::default())?;
    let mut flags = Flags::default();
    for prop in Prop::ALL {
        let t = check_property(&base, prop, DEFAULT_BUDGET).to_tri();
        match prop {
            Prop::WeaklyConvex => flags.weakly_convex = t,
            Prop::Convex => flags.convex = t,
            Prop::Local => flags.local = t,
            Prop::StronglyLocal => flags.strongly_local = t,
            Prop::Complete => flags.complete = t,
            Prop::UpwardsClosed => flags.upwards_closed = t,
            Prop::Dense => flags.dense = t,
        }
    }
    flags.admissible_pedigree = Tri::Yes;
    flags.countably_based = Tri::Yes;
    Ok(StandardRep {
        space: x.clone(),
        pseudobase: p.clone(),
        per: base.with_flags(flags),
        delta,
        greatest,
        ideals_checked: all.len(),
    })
}

/// `{δ[↑p ∩ D^R] : p compact}` and its verdict as a pseudobase.
pub fn recovered_pseudobase(rep: &StandardRep) -> (Pseudobase, Verdict) {
    let b = rep.per.carrier();
    let k = rep.pseudobase.len();
    let fam: Vec<u64> = (0..k as u32)
        .map(|j| {
            (0..k as u32)
                .filter(|&i| b.leq(&Tok::Atom(j), &Tok::Atom(i)))
                .filter_map(|i| rep.decode(&Tok::Atom(i)))
                .fold(0u64, |a, pt| a | 1 << pt)
        })
        .collect();
    let p = Pseudobase::new(fam);
    let v = validate_pseudobase(&rep.space, &p);
    (p, v)
}

/// Least open of the quotient topology containing the point, from the
/// relative Scott topology on the totals.
fn quotient_nbhd(rep: &StandardRep, pt: usize) -> u64 {
    let b = rep.per.carrier();
    let k = rep.pseudobase.len() as u32;
    let mut s = 1u64 << pt;
    loop {
        let mut t = s;
        for j in (0..k).filter(|&j| rep.decode(&Tok::Atom(j)).is_some_and(|q| s >> q & 1 == 1)) {
            for i in 0..k {
                if b.leq(&Tok::Atom(j), &Tok::Atom(i)) {
                    if let Some(q) = rep.decode(&Tok::Atom(i)) {
                        t |= 1 << q;
                    }
                }
            }
        }
        if t == s {
            return s;
        }
        s = t;
    }
}

#[derive(Clone, Debug)]
pub struct RepCheck {
    pub convex: Verdict,
    pub local: Verdict,
    pub complete: Verdict,
    pub quotient: Verdict,
    pub greatest: Verdict,
    pub recovered: Verdict,
}

impl RepCheck {
    pub fn holds(&self) -> bool {
        [&self.convex, &self.local, &self.complete, &self.quotient, &self.greatest, &self.recovered]
            .iter()
            .all(|v| v.holds())
    }

    pub fn first_failure(&self) -> Option<String> {
        let named = [
            ("convex", &self.convex),
            ("local", &self.local),
            ("complete", &self.complete),
            ("quotient", &self.quotient),
            ("greatest", &self.greatest),
            ("recovered", &self.recovered),
        ];
        named.iter().find(|(_, v)| !v.holds()).map(|(n, v)| format!("{n}: {v:?}"))
    }
}

pub fn check_standard_rep(rep: &StandardRep) -> RepCheck {
    let x = &rep.space;
    let per = &rep.per;
    let b = per.carrier();
    let mut quotient = Verdict::Holds;
    for pt in 0..x.len() {
        if !rep.delta.contains(&Some(pt)) {
            quotient = Verdict::Fails(format!("{} has no representative", x.points[pt]));
            break;
        }
        let q = quotient_nbhd(rep, pt);
        if q != x.nbhd(pt) {
            quotient = Verdict::Fails(format!(
                "least quotient open around {} is {}, not {}",
                x.points[pt],
                x.set_name(q),
                x.set_name(x.nbhd(pt))
            ));
            break;
        }
    }
    let mut greatest = Verdict::Holds;
    'pts: for pt in 0..x.len() {
        let g = &rep.greatest[pt];
        if rep.decode(g) != Some(pt) {
            greatest = Verdict::Fails(format!("I^{} does not converge to it", x.points[pt]));
            break;
        }
        let reps: Vec<Tok> =
            (0..rep.pseudobase.len() as u32).map(Tok::Atom).filter(|t| rep.decode(t) == Some(pt)).collect();
        for r in &reps {
            if !per.related(g, r) || !b.leq(r, g) {
                greatest = Verdict::Fails(format!("I^{} is not above {}", x.points[pt], b.pretty(r)));
                break 'pts;
            }
        }
        if b.lub(reps.iter()).as_ref() != Some(g) {
            greatest = Verdict::Fails(format!("I^{} is not the lub of its class", x.points[pt]));
            break;
        }
    }
    RepCheck {
        convex: check_property(per, Prop::Convex, DEFAULT_BUDGET),
        local: check_property(per, Prop::Local, DEFAULT_BUDGET),
        complete: check_property(per, Prop::Complete, DEFAULT_BUDGET),
        quotient,
        greatest,
        recovered: recovered_pseudobase(rep).1,
    }
}

#[derive(Clone, Debug, Default)]
pub struct CorpusReport {
    pub spaces: usize,
    pub pseudobases: usize,
    pub failures: Vec<String>,
}

/// Standard representations of every T₀ space with at most `max_points`
/// points and every pseudobase on it with at most `max_sets` sets.
pub fn standard_corpus(max_points: usize, max_sets: usize) -> CorpusReport {
    let mut r = CorpusReport::default();
    for n in 1..=max_points {
        for x in finite_t0_spaces(n) {
            r.spaces += 1;
            for p in pseudobases_upto(&x, max_sets) {
                r.pseudobases += 1;
                match standard_representation(&x, &p) {
                    Ok(rep) => {
                        if let Some(w) = check_standard_rep(&rep).first_failure() {
                            r.failures.push(format!("{} on opens {:?}: {w}", p.pretty(&x), x.opens()));
                        }
                    }
                    Err(e) => r.failures.push(format!("{}: {e}", p.pretty(&x))),
                }
            }
        }
    }
    r
}

// ---------------------------------------------------------------------------
// Quotient spaces of pers on finite carriers

/// `Q(P)` of a per on a finite carrier: its classes with the specialisation
/// order of the quotient of the relative Scott topology on the totals.
#[derive(Clone, Debug)]
pub struct Quotient {
    /// Class keys.
    pub keys: Vec<Tok>,
    /// Members of each class.
    pub members: Vec<Vec<Tok>>,
    /// `leq[c][d]`: every quotient open containing `c` contains `d`.
    pub leq: Vec<Vec<bool>>,
}

impl Quotient {
    pub fn of(p: &Per, budget: usize) -> Option<Quotient> {
        let b = p.carrier();
        let toks = b.finite_tokens(budget)?;
        let mut index: BTreeMap<Tok, usize> = BTreeMap::new();
        let mut keys = Vec::new();
        let mut members: Vec<Vec<Tok>> = Vec::new();
        let mut cls = Vec::new();
        for t in toks.iter().filter(|t| p.is_total(t)) {
            let k = p.key(t)?;
            let c = *index.entry(k.clone()).or_insert_with(|| {
                keys.push(k);
                members.push(Vec::new());
                members.len() - 1
            });
            members[c].push(t.clone());
            cls.push((t.clone(), c));
        }
        let n = keys.len();
        let mut above = vec![vec![false; n]; n];
        for (s, c) in &cls {
            for (t, d) in &cls {
                if b.leq(s, t) {
                    above[*c][*d] = true;
                }
            }
        }
        let mut leq = vec![vec![false; n]; n];
        for c in 0..n {
            let mut s = vec![false; n];
            s[c] = true;
            let mut stack = vec![c];
            while let Some(a) = stack.pop() {
                for d in 0..n {
                    if above[a][d] && !s[d] {
                        s[d] = true;
                        stack.push(d);
                    }
                }
            }
            leq[c] = s;
        }
        Some(Quotient { keys, members, leq })
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn class_of(&self, p: &Per, t: &Tok) -> Option<usize> {
        let k = p.key(t)?;
        self.keys.iter().position(|c| *c == k)
    }

    pub fn is_hausdorff(&self) -> bool {
        let n = self.len();
        (0..n).all(|a| (a + 1..n).all(|b| (0..n).all(|c| !(self.leq[a][c] && self.leq[b][c]))))
    }
}

/// The continuous maps between the finite spaces behind two quotients, as
/// value vectors; `None` past [`MAP_LIMIT`] candidates.
fn continuous_maps(a: &Quotient, b: &Quotient) -> Option<Vec<Vec<usize>>> {
    let total = (b.len() as u128).checked_pow(a.len() as u32)?;
    if total > MAP_LIMIT as u128 {
        return None;
    }
    let mut out = Vec::new();
    let mut v = vec![0usize; a.len()];
    fn rec(i: usize, v: &mut Vec<usize>, a: &Quotient, b: &Quotient, out: &mut Vec<Vec<usize>>) {
        if i == v.len() {
            out.push(v.clone());
            return;
        }
        for y in 0..b.len() {
            if (0..i).all(|j| (!a.leq[j][i] || b.leq[v[j]][y]) && (!a.leq[i][j] || b.leq[y][v[j]])) {
                v[i] = y;
                rec(i + 1, v, a, b, out);
            }
        }
    }
    rec(0, &mut v, a, b, &mut out);
    Some(out)
}

/// Compares `Q(P)` with a directly built space through a class decoding.
fn compare(
    q: &Quotient,
    points: usize,
    decode: &dyn Fn(usize) -> std::result::Result<usize, String>,
    leq: &dyn Fn(usize, usize) -> bool,
) -> Verdict {
    let mut img = vec![None; points];
    let mut at = Vec::new();
    for c in 0..q.len() {
        let y = match decode(c) {
            Ok(y) => y,
            Err(w) => return Verdict::Fails(w),
        };
        if let Some(d) = img[y] {
            return Verdict::Fails(format!("classes {d} and {c} decode to the same point"));
        }
        img[y] = Some(c);
        at.push(y);
    }
    if let Some(y) = img.iter().position(Option::is_none) {
        return Verdict::Fails(format!("point {y} has no class"));
    }
    for c in 0..q.len() {
        for d in 0..q.len() {
            if q.leq[c][d] != leq(at[c], at[d]) {
                return Verdict::Fails(format!("order differs between classes {c} and {d}"));
            }
        }
    }
    Verdict::Holds
}

/// Checks `Q(P)` against `⊎`, `×` or the continuous-function space of the
/// quotients of the components, for a per built by a sum, product or
/// function-space constructor on a finite carrier.
pub fn qcb1_check(p: &Per, budget: usize) -> Verdict {
    let Some(q) = Quotient::of(p, budget) else {
        return Verdict::Unknown(budget);
    };
    let sub = |c: &Per| Quotient::of(c, budget);
    match p.kind() {
        PerKind::Sum(parts) => {
            let Some(qs) = parts.iter().map(sub).collect::<Option<Vec<Quotient>>>() else {
                return Verdict::Unknown(budget);
            };
            let mut offs = Vec::new();
            let mut total = 0;
            for c in &qs {
                offs.push(total);
                total += c.len();
            }
            let side = |y: usize| offs.iter().rposition(|&o| o <= y).unwrap();
            compare(
                &q,
                total,
                &|c| {
                    let Some((i, y)) = q.members[c][0].as_inj() else {
                        return Err(format!("class {c} is not an injection"));
                    };
                    let i = i as usize;
                    qs[i].class_of(&parts[i], y).map(|k| offs[i] + k).ok_or(format!("class {c} undecodable"))
                },
                &|a, b| {
                    let (i, j) = (side(a), side(b));
                    i == j && qs[i].leq[a - offs[i]][b - offs[j]]
                },
            )
        }
        PerKind::Prod(l, r) => {
            let (Some(ql), Some(qr)) = (sub(l), sub(r)) else {
                return Verdict::Unknown(budget);
            };
            let w = qr.len();
            compare(
                &q,
                ql.len() * w,
                &|c| {
                    let (a, b) = q.members[c][0].as_pair().ok_or(format!("class {c} is not a pair"))?;
                    match (ql.class_of(l, a), qr.class_of(r, b)) {
                        (Some(i), Some(j)) => Ok(i * w + j),
                        _ => Err(format!("class {c} undecodable")),
                    }
                },
                &|a, b| ql.leq[a / w][b / w] && qr.leq[a % w][b % w],
            )
        }
        PerKind::Fun(pb, pc) => {
            let (Some(qb), Some(qc)) = (sub(pb), sub(pc)) else {
                return Verdict::Unknown(budget);
            };
            let Some(maps) = continuous_maps(&qb, &qc) else {
                return Verdict::Unknown(MAP_LIMIT);
            };
            let carrier = p.carrier().clone();
            compare(
                &q,
                maps.len(),
                &|c| {
                    let f = &q.members[c][0];
                    let mut v = Vec::new();
                    for (i, xs) in qb.members.iter().enumerate() {
                        let mut val = None;
                        for x in xs {
                            let k = qc.class_of(pc, &apply_fun(&carrier, f, x));
                            if k.is_none() || (val.is_some() && val != k) {
                                return Err(format!("class {c} is not equivariant at class {i}"));
                            }
                            val = k;
                        }
                        v.push(val.unwrap());
                    }
                    maps.iter().position(|m| *m == v).ok_or(format!("class {c} decodes to a discontinuous map"))
                },
                &|a, b| (0..qb.len()).all(|i| qc.leq[maps[a][i]][maps[b][i]]),
            )
        }
        _ => Verdict::Holds,
    }
}

// ---------------------------------------------------------------------------
// qcb₀ operations and their functorial representations

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QcbOpExpr {
    Id,
    ConstSpace(String),
    DisjointUnion(Box<QcbOpExpr>, Box<QcbOpExpr>),
    SeqProd(Box<QcbOpExpr>, Box<QcbOpExpr>),
    /// Exponentiation by a fixed parameter space.
    SeqExp(String, Box<QcbOpExpr>),
}

impl QcbOpExpr {
    pub fn union(a: QcbOpExpr, b: QcbOpExpr) -> QcbOpExpr {
        QcbOpExpr::DisjointUnion(Box::new(a), Box::new(b))
    }
    pub fn prod(a: QcbOpExpr, b: QcbOpExpr) -> QcbOpExpr {
        QcbOpExpr::SeqProd(Box::new(a), Box::new(b))
    }
    pub fn exp(b: &str, body: QcbOpExpr) -> QcbOpExpr {
        QcbOpExpr::SeqExp(b.to_string(), Box::new(body))
    }
    pub fn konst(a: &str) -> QcbOpExpr {
        QcbOpExpr::ConstSpace(a.to_string())
    }

    pub fn from_functor(f: &FunctorExpr) -> QcbOpExpr {
        match f {
            FunctorExpr::Id => QcbOpExpr::Id,
            FunctorExpr::Const(a) => QcbOpExpr::konst(a),
            FunctorExpr::Sum(l, r) => QcbOpExpr::union(QcbOpExpr::from_functor(l), QcbOpExpr::from_functor(r)),
            FunctorExpr::Prod(l, r) => QcbOpExpr::prod(QcbOpExpr::from_functor(l), QcbOpExpr::from_functor(r)),
            FunctorExpr::Exp(b, body) => QcbOpExpr::exp(b, QcbOpExpr::from_functor(body)),
        }
    }

    /// The syntactic translation `⊎ ↦ +`, `×ˢ ↦ ×`, `⇒ˢ ↦ →`.
    pub fn to_functor(&self) -> FunctorExpr {
        match self {
            QcbOpExpr::Id => FunctorExpr::Id,
            QcbOpExpr::ConstSpace(a) => FunctorExpr::konst(a),
            QcbOpExpr::DisjointUnion(l, r) => FunctorExpr::sum(l.to_functor(), r.to_functor()),
            QcbOpExpr::SeqProd(l, r) => FunctorExpr::prod(l.to_functor(), r.to_functor()),
            QcbOpExpr::SeqExp(b, body) => FunctorExpr::exp(b, body.to_functor()),
        }
    }

    pub fn params(&self) -> Vec<String> {
        self.to_functor().params()
    }
}

impl fmt::Display for QcbOpExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QcbOpExpr::Id => f.write_str("X"),
            QcbOpExpr::ConstSpace(a) => f.write_str(a),
            QcbOpExpr::DisjointUnion(l, r) => write!(f, "({l} ⊎ {r})"),
            QcbOpExpr::SeqProd(l, r) => write!(f, "({l} ×ˢ {r})"),
            QcbOpExpr::SeqExp(b, body) => write!(f, "[{b} ⇒ˢ {body}]"),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Binding {
    Space(FiniteSpace, Pseudobase),
    /// A prebuilt representation, trusted by its flags.
    Rep(Per),
}

#[derive(Clone, Debug)]
pub struct Represented {
    pub functor: FunctorExpr,
    pub env: Env,
    /// Standard representations built for the space bindings.
    pub reps: BTreeMap<String, StandardRep>,
}

fn pedigree_ok(name: &str, p: &Per) -> Result<()> {
    let f = p.flags();
    let need = [
        ("countably_based", f.countably_based),
        ("dense", f.dense),
        ("admissible_pedigree", f.admissible_pedigree),
        ("convex", f.convex),
        ("local", f.local),
        ("complete", f.complete),
    ];
    match need.iter().find(|(_, t)| !t.is_yes()) {
        Some((flag, t)) => Err(QcbError::BadParameterPedigree(name.to_string(), flag, t.as_str())),
        None => Ok(()),
    }
}

pub fn functorial_representation(g: &QcbOpExpr, bindings: &BTreeMap<String, Binding>) -> Result<Represented> {
    let mut env = Env::new();
    let mut reps = BTreeMap::new();
    for a in g.params() {
        let per = match bindings.get(&a) {
            None => return Err(QcbError::UnboundName(a)),
            Some(Binding::Space(x, p)) => {
                let rep = standard_representation(x, p)?;
                let per = rep.per.renamed(&a);
                reps.insert(a.clone(), rep);
                per
            }
            Some(Binding::Rep(p)) => p.clone(),
        };
        pedigree_ok(&a, &per)?;
        env = env.with(&a, per);
    }
    Ok(Represented { functor: g.to_functor(), env, reps })
}

// ---------------------------------------------------------------------------
// Fixed points

/// Classes of two pers matched through a map, within a rank bound.
#[derive(Clone, Debug)]
pub struct ClassMatching {
    pub rank_bound: u32,
    pub left_classes: usize,
    pub right_classes: usize,
    pub verdict: Verdict,
}

impl ClassMatching {
    pub fn is_bijection(&self) -> bool {
        self.verdict.holds()
    }
}

/// Matches classes of `xs` under `d` with classes of `ys` under `e` through
/// `f`: well defined, injective and onto.
fn match_classes(
    rank_bound: u32,
    xs: &[Tok],
    ys: &[Tok],
    d: &Per,
    e: &Per,
    f: &dyn Fn(&Tok) -> Option<Tok>,
) -> ClassMatching {
    let mut fwd: BTreeMap<Tok, Tok> = BTreeMap::new();
    let mut back: BTreeMap<Tok, Tok> = BTreeMap::new();
    let mut verdict = Verdict::Holds;
    for x in xs {
        let kx = d.key(x).expect("total");
        let Some(ky) = f(x).filter(|y| e.is_total(y)).and_then(|y| e.key(&y)) else {
            verdict = Verdict::Fails(format!("{} has no total image", d.pretty(x)));
            break;
        };
        if let Some(prev) = fwd.get(&kx) {
            if *prev != ky {
                verdict = Verdict::Fails(format!("class of {} splits", d.pretty(x)));
                break;
            }
            continue;
        }
        if let Some(other) = back.get(&ky) {
            if *other != kx {
                verdict = Verdict::Fails(format!("two classes meet at the image of {}", d.pretty(x)));
                break;
            }
        }
        fwd.insert(kx.clone(), ky.clone());
        back.insert(ky, kx);
    }
    let right: BTreeSet<Tok> = ys.iter().filter_map(|y| e.key(y)).collect();
    if verdict.holds() {
        if let Some(k) = right.iter().find(|k| !back.contains_key(k)) {
            let y = ys.iter().find(|y| e.key(y).as_ref() == Some(k)).unwrap();
            verdict = Verdict::Fails(format!("class of {} is not hit", e.pretty(y)));
        } else if let Some(k) = back.keys().find(|k| !right.contains(k)) {
            verdict = Verdict::Fails(format!("image class {} is beyond the bound", e.carrier().pretty(k)));
        }
    }
    ClassMatching { rank_bound, left_classes: fwd.len(), right_classes: right.len(), verdict }
}

/// Totals of the ω-stage with tag at most the cap and rank at most `rb`.
fn ranked_totals(chain: &PerChain, rb: u32) -> Vec<Tok> {
    let lp = chain.limit.as_ref().expect("chain reaches omega");
    limit_tokens_upto(&lp.carrier, chain.cap(), DEFAULT_BUDGET)
        .toks
        .into_iter()
        .filter(|x| chain.rank(x).is_some_and(|r| r <= rb))
        .collect()
}

pub struct FixedPointReport {
    pub op: QcbOpExpr,
    pub functor: FunctorExpr,
    pub dense: DenseLfp,
    pub classes_by_rank: Vec<(u32, usize)>,
    /// Classes of `D` against classes of `F(D)` through the fixed-point iso.
    pub matching: ClassMatching,
    pub pedigree: Flags,
    /// Componentwise comparisons of `Q` at one unrolling, by node.
    pub qcb1: Vec<(String, Verdict)>,
    /// Hausdorffness of `Q(F(D_1))`, when its carrier is finite.
    pub hausdorff: Option<bool>,
}

impl FixedPointReport {
    pub fn holds(&self) -> bool {
        self.matching.is_bijection() && self.qcb1.iter().all(|(_, v)| !v.fails())
    }
}

fn qcb1_walk(f: &FunctorExpr, p: &Per, out: &mut Vec<(String, Verdict)>) {
    let kids: Vec<(&FunctorExpr, &Per)> = match (f, p.kind()) {
        (FunctorExpr::Sum(l, r), PerKind::Sum(parts)) => vec![(&**l, &parts[0]), (&**r, &parts[1])],
        (FunctorExpr::Prod(l, r), PerKind::Prod(a, b)) => vec![(&**l, a), (&**r, b)],
        (FunctorExpr::Exp(_, body), PerKind::Fun(_, c)) => vec![(&**body, c)],
        _ => return,
    };
    let op = match f {
        FunctorExpr::Sum(..) => "⊎",
        FunctorExpr::Prod(..) => "×ˢ",
        _ => "⇒ˢ",
    };
    out.push((format!("{op} at {f}"), qcb1_check(p, DEFAULT_BUDGET)));
    for (g, q) in kids {
        qcb1_walk(g, q, out);
    }
}

pub fn qcb_fixed_point(g: &QcbOpExpr, bindings: &BTreeMap<String, Binding>, rank_bound: u32) -> Result<FixedPointReport> {
    let rep = functorial_representation(g, bindings)?;
    let f = rep.functor.clone();
    let dense = dense_lfp(&f, &rep.env, Ordinal::OMEGA, rank_bound)?;
    let chain = &dense.chain;
    let lp = chain.limit.as_ref().expect("chain reaches omega");
    let d = chain.omega()?.clone();
    let iso = lp.iso.clone();
    let fd = apply_functor_per(&f, &d, &iso.fd, &rep.env)?;
    let xs = ranked_totals(chain, rank_bound);
    let ys: Vec<Tok> = match iso.fd.finite_tokens(DEFAULT_BUDGET) {
        Some(ts) => ts
            .into_iter()
            .filter(|y| fd.is_total(y))
            .filter(|y| iso.inv(y).and_then(|x| chain.rank(&x)).is_some_and(|r| r <= rank_bound))
            .collect(),
        None => Vec::new(),
    };
    let mut matching = match_classes(rank_bound, &xs, &ys, &d, &fd, &|x| Some(iso.fwd(x)));
    if iso.fd.finite_tokens(DEFAULT_BUDGET).is_none() && matching.verdict.holds() {
        matching.verdict = Verdict::Unknown(DEFAULT_BUDGET);
    }
    let mut qcb1 = Vec::new();
    let mut hausdorff = None;
    if rep.reps.len() == f.params().len() && chain.finite.len() > 2 {
        let unrolled = apply_functor_per(&f, &chain.finite[1], &chain.domains.stages[2], &rep.env)?;
        qcb1_walk(&f, &unrolled, &mut qcb1);
        hausdorff = Quotient::of(&unrolled, DEFAULT_BUDGET).map(|q| q.is_hausdorff());
    }
    Ok(FixedPointReport {
        op: g.clone(),
        functor: f,
        classes_by_rank: dense.classes_by_rank.clone(),
        matching,
        pedigree: dense.per.flags(),
        qcb1,
        hausdorff,
        dense,
    })
}

// ---------------------------------------------------------------------------
// Weak equivalence and independence of the fixed point

/// A weak isomorphism pair between a parameter of `F` and one of `G`.
#[derive(Clone, Debug)]
pub struct ParamIso {
    pub from: String,
    pub to: String,
    pub fwd: Map,
    pub back: Map,
}

impl ParamIso {
    pub fn identity(name: &str, p: &Per) -> ParamIso {
        let id = Map::identity(p.carrier());
        ParamIso { from: name.to_string(), to: name.to_string(), fwd: id.clone(), back: id }
    }

    pub fn reversed(&self) -> ParamIso {
        ParamIso { from: self.to.clone(), to: self.from.clone(), fwd: self.back.clone(), back: self.fwd.clone() }
    }
}

/// The iso pair between standard representations induced by a point bijection
/// `perm` from `a.space` onto `b.space`.
pub fn relabel_iso(a: &StandardRep, b: &StandardRep, perm: &[usize]) -> Result<(Map, Map)> {
    let img = |u: u64| bits(u).fold(0u64, |m, x| m | 1 << perm[x]);
    let mut fwd = BTreeMap::new();
    let mut back = BTreeMap::new();
    for (i, &s) in a.pseudobase.sets().iter().enumerate() {
        let j = b
            .pseudobase
            .index(img(s))
            .ok_or_else(|| QcbError::NotWeaklyEquivalent(format!("{} has no image set", a.space.set_name(s))))?;
        fwd.insert(Tok::Atom(i as u32), Tok::Atom(j as u32));
        back.insert(Tok::Atom(j as u32), Tok::Atom(i as u32));
    }
    if back.len() != b.pseudobase.len() {
        return Err(QcbError::NotWeaklyEquivalent("pseudobases differ in size".into()));
    }
    Ok((
        Map::table("relabel", a.per.carrier(), b.per.carrier(), fwd),
        Map::table("relabel⁻¹", b.per.carrier(), a.per.carrier(), back),
    ))
}

fn iso_for<'a>(isos: &'a [ParamIso], a: &str, b: &str) -> Result<&'a ParamIso> {
    isos.iter()
        .find(|i| i.from == a)
        .filter(|i| i.to == b)
        .ok_or_else(|| QcbError::NotWeaklyEquivalent(format!("no iso from {a} to {b}")))
}

/// `φ^{F,G} : F(D) -> G(E)` for `φ : D -> E`, between the built carriers.
pub fn weak_equivalence_transfer(
    phi: &Map,
    f: &FunctorExpr,
    g: &FunctorExpr,
    isos: &[ParamIso],
    src: &Basis,
    tgt: &Basis,
) -> Result<Map> {
    let mismatch = || QcbError::NotWeaklyEquivalent(format!("{f} and {g} differ in shape"));
    let kind = match (f, g, src.kind(), tgt.kind()) {
        (FunctorExpr::Id, FunctorExpr::Id, _, _) => return Ok(phi.clone()),
        (FunctorExpr::Const(a), FunctorExpr::Const(b), _, _) => return Ok(iso_for(isos, a, b)?.fwd.clone()),
        (FunctorExpr::Sum(l, r), FunctorExpr::Sum(l2, r2), Kind::Sum { parts: sp, .. }, Kind::Sum { parts: tp, .. }) => {
            MapKind::Sum(vec![
                weak_equivalence_transfer(phi, l, l2, isos, &sp[0], &tp[0])?,
                weak_equivalence_transfer(phi, r, r2, isos, &sp[1], &tp[1])?,
            ])
        }
        (
            FunctorExpr::Prod(l, r),
            FunctorExpr::Prod(l2, r2),
            Kind::Prod { left: sl, right: sr, .. },
            Kind::Prod { left: tl, right: tr, .. },
        ) => MapKind::Prod(
            weak_equivalence_transfer(phi, l, l2, isos, sl, tl)?,
            weak_equivalence_transfer(phi, r, r2, isos, sr, tr)?,
        ),
        (
            FunctorExpr::Exp(b, body),
            FunctorExpr::Exp(b2, body2),
            Kind::Fun { cod: sc, .. },
            Kind::Fun { cod: tc, .. },
        ) => MapKind::Exp {
            pre: iso_for(isos, b, b2)?.back.clone(),
            post: weak_equivalence_transfer(phi, body, body2, isos, sc, tc)?,
        },
        _ => return Err(mismatch()),
    };
    Ok(Map::new(format!("{}^FG", phi.name()), src, tgt, kind))
}

fn same_shape(f: &FunctorExpr, g: &FunctorExpr, isos: &[ParamIso]) -> Result<()> {
    match (f, g) {
        (FunctorExpr::Id, FunctorExpr::Id) => Ok(()),
        (FunctorExpr::Const(a), FunctorExpr::Const(b)) => iso_for(isos, a, b).map(|_| ()),
        (FunctorExpr::Sum(l, r), FunctorExpr::Sum(l2, r2)) | (FunctorExpr::Prod(l, r), FunctorExpr::Prod(l2, r2)) => {
            same_shape(l, l2, isos)?;
            same_shape(r, r2, isos)
        }
        (FunctorExpr::Exp(b, body), FunctorExpr::Exp(b2, body2)) => {
            iso_for(isos, b, b2)?;
            same_shape(body, body2, isos)
        }
        _ => Err(QcbError::NotWeaklyEquivalent(format!("{f} and {g} differ in shape"))),
    }
}

pub struct IndependenceReport {
    pub rank_bound: u32,
    /// Parameter isos checked as weak isomorphisms.
    pub params: Vec<(String, Verdict)>,
    /// `(φ_n, χ_n)` as weak isos of stage pers.
    pub stages: Vec<Verdict>,
    /// Uniformity of both families, which makes them commute with the chains.
    pub uniform: Verdict,
    pub matching: ClassMatching,
    /// `χ_ω ∘ φ_ω ≈ id` and `φ_ω ∘ χ_ω ≈ id` on the ranked totals, ranks kept.
    pub round_trip: Verdict,
}

impl IndependenceReport {
    pub fn holds(&self) -> bool {
        self.params.iter().all(|(_, v)| v.holds())
            && self.stages.iter().all(Verdict::holds)
            && self.uniform.holds()
            && self.matching.is_bijection()
            && self.round_trip.holds()
    }
}

fn families(
    f: &FunctorExpr,
    g: &FunctorExpr,
    isos: &[ParamIso],
    ds: &[Basis],
    es: &[Basis],
) -> Result<Vec<Map>> {
    let mut phis = vec![Map::constant(&ds[0], &es[0], es[0].bottom())];
    for n in 0..ds.len() - 1 {
        let next = weak_equivalence_transfer(&phis[n], f, g, isos, &ds[n + 1], &es[n + 1])?;
        phis.push(next);
    }
    Ok(phis)
}

pub fn fixed_point_independence(
    f: &FunctorExpr,
    env_f: &Env,
    g: &FunctorExpr,
    env_g: &Env,
    isos: &[ParamIso],
    rank_bound: u32,
) -> Result<IndependenceReport> {
    same_shape(f, g, isos)?;
    let rev: Vec<ParamIso> = isos.iter().map(ParamIso::reversed).collect();
    let mut params = Vec::new();
    for i in isos {
        let (pa, pb) = (env_f.get(&i.from)?, env_g.get(&i.to)?);
        if !i.fwd.source().ptr_eq(pa.carrier()) || !i.fwd.target().ptr_eq(pb.carrier()) {
            return Err(QcbError::NotWeaklyEquivalent(format!("iso {} -> {} is on other carriers", i.from, i.to)));
        }
        params.push((format!("{} ≅ {}", i.from, i.to), weak_iso_check(&i.fwd, &i.back, pa, pb, STAGE_BOUND)));
    }
    let dl = dense_lfp(f, env_f, Ordinal::OMEGA, rank_bound)?;
    let el = dense_lfp(g, env_g, Ordinal::OMEGA, rank_bound)?;
    let (dc, ec) = (&dl.chain, &el.chain);
    let (ds, es) = (&dc.domains.stages, &ec.domains.stages);
    let phis = families(f, g, isos, ds, es)?;
    let chis = families(g, f, &rev, es, ds)?;
    let stages = (0..ds.len())
        .map(|n| weak_iso_check(&phis[n], &chis[n], &dc.finite[n], &ec.finite[n], STAGE_BOUND))
        .collect();
    let ld = &dc.limit.as_ref().expect("chain reaches omega").carrier;
    let le = &ec.limit.as_ref().expect("chain reaches omega").carrier;
    let lim = |v: &[Map], s: &Basis, t: &Basis| uniform_limit_map(v, s, t, STAGE_BOUND);
    let (phi, chi, uniform) = match (lim(&phis, ld, le), lim(&chis, le, ld)) {
        (Ok(a), Ok(b)) => (Some(a), Some(b), Verdict::Holds),
        (Err(e), _) | (_, Err(e)) => (None, None, Verdict::Fails(e.to_string())),
    };
    let (d, e) = (dc.omega()?, ec.omega()?);
    let xs = ranked_totals(dc, rank_bound);
    let ys = ranked_totals(ec, rank_bound);
    let (matching, round_trip) = match (&phi, &chi) {
        (Some(phi), Some(chi)) => {
            let m = match_classes(rank_bound, &xs, &ys, d, e, &|x| phi.apply(x));
            let mut rt = Verdict::Holds;
            let sides: [(&[Tok], &Map, &Map, &Per, &PerChain, &PerChain); 2] =
                [(&xs, phi, chi, d, dc, ec), (&ys, chi, phi, e, ec, dc)];
            'outer: for (zs, a, b, p, pc, qc) in sides {
                for z in zs {
                    let w = a.apply(z);
                    let back = w.as_ref().and_then(|w| b.apply(w));
                    let ok = back.as_ref().is_some_and(|u| p.related(u, z))
                        && w.as_ref().and_then(|w| qc.rank(w)) == pc.rank(z);
                    if !ok {
                        rt = Verdict::Fails(format!("round trip of {}", p.pretty(z)));
                        break 'outer;
                    }
                }
            }
            (m, rt)
        }
        _ => (
            ClassMatching { rank_bound, left_classes: 0, right_classes: 0, verdict: uniform.clone() },
            uniform.clone(),
        ),
    };
    Ok(IndependenceReport { rank_bound, params, stages, uniform, matching, round_trip })
}

#[cfg(test)]
mod tests;
