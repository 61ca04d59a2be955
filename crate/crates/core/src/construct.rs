//! Constructors on bases: sums, products, lifting, finite powers and
//! function spaces of step functions, plus embedding-projection pairs and
//! their functorial action.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::basis::{Basis, BasisError, Kind, LimitData, Tok, DEFAULT_BUDGET};

/// Largest exponent basis accepted by [`fun_basis`].
pub const MAX_EXPONENT: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstructError {
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error("inconsistent union of step sets")]
    InconsistentUnion,
    #[error("not an embedding: {0}")]
    NotAnEmbedding(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SumMode {
    Separated,
    Strict,
    LiftOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProdMode {
    Cartesian,
    Strict,
}

pub fn sum_basis(d: &Basis, e: &Basis, mode: SumMode) -> Basis {
    match mode {
        SumMode::Separated => Basis::new(
            format!("({} + {})", d.name(), e.name()),
            Kind::Sum { parts: vec![d.clone(), e.clone()], strict: false },
        ),
        SumMode::Strict => Basis::new(
            format!("({} (+) {})", d.name(), e.name()),
            Kind::Sum { parts: vec![d.clone(), e.clone()], strict: true },
        ),
        SumMode::LiftOnly => lift(d),
    }
}

pub fn lift(d: &Basis) -> Basis {
    Basis::new(format!("{}_bot", d.name()), Kind::Sum { parts: vec![d.clone()], strict: false })
}

/// Separated sum of any number of summands (lifted disjoint union).
pub fn coprod(name: &str, parts: Vec<Basis>) -> Basis {
    Basis::new(name, Kind::Sum { parts, strict: false })
}

pub fn prod_basis(d: &Basis, e: &Basis, mode: ProdMode) -> Basis {
    let (sym, strict) = match mode {
        ProdMode::Cartesian => ("x", false),
        ProdMode::Strict => ("(x)", true),
    };
    Basis::new(
        format!("({} {sym} {})", d.name(), e.name()),
        Kind::Prod { left: d.clone(), right: e.clone(), strict },
    )
}

pub fn power_basis(d: &Basis, len: usize) -> Basis {
    Basis::new(format!("{}^{len}", d.name()), Kind::Power { base: d.clone(), len })
}

/// Precomputed exponent data of a function space.
#[derive(Debug)]
pub struct FunInfo {
    /// Exponent tokens, ordered so that every element follows the elements below it.
    pub elems: Vec<Tok>,
    /// `lower[i]`: indices of the elements strictly below `elems[i]`.
    pub lower: Vec<Vec<usize>>,
}

impl FunInfo {
    pub fn index_of(&self, t: &Tok) -> Option<usize> {
        self.elems.iter().position(|x| x == t)
    }
}

pub fn fun_basis(d: &Basis, e: &Basis) -> Result<Basis, ConstructError> {
    let mut elems = d
        .finite_tokens(MAX_EXPONENT)
        .ok_or_else(|| BasisError::InfiniteExponent(d.name().to_string()))?;
    let below = |x: &Tok| elems_below(d, x);
    let mut keyed: Vec<(usize, Tok)> = elems.drain(..).map(|x| (below(&x), x)).collect();
    keyed.sort_by_key(|(k, _)| *k);
    let elems: Vec<Tok> = keyed.into_iter().map(|(_, x)| x).collect();
    let lower = (0..elems.len())
        .map(|i| (0..i).filter(|&j| d.leq(&elems[j], &elems[i])).collect())
        .collect();
    Ok(Basis::new(
        format!("[{} -> {}]", d.name(), e.name()),
        Kind::Fun { dom: d.clone(), cod: e.clone(), info: Arc::new(FunInfo { elems, lower }) },
    ))
}

fn elems_below(d: &Basis, x: &Tok) -> usize {
    d.down_set(x).len()
}

// ---------------------------------------------------------------------------
// Step sets

/// `⊔{q : (p,q) ∈ s, p ⊑ x}`.
pub fn apply(dom: &Basis, cod: &Basis, s: &[(Tok, Tok)], x: &Tok) -> Tok {
    cod.lub(s.iter().filter(|(p, _)| dom.leq(p, x)).map(|(_, q)| q))
        .expect("step set fired an inconsistent family")
}

/// Like [`apply`] but reports inconsistency instead of panicking.
pub fn try_apply(dom: &Basis, cod: &Basis, s: &[(Tok, Tok)], x: &Tok) -> Option<Tok> {
    cod.lub(s.iter().filter(|(p, _)| dom.leq(p, x)).map(|(_, q)| q))
}

pub fn steps_leq(dom: &Basis, cod: &Basis, s: &[(Tok, Tok)], t: &[(Tok, Tok)]) -> bool {
    s.iter().all(|(p, q)| cod.leq(q, &apply(dom, cod, t, p)))
}

/// Closure of the premises under existing pairwise joins.
pub fn premise_closure(dom: &Basis, s: &[(Tok, Tok)]) -> Vec<Tok> {
    let mut ps: Vec<Tok> = s.iter().map(|(p, _)| p.clone()).collect();
    ps.sort();
    ps.dedup();
    let mut i = 0;
    while i < ps.len() {
        let mut j = 0;
        while j < i {
            if let Some(m) = dom.join(&ps[i], &ps[j]) {
                if !ps.contains(&m) {
                    ps.push(m);
                }
            }
            j += 1;
        }
        i += 1;
    }
    ps
}

/// Consistency of a finite family of step functions: at every join of
/// premises the fired values must be consistent.
pub fn steps_consistent(dom: &Basis, cod: &Basis, s: &[(Tok, Tok)]) -> bool {
    premise_closure(dom, s).iter().all(|m| try_apply(dom, cod, s, m).is_some())
}

/// The subset formulation of consistency: every subfamily with consistent
/// premises has consistent values. Exponential; kept as an oracle.
pub fn steps_consistent_subsets(dom: &Basis, cod: &Basis, s: &[(Tok, Tok)]) -> bool {
    let n = s.len();
    assert!(n < 20, "subset oracle on a large family");
    (0u32..(1 << n)).all(|mask| {
        let sub: Vec<&(Tok, Tok)> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| &s[i]).collect();
        !dom.cons(sub.iter().map(|(p, _)| p)) || cod.cons(sub.iter().map(|(_, q)| q))
    })
}

/// Normal form of a family of step functions, `None` if it is inconsistent.
pub fn normalize(dom: &Basis, cod: &Basis, s: &[(Tok, Tok)]) -> Option<Tok> {
    let s: Vec<(Tok, Tok)> = s.iter().filter(|(_, q)| !cod.is_bottom(q)).cloned().collect();
    let ps = premise_closure(dom, &s);
    let mut vals = Vec::with_capacity(ps.len());
    for m in &ps {
        vals.push(try_apply(dom, cod, &s, m)?);
    }
    let mut out = Vec::new();
    for (i, m) in ps.iter().enumerate() {
        let lower = cod.lub(
            ps.iter()
                .enumerate()
                .filter(|(j, p)| *j != i && dom.leq(p, m))
                .map(|(j, _)| &vals[j]),
        )?;
        if lower != vals[i] {
            out.push((m.clone(), vals[i].clone()));
        }
    }
    Some(Tok::steps(out))
}

/// Canonical step set of the monotone map `info.elems[i] ↦ vals[i]`.
pub fn canon_from_map(cod: &Basis, info: &FunInfo, vals: &[Tok]) -> Tok {
    let mut out = Vec::new();
    for (i, v) in vals.iter().enumerate() {
        let lower = cod
            .lub(info.lower[i].iter().map(|&j| &vals[j]))
            .expect("monotone map values below a common value");
        if lower != *v {
            out.push((info.elems[i].clone(), v.clone()));
        }
    }
    Tok::steps(out)
}

/// Backtracking enumeration of monotone maps on the exponent, with values
/// drawn from `cands(i)`. `emit` returns false to stop. Returns false when
/// the enumeration was cut short.
pub fn enum_monotone(
    cod: &Basis,
    info: &FunInfo,
    cands: &dyn Fn(usize) -> Vec<Tok>,
    budget: usize,
    emit: &mut dyn FnMut(&[Tok]) -> bool,
) -> bool {
    let n = info.elems.len();
    let cand: Vec<Vec<Tok>> = (0..n).map(cands).collect();
    let mut vals: Vec<Tok> = Vec::with_capacity(n);
    let mut count = 0usize;
    fn go(
        i: usize,
        cod: &Basis,
        info: &FunInfo,
        cand: &[Vec<Tok>],
        vals: &mut Vec<Tok>,
        count: &mut usize,
        budget: usize,
        emit: &mut dyn FnMut(&[Tok]) -> bool,
    ) -> bool {
        if i == info.elems.len() {
            if *count >= budget {
                return false;
            }
            *count += 1;
            return emit(vals);
        }
        for c in &cand[i] {
            if info.lower[i].iter().all(|&j| cod.leq(&vals[j], c)) {
                vals.push(c.clone());
                let ok = go(i + 1, cod, info, cand, vals, count, budget, emit);
                vals.pop();
                if !ok {
                    return false;
                }
            }
        }
        true
    }
    go(0, cod, info, &cand, &mut vals, &mut count, budget, emit)
}

/// The values of a step set at every exponent element.
pub fn table_of(dom: &Basis, cod: &Basis, info: &FunInfo, s: &[(Tok, Tok)]) -> Vec<Tok> {
    info.elems.iter().map(|x| apply(dom, cod, s, x)).collect()
}

/// Split a function-space basis into its parts.
pub fn fun_parts(b: &Basis) -> Option<(&Basis, &Basis, &Arc<FunInfo>)> {
    match b.kind() {
        Kind::Fun { dom, cod, info } => Some((dom, cod, info)),
        _ => None,
    }
}

/// Apply a function-space token to an argument.
pub fn apply_fun(b: &Basis, f: &Tok, x: &Tok) -> Tok {
    let (dom, cod, _) = fun_parts(b).expect("function-space basis");
    apply(dom, cod, f.as_steps().expect("step token"), x)
}

/// The step set of a monotone map given pointwise on the exponent.
pub fn fun_from_fn(b: &Basis, f: &dyn Fn(&Tok) -> Tok) -> Tok {
    let (_, cod, info) = fun_parts(b).expect("function-space basis");
    let vals: Vec<Tok> = info.elems.iter().map(f).collect();
    canon_from_map(cod, info, &vals)
}

/// Step set of the map `info.elems[i] ↦ vals[i]`, `None` unless it is monotone.
pub fn fun_from_values(b: &Basis, vals: &[Tok]) -> Option<Tok> {
    let (_, cod, info) = fun_parts(b)?;
    if vals.len() != info.elems.len() {
        return None;
    }
    for (i, v) in vals.iter().enumerate() {
        if !cod.contains(v) || !info.lower[i].iter().all(|&j| cod.leq(&vals[j], v)) {
            return None;
        }
    }
    Some(canon_from_map(cod, info, vals))
}

// ---------------------------------------------------------------------------
// Embeddings

pub enum EmbKind {
    Identity,
    /// From a one-point basis: everything goes to bottom.
    FromPoint,
    Table(BTreeMap<Tok, Tok>),
    Sum(Vec<Embedding>),
    Prod(Embedding, Embedding),
    Power(Embedding),
    /// `f⁻ → g` on function spaces.
    Exp(Embedding, Embedding),
    /// Applied left to right.
    Compose(Vec<Embedding>),
    /// Stage `n` of a chain into its inductive limit.
    IntoLimit(u32, Arc<LimitData>),
}

pub struct EmbNode {
    pub source: Basis,
    pub target: Basis,
    pub kind: EmbKind,
    memo_fwd: Mutex<HashMap<Tok, Tok>>,
    memo_proj: Mutex<HashMap<Tok, Tok>>,
}

#[derive(Clone)]
pub struct Embedding(pub Arc<EmbNode>);

impl fmt::Debug for Embedding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Embedding({} -> {})", self.0.source.name(), self.0.target.name())
    }
}

impl Embedding {
    pub fn new(source: Basis, target: Basis, kind: EmbKind) -> Embedding {
        Embedding(Arc::new(EmbNode {
            source,
            target,
            kind,
            memo_fwd: Mutex::new(HashMap::new()),
            memo_proj: Mutex::new(HashMap::new()),
        }))
    }
    pub fn identity(b: &Basis) -> Embedding {
        Embedding::new(b.clone(), b.clone(), EmbKind::Identity)
    }
    pub fn from_point(point: &Basis, target: &Basis) -> Embedding {
        Embedding::new(point.clone(), target.clone(), EmbKind::FromPoint)
    }
    pub fn source(&self) -> &Basis {
        &self.0.source
    }
    pub fn target(&self) -> &Basis {
        &self.0.target
    }
    pub fn kind(&self) -> &EmbKind {
        &self.0.kind
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Embedding) -> Embedding {
        Embedding::new(
            self.source().clone(),
            next.target().clone(),
            EmbKind::Compose(vec![self.clone(), next.clone()]),
        )
    }

    fn memoized(&self) -> bool {
        matches!(self.kind(), EmbKind::Exp(..) | EmbKind::Compose(_) | EmbKind::IntoLimit(..))
    }

    pub fn fwd(&self, x: &Tok) -> Tok {
        if !self.memoized() {
            return self.fwd_raw(x);
        }
        if let Some(y) = self.0.memo_fwd.lock().unwrap().get(x) {
            return y.clone();
        }
        let y = self.fwd_raw(x);
        self.0.memo_fwd.lock().unwrap().insert(x.clone(), y.clone());
        y
    }

    pub fn proj(&self, y: &Tok) -> Tok {
        if !self.memoized() {
            return self.proj_raw(y);
        }
        if let Some(x) = self.0.memo_proj.lock().unwrap().get(y) {
            return x.clone();
        }
        let x = self.proj_raw(y);
        self.0.memo_proj.lock().unwrap().insert(y.clone(), x.clone());
        x
    }

    fn fwd_raw(&self, x: &Tok) -> Tok {
        match self.kind() {
            EmbKind::Identity => x.clone(),
            EmbKind::FromPoint => self.target().bottom(),
            EmbKind::Table(m) => m.get(x).cloned().unwrap_or_else(|| self.target().bottom()),
            EmbKind::Sum(parts) => match x {
                Tok::Inj(i, y) => Tok::inj(*i, parts[*i as usize].fwd(y)),
                _ => Tok::Bot,
            },
            EmbKind::Prod(f, g) => {
                let (a, b) = x.as_pair().expect("pair token");
                Tok::pair(f.fwd(a), g.fwd(b))
            }
            EmbKind::Power(f) => match x {
                Tok::Tuple(v) => Tok::tuple(v.iter().map(|y| f.fwd(y)).collect()),
                _ => x.clone(),
            },
            EmbKind::Exp(f, g) => {
                let (tdom, tcod, _) = fun_parts(self.target()).expect("function-space target");
                let s = x.as_steps().expect("step token");
                let pairs: Vec<(Tok, Tok)> = s.iter().map(|(p, q)| (f.fwd(p), g.fwd(q))).collect();
                normalize(tdom, tcod, &pairs).expect("embedding preserves consistency")
            }
            EmbKind::Compose(es) => es.iter().fold(x.clone(), |acc, e| e.fwd(&acc)),
            EmbKind::IntoLimit(n, l) => l.canonical(*n, x),
        }
    }

    fn proj_raw(&self, y: &Tok) -> Tok {
        match self.kind() {
            EmbKind::Identity => y.clone(),
            EmbKind::FromPoint => self.source().bottom(),
            EmbKind::Table(m) => {
                let tgt = self.target();
                self.source()
                    .lub(m.iter().filter(|(_, v)| tgt.leq(v, y)).map(|(k, _)| k))
                    .unwrap_or_else(|| self.source().bottom())
            }
            EmbKind::Sum(parts) => match y {
                Tok::Inj(i, z) => {
                    let part = &parts[*i as usize];
                    let p = part.proj(z);
                    let strict = matches!(self.source().kind(), Kind::Sum { strict: true, .. });
                    if strict && part.source().is_bottom(&p) {
                        Tok::Bot
                    } else {
                        Tok::inj(*i, p)
                    }
                }
                _ => Tok::Bot,
            },
            EmbKind::Prod(f, g) => {
                let (a, b) = y.as_pair().expect("pair token");
                let (pa, pb) = (f.proj(a), g.proj(b));
                let strict = matches!(self.source().kind(), Kind::Prod { strict: true, .. });
                if strict && (f.source().is_bottom(&pa) || g.source().is_bottom(&pb)) {
                    self.source().bottom()
                } else {
                    Tok::pair(pa, pb)
                }
            }
            EmbKind::Power(f) => match y {
                Tok::Tuple(v) => Tok::tuple(v.iter().map(|z| f.proj(z)).collect()),
                _ => y.clone(),
            },
            EmbKind::Exp(f, g) => {
                let (tdom, tcod, _) = fun_parts(self.target()).expect("function-space target");
                let (_, scod, sinfo) = fun_parts(self.source()).expect("function-space source");
                let t = y.as_steps().expect("step token");
                let vals: Vec<Tok> = sinfo
                    .elems
                    .iter()
                    .map(|x| g.proj(&apply(tdom, tcod, t, &f.fwd(x))))
                    .collect();
                canon_from_map(scod, sinfo, &vals)
            }
            EmbKind::Compose(es) => es.iter().rev().fold(y.clone(), |acc, e| e.proj(&acc)),
            EmbKind::IntoLimit(n, l) => l.at_stage(y, *n),
        }
    }
}

/// Check the embedding-projection laws on the first `budget` tokens of
/// source and target.
pub fn verify_embedding(e: &Embedding, budget: usize) -> Result<(), ConstructError> {
    let (src, tgt) = (e.source(), e.target());
    let st = src.tokens(budget).toks;
    let fw: Vec<Tok> = st.iter().map(|x| e.fwd(x)).collect();
    for (x, y) in st.iter().zip(&fw) {
        if !tgt.contains(y) {
            return Err(ConstructError::NotAnEmbedding(format!("fwd({}) not a target token", src.pretty(x))));
        }
        if e.proj(y) != *x {
            return Err(ConstructError::NotAnEmbedding(format!("proj(fwd({})) differs", src.pretty(x))));
        }
    }
    for (i, x) in st.iter().enumerate() {
        for (j, y) in st.iter().enumerate() {
            if src.leq(x, y) != tgt.leq(&fw[i], &fw[j]) {
                return Err(ConstructError::NotAnEmbedding(format!(
                    "order not preserved and reflected at {}, {}",
                    src.pretty(x),
                    src.pretty(y)
                )));
            }
        }
    }
    for q in tgt.tokens(budget).toks {
        let p = e.proj(&q);
        if !tgt.leq(&e.fwd(&p), &q) {
            return Err(ConstructError::NotAnEmbedding(format!("fwd(proj({})) not below", tgt.pretty(&q))));
        }
        let l = src.lub(st.iter().zip(&fw).filter(|(_, y)| tgt.leq(y, &q)).map(|(x, _)| x));
        if l.as_ref() != Some(&p) {
            return Err(ConstructError::NotAnEmbedding(format!(
                "proj({}) is not the lub of the preimages below it",
                tgt.pretty(&q)
            )));
        }
    }
    Ok(())
}

/// Build a table embedding from a token map and verify it.
pub fn table_embedding(src: &Basis, tgt: &Basis, m: BTreeMap<Tok, Tok>) -> Result<Embedding, ConstructError> {
    let e = Embedding::new(src.clone(), tgt.clone(), EmbKind::Table(m));
    verify_embedding(&e, DEFAULT_BUDGET)?;
    Ok(e)
}

pub enum EmbedParts<'a> {
    Sum(&'a Embedding, &'a Embedding, SumMode),
    Prod(&'a Embedding, &'a Embedding, ProdMode),
    /// `id_B → f`.
    ExpFixed(&'a Basis, &'a Embedding),
    /// `f⁻ → g`.
    ExpGeneral(&'a Embedding, &'a Embedding),
}

pub fn embed_map(parts: EmbedParts<'_>) -> Result<Embedding, ConstructError> {
    let budget = DEFAULT_BUDGET;
    match parts {
        EmbedParts::Sum(f, g, mode) => {
            verify_embedding(f, budget)?;
            verify_embedding(g, budget)?;
            let src = sum_basis(f.source(), g.source(), mode);
            let tgt = sum_basis(f.target(), g.target(), mode);
            let kind = match mode {
                SumMode::LiftOnly => EmbKind::Sum(vec![f.clone()]),
                _ => EmbKind::Sum(vec![f.clone(), g.clone()]),
            };
            Ok(Embedding::new(src, tgt, kind))
        }
        EmbedParts::Prod(f, g, mode) => {
            verify_embedding(f, budget)?;
            verify_embedding(g, budget)?;
            let src = prod_basis(f.source(), g.source(), mode);
            let tgt = prod_basis(f.target(), g.target(), mode);
            Ok(Embedding::new(src, tgt, EmbKind::Prod(f.clone(), g.clone())))
        }
        EmbedParts::ExpFixed(b, f) => {
            verify_embedding(f, budget)?;
            let src = fun_basis(b, f.source())?;
            let tgt = fun_basis(b, f.target())?;
            Ok(Embedding::new(src, tgt, EmbKind::Exp(Embedding::identity(b), f.clone())))
        }
        EmbedParts::ExpGeneral(f, g) => {
            verify_embedding(f, budget)?;
            verify_embedding(g, budget)?;
            let src = fun_basis(f.source(), g.source())?;
            let tgt = fun_basis(f.target(), g.target())?;
            Ok(Embedding::new(src, tgt, EmbKind::Exp(f.clone(), g.clone())))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{catalog_basis, check_domain_axioms, mk_finite_basis, one_point, sierpinski};

    fn count(b: &Basis) -> usize {
        b.tokens(10_000).toks.len()
    }

    #[test]
    fn sum_and_product_counts() {
        let o = sierpinski();
        assert_eq!(count(&sum_basis(&o, &o, SumMode::Separated)), 5);
        let s = sum_basis(&o, &o, SumMode::Strict);
        assert_eq!(count(&s), 3);
        assert!(check_domain_axioms(&s, 100).all_pass());
        assert_eq!(count(&lift(&o)), 3);
        assert_eq!(count(&prod_basis(&o, &o, ProdMode::Cartesian)), 4);
        let sp = prod_basis(&o, &o, ProdMode::Strict);
        assert_eq!(count(&sp), 2);
        assert!(check_domain_axioms(&sp, 100).all_pass());
        let p = prod_basis(&o, &o, ProdMode::Cartesian);
        assert_eq!(p.bottom(), Tok::pair(Tok::Atom(0), Tok::Atom(0)));
    }

    #[test]
    fn function_space_of_sierpinski() {
        let o = sierpinski();
        let f = fun_basis(&o, &o).unwrap();
        let ts = f.tokens(100).toks;
        assert_eq!(ts.len(), 3);
        assert!(check_domain_axioms(&f, 100).all_pass());
        for t in &ts {
            assert!(f.leq(&Tok::empty_steps(), t));
        }
        let (bot, top) = (Tok::Atom(0), Tok::Atom(1));
        let konst = [(bot.clone(), top.clone())];
        let ident = [(top.clone(), top.clone())];
        assert_eq!(apply(&o, &o, &konst, &bot), top);
        assert_eq!(apply(&o, &o, &ident, &bot), bot);
        assert_eq!(apply(&o, &o, &ident, &top), top);
    }

    #[test]
    fn inconsistent_steps() {
        let o = sierpinski();
        let vee = catalog_basis("vee").unwrap();
        let s = [(Tok::Atom(0), Tok::Atom(1)), (Tok::Atom(0), Tok::Atom(2))];
        assert!(!steps_consistent(&o, &vee, &s));
        assert!(!steps_consistent_subsets(&o, &vee, &s));
        assert_eq!(normalize(&o, &vee, &s), None);
        let f = fun_basis(&o, &vee).unwrap();
        let a = Tok::steps(vec![s[0].clone()]);
        let b = Tok::steps(vec![s[1].clone()]);
        assert_eq!(f.join(&a, &b), None);
    }

    #[test]
    fn normal_form_drops_entailed_pairs() {
        let o = sierpinski();
        let s = [
            (Tok::Atom(0), Tok::Atom(1)),
            (Tok::Atom(1), Tok::Atom(1)),
            (Tok::Atom(0), Tok::Atom(0)),
        ];
        assert_eq!(normalize(&o, &o, &s), Some(Tok::steps(vec![(Tok::Atom(0), Tok::Atom(1))])));
    }

    #[test]
    fn embed_map_examples() {
        let o = sierpinski();
        let id = Embedding::identity(&o);
        let s = embed_map(EmbedParts::Sum(&id, &id, SumMode::Separated)).unwrap();
        for t in s.source().tokens(100).toks {
            assert_eq!(s.fwd(&t), t);
            assert_eq!(s.proj(&t), t);
        }
        let pt = one_point();
        let f0 = Embedding::from_point(&pt, &o);
        let e = embed_map(EmbedParts::ExpFixed(&o, &f0)).unwrap();
        assert_eq!(e.fwd(&Tok::empty_steps()), Tok::empty_steps());
        verify_embedding(&e, 100).unwrap();
    }

    #[test]
    fn bad_table_is_rejected() {
        let o = sierpinski();
        let three = mk_finite_basis("c3", &["b", "m", "t"], &[("b", "m"), ("m", "t")]).unwrap();
        let m: BTreeMap<Tok, Tok> = [(Tok::Atom(0), Tok::Atom(1)), (Tok::Atom(1), Tok::Atom(1))].into();
        assert!(matches!(table_embedding(&o, &three, m), Err(ConstructError::NotAnEmbedding(_))));
        let m: BTreeMap<Tok, Tok> = [(Tok::Atom(0), Tok::Atom(0)), (Tok::Atom(1), Tok::Atom(2))].into();
        assert!(table_embedding(&o, &three, m).is_ok());
    }
}
