//! Dense parts, the closed family `Δ_n` with its retractions `r_n`, and the
//! dense least fixed point.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::basis::{Basis, Kind, Tok, DEFAULT_BUDGET};
use crate::construct::{self, EmbKind, Embedding};
use crate::functor::{self, functor_emb, Env, FunctorExpr};
use crate::lfp::{limit_tokens_upto, per_chain_extend, ChainOpts, LfpError, Ordinal, PerChain};
use crate::per::{
    apply_functor_per, functor_map, is_equiembedding, rank_of, Flags, Map, MapKind, Per, PerKind, Tri, Verdict,
};

#[derive(Debug, Error)]
pub enum DenseError {
    #[error(transparent)]
    Lfp(#[from] LfpError),
    #[error("functor {0} is trivial")]
    TrivialFunctor(String),
    #[error("parameter {0} is not flagged dense")]
    NonDenseParameter(String),
    #[error("unknown token {0}")]
    UnknownToken(String),
    #[error("retractions start at n = 1")]
    StageZero,
}

impl From<functor::FunctorError> for DenseError {
    fn from(e: functor::FunctorError) -> DenseError {
        DenseError::Lfp(e.into())
    }
}

impl From<crate::per::PerError> for DenseError {
    fn from(e: crate::per::PerError) -> DenseError {
        DenseError::Lfp(e.into())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Extension {
    Yes(Tok),
    No,
    Unknown(usize),
}

/// Whether token enumeration of `b` covers the whole domain it stands for.
fn exhaustive(b: &Basis) -> bool {
    match b.kind() {
        Kind::Finite(d) => !d.truncated,
        Kind::Sum { parts, .. } => parts.iter().all(exhaustive),
        Kind::Prod { left, right, .. } => exhaustive(left) && exhaustive(right),
        Kind::Power { base, .. } => exhaustive(base),
        Kind::Fun { dom, cod, .. } => exhaustive(dom) && exhaustive(cod),
        Kind::Limit(_) => false,
        Kind::Sub { parent, .. } => exhaustive(parent),
    }
}

/// Search the totals above `x`.
pub fn has_total_extension(p: &Per, x: &Tok, bound: usize) -> Result<Extension, DenseError> {
    let b = p.carrier();
    let up = b.up_set(x, bound).map_err(|_| DenseError::UnknownToken(format!("{x:?}")))?;
    if let Some(t) = up.toks.iter().find(|t| p.is_total(t)) {
        return Ok(Extension::Yes(t.clone()));
    }
    if !up.truncated && exhaustive(b) {
        Ok(Extension::No)
    } else {
        Ok(Extension::Unknown(bound))
    }
}

pub struct DensePart {
    pub parent: Per,
    pub per: Per,
    /// Tokens below some enumerated total.
    pub kept: Arc<BTreeSet<Tok>>,
    /// Enumerated tokens whose status is open: not kept, but the search was not exhaustive.
    pub unresolved: usize,
    pub trivial: bool,
}

impl DensePart {
    pub fn keeps(&self, x: &Tok) -> bool {
        self.kept.contains(x)
    }
}

pub fn dense_part(p: &Per, bound: usize) -> DensePart {
    let b = p.carrier();
    let l = b.tokens(bound);
    let totals: Vec<&Tok> = l.toks.iter().filter(|t| p.is_total(t)).collect();
    if totals.is_empty() {
        return DensePart {
            parent: p.clone(),
            per: Per::trivial(),
            kept: Arc::new(BTreeSet::new()),
            unresolved: usize::from(l.truncated || !exhaustive(b)),
            trivial: true,
        };
    }
    let mut kept = BTreeSet::new();
    for t in totals {
        if !kept.contains(t) {
            kept.extend(b.down_set(t));
        }
    }
    let unresolved = if !l.truncated && exhaustive(b) { 0 } else { l.toks.iter().filter(|t| !kept.contains(*t)).count() };
    let kept = Arc::new(kept);
    let k2 = kept.clone();
    let carrier =
        Basis::new(format!("{}^d", b.name()), Kind::Sub { parent: b.clone(), keep: Arc::new(move |t| k2.contains(t)) });
    let pf = p.flags();
    let copy = |t: Tri| if t.is_yes() { Tri::Yes } else { Tri::Unknown };
    let flags = Flags {
        convex: copy(pf.convex),
        local: copy(pf.local),
        complete: copy(pf.complete),
        dense: Tri::Yes,
        admissible_pedigree: copy(pf.admissible_pedigree),
        countably_based: copy(pf.countably_based),
        ..Flags::default()
    };
    let per = Per::new(format!("{}^d", p.name()), carrier, PerKind::Restrict(p.clone()), flags);
    DensePart { parent: p.clone(), per, kept, unresolved, trivial: false }
}

/// Non-triviality by structure, for a functor with non-trivial exponents.
pub fn is_nontrivial(f: &FunctorExpr, env: &Env) -> Result<bool, DenseError> {
    Ok(match f {
        FunctorExpr::Id => false,
        FunctorExpr::Const(a) => env.get(a)?.is_trivial_within(DEFAULT_BUDGET) == Some(false),
        FunctorExpr::Sum(l, r) => is_nontrivial(l, env)? || is_nontrivial(r, env)?,
        FunctorExpr::Prod(l, r) => is_nontrivial(l, env)? && is_nontrivial(r, env)?,
        FunctorExpr::Exp(_, body) => is_nontrivial(body, env)?,
    })
}

/// The family `Δ_n` and the retractions `r_n` on a capped limit `D_ω`.
pub struct DeltaFamily {
    pub chain: Arc<PerChain>,
    memo: Mutex<HashMap<(u32, Tok), bool>>,
}

impl DeltaFamily {
    pub fn new(f: &FunctorExpr, env: &Env, opts: ChainOpts) -> Result<DeltaFamily, DenseError> {
        if !is_nontrivial(f, env)? {
            return Err(DenseError::TrivialFunctor(f.render("X")));
        }
        let chain = per_chain_extend(f, env, Ordinal::OmegaPlus(1), opts)?;
        Ok(DeltaFamily::on_chain(Arc::new(chain)))
    }

    /// On a chain that reaches past ω; the functor must be non-trivial.
    pub fn on_chain(chain: Arc<PerChain>) -> DeltaFamily {
        assert!(chain.limit.is_some(), "the chain must reach ω");
        DeltaFamily { chain, memo: Mutex::new(HashMap::new()) }
    }

    pub fn carrier(&self) -> &Basis {
        &self.chain.limit.as_ref().unwrap().carrier
    }

    fn iso(&self) -> &Arc<functor::FixedPointIso> {
        &self.chain.limit.as_ref().unwrap().iso
    }

    /// Membership of a limit token in `Δ_n`.
    pub fn delta(&self, n: u32, x: &Tok) -> bool {
        if n == 0 {
            return false;
        }
        if let Some(v) = self.memo.lock().unwrap().get(&(n, x.clone())) {
            return *v;
        }
        let iso = self.iso();
        let v = self.delta_f(&self.chain.functor, n - 1, &iso.fwd(x), &iso.fd);
        self.memo.lock().unwrap().insert((n, x.clone()), v);
        v
    }

    fn delta_f(&self, f: &FunctorExpr, n: u32, y: &Tok, b: &Basis) -> bool {
        match (f, b.kind()) {
            (FunctorExpr::Id, _) => self.delta(n, y),
            (FunctorExpr::Const(_), _) => true,
            (FunctorExpr::Sum(l, r), Kind::Sum { parts, .. }) => match y {
                Tok::Bot => true,
                Tok::Inj(i, z) => self.delta_f(if *i == 0 { l } else { r }, n, z, &parts[*i as usize]),
                _ => false,
            },
            (FunctorExpr::Prod(l, r), Kind::Prod { left, right, .. }) => match y.as_pair() {
                Some((a, c)) => self.delta_f(l, n, a, left) && self.delta_f(r, n, c, right),
                None => false,
            },
            (FunctorExpr::Exp(_, body), Kind::Fun { dom, cod, .. }) => dom
                .tokens(DEFAULT_BUDGET)
                .toks
                .iter()
                .all(|t| self.delta_f(body, n, &construct::apply_fun(b, y, t), cod)),
            _ => false,
        }
    }

    fn r0(&self, f: &FunctorExpr, b: &Basis) -> Result<Map, DenseError> {
        let env = &self.chain.env;
        let kind = match (f, b.kind()) {
            (FunctorExpr::Const(_), _) => return Ok(Map::identity(b)),
            (FunctorExpr::Sum(l, r), Kind::Sum { parts, strict }) => {
                let (nl, nr) = (is_nontrivial(l, env)?, is_nontrivial(r, env)?);
                if nl && nr {
                    MapKind::Sum(vec![self.r0(l, &parts[0])?, self.r0(r, &parts[1])?])
                } else {
                    let (s, fs) = if nl { (0u32, l) } else { (1, r) };
                    let part = parts[s as usize].clone();
                    let ms = self.r0(fs, &part)?;
                    let x0 = self.fallback(fs, &part)?;
                    let strict = *strict;
                    let m = Map::from_fn("r0", b, b, move |x| match x {
                        Tok::Bot => Some(Tok::Bot),
                        Tok::Inj(i, y) if *i == s => {
                            let z = ms.apply(y)?;
                            Some(if strict && part.is_bottom(&z) { Tok::Bot } else { Tok::inj(s, z) })
                        }
                        Tok::Inj(..) => Some(Tok::inj(s, x0.clone())),
                        _ => None,
                    });
                    return Ok(m);
                }
            }
            (FunctorExpr::Prod(l, r), Kind::Prod { left, right, .. }) => MapKind::Prod(self.r0(l, left)?, self.r0(r, right)?),
            (FunctorExpr::Exp(_, body), Kind::Fun { dom, cod, .. }) => {
                MapKind::Exp { pre: Map::identity(dom), post: self.r0(body, cod)? }
            }
            _ => return Err(DenseError::TrivialFunctor(f.render("X"))),
        };
        Ok(Map::new("r0", b, b, kind))
    }

    /// The enumeration-least total of `F'(D_0)`, carried into `F'(D_ω)`.
    fn fallback(&self, f: &FunctorExpr, target: &Basis) -> Result<Tok, DenseError> {
        let env = &self.chain.env;
        let d0 = &self.chain.domains.stages[0];
        let src = functor::apply_functor_domain(f, d0, env)?;
        let p = apply_functor_per(f, &self.chain.finite[0], &src, env)?;
        let x = p.totals(DEFAULT_BUDGET).toks.into_iter().next().ok_or_else(|| DenseError::TrivialFunctor(f.render("X")))?;
        let l = self.iso().data().clone();
        let iota = Embedding::new(d0.clone(), self.carrier().clone(), EmbKind::IntoLimit(0, l));
        Ok(functor_emb(f, &iota, &src, target).fwd(&x))
    }

    /// `r_n : D_ω -> D_ω` for `n >= 1`.
    pub fn retraction(&self, n: u32) -> Result<Map, DenseError> {
        if n == 0 {
            return Err(DenseError::StageZero);
        }
        let iso = self.iso();
        let (into, out) = (Map::iso(iso), Map::iso_inv(iso));
        let mut r = into.then(&self.r0(&self.chain.functor, &iso.fd)?).then(&out).renamed("r1");
        for k in 2..=n {
            let fr = functor_map(&self.chain.functor, &r, &iso.fd, &iso.fd);
            r = into.then(&fr).then(&out).renamed(&format!("r{k}"));
        }
        Ok(r)
    }

    /// `x` read as a stage-`n` element, when it lives there and is total.
    pub fn stage_key(&self, n: u32, x: &Tok) -> Option<Tok> {
        let (m, _) = x.as_stage()?;
        if m > n {
            return None;
        }
        let l = self.iso().data();
        self.chain.finite.get(n as usize)?.key(&l.at_stage(x, n))
    }
}

pub fn delta_and_retraction(f: &FunctorExpr, env: &Env, n: u32, opts: ChainOpts) -> Result<(DeltaFamily, Map), DenseError> {
    let fam = DeltaFamily::new(f, env, opts)?;
    let r = fam.retraction(n)?;
    Ok((fam, r))
}

/// Token-level checks of `Δ_n` and `r_n` over all limit tokens below the cap.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeltaCheck {
    pub n: u32,
    pub checked: usize,
    pub delta_size: usize,
    /// `Δ_n` equals the fixed points of `r_n`.
    pub fixed_points: Verdict,
    pub increasing: Verdict,
    /// `Δ_n` meets the ω+1 totals exactly in the stage-n totals.
    pub totals: Verdict,
    pub idempotent: Verdict,
    /// `r_n` sends related ω-totals to related stage-n totals.
    pub equivariant: Verdict,
}

impl DeltaCheck {
    pub fn holds(&self) -> bool {
        [&self.fixed_points, &self.increasing, &self.totals, &self.idempotent, &self.equivariant]
            .iter()
            .all(|v| v.holds())
    }
}

pub fn check_delta(fam: &DeltaFamily, n: u32) -> Result<DeltaCheck, DenseError> {
    let r = fam.retraction(n)?;
    let lp = fam.chain.limit.as_ref().unwrap();
    let b = &lp.carrier;
    let toks = limit_tokens_upto(b, fam.chain.cap(), DEFAULT_BUDGET);
    let (w, w1) = (&lp.beyond[0], &lp.beyond[1]);
    let partial = |v: Verdict| if toks.truncated && v.holds() { Verdict::Unknown(DEFAULT_BUDGET) } else { v };
    let mut fixed = Verdict::Holds;
    let mut incr = Verdict::Holds;
    let mut tot = Verdict::Holds;
    let mut idem = Verdict::Holds;
    let mut size = 0;
    let mut by_class: BTreeMap<Tok, (Tok, Option<Tok>)> = BTreeMap::new();
    let mut equi = Verdict::Holds;
    for x in &toks.toks {
        let d = fam.delta(n, x);
        size += usize::from(d);
        let rx = r.apply(x);
        if fixed.holds() && d != (rx.as_ref() == Some(x)) {
            fixed = Verdict::Fails(format!(
                "{}: in Δ_{n} = {d}, r_{n} gives {}",
                b.pretty(x),
                rx.as_ref().map(|y| b.pretty(y)).unwrap_or_else(|| "nothing".into())
            ));
        }
        if incr.holds() && d && !fam.delta(n + 1, x) {
            incr = Verdict::Fails(format!("{} in Δ_{n} but not in Δ_{}", b.pretty(x), n + 1));
        }
        if tot.holds() && w1.is_total(x) && d != fam.stage_key(n, x).is_some() {
            tot = Verdict::Fails(format!("{} is ω+1-total; in Δ_{n} = {d}", b.pretty(x)));
        }
        if let Some(y) = &rx {
            if idem.holds() && r.apply(y).as_ref() != Some(y) {
                idem = Verdict::Fails(format!("r_{n} moves r_{n}({})", b.pretty(x)));
            }
        }
        if let Some(k) = w.key(x) {
            let rk = rx.as_ref().and_then(|y| fam.stage_key(n, y));
            if rk.is_none() && equi.holds() {
                equi = Verdict::Fails(format!("r_{n}({}) is not {n}-total", b.pretty(x)));
            }
            match by_class.get(&k) {
                Some((x0, k0)) if *k0 != rk && equi.holds() => {
                    equi = Verdict::Fails(format!("{} and {} are related, their images are not", b.pretty(x0), b.pretty(x)));
                }
                Some(_) => {}
                None => {
                    by_class.insert(k, (x.clone(), rk));
                }
            }
        }
    }
    Ok(DeltaCheck {
        n,
        checked: toks.toks.len(),
        delta_size: size,
        fixed_points: partial(fixed),
        increasing: partial(incr),
        totals: partial(tot),
        idempotent: partial(idem),
        equivariant: partial(equi),
    })
}

pub struct DenseLfp {
    pub chain: Arc<PerChain>,
    pub stages: Vec<DensePart>,
    /// Dense parts of the stages `ω+k`.
    pub beyond: Vec<DensePart>,
    /// Inclusions `D_n^d -> D_{n+1}^d` as equiembeddings.
    pub links: Vec<Verdict>,
    pub per: Per,
    /// `(r, number of classes of rank <= r)`.
    pub classes_by_rank: Vec<(u32, usize)>,
    /// Limit tokens below the top stage with no total extension found.
    pub unkept_below_cap: Vec<Tok>,
    /// Every kept limit token lies in some `Δ_n`, `n` at most the cap.
    pub union_claim: Option<Verdict>,
}

/// Largest stage carrier whose inclusion into the next stage gets verified.
const LINK_LIMIT: usize = 2000;

fn link(a: &DensePart, c: &DensePart, e: &Embedding) -> Verdict {
    let (src, tgt) = (a.per.carrier(), c.per.carrier());
    let Some(st) = src.finite_tokens(LINK_LIMIT) else {
        return Verdict::Unknown(LINK_LIMIT);
    };
    if tgt.finite_tokens(LINK_LIMIT).is_none() {
        return Verdict::Unknown(LINK_LIMIT);
    }
    let mut m = BTreeMap::new();
    for x in st {
        let y = if a.trivial { tgt.bottom() } else { e.fwd(&x) };
        if !tgt.contains(&y) {
            return Verdict::Fails(format!("{} leaves the dense part", src.pretty(&x)));
        }
        m.insert(x, y);
    }
    match construct::table_embedding(src, tgt, m) {
        Ok(emb) => is_equiembedding(&emb, &a.per, &c.per, LINK_LIMIT),
        Err(err) => Verdict::Fails(err.to_string()),
    }
}

pub fn dense_lfp(f: &FunctorExpr, env: &Env, upto: Ordinal, rank_bound: u32) -> Result<DenseLfp, DenseError> {
    let mut pedigree = Tri::Yes;
    for a in f.params() {
        let p = env.get(&a)?;
        if !p.flags().dense.is_yes() {
            return Err(DenseError::NonDenseParameter(a));
        }
        pedigree = pedigree.and(p.flags().admissible_pedigree);
    }
    let opts = ChainOpts { cap: rank_bound + 1, ..ChainOpts::default() };
    let chain = Arc::new(per_chain_extend(f, env, upto, opts)?);
    let stages: Vec<DensePart> = chain.finite.iter().map(|p| dense_part(p, DEFAULT_BUDGET)).collect();
    let links = (0..stages.len().saturating_sub(1))
        .map(|n| link(&stages[n], &stages[n + 1], &chain.domains.embs[n]))
        .collect();
    let beyond: Vec<DensePart> = match &chain.limit {
        Some(lp) => lp.beyond.iter().map(|p| dense_part(p, DEFAULT_BUDGET)).collect(),
        None => Vec::new(),
    };
    let top = beyond.first().or(stages.last()).expect("stage 0 exists");
    let mut flags = top.per.flags();
    flags.dense = Tri::Yes;
    flags.admissible_pedigree = pedigree;
    let per = if top.trivial { top.per.clone() } else { top.per.with_flags(flags) };
    let mut classes_by_rank = Vec::new();
    let mut unkept_below_cap = Vec::new();
    let mut union_claim = None;
    if let Some(lp) = &chain.limit {
        let toks = limit_tokens_upto(&lp.carrier, chain.cap(), DEFAULT_BUDGET);
        let w = &lp.beyond[0];
        let mut rank_of_class: BTreeMap<Tok, u32> = BTreeMap::new();
        for x in &toks.toks {
            if let (Some(k), Some(r)) = (w.key(x), rank_of(w, x)) {
                let e = rank_of_class.entry(k).or_insert(r);
                *e = (*e).min(r);
            }
            let tag = x.as_stage().map(|(n, _)| n).unwrap_or(0);
            if tag < chain.cap() && !beyond[0].trivial && !beyond[0].keeps(x) {
                unkept_below_cap.push(x.clone());
            }
        }
        for r in 0..=rank_bound {
            classes_by_rank.push((r, rank_of_class.values().filter(|&&q| q <= r).count()));
        }
        if is_nontrivial(f, env)? {
            let fam = DeltaFamily::on_chain(chain.clone());
            let cap = chain.cap();
            let miss = toks.toks.iter().find(|x| beyond[0].keeps(x) && !(1..=cap).any(|n| fam.delta(n, x)));
            union_claim = Some(match miss {
                Some(x) => Verdict::Fails(format!("{} is in no Δ_n up to {cap}", lp.carrier.pretty(x))),
                None if toks.truncated => Verdict::Unknown(DEFAULT_BUDGET),
                None => Verdict::Holds,
            });
        }
    }
    Ok(DenseLfp { chain, stages, beyond, links, per, classes_by_rank, unkept_below_cap, union_claim })
}

#[cfg(test)]
mod tests;
