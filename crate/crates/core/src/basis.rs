//! Effective bases of compact elements.
//!
//! A [`Basis`] is a tree of constructors over finite leaves. Tokens are
//! structural values, so two tokens of the same basis are equal exactly when
//! they denote the same compact element. Every query works directly on the
//! token structure; enumeration is only needed by the finite oracles and is
//! always budgeted.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::construct::{self, Embedding, FunInfo};

/// Default budget for token enumerations.
pub const DEFAULT_BUDGET: usize = 200_000;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Tok {
    /// Element `i` of a finite leaf basis.
    Atom(u32),
    /// The adjoined bottom of a sum or lifting.
    Bot,
    Inj(u32, Arc<Tok>),
    Pair(Arc<Tok>, Arc<Tok>),
    /// A normal-form set of step functions, sorted.
    Steps(Arc<[(Tok, Tok)]>),
    Tuple(Arc<[Tok]>),
    /// Element of an inductive limit, tagged with the least stage it lives at.
    Stage(u32, Arc<Tok>),
}

impl Tok {
    pub fn inj(i: u32, t: Tok) -> Tok {
        Tok::Inj(i, Arc::new(t))
    }
    pub fn pair(a: Tok, b: Tok) -> Tok {
        Tok::Pair(Arc::new(a), Arc::new(b))
    }
    pub fn steps(mut v: Vec<(Tok, Tok)>) -> Tok {
        v.sort();
        v.dedup();
        Tok::Steps(v.into())
    }
    pub fn empty_steps() -> Tok {
        Tok::Steps(Vec::new().into())
    }
    pub fn tuple(v: Vec<Tok>) -> Tok {
        Tok::Tuple(v.into())
    }
    pub fn stage(n: u32, t: Tok) -> Tok {
        Tok::Stage(n, Arc::new(t))
    }

    pub fn as_pair(&self) -> Option<(&Tok, &Tok)> {
        match self {
            Tok::Pair(a, b) => Some((a, b)),
            _ => None,
        }
    }
    pub fn as_inj(&self) -> Option<(u32, &Tok)> {
        match self {
            Tok::Inj(i, t) => Some((*i, t)),
            _ => None,
        }
    }
    pub fn as_steps(&self) -> Option<&[(Tok, Tok)]> {
        match self {
            Tok::Steps(s) => Some(s),
            _ => None,
        }
    }
    pub fn as_stage(&self) -> Option<(u32, &Tok)> {
        match self {
            Tok::Stage(n, t) => Some((*n, t)),
            _ => None,
        }
    }

    /// Number of step pairs, counted recursively through the structure.
    pub fn step_count(&self) -> usize {
        match self {
            Tok::Atom(_) | Tok::Bot => 0,
            Tok::Inj(_, t) | Tok::Stage(_, t) => t.step_count(),
            Tok::Pair(a, b) => a.step_count() + b.step_count(),
            Tok::Steps(s) => s.len(),
            Tok::Tuple(v) => v.iter().map(Tok::step_count).sum(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BasisError {
    #[error("empty element list")]
    Empty,
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("duplicate symbol `{0}`")]
    DuplicateSymbol(String),
    #[error("order is not antisymmetric: {0} and {1} lie below each other")]
    NotAntisymmetric(String, String),
    #[error("no least element")]
    NoLeastElement,
    #[error("not consistently complete: {{{0}, {1}}} has upper bounds but no least one")]
    NotConsistentlyComplete(String, String),
    #[error("unknown token {0}")]
    UnknownToken(String),
    #[error("exponent basis {0} is not finite within the enumeration budget")]
    InfiniteExponent(String),
}

/// A finite leaf basis with its order, bottom and join tables.
#[derive(Debug)]
pub struct FiniteData {
    pub names: Vec<String>,
    pub leq: Vec<Vec<bool>>,
    pub bottom: usize,
    pub join: Vec<Vec<Option<usize>>>,
    /// Set for finite stand-ins of infinite bases such as truncated flat naturals.
    pub truncated: bool,
}

/// Stages `D_0 .. D_cap` of an ω-chain together with the connecting embeddings.
#[derive(Debug)]
pub struct LimitData {
    pub stages: Vec<Basis>,
    /// `embs[n] : D_n -> D_{n+1}`.
    pub embs: Vec<Embedding>,
}

pub type KeepFn = dyn Fn(&Tok) -> bool + Send + Sync;

pub enum Kind {
    Finite(FiniteData),
    Sum { parts: Vec<Basis>, strict: bool },
    Prod { left: Basis, right: Basis, strict: bool },
    Power { base: Basis, len: usize },
    Fun { dom: Basis, cod: Basis, info: Arc<FunInfo> },
    Limit(Arc<LimitData>),
    Sub { parent: Basis, keep: Arc<KeepFn> },
}

pub struct BasisNode {
    pub name: String,
    pub kind: Kind,
}

#[derive(Clone)]
pub struct Basis(pub Arc<BasisNode>);

impl fmt::Debug for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Basis({})", self.0.name)
    }
}

/// Result of a budgeted enumeration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Listing {
    pub toks: Vec<Tok>,
    pub truncated: bool,
}

impl LimitData {
    pub fn cap(&self) -> u32 {
        (self.stages.len() - 1) as u32
    }

    /// Move an element of `D_n` to `D_m`, embedding upwards or projecting down.
    pub fn shift(&self, n: u32, x: &Tok, m: u32) -> Tok {
        let mut x = x.clone();
        if n <= m {
            for k in n..m {
                x = self.embs[k as usize].fwd(&x);
            }
        } else {
            for k in (m..n).rev() {
                x = self.embs[k as usize].proj(&x);
            }
        }
        x
    }

    pub fn canonical(&self, n: u32, x: &Tok) -> Tok {
        let mut n = n;
        let mut x = x.clone();
        while n > 0 {
            let e = &self.embs[n as usize - 1];
            let y = e.proj(&x);
            if e.fwd(&y) == x {
                x = y;
                n -= 1;
            } else {
                break;
            }
        }
        Tok::stage(n, x)
    }

    /// The value of a limit token at stage `m` (projection or embedding).
    pub fn at_stage(&self, t: &Tok, m: u32) -> Tok {
        let (n, x) = t.as_stage().expect("limit token");
        self.shift(n, x, m)
    }
}

impl Basis {
    pub fn new(name: impl Into<String>, kind: Kind) -> Basis {
        Basis(Arc::new(BasisNode { name: name.into(), kind }))
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }

    pub fn kind(&self) -> &Kind {
        &self.0.kind
    }

    pub fn ptr_eq(&self, other: &Basis) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub fn bottom(&self) -> Tok {
        match self.kind() {
            Kind::Finite(d) => Tok::Atom(d.bottom as u32),
            Kind::Sum { .. } => Tok::Bot,
            Kind::Prod { left, right, .. } => Tok::pair(left.bottom(), right.bottom()),
            Kind::Power { base, len } => Tok::tuple(vec![base.bottom(); *len]),
            Kind::Fun { .. } => Tok::empty_steps(),
            Kind::Limit(l) => Tok::stage(0, l.stages[0].bottom()),
            Kind::Sub { parent, .. } => parent.bottom(),
        }
    }

    pub fn is_bottom(&self, t: &Tok) -> bool {
        *t == self.bottom()
    }

    pub fn leq(&self, a: &Tok, b: &Tok) -> bool {
        match self.kind() {
            Kind::Finite(d) => match (a, b) {
                (Tok::Atom(i), Tok::Atom(j)) => d.leq[*i as usize][*j as usize],
                _ => false,
            },
            Kind::Sum { parts, .. } => match (a, b) {
                (Tok::Bot, _) => true,
                (Tok::Inj(i, x), Tok::Inj(j, y)) => i == j && parts[*i as usize].leq(x, y),
                _ => false,
            },
            Kind::Prod { left, right, .. } => match (a, b) {
                (Tok::Pair(a0, a1), Tok::Pair(b0, b1)) => left.leq(a0, b0) && right.leq(a1, b1),
                _ => false,
            },
            Kind::Power { base, .. } => match (a, b) {
                (Tok::Tuple(u), Tok::Tuple(v)) => {
                    u.len() == v.len() && u.iter().zip(v.iter()).all(|(x, y)| base.leq(x, y))
                }
                _ => false,
            },
            Kind::Fun { dom, cod, .. } => match (a, b) {
                (Tok::Steps(s), Tok::Steps(t)) => construct::steps_leq(dom, cod, s, t),
                _ => false,
            },
            Kind::Limit(l) => match (a, b) {
                (Tok::Stage(n, x), Tok::Stage(m, y)) => {
                    let k = (*n).max(*m);
                    l.stages[k as usize].leq(&l.shift(*n, x, k), &l.shift(*m, y, k))
                }
                _ => false,
            },
            Kind::Sub { parent, .. } => parent.leq(a, b),
        }
    }

    /// Least upper bound of two tokens, `None` when they are inconsistent.
    pub fn join(&self, a: &Tok, b: &Tok) -> Option<Tok> {
        match self.kind() {
            Kind::Finite(d) => match (a, b) {
                (Tok::Atom(i), Tok::Atom(j)) => {
                    d.join[*i as usize][*j as usize].map(|k| Tok::Atom(k as u32))
                }
                _ => None,
            },
            Kind::Sum { parts, .. } => match (a, b) {
                (Tok::Bot, t) | (t, Tok::Bot) => Some(t.clone()),
                (Tok::Inj(i, x), Tok::Inj(j, y)) if i == j => {
                    parts[*i as usize].join(x, y).map(|z| Tok::inj(*i, z))
                }
                _ => None,
            },
            Kind::Prod { left, right, .. } => {
                let (a0, a1) = a.as_pair()?;
                let (b0, b1) = b.as_pair()?;
                Some(Tok::pair(left.join(a0, b0)?, right.join(a1, b1)?))
            }
            Kind::Power { base, .. } => match (a, b) {
                (Tok::Tuple(u), Tok::Tuple(v)) if u.len() == v.len() => {
                    let mut out = Vec::with_capacity(u.len());
                    for (x, y) in u.iter().zip(v.iter()) {
                        out.push(base.join(x, y)?);
                    }
                    Some(Tok::tuple(out))
                }
                _ => None,
            },
            Kind::Fun { dom, cod, .. } => {
                let (s, t) = (a.as_steps()?, b.as_steps()?);
                let mut all: Vec<(Tok, Tok)> = s.to_vec();
                all.extend(t.iter().cloned());
                construct::normalize(dom, cod, &all)
            }
            Kind::Limit(l) => {
                let (n, x) = a.as_stage()?;
                let (m, y) = b.as_stage()?;
                let k = n.max(m);
                let j = l.stages[k as usize].join(&l.shift(n, x, k), &l.shift(m, y, k))?;
                Some(l.canonical(k, &j))
            }
            Kind::Sub { parent, keep } => {
                let j = parent.join(a, b)?;
                if keep(&j) {
                    Some(j)
                } else {
                    None
                }
            }
        }
    }

    /// Least upper bound of a finite set; the empty set gives bottom.
    pub fn lub<'a, I: IntoIterator<Item = &'a Tok>>(&self, it: I) -> Option<Tok> {
        let mut acc = self.bottom();
        for t in it {
            acc = self.join(&acc, t)?;
        }
        Some(acc)
    }

    pub fn cons<'a, I: IntoIterator<Item = &'a Tok>>(&self, it: I) -> bool {
        self.lub(it).is_some()
    }

    /// Well-sortedness: is `t` a token of this basis?
    pub fn contains(&self, t: &Tok) -> bool {
        match self.kind() {
            Kind::Finite(d) => matches!(t, Tok::Atom(i) if (*i as usize) < d.names.len()),
            Kind::Sum { parts, strict } => match t {
                Tok::Bot => true,
                Tok::Inj(i, x) => {
                    let i = *i as usize;
                    i < parts.len() && parts[i].contains(x) && !(*strict && parts[i].is_bottom(x))
                }
                _ => false,
            },
            Kind::Prod { left, right, strict } => match t {
                Tok::Pair(a, b) => {
                    if !(left.contains(a) && right.contains(b)) {
                        return false;
                    }
                    if *strict {
                        let (ba, bb) = (left.is_bottom(a), right.is_bottom(b));
                        ba == bb
                    } else {
                        true
                    }
                }
                _ => false,
            },
            Kind::Power { base, len } => match t {
                Tok::Tuple(v) => v.len() == *len && v.iter().all(|x| base.contains(x)),
                _ => false,
            },
            Kind::Fun { dom, cod, .. } => match t {
                Tok::Steps(s) => {
                    s.iter().all(|(p, q)| dom.contains(p) && cod.contains(q))
                        && construct::normalize(dom, cod, s).as_ref() == Some(t)
                }
                _ => false,
            },
            Kind::Limit(l) => match t {
                Tok::Stage(n, x) => {
                    *n <= l.cap()
                        && l.stages[*n as usize].contains(x)
                        && l.canonical(*n, x) == *t
                }
                _ => false,
            },
            Kind::Sub { parent, keep } => parent.contains(t) && keep(t),
        }
    }

    /// Enumerate tokens, stopping after `budget` of them.
    pub fn tokens(&self, budget: usize) -> Listing {
        let mut out = Vec::new();
        let truncated = !self.enum_into(budget, &mut out);
        Listing { toks: out, truncated }
    }

    /// All tokens, or `None` when there are more than `budget`.
    pub fn finite_tokens(&self, budget: usize) -> Option<Vec<Tok>> {
        let l = self.tokens(budget);
        if l.truncated {
            None
        } else {
            Some(l.toks)
        }
    }

    // Returns false when the budget ran out.
    fn enum_into(&self, budget: usize, out: &mut Vec<Tok>) -> bool {
        match self.kind() {
            Kind::Finite(d) => {
                for i in 0..d.names.len() {
                    if out.len() >= budget {
                        return false;
                    }
                    out.push(Tok::Atom(i as u32));
                }
                true
            }
            Kind::Sum { parts, strict } => {
                if out.len() >= budget {
                    return false;
                }
                out.push(Tok::Bot);
                for (i, p) in parts.iter().enumerate() {
                    let l = p.tokens(budget);
                    for x in l.toks {
                        if *strict && p.is_bottom(&x) {
                            continue;
                        }
                        if out.len() >= budget {
                            return false;
                        }
                        out.push(Tok::inj(i as u32, x));
                    }
                    if l.truncated {
                        return false;
                    }
                }
                true
            }
            Kind::Prod { left, right, strict } => {
                let l = left.tokens(budget);
                let r = right.tokens(budget);
                if *strict {
                    if out.len() >= budget {
                        return false;
                    }
                    out.push(self.bottom());
                }
                for a in &l.toks {
                    for b in &r.toks {
                        if *strict && (left.is_bottom(a) || right.is_bottom(b)) {
                            continue;
                        }
                        if out.len() >= budget {
                            return false;
                        }
                        out.push(Tok::pair(a.clone(), b.clone()));
                    }
                }
                !(l.truncated || r.truncated)
            }
            Kind::Power { base, len } => {
                let b = base.tokens(budget);
                let mut idx = vec![0usize; *len];
                if b.toks.is_empty() {
                    return true;
                }
                loop {
                    if out.len() >= budget {
                        return false;
                    }
                    out.push(Tok::tuple(idx.iter().map(|&i| b.toks[i].clone()).collect()));
                    let mut k = 0;
                    loop {
                        if k == *len {
                            return !b.truncated;
                        }
                        idx[k] += 1;
                        if idx[k] < b.toks.len() {
                            break;
                        }
                        idx[k] = 0;
                        k += 1;
                    }
                }
            }
            Kind::Fun { cod, info, .. } => {
                let c = cod.tokens(budget);
                let ok = construct::enum_monotone(cod, info, &|_| c.toks.clone(), usize::MAX, &mut |vals| {
                    if out.len() >= budget {
                        return false;
                    }
                    out.push(construct::canon_from_map(cod, info, vals));
                    true
                });
                ok && !c.truncated
            }
            Kind::Limit(l) => {
                for n in 0..l.stages.len() {
                    let st = l.stages[n].tokens(budget);
                    for x in st.toks {
                        if n > 0 {
                            let e = &l.embs[n - 1];
                            if e.fwd(&e.proj(&x)) == x {
                                continue;
                            }
                        }
                        if out.len() >= budget {
                            return false;
                        }
                        out.push(Tok::stage(n as u32, x));
                    }
                    if st.truncated {
                        return false;
                    }
                }
                true
            }
            Kind::Sub { parent, keep } => {
                let l = parent.tokens(budget);
                for x in l.toks {
                    if keep(&x) {
                        out.push(x);
                    }
                }
                !l.truncated
            }
        }
    }

    /// All tokens `q` with `p ⊑ q`, truncated at `budget` enumerated tokens.
    pub fn up_set(&self, p: &Tok, budget: usize) -> Result<Listing, BasisError> {
        if !self.contains(p) {
            return Err(BasisError::UnknownToken(format!("{p:?}")));
        }
        let l = self.tokens(budget);
        Ok(Listing {
            toks: l.toks.into_iter().filter(|q| self.leq(p, q)).collect(),
            truncated: l.truncated,
        })
    }

    /// All tokens below `p`, computed structurally.
    pub fn down_set(&self, p: &Tok) -> Vec<Tok> {
        match self.kind() {
            Kind::Finite(d) => match p {
                Tok::Atom(j) => (0..d.names.len())
                    .filter(|&i| d.leq[i][*j as usize])
                    .map(|i| Tok::Atom(i as u32))
                    .collect(),
                _ => vec![],
            },
            Kind::Sum { parts, strict } => {
                let mut out = vec![Tok::Bot];
                if let Tok::Inj(i, x) = p {
                    let part = &parts[*i as usize];
                    for y in part.down_set(x) {
                        if *strict && part.is_bottom(&y) {
                            continue;
                        }
                        out.push(Tok::inj(*i, y));
                    }
                }
                out
            }
            Kind::Prod { left, right, strict } => {
                let (a, b) = p.as_pair().expect("pair token");
                let (da, db) = (left.down_set(a), right.down_set(b));
                let mut out = Vec::new();
                if *strict {
                    out.push(self.bottom());
                }
                for x in &da {
                    for y in &db {
                        if *strict && (left.is_bottom(x) || right.is_bottom(y)) {
                            continue;
                        }
                        out.push(Tok::pair(x.clone(), y.clone()));
                    }
                }
                out
            }
            Kind::Power { base, .. } => {
                let Tok::Tuple(v) = p else { return vec![] };
                let mut acc: Vec<Vec<Tok>> = vec![vec![]];
                for x in v.iter() {
                    let d = base.down_set(x);
                    let mut next = Vec::new();
                    for pre in &acc {
                        for y in &d {
                            let mut w = pre.clone();
                            w.push(y.clone());
                            next.push(w);
                        }
                    }
                    acc = next;
                }
                acc.into_iter().map(Tok::tuple).collect()
            }
            Kind::Fun { dom, cod, info } => {
                let steps = p.as_steps().expect("step token");
                let bounds = construct::table_of(dom, cod, info, steps);
                let mut out = Vec::new();
                construct::enum_monotone(cod, info, &|i| cod.down_set(&bounds[i]), usize::MAX, &mut |vals| {
                    out.push(construct::canon_from_map(cod, info, vals));
                    true
                });
                out
            }
            Kind::Limit(l) => {
                let (n, x) = p.as_stage().expect("limit token");
                let mut set: BTreeSet<Tok> = BTreeSet::new();
                for y in l.stages[n as usize].down_set(x) {
                    set.insert(l.canonical(n, &y));
                }
                set.into_iter().collect()
            }
            Kind::Sub { parent, keep } => parent.down_set(p).into_iter().filter(|t| keep(t)).collect(),
        }
    }

    /// Whether every token is enumerable within `budget`.
    pub fn is_finite_within(&self, budget: usize) -> bool {
        !self.tokens(budget).truncated
    }

    /// True when some finite leaf is a truncated stand-in for an infinite basis.
    pub fn has_truncated_leaf(&self) -> bool {
        match self.kind() {
            Kind::Finite(d) => d.truncated,
            Kind::Sum { parts, .. } => parts.iter().any(Basis::has_truncated_leaf),
            Kind::Prod { left, right, .. } => left.has_truncated_leaf() || right.has_truncated_leaf(),
            Kind::Power { base, .. } => base.has_truncated_leaf(),
            Kind::Fun { dom, cod, .. } => dom.has_truncated_leaf() || cod.has_truncated_leaf(),
            Kind::Limit(l) => l.stages.iter().any(Basis::has_truncated_leaf),
            Kind::Sub { parent, .. } => parent.has_truncated_leaf(),
        }
    }

    pub fn pretty(&self, t: &Tok) -> String {
        match (self.kind(), t) {
            (Kind::Finite(d), Tok::Atom(i)) => d
                .names
                .get(*i as usize)
                .cloned()
                .unwrap_or_else(|| format!("?{i}")),
            (Kind::Sum { .. }, Tok::Bot) => "bot".into(),
            (Kind::Sum { parts, .. }, Tok::Inj(i, x)) => match parts.get(*i as usize) {
                Some(p) => format!("({i},{})", p.pretty(x)),
                None => format!("({i},?)"),
            },
            (Kind::Prod { left, right, .. }, Tok::Pair(a, b)) => {
                format!("<{},{}>", left.pretty(a), right.pretty(b))
            }
            (Kind::Power { base, .. }, Tok::Tuple(v)) => {
                let inner: Vec<String> = v.iter().map(|x| base.pretty(x)).collect();
                format!("seq({})", inner.join(","))
            }
            (Kind::Fun { dom, cod, .. }, Tok::Steps(s)) => {
                let inner: Vec<String> = s
                    .iter()
                    .map(|(p, q)| format!("[{};{}]", dom.pretty(p), cod.pretty(q)))
                    .collect();
                format!("{{{}}}", inner.join(","))
            }
            (Kind::Limit(l), Tok::Stage(n, x)) => match l.stages.get(*n as usize) {
                Some(b) => format!("s{n}:{}", b.pretty(x)),
                None => format!("s{n}:?"),
            },
            (Kind::Sub { parent, .. }, _) => parent.pretty(t),
            _ => format!("{t:?}"),
        }
    }
}

// ---------------------------------------------------------------------------
// Finite bases

fn closure(n: usize, pairs: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut leq = vec![vec![false; n]; n];
    for (i, row) in leq.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(a, b) in pairs {
        leq[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if leq[i][k] {
                for j in 0..n {
                    if leq[k][j] {
                        leq[i][j] = true;
                    }
                }
            }
        }
    }
    leq
}

fn validate_order(names: &[String], leq: &[Vec<bool>]) -> Result<(usize, Vec<Vec<Option<usize>>>), BasisError> {
    let n = names.len();
    for i in 0..n {
        for j in (i + 1)..n {
            if leq[i][j] && leq[j][i] {
                return Err(BasisError::NotAntisymmetric(names[i].clone(), names[j].clone()));
            }
        }
    }
    let bottom = (0..n)
        .find(|&b| (0..n).all(|j| leq[b][j]))
        .ok_or(BasisError::NoLeastElement)?;
    let mut join = vec![vec![None; n]; n];
    for i in 0..n {
        for j in 0..n {
            let ubs: Vec<usize> = (0..n).filter(|&k| leq[i][k] && leq[j][k]).collect();
            if ubs.is_empty() {
                continue;
            }
            match ubs.iter().find(|&&k| ubs.iter().all(|&u| leq[k][u])) {
                Some(&k) => join[i][j] = Some(k),
                None => {
                    return Err(BasisError::NotConsistentlyComplete(
                        names[i].clone(),
                        names[j].clone(),
                    ))
                }
            }
        }
    }
    Ok((bottom, join))
}

/// Build a finite basis from symbols and generating order pairs.
pub fn mk_finite_basis(name: &str, elements: &[&str], order_pairs: &[(&str, &str)]) -> Result<Basis, BasisError> {
    if elements.is_empty() {
        return Err(BasisError::Empty);
    }
    let names: Vec<String> = elements.iter().map(|s| s.to_string()).collect();
    for (i, s) in names.iter().enumerate() {
        if names[..i].contains(s) {
            return Err(BasisError::DuplicateSymbol(s.clone()));
        }
    }
    let idx = |s: &str| {
        names
            .iter()
            .position(|n| n == s)
            .ok_or_else(|| BasisError::UnknownSymbol(s.to_string()))
    };
    let mut pairs = Vec::new();
    for (a, b) in order_pairs {
        pairs.push((idx(a)?, idx(b)?));
    }
    let leq = closure(names.len(), &pairs);
    let (bottom, join) = validate_order(&names, &leq)?;
    Ok(Basis::new(name, Kind::Finite(FiniteData { names, leq, bottom, join, truncated: false })))
}

/// A finite basis taken on trust, without validation. Used to inject faults
/// into [`check_domain_axioms`].
pub fn finite_raw(
    name: &str,
    names: Vec<String>,
    leq: Vec<Vec<bool>>,
    bottom: usize,
    join: Vec<Vec<Option<usize>>>,
) -> Basis {
    Basis::new(name, Kind::Finite(FiniteData { names, leq, bottom, join, truncated: false }))
}

pub fn one_point() -> Basis {
    mk_finite_basis("unit", &["bot"], &[]).unwrap()
}

/// The two-chain `bot < top`.
pub fn sierpinski() -> Basis {
    mk_finite_basis("O", &["bot", "top"], &[("bot", "top")]).unwrap()
}

/// Flat domain over the given symbols.
pub fn flat(name: &str, symbols: &[&str]) -> Basis {
    let mut elems = vec!["bot"];
    elems.extend_from_slice(symbols);
    let pairs: Vec<(&str, &str)> = symbols.iter().map(|s| ("bot", *s)).collect();
    mk_finite_basis(name, &elems, &pairs).unwrap()
}

pub fn flatbool() -> Basis {
    flat("Bool", &["tt", "ff"])
}

/// Flat naturals `0 .. bound-1`, marked as a truncation of the infinite flat domain.
/// Atom `i + 1` stands for the natural `i`.
pub fn flatnat(bound: usize) -> Basis {
    let n = bound + 1;
    let mut names = vec!["bot".to_string()];
    names.extend((0..bound).map(|i| i.to_string()));
    let mut leq = vec![vec![false; n]; n];
    for i in 0..n {
        leq[i][i] = true;
        leq[0][i] = true;
    }
    let mut join = vec![vec![None; n]; n];
    for i in 0..n {
        for j in 0..n {
            join[i][j] = if i == 0 {
                Some(j)
            } else if j == 0 || i == j {
                Some(i)
            } else {
                None
            };
        }
    }
    Basis::new(
        format!("N{bound}"),
        Kind::Finite(FiniteData { names, leq, bottom: 0, join, truncated: true }),
    )
}

pub fn nat_tok(i: usize) -> Tok {
    Tok::Atom(i as u32 + 1)
}

// ---------------------------------------------------------------------------
// Axiom report

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail(String),
}

#[derive(Clone, Debug)]
pub struct AxiomEntry {
    pub name: &'static str,
    pub status: Status,
}

#[derive(Clone, Debug)]
pub struct AxiomReport {
    pub entries: Vec<AxiomEntry>,
    /// Set when only the first `bound` tokens were examined.
    pub bounded: bool,
    pub examined: usize,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.status == Status::Pass)
    }
    pub fn failed(&self, name: &str) -> Option<&str> {
        self.entries.iter().find(|e| e.name == name).and_then(|e| match &e.status {
            Status::Fail(w) => Some(w.as_str()),
            Status::Pass => None,
        })
    }
}

/// Check the basis invariants on the first `bound` tokens.
pub fn check_domain_axioms(b: &Basis, bound: usize) -> AxiomReport {
    let l = b.tokens(bound);
    let ts = &l.toks;
    let pr = |t: &Tok| b.pretty(t);
    let mut entries = Vec::new();
    let mut check = |name: &'static str, w: Option<String>| {
        entries.push(AxiomEntry { name, status: w.map_or(Status::Pass, Status::Fail) });
    };

    check("Reflexive", ts.iter().find(|x| !b.leq(x, x)).map(pr));
    let mut w = None;
    'outer: for x in ts {
        for y in ts {
            if !b.leq(x, y) {
                continue;
            }
            for z in ts {
                if b.leq(y, z) && !b.leq(x, z) {
                    w = Some(format!("{} <= {} <= {}", pr(x), pr(y), pr(z)));
                    break 'outer;
                }
            }
        }
    }
    check("Transitive", w);
    let mut w = None;
    'anti: for (i, x) in ts.iter().enumerate() {
        for y in &ts[i + 1..] {
            if b.leq(x, y) && b.leq(y, x) {
                w = Some(format!("{} and {}", pr(x), pr(y)));
                break 'anti;
            }
        }
    }
    check("Antisymmetric", w);
    let bot = b.bottom();
    check("BottomLeast", ts.iter().find(|x| !b.leq(&bot, x)).map(pr));

    let mut not_ub = None;
    let mut not_least = None;
    let mut cons_wrong = None;
    for x in ts {
        for y in ts {
            let ubs: Vec<&Tok> = ts.iter().filter(|z| b.leq(x, z) && b.leq(y, z)).collect();
            match b.join(x, y) {
                Some(j) => {
                    if !(b.leq(x, &j) && b.leq(y, &j)) && not_ub.is_none() {
                        not_ub = Some(format!("{{{}, {}}}", pr(x), pr(y)));
                    }
                    if ubs.iter().any(|u| !b.leq(&j, u)) && not_least.is_none() {
                        not_least = Some(format!("{{{}, {}}}", pr(x), pr(y)));
                    }
                }
                None => {
                    if !ubs.is_empty() && !l.truncated && cons_wrong.is_none() {
                        cons_wrong = Some(format!("{{{}, {}}}", pr(x), pr(y)));
                    }
                }
            }
        }
    }
    check("LubUpperBound", not_ub);
    check("LubNotLeast", not_least);
    check("ConsHasUpperBound", cons_wrong);
    AxiomReport { entries, bounded: l.truncated, examined: ts.len() }
}

// ---------------------------------------------------------------------------
// Finite posets and the monotone-map oracle

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinitePoset {
    pub name: String,
    pub elems: Vec<String>,
    pub leq: Vec<Vec<bool>>,
}

impl FinitePoset {
    pub fn new(name: &str, elems: &[&str], pairs: &[(&str, &str)]) -> Result<FinitePoset, BasisError> {
        let names: Vec<String> = elems.iter().map(|s| s.to_string()).collect();
        let idx = |s: &str| {
            names
                .iter()
                .position(|n| n == s)
                .ok_or_else(|| BasisError::UnknownSymbol(s.to_string()))
        };
        let mut ps = Vec::new();
        for (a, b) in pairs {
            ps.push((idx(a)?, idx(b)?));
        }
        let leq = closure(names.len(), &ps);
        for i in 0..names.len() {
            for j in (i + 1)..names.len() {
                if leq[i][j] && leq[j][i] {
                    return Err(BasisError::NotAntisymmetric(names[i].clone(), names[j].clone()));
                }
            }
        }
        Ok(FinitePoset { name: name.to_string(), elems: names, leq })
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn to_basis(&self) -> Result<Basis, BasisError> {
        let (bottom, join) = validate_order(&self.elems, &self.leq)?;
        Ok(Basis::new(
            self.name.clone(),
            Kind::Finite(FiniteData {
                names: self.elems.clone(),
                leq: self.leq.clone(),
                bottom,
                join,
                truncated: false,
            }),
        ))
    }
}

/// Every order-preserving total map, by brute force over all `|Q|^|P|` maps.
pub fn enumerate_monotone_maps(src: &FinitePoset, dst: &FinitePoset) -> Vec<Vec<usize>> {
    let (n, m) = (src.len(), dst.len());
    let mut out = Vec::new();
    if m == 0 {
        if n == 0 {
            out.push(vec![]);
        }
        return out;
    }
    let mut f = vec![0usize; n];
    loop {
        let mono = (0..n).all(|i| (0..n).all(|j| !src.leq[i][j] || dst.leq[f[i]][f[j]]));
        if mono {
            out.push(f.clone());
        }
        let mut k = 0;
        loop {
            if k == n {
                return out;
            }
            f[k] += 1;
            if f[k] < m {
                break;
            }
            f[k] = 0;
            k += 1;
        }
    }
}

/// The small posets used by the exhaustive oracles.
pub fn catalog() -> Vec<FinitePoset> {
    vec![
        FinitePoset::new("one", &["bot"], &[]).unwrap(),
        FinitePoset::new("chain2", &["bot", "top"], &[("bot", "top")]).unwrap(),
        FinitePoset::new("chain3", &["bot", "mid", "top"], &[("bot", "mid"), ("mid", "top")]).unwrap(),
        FinitePoset::new("vee", &["bot", "a", "b"], &[("bot", "a"), ("bot", "b")]).unwrap(),
        FinitePoset::new(
            "diamond",
            &["bot", "a", "b", "top"],
            &[("bot", "a"), ("bot", "b"), ("a", "top"), ("b", "top")],
        )
        .unwrap(),
    ]
}

pub fn catalog_basis(name: &str) -> Option<Basis> {
    catalog().into_iter().find(|p| p.name == name).map(|p| p.to_basis().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sierpinski_and_vee() {
        let o = sierpinski();
        assert_eq!(o.tokens(10).toks.len(), 2);
        let vee = mk_finite_basis("vee", &["bot", "a", "b"], &[("bot", "a"), ("bot", "b")]).unwrap();
        assert!(!vee.cons(&[Tok::Atom(1), Tok::Atom(2)]));
        assert!(check_domain_axioms(&vee, 100).all_pass());
    }

    #[test]
    fn not_consistently_complete() {
        let r = mk_finite_basis(
            "bad",
            &["bot", "a", "b", "c", "d"],
            &[("bot", "a"), ("bot", "b"), ("a", "c"), ("b", "c"), ("a", "d"), ("b", "d")],
        );
        assert_eq!(r.unwrap_err(), BasisError::NotConsistentlyComplete("a".into(), "b".into()));
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            mk_finite_basis("c", &["x", "y"], &[("x", "y"), ("y", "x")]),
            Err(BasisError::NotAntisymmetric(..))
        ));
        assert_eq!(mk_finite_basis("n", &["x", "y"], &[]).unwrap_err(), BasisError::NoLeastElement);
        assert!(matches!(mk_finite_basis("u", &["x"], &[("x", "z")]), Err(BasisError::UnknownSymbol(_))));
        assert_eq!(mk_finite_basis("e", &[], &[]).unwrap_err(), BasisError::Empty);
    }

    #[test]
    fn injected_lub_fault() {
        // chain bot < m < t, but join(bot, m) claims t
        let leq = closure(3, &[(0, 1), (1, 2)]);
        let mut join = validate_order(&["b".into(), "m".into(), "t".into()], &leq).unwrap().1;
        join[0][1] = Some(2);
        let b = finite_raw("faulty", vec!["b".into(), "m".into(), "t".into()], leq, 0, join);
        let rep = check_domain_axioms(&b, 100);
        assert_eq!(rep.failed("LubNotLeast"), Some("{b, m}"));
    }

    #[test]
    fn up_sets() {
        let o = sierpinski();
        assert_eq!(o.up_set(&Tok::Atom(0), 10).unwrap().toks.len(), 2);
        assert_eq!(o.up_set(&Tok::Atom(1), 10).unwrap().toks, vec![Tok::Atom(1)]);
        assert!(o.up_set(&Tok::Atom(7), 10).is_err());
    }

    #[test]
    fn monotone_map_counts() {
        let cat = catalog();
        let o = &cat[1];
        let vee = &cat[3];
        assert_eq!(enumerate_monotone_maps(o, o).len(), 3);
        assert_eq!(enumerate_monotone_maps(o, vee).len(), 5);
        for p in &cat {
            assert_eq!(enumerate_monotone_maps(&cat[0], p).len(), p.len());
        }
    }

    #[test]
    fn flatnat_is_flat() {
        let n = flatnat(4);
        assert!(check_domain_axioms(&n, 100).all_pass());
        assert!(n.join(&nat_tok(1), &nat_tok(2)).is_none());
        assert!(n.has_truncated_leaf());
    }
}
