//! Strictly positive functor expressions, their action on bases and
//! embeddings, ω-chains, inductive limits and the fixed-point isomorphism
//! `D_ω ≅ F(D_ω)`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::basis::{one_point, Basis, Kind, LimitData, Tok};
use crate::construct::{self, ConstructError, EmbKind, Embedding};
use crate::per::Per;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FunctorExpr {
    Id,
    Const(String),
    Sum(Box<FunctorExpr>, Box<FunctorExpr>),
    Prod(Box<FunctorExpr>, Box<FunctorExpr>),
    /// Exponentiation by a fixed parameter.
    Exp(String, Box<FunctorExpr>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FunctorError {
    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),
    #[error(transparent)]
    Construct(#[from] ConstructError),
    #[error("fixed-point iso failure: {0}")]
    IsoFailure(String),
}

impl FunctorExpr {
    pub fn sum(a: FunctorExpr, b: FunctorExpr) -> FunctorExpr {
        FunctorExpr::Sum(Box::new(a), Box::new(b))
    }
    pub fn prod(a: FunctorExpr, b: FunctorExpr) -> FunctorExpr {
        FunctorExpr::Prod(Box::new(a), Box::new(b))
    }
    pub fn exp(b: &str, body: FunctorExpr) -> FunctorExpr {
        FunctorExpr::Exp(b.to_string(), Box::new(body))
    }
    pub fn konst(a: &str) -> FunctorExpr {
        FunctorExpr::Const(a.to_string())
    }

    /// Parameter names, in order of first occurrence.
    pub fn params(&self) -> Vec<String> {
        fn go(f: &FunctorExpr, out: &mut Vec<String>) {
            let mut add = |s: &String| {
                if !out.contains(s) {
                    out.push(s.clone())
                }
            };
            match f {
                FunctorExpr::Id => {}
                FunctorExpr::Const(a) => add(a),
                FunctorExpr::Sum(l, r) | FunctorExpr::Prod(l, r) => {
                    go(l, out);
                    go(r, out);
                }
                FunctorExpr::Exp(b, body) => {
                    add(b);
                    go(body, out);
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    pub fn mentions_id(&self) -> bool {
        match self {
            FunctorExpr::Id => true,
            FunctorExpr::Const(_) => false,
            FunctorExpr::Sum(l, r) | FunctorExpr::Prod(l, r) => l.mentions_id() || r.mentions_id(),
            FunctorExpr::Exp(_, body) => body.mentions_id(),
        }
    }

    /// Surface syntax with `var` for the recursion variable.
    pub fn render(&self, var: &str) -> String {
        match self {
            FunctorExpr::Id => var.to_string(),
            FunctorExpr::Const(a) => a.clone(),
            FunctorExpr::Sum(l, r) => {
                let rs = match **r {
                    FunctorExpr::Sum(..) => format!("({})", r.render(var)),
                    _ => r.render(var),
                };
                format!("{} + {rs}", l.render(var))
            }
            FunctorExpr::Prod(l, r) => {
                let wrap = |e: &FunctorExpr, right: bool| match e {
                    FunctorExpr::Sum(..) => format!("({})", e.render(var)),
                    FunctorExpr::Prod(..) if right => format!("({})", e.render(var)),
                    _ => e.render(var),
                };
                format!("{} * {}", wrap(l, false), wrap(r, true))
            }
            FunctorExpr::Exp(b, body) => format!("[{b} -> {}]", body.render(var)),
        }
    }
}

impl fmt::Display for FunctorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render("X"))
    }
}

/// Parameter bindings: each name denotes a domain-per (its carrier is the basis).
#[derive(Clone, Debug, Default)]
pub struct Env {
    pub params: BTreeMap<String, Per>,
}

impl Env {
    pub fn new() -> Env {
        Env::default()
    }
    pub fn with(mut self, name: &str, p: Per) -> Env {
        self.params.insert(name.to_string(), p);
        self
    }
    pub fn get(&self, name: &str) -> Result<&Per, FunctorError> {
        self.params.get(name).ok_or_else(|| FunctorError::UnboundParameter(name.to_string()))
    }
    pub fn basis(&self, name: &str) -> Result<Basis, FunctorError> {
        Ok(self.get(name)?.carrier().clone())
    }
}

pub fn apply_functor_domain(f: &FunctorExpr, d: &Basis, env: &Env) -> Result<Basis, FunctorError> {
    Ok(match f {
        FunctorExpr::Id => d.clone(),
        FunctorExpr::Const(a) => env.basis(a)?,
        FunctorExpr::Sum(l, r) => construct::sum_basis(
            &apply_functor_domain(l, d, env)?,
            &apply_functor_domain(r, d, env)?,
            construct::SumMode::Separated,
        ),
        FunctorExpr::Prod(l, r) => construct::prod_basis(
            &apply_functor_domain(l, d, env)?,
            &apply_functor_domain(r, d, env)?,
            construct::ProdMode::Cartesian,
        ),
        FunctorExpr::Exp(b, body) => construct::fun_basis(&env.basis(b)?, &apply_functor_domain(body, d, env)?)?,
    })
}

/// `F(e)` between already built bases `src = F(e.source)` and `tgt = F(e.target)`.
pub fn functor_emb(f: &FunctorExpr, e: &Embedding, src: &Basis, tgt: &Basis) -> Embedding {
    let kind = match (f, src.kind(), tgt.kind()) {
        (FunctorExpr::Id, _, _) => return e.clone(),
        (FunctorExpr::Const(_), _, _) => EmbKind::Identity,
        (FunctorExpr::Sum(l, r), Kind::Sum { parts: sp, .. }, Kind::Sum { parts: tp, .. }) => EmbKind::Sum(vec![
            functor_emb(l, e, &sp[0], &tp[0]),
            functor_emb(r, e, &sp[1], &tp[1]),
        ]),
        (
            FunctorExpr::Prod(l, r),
            Kind::Prod { left: sl, right: sr, .. },
            Kind::Prod { left: tl, right: tr, .. },
        ) => EmbKind::Prod(functor_emb(l, e, sl, tl), functor_emb(r, e, sr, tr)),
        (FunctorExpr::Exp(_, body), Kind::Fun { dom, cod: sc, .. }, Kind::Fun { cod: tc, .. }) => {
            EmbKind::Exp(Embedding::identity(dom), functor_emb(body, e, sc, tc))
        }
        _ => panic!("functor shape does not match the bases"),
    };
    Embedding::new(src.clone(), tgt.clone(), kind)
}

pub fn apply_functor_embedding(f: &FunctorExpr, e: &Embedding, env: &Env) -> Result<Embedding, FunctorError> {
    let src = apply_functor_domain(f, e.source(), env)?;
    let tgt = apply_functor_domain(f, e.target(), env)?;
    Ok(functor_emb(f, e, &src, &tgt))
}

#[derive(Clone, Debug)]
pub struct Chain {
    pub functor: FunctorExpr,
    pub stages: Vec<Basis>,
    /// `embs[n] : D_n -> D_{n+1}`.
    pub embs: Vec<Embedding>,
}

/// Stages `D_0 .. D_{n_max}` with `D_0` one point and `D_{n+1} = F(D_n)`.
pub fn omega_chain(f: &FunctorExpr, env: &Env, n_max: usize) -> Result<Chain, FunctorError> {
    let d0 = one_point();
    let mut stages = vec![d0.clone()];
    let mut embs: Vec<Embedding> = Vec::new();
    for n in 0..n_max {
        let next = apply_functor_domain(f, &stages[n], env)?;
        let e = if n == 0 {
            Embedding::from_point(&d0, &next)
        } else {
            functor_emb(f, &embs[n - 1], &stages[n], &next)
        };
        stages.push(next);
        embs.push(e);
    }
    Ok(Chain { functor: f.clone(), stages, embs })
}

impl Chain {
    /// `f_{i,j}` as a composite.
    pub fn emb(&self, i: usize, j: usize) -> Embedding {
        assert!(i <= j);
        if i == j {
            return Embedding::identity(&self.stages[i]);
        }
        Embedding::new(
            self.stages[i].clone(),
            self.stages[j].clone(),
            EmbKind::Compose(self.embs[i..j].to_vec()),
        )
    }

    pub fn limit_data(&self) -> Arc<LimitData> {
        Arc::new(LimitData { stages: self.stages.clone(), embs: self.embs.clone() })
    }

    /// Check `f_{i,k} = f_{j,k} ∘ f_{i,j}` and the embedding laws on all
    /// tokens of stages up to `budget` tokens each.
    pub fn check_coherence(&self, budget: usize) -> Result<(), String> {
        for e in &self.embs {
            construct::verify_embedding(e, budget).map_err(|err| err.to_string())?;
        }
        let n = self.stages.len();
        for i in 0..n {
            let toks = self.stages[i].tokens(budget).toks;
            for j in i..n {
                for k in j..n {
                    let (ik, ij, jk) = (self.emb(i, k), self.emb(i, j), self.emb(j, k));
                    for x in &toks {
                        if ik.fwd(x) != jk.fwd(&ij.fwd(x)) {
                            return Err(format!("f_{i},{k} differs from f_{j},{k} . f_{i},{j}"));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn inductive_limit_domain(chain: &Chain) -> Basis {
    Basis::new(format!("lim({})", chain.functor), Kind::Limit(chain.limit_data()))
}

pub fn limit_data_of(b: &Basis) -> Option<&Arc<LimitData>> {
    match b.kind() {
        Kind::Limit(l) => Some(l),
        _ => None,
    }
}

/// Largest stage tag occurring at the top level of a token.
pub fn max_stage_tag(t: &Tok) -> Option<u32> {
    match t {
        Tok::Atom(_) | Tok::Bot => None,
        Tok::Stage(n, _) => Some(*n),
        Tok::Inj(_, x) => max_stage_tag(x),
        Tok::Pair(a, b) => max_stage_tag(a).max(max_stage_tag(b)),
        Tok::Steps(s) => s.iter().filter_map(|(p, q)| max_stage_tag(p).max(max_stage_tag(q))).max(),
        Tok::Tuple(v) => v.iter().filter_map(max_stage_tag).max(),
    }
}

/// The canonical isomorphism between a capped limit `D_ω` and `F(D_ω)`.
pub struct FixedPointIso {
    pub functor: FunctorExpr,
    pub limit: Basis,
    pub fd: Basis,
    /// `into[n] = F(ι_n) : D_{n+1} -> F(D_ω)`.
    pub into: Vec<Embedding>,
}

impl fmt::Debug for FixedPointIso {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FixedPointIso({})", self.functor)
    }
}

impl FixedPointIso {
    pub fn new(f: &FunctorExpr, env: &Env, limit: &Basis) -> Result<FixedPointIso, FunctorError> {
        let l = limit_data_of(limit).expect("limit basis").clone();
        let fd = apply_functor_domain(f, limit, env)?;
        let mut into = Vec::new();
        for n in 0..l.cap() as usize {
            let iota = Embedding::new(l.stages[n].clone(), limit.clone(), EmbKind::IntoLimit(n as u32, l.clone()));
            into.push(functor_emb(f, &iota, &l.stages[n + 1], &fd));
        }
        Ok(FixedPointIso { functor: f.clone(), limit: limit.clone(), fd, into })
    }

    pub fn data(&self) -> &Arc<LimitData> {
        limit_data_of(&self.limit).unwrap()
    }

    pub fn fwd(&self, x: &Tok) -> Tok {
        let (n, y) = x.as_stage().expect("limit token");
        if n == 0 {
            self.fd.bottom()
        } else {
            self.into[n as usize - 1].fwd(y)
        }
    }

    /// Inverse, defined when the components lie below the cap.
    pub fn inv(&self, y: &Tok) -> Option<Tok> {
        let k = max_stage_tag(y).unwrap_or(0) as usize;
        let e = self.into.get(k)?;
        let x = e.proj(y);
        if e.fwd(&x) != *y {
            return None;
        }
        Some(self.data().canonical(k as u32 + 1, &x))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsoReport {
    /// Highest stage tag of the checked tokens.
    pub bound: u32,
    pub checked: usize,
    pub image_checked: usize,
}

/// Verify the fixed-point iso on every limit token (tags up to the cap) and
/// its surjectivity onto `F` of the limit capped one stage lower.
pub fn fixed_point_iso(f: &FunctorExpr, env: &Env, limit: &Basis, budget: usize) -> Result<IsoReport, FunctorError> {
    let iso = FixedPointIso::new(f, env, limit)?;
    let l = iso.data().clone();
    let pr = |t: &Tok| limit.pretty(t);
    let toks = limit.tokens(budget);
    if toks.truncated {
        return Err(FunctorError::IsoFailure("limit fragment exceeds the budget".into()));
    }
    let imgs: Vec<Tok> = toks.toks.iter().map(|x| iso.fwd(x)).collect();
    for (x, y) in toks.toks.iter().zip(&imgs) {
        if !iso.fd.contains(y) {
            return Err(FunctorError::IsoFailure(format!("image of {} is not a token", pr(x))));
        }
        if iso.inv(y).as_ref() != Some(x) {
            return Err(FunctorError::IsoFailure(format!("inverse fails at {}", pr(x))));
        }
    }
    for (i, x) in toks.toks.iter().enumerate() {
        for (j, z) in toks.toks.iter().enumerate() {
            if limit.leq(x, z) != iso.fd.leq(&imgs[i], &imgs[j]) {
                return Err(FunctorError::IsoFailure(format!("order differs at {}, {}", pr(x), pr(z))));
            }
        }
    }
    let mut sorted = imgs.clone();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != imgs.len() {
        return Err(FunctorError::IsoFailure("not injective".into()));
    }
    // F applied to the limit capped at cap-1 must be hit exactly
    let mut image_checked = 0;
    if l.cap() >= 1 {
        let lower = Chain {
            functor: f.clone(),
            stages: l.stages[..l.cap() as usize].to_vec(),
            embs: l.embs[..l.cap() as usize - 1].to_vec(),
        };
        let fl = apply_functor_domain(f, &inductive_limit_domain(&lower), env)?;
        let frag = fl.tokens(budget);
        if frag.truncated {
            return Err(FunctorError::IsoFailure("image fragment exceeds the budget".into()));
        }
        for y in &frag.toks {
            if sorted.binary_search(y).is_err() {
                return Err(FunctorError::IsoFailure(format!("{} has no preimage", fl.pretty(y))));
            }
        }
        image_checked = frag.toks.len();
        if image_checked != l.stages[l.cap() as usize].tokens(budget).toks.len() {
            return Err(FunctorError::IsoFailure("image fragment size differs from the top stage".into()));
        }
    }
    Ok(IsoReport { bound: l.cap(), checked: imgs.len(), image_checked })
}
