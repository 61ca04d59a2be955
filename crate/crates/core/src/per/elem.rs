//! Element expressions and their evaluation to tokens.

use std::fmt;
use std::sync::Arc;

use super::PerError;
use crate::basis::{Basis, Kind, Tok};
use crate::construct;
use crate::functor::FixedPointIso;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ElemExpr {
    Bot,
    Tok(Tok),
    Inj(u32, Box<ElemExpr>),
    Pair(Box<ElemExpr>, Box<ElemExpr>),
    /// Values at the exponent tokens; a missing bottom argument maps to bottom.
    TableFn(Vec<(Tok, ElemExpr)>),
    /// `n ↦ step^n(base)` on flat naturals; `strict` sends bottom to bottom,
    /// otherwise bottom goes to `base`.
    NatFn { base: Box<ElemExpr>, step: String, strict: bool },
    Staged(u32, Box<ElemExpr>),
}

impl ElemExpr {
    pub fn inj(i: u32, e: ElemExpr) -> ElemExpr {
        ElemExpr::Inj(i, Box::new(e))
    }
    pub fn pair(a: ElemExpr, b: ElemExpr) -> ElemExpr {
        ElemExpr::Pair(Box::new(a), Box::new(b))
    }
    pub fn nat_fn(base: ElemExpr, step: &str, strict: bool) -> ElemExpr {
        ElemExpr::NatFn { base: Box::new(base), step: step.to_string(), strict }
    }
    pub fn staged(n: u32, e: ElemExpr) -> ElemExpr {
        ElemExpr::Staged(n, Box::new(e))
    }
}

impl fmt::Display for ElemExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElemExpr::Bot => f.write_str("bot"),
            ElemExpr::Tok(t) => write!(f, "{t:?}"),
            ElemExpr::Inj(i, e) => write!(f, "({i},{e})"),
            ElemExpr::Pair(a, b) => write!(f, "<{a},{b}>"),
            ElemExpr::TableFn(rows) => {
                f.write_str("table{")?;
                for (i, (a, v)) in rows.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a:?} -> {v}")?;
                }
                f.write_str("}")
            }
            ElemExpr::NatFn { base, step, strict } => {
                write!(f, "natfn({base}, {step}{})", if *strict { "" } else { ", lazy" })
            }
            ElemExpr::Staged(n, e) => write!(f, "s{n}:{e}"),
        }
    }
}

/// Names of the registered step transformers.
pub const TRANSFORMERS: &[&str] = &["nest"];

#[derive(Clone, Default)]
pub struct EvalCx {
    /// Needed for structured expressions over a limit carrier and for `nest`.
    pub iso: Option<Arc<FixedPointIso>>,
}

impl EvalCx {
    pub fn with_iso(iso: &Arc<FixedPointIso>) -> EvalCx {
        EvalCx { iso: Some(iso.clone()) }
    }
}

fn ill(msg: impl Into<String>) -> PerError {
    PerError::IllSorted(msg.into())
}

pub fn eval(e: &ElemExpr, b: &Basis, cx: &EvalCx) -> Result<Tok, PerError> {
    match (e, b.kind()) {
        (ElemExpr::Bot, _) => Ok(b.bottom()),
        (ElemExpr::Tok(t), _) => {
            if b.contains(t) {
                Ok(t.clone())
            } else {
                Err(ill(format!("{t:?} is not a token of {}", b.name())))
            }
        }
        (ElemExpr::Staged(n, inner), Kind::Limit(l)) => {
            let st = l.stages.get(*n as usize).ok_or_else(|| ill(format!("stage {n} beyond the cap")))?;
            Ok(l.canonical(*n, &eval(inner, st, cx)?))
        }
        (ElemExpr::Staged(..), _) => Err(ill(format!("staged element in {}", b.name()))),
        (_, Kind::Limit(_)) => {
            let iso = cx.iso.as_ref().ok_or_else(|| ill("structured limit element without an iso"))?;
            let y = eval(e, &iso.fd, cx)?;
            iso.inv(&y).ok_or_else(|| ill(format!("{e} lies beyond the cap")))
        }
        (ElemExpr::Inj(i, inner), Kind::Sum { parts, strict }) => {
            let p = parts.get(*i as usize).ok_or_else(|| ill(format!("no summand {i} in {}", b.name())))?;
            let x = eval(inner, p, cx)?;
            if *strict && p.is_bottom(&x) {
                Ok(Tok::Bot)
            } else {
                Ok(Tok::inj(*i, x))
            }
        }
        (ElemExpr::Pair(x, y), Kind::Prod { left, right, strict }) => {
            let (a, c) = (eval(x, left, cx)?, eval(y, right, cx)?);
            if *strict && (left.is_bottom(&a) || right.is_bottom(&c)) {
                Ok(b.bottom())
            } else {
                Ok(Tok::pair(a, c))
            }
        }
        (ElemExpr::TableFn(rows), Kind::Fun { dom, cod, info }) => {
            let mut vals = Vec::with_capacity(info.elems.len());
            for t in &info.elems {
                match rows.iter().find(|(a, _)| a == t) {
                    Some((_, v)) => vals.push(eval(v, cod, cx)?),
                    None if dom.is_bottom(t) => vals.push(cod.bottom()),
                    None => return Err(ill(format!("table misses argument {}", dom.pretty(t)))),
                }
            }
            if let Some((a, _)) = rows.iter().find(|(a, _)| info.index_of(a).is_none()) {
                return Err(ill(format!("{a:?} is not an exponent token")));
            }
            construct::fun_from_values(b, &vals).ok_or_else(|| ill("table is not monotone"))
        }
        (ElemExpr::NatFn { base, step, strict }, Kind::Fun { dom, cod, info }) => {
            if !dom.has_truncated_leaf() {
                return Err(ill(format!("natfn over {}, which is not the flat naturals", dom.name())));
            }
            let x0 = eval(base, cod, cx)?;
            let n = info.elems.len() - 1;
            let mut xs = vec![x0.clone()];
            for _ in 1..n {
                let last = xs.last().unwrap();
                xs.push(apply_transformer(step, last, cod, cx)?);
            }
            let vals: Vec<Tok> = info
                .elems
                .iter()
                .map(|t| match t {
                    Tok::Atom(0) if *strict => cod.bottom(),
                    Tok::Atom(0) => x0.clone(),
                    Tok::Atom(k) => xs[*k as usize - 1].clone(),
                    _ => unreachable!("flat naturals are atoms"),
                })
                .collect();
            construct::fun_from_values(b, &vals).ok_or_else(|| ill("lazy natfn is not monotone"))
        }
        _ => Err(ill(format!("{e} does not fit {}", b.name()))),
    }
}

/// Apply a registered transformer to an element of `b`.
pub fn apply_transformer(name: &str, x: &Tok, b: &Basis, cx: &EvalCx) -> Result<Tok, PerError> {
    match name {
        // x ↦ (1, const x) through the fixed-point iso
        "nest" => {
            let iso = cx.iso.as_ref().ok_or_else(|| ill("nest needs a fixed-point iso"))?;
            if !b.ptr_eq(&iso.limit) {
                return Err(ill(format!("nest acts on the limit, not on {}", b.name())));
            }
            let Kind::Sum { parts, .. } = iso.fd.kind() else {
                return Err(ill("nest needs a functor of the form A + [B -> X]"));
            };
            let fb = parts.get(1).filter(|p| construct::fun_parts(p).is_some()).ok_or_else(|| ill("nest needs [B -> X] as summand 1"))?;
            let c = construct::fun_from_fn(fb, &|_| x.clone());
            iso.inv(&Tok::inj(1, c)).ok_or_else(|| ill("nested element lies beyond the cap"))
        }
        _ => Err(ill(format!("unknown transformer {name}"))),
    }
}
