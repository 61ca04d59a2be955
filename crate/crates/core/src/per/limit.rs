//! Inductive limits of chains of domain-pers.

use super::{is_equiembedding, Flags, Map, Per, PerError, PerKind, Tri, Verdict};
use crate::basis::{Basis, Tok};
use crate::functor::limit_data_of;

/// The limit per on a capped limit carrier; `pers[i]` lives on stage `i`.
///
/// Every connecting embedding is checked to be an equiembedding within `bound`;
/// a check that cannot finish within the bound is accepted.
pub fn limit_per(name: &str, pers: &[Per], limit: &Basis, bound: usize) -> Result<Per, PerError> {
    let l = limit_data_of(limit).ok_or_else(|| PerError::CarrierMismatch(format!("{} is not a limit", limit.name())))?;
    if pers.len() != l.stages.len() {
        return Err(PerError::IncoherentChain(format!("{} pers for {} stages", pers.len(), l.stages.len())));
    }
    for (i, (p, s)) in pers.iter().zip(&l.stages).enumerate() {
        if !p.carrier().ptr_eq(s) {
            return Err(PerError::CarrierMismatch(format!("per {} is not on stage {i}", p.name())));
        }
    }
    for (i, e) in l.embs.iter().enumerate() {
        if let Verdict::Fails(w) = is_equiembedding(e, &pers[i], &pers[i + 1], bound) {
            return Err(PerError::IncoherentChain(format!("stage {i}: {w}")));
        }
    }
    let all = |g: fn(&Flags) -> Tri| pers.iter().fold(Tri::Yes, |a, p| a.and(g(&p.flags())));
    let flags = Flags {
        convex: all(|f| f.convex),
        local: all(|f| f.local),
        complete: all(|f| f.complete),
        upwards_closed: all(|f| f.upwards_closed),
        countably_based: all(|f| f.countably_based),
        ..Flags::default()
    };
    Ok(Per::new(name, limit.clone(), PerKind::Limit(pers.to_vec(), l.clone()), flags))
}

/// Least stage at which a total limit element is total. When stage 0 has no
/// totals the count starts at stage 1, so an element of `F(D_i)` has rank `i`.
pub fn rank_of(p: &Per, x: &Tok) -> Option<u32> {
    let (stages, l) = match p.kind() {
        PerKind::Limit(s, l) => (s, l),
        _ => return None,
    };
    let (n, y) = x.as_stage()?;
    let offset = u32::from(stages[0].class_table().is_some_and(|t| t.totals.is_empty()));
    (n..=l.cap()).find(|&i| stages[i as usize].is_total(&l.shift(n, y, i))).map(|i| i.saturating_sub(offset))
}

/// The map induced on limits by a uniform family `φ_i : D_i -> E_i`.
///
/// Uniformity `g_i ∘ φ_i = φ_{i+1} ∘ f_i` is checked on every token of the
/// stages within `bound`; the first failing `i + 1` is reported.
pub fn uniform_limit_map(phis: &[Map], src: &Basis, tgt: &Basis, bound: usize) -> Result<Map, PerError> {
    let not_limit = |b: &Basis| PerError::CarrierMismatch(format!("{} is not a limit", b.name()));
    let ls = limit_data_of(src).ok_or_else(|| not_limit(src))?.clone();
    let lt = limit_data_of(tgt).ok_or_else(|| not_limit(tgt))?.clone();
    let top = ls.cap().min(lt.cap()) as usize;
    if phis.len() <= top {
        return Err(PerError::IncoherentChain(format!("{} maps for {} stages", phis.len(), top + 1)));
    }
    for i in 0..top {
        for x in ls.stages[i].tokens(bound).toks {
            let a = phis[i].apply(&x).map(|y| lt.embs[i].fwd(&y));
            let b = phis[i + 1].apply(&ls.embs[i].fwd(&x));
            if a != b {
                return Err(PerError::NotUniform(i as u32 + 1));
            }
        }
    }
    let phis = phis[..=top].to_vec();
    Ok(Map::from_fn("lim", src, tgt, move |x| {
        let (n, y) = x.as_stage()?;
        let v = phis.get(n as usize)?.apply(y)?;
        Some(lt.canonical(n, &v))
    }))
}
