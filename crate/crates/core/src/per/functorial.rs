//! The action of a functor expression on pers and on maps.

use super::{op_flags, Map, MapKind, Per, PerError, PerKind, PerOp};
use crate::basis::{Basis, Kind};
use crate::functor::{Env, FunctorError, FunctorExpr};

fn on_carrier(p: &Per, carrier: &Basis) -> Per {
    if p.carrier().ptr_eq(carrier) {
        p.clone()
    } else {
        Per::new(p.name(), carrier.clone(), PerKind::Restrict(p.clone()), p.flags())
    }
}

fn unbound(e: FunctorError) -> PerError {
    PerError::CarrierMismatch(e.to_string())
}

/// `F(X)` as a per on the already built carrier `F(X.carrier)`.
pub fn apply_functor_per(f: &FunctorExpr, x: &Per, carrier: &Basis, env: &Env) -> Result<Per, PerError> {
    let shape = || PerError::CarrierMismatch(format!("{} does not have the shape of {f}", carrier.name()));
    Ok(match (f, carrier.kind()) {
        (FunctorExpr::Id, _) => on_carrier(x, carrier),
        (FunctorExpr::Const(a), _) => on_carrier(env.get(a).map_err(unbound)?, carrier),
        (FunctorExpr::Sum(l, r), Kind::Sum { parts, .. }) if parts.len() == 2 => {
            let (pl, pr) = (apply_functor_per(l, x, &parts[0], env)?, apply_functor_per(r, x, &parts[1], env)?);
            let flags = op_flags(PerOp::Sum, pl.flags(), pr.flags());
            let name = format!("({} + {})", pl.name(), pr.name());
            Per::new(name, carrier.clone(), PerKind::Sum(vec![pl, pr]), flags)
        }
        (FunctorExpr::Prod(l, r), Kind::Prod { left, right, .. }) => {
            let (pl, pr) = (apply_functor_per(l, x, left, env)?, apply_functor_per(r, x, right, env)?);
            let flags = op_flags(PerOp::Prod, pl.flags(), pr.flags());
            let name = format!("({} x {})", pl.name(), pr.name());
            Per::new(name, carrier.clone(), PerKind::Prod(pl, pr), flags)
        }
        (FunctorExpr::Exp(b, body), Kind::Fun { dom, cod, .. }) => {
            let pb = on_carrier(env.get(b).map_err(unbound)?, dom);
            let pc = apply_functor_per(body, x, cod, env)?;
            let flags = op_flags(PerOp::Fun, pb.flags(), pc.flags());
            let name = format!("({} -> {})", pb.name(), pc.name());
            Per::new(name, carrier.clone(), PerKind::Fun(pb, pc), flags)
        }
        _ => return Err(shape()),
    })
}

/// `F(h) : F(A) -> F(B)` between the built carriers `src` and `tgt`.
pub fn functor_map(f: &FunctorExpr, h: &Map, src: &Basis, tgt: &Basis) -> Map {
    let kind = match (f, src.kind(), tgt.kind()) {
        (FunctorExpr::Id, _, _) => return h.clone(),
        (FunctorExpr::Const(_), _, _) => MapKind::Identity,
        (FunctorExpr::Sum(l, r), Kind::Sum { parts: sp, .. }, Kind::Sum { parts: tp, .. }) => {
            MapKind::Sum(vec![functor_map(l, h, &sp[0], &tp[0]), functor_map(r, h, &sp[1], &tp[1])])
        }
        (FunctorExpr::Prod(l, r), Kind::Prod { left: sl, right: sr, .. }, Kind::Prod { left: tl, right: tr, .. }) => {
            MapKind::Prod(functor_map(l, h, sl, tl), functor_map(r, h, sr, tr))
        }
        (FunctorExpr::Exp(_, body), Kind::Fun { dom, cod: sc, .. }, Kind::Fun { cod: tc, .. }) => {
            MapKind::Exp { pre: Map::identity(dom), post: functor_map(body, h, sc, tc) }
        }
        _ => panic!("functor shape does not match the carriers"),
    };
    Map::new(format!("F({})", h.name()), src, tgt, kind)
}
