use std::collections::BTreeMap;
use std::sync::Arc;

use super::*;
use crate::basis::{catalog_basis, LimitData};
use crate::construct::Embedding;

const TOP: Tok = Tok::Atom(1);

fn o() -> Per {
    Per::sierpinski()
}

fn swap_on(b: &Basis) -> Map {
    Map::from_fn("swap", b, b, |x| match x {
        Tok::Inj(i, y) => Some(Tok::Inj(1 - i, y.clone())),
        t => Some(t.clone()),
    })
}

#[test]
fn constructor_class_counts() {
    let s = per_construct(PerOp::Sum, &o(), &o()).unwrap();
    assert_eq!(s.class_count(100), Some(2));
    let p = per_construct(PerOp::Prod, &o(), &o()).unwrap();
    assert_eq!(p.class_count(100), Some(1));
    let f = per_construct(PerOp::Fun, &o(), &o()).unwrap();
    assert_eq!(f.class_count(100), Some(1));
    assert_eq!(f.totals(100).toks.len(), 2);
}

#[test]
fn sierpinski_properties() {
    for prop in Prop::ALL {
        assert!(check_property(&o(), prop, 100).holds(), "{}", prop.name());
    }
    assert!(verify_flags(&o(), 100).is_empty());
}

#[test]
fn vee_is_not_local() {
    let vee = catalog_basis("vee").unwrap();
    let p = Per::classes("v", &vee, &[vec![Tok::Atom(1), Tok::Atom(2)]], Flags::default()).unwrap();
    let v = check_property(&p, Prop::Local, 100);
    assert!(v.witness().unwrap().contains("inconsistent"));
}

#[test]
fn empty_per_properties() {
    let p = Per::empty("e", &catalog_basis("diamond").unwrap());
    for prop in Prop::ALL {
        let v = check_property(&p, prop, 100);
        if prop == Prop::Dense {
            assert!(v.fails());
        } else {
            assert!(v.holds(), "{}", prop.name());
        }
    }
}

#[test]
fn prec_examples() {
    assert!(prec_check(&o(), &Tok::Atom(0), &TOP, 10).unwrap());
    assert!(prec_check(&o(), &TOP, &TOP, 10).unwrap());
    let f = per_construct(PerOp::Fun, &o(), &o()).unwrap();
    let b = f.carrier().clone();
    let lazy = Tok::steps(vec![(Tok::Atom(0), TOP)]);
    let strict = Tok::steps(vec![(TOP, TOP)]);
    assert!(b.contains(&lazy) && b.contains(&strict));
    assert!(prec_check(&f, &strict, &lazy, 100).unwrap());
    assert!(prec_check(&o(), &TOP, &Tok::Atom(0), 10).is_err());
}

#[test]
fn equivariance_examples() {
    let ob = o().carrier().clone();
    let id = Map::identity(&ob);
    assert!(is_equivariant(&id, &o(), &o(), 10).holds());
    assert!(equi_injective(&id, &o(), &o(), 10).holds());
    let c = Map::constant(&ob, &ob, TOP);
    assert!(is_equivariant(&c, &o(), &o(), 10).holds());
    assert!(equi_injective(&c, &o(), &o(), 10).holds());
    let s = per_construct(PerOp::Sum, &o(), &o()).unwrap();
    let sw = swap_on(s.carrier());
    assert!(is_equivariant(&sw, &s, &s, 100).holds());
    assert!(equi_injective(&sw, &s, &s, 100).holds());
    let c2 = Map::constant(s.carrier(), s.carrier(), Tok::inj(0, TOP));
    assert!(equi_injective(&c2, &s, &s, 100).fails());
    let dip = Map::from_fn("dip", &ob, &ob, |x| Some(if *x == TOP { Tok::Atom(0) } else { TOP }));
    assert!(is_equivariant(&dip, &o(), &o(), 10).fails());
}

#[test]
fn equiembedding_examples() {
    let ob = o().carrier().clone();
    assert!(is_equiembedding(&Embedding::identity(&ob), &o(), &o(), 10).holds());
    // bot < mid < top with mid ≈ top: top is related to mid, whose projection is bot
    let c3 = catalog_basis("chain3").unwrap();
    let e = Per::classes("c", &c3, &[vec![Tok::Atom(1), Tok::Atom(2)]], Flags::default()).unwrap();
    let m = BTreeMap::from([(Tok::Atom(0), Tok::Atom(0)), (TOP, Tok::Atom(2))]);
    let emb = crate::construct::table_embedding(&ob, &c3, m).unwrap();
    let v = is_equiembedding(&emb, &o(), &e, 10);
    assert!(v.witness().unwrap().contains("projection"), "{v:?}");
}

#[test]
fn image_examples() {
    let ob = o().carrier().clone();
    let id = Map::identity(&ob);
    let img = image_per(&id, &o(), &o(), 10);
    assert_eq!(img.class_count(10), Some(1));
    assert!(image_is_equiembedding_check(&id, &o(), &o(), 10).holds());
    let s = per_construct(PerOp::Sum, &o(), &o()).unwrap();
    let c = Map::constant(&ob, s.carrier(), Tok::inj(1, TOP));
    let img = image_per(&c, &o(), &s, 10);
    assert_eq!(img.class_count(10), Some(1));
    assert!(img.is_total(&Tok::inj(1, TOP)) && !img.is_total(&Tok::inj(0, TOP)));
    assert!(image_is_equiembedding_check(&c, &o(), &s, 10).holds());
}

#[test]
fn weak_iso_examples() {
    let ob = o().carrier().clone();
    let id = Map::identity(&ob);
    assert!(weak_iso_check(&id, &id, &o(), &o(), 10).holds());
    let s = per_construct(PerOp::Sum, &o(), &o()).unwrap();
    let sw = swap_on(s.carrier());
    assert!(weak_iso_check(&sw, &sw, &s, &s, 100).holds());
    let c = Map::constant(s.carrier(), s.carrier(), Tok::inj(0, TOP));
    assert!(weak_iso_check(&c, &c, &s, &s, 100).witness().is_some());
}

fn constant_limit(p: &Per, cap: usize) -> (Basis, Vec<Per>) {
    let b = p.carrier().clone();
    let l = LimitData { stages: vec![b.clone(); cap + 1], embs: vec![Embedding::identity(&b); cap] };
    let lim = Basis::new("lim", Kind::Limit(Arc::new(l)));
    (lim, vec![p.clone(); cap + 1])
}

#[test]
fn constant_chain_limit() {
    let (lim, pers) = constant_limit(&o(), 3);
    let p = limit_per("lim", &pers, &lim, 100).unwrap();
    assert_eq!(p.class_count(100), Some(1));
    assert_eq!(rank_of(&p, &Tok::stage(0, TOP)), Some(0));
    for prop in [Prop::Convex, Prop::Local, Prop::Complete] {
        assert!(check_property(&p, prop, 100).holds());
    }
}

#[test]
fn limit_rejects_non_equiembedding() {
    let p0 = o();
    let ob = p0.carrier().clone();
    let full = Per::classes("full", &ob, &[vec![Tok::Atom(0), TOP]], Flags::default()).unwrap();
    let l = LimitData { stages: vec![ob.clone(); 2], embs: vec![Embedding::identity(&ob)] };
    let lim = Basis::new("lim", Kind::Limit(Arc::new(l)));
    // bot is total at stage 1 only, so the identity does not reflect
    let err = limit_per("lim", &[p0, full], &lim, 100).unwrap_err();
    assert!(matches!(err, PerError::IncoherentChain(_)));
}

#[test]
fn uniform_maps() {
    let s = per_construct(PerOp::Sum, &o(), &o()).unwrap();
    let (lim, pers) = constant_limit(&s, 3);
    let lp = limit_per("lim", &pers, &lim, 100).unwrap();
    let sw = swap_on(s.carrier());
    let m = uniform_limit_map(&vec![sw.clone(); 4], &lim, &lim, 100).unwrap();
    assert!(weak_iso_check(&m, &m, &lp, &lp, 100).holds());
    let id = Map::identity(s.carrier());
    let idm = uniform_limit_map(&vec![id.clone(); 4], &lim, &lim, 100).unwrap();
    assert!(maps_related(&idm, &Map::identity(&lim), &lp, &lp, 100).holds());
    let faulty = vec![id.clone(), id.clone(), sw, id];
    assert_eq!(uniform_limit_map(&faulty, &lim, &lim, 100).unwrap_err(), PerError::NotUniform(2));
}

#[test]
fn table_fn_elements() {
    let f = per_construct(PerOp::Fun, &o(), &o()).unwrap();
    let b = f.carrier();
    let cx = EvalCx::default();
    let e = ElemExpr::TableFn(vec![(TOP, ElemExpr::Tok(TOP))]);
    assert_eq!(eval(&e, b, &cx).unwrap(), Tok::steps(vec![(TOP, TOP)]));
    let bad = ElemExpr::TableFn(vec![(Tok::Atom(0), ElemExpr::Tok(TOP)), (TOP, ElemExpr::Bot)]);
    assert!(eval(&bad, b, &cx).is_err());
    assert!(eval(&ElemExpr::inj(0, ElemExpr::Bot), b, &cx).is_err());
}

#[test]
fn natfn_needs_an_iso() {
    let n = Per::flatnat(3);
    let f = per_construct(PerOp::Fun, &n, &o()).unwrap();
    let cx = EvalCx::default();
    let e = ElemExpr::nat_fn(ElemExpr::Tok(TOP), "nest", true);
    assert!(eval(&e, f.carrier(), &cx).is_err());
}
