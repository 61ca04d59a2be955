use super::*;
use crate::basis::catalog_basis;
use crate::lfp::per_chain_extend;

fn running() -> (FunctorExpr, Env) {
    let f = FunctorExpr::sum(FunctorExpr::konst("A"), FunctorExpr::exp("B", FunctorExpr::Id));
    (f, Env::new().with("A", Per::sierpinski()).with("B", Per::sierpinski()))
}

#[test]
fn extension_search() {
    let o = Per::sierpinski();
    assert_eq!(has_total_extension(&o, &Tok::Atom(0), 10).unwrap(), Extension::Yes(Tok::Atom(1)));
    let e = Per::empty("e", o.carrier());
    assert_eq!(has_total_extension(&e, &Tok::Atom(1), 10).unwrap(), Extension::No);
    assert!(matches!(has_total_extension(&o, &Tok::Atom(7), 10), Err(DenseError::UnknownToken(_))));
    let (f, env) = running();
    let c = per_chain_extend(&f, &env, Ordinal::OMEGA, ChainOpts { cap: 3, bound: 400 }).unwrap();
    let w = c.omega().unwrap();
    let toks = limit_tokens_upto(w.carrier(), 3, 1000).toks;
    let deep = toks.iter().rev().find(|t| !w.is_total(t)).unwrap();
    assert_eq!(has_total_extension(w, deep, 2).unwrap(), Extension::Unknown(2));
}

#[test]
fn dense_part_examples() {
    let o = Per::sierpinski();
    let d = dense_part(&o, 100);
    assert_eq!(d.per.carrier().tokens(100).toks.len(), 2);
    assert_eq!(d.per.class_count(100), Some(1));
    let vee = catalog_basis("vee").unwrap();
    let p = Per::classes("v", &vee, &[vec![Tok::Atom(1)]], Flags::all_yes()).unwrap();
    let d = dense_part(&p, 100);
    assert_eq!(d.per.carrier().tokens(100).toks, vec![Tok::Atom(0), Tok::Atom(1)]);
    assert!(d.per.flags().dense.is_yes());
    assert!(crate::per::check_property(&d.per, crate::per::Prop::Dense, 100).holds());
    let t = dense_part(&Per::trivial(), 100);
    assert!(t.trivial && t.per.is_trivial_within(10) == Some(true));
}

#[test]
fn dense_part_copies_clc() {
    let vee = catalog_basis("vee").unwrap();
    let p = Per::classes("v", &vee, &[vec![Tok::Atom(1)], vec![Tok::Atom(2)]], Flags::all_yes()).unwrap();
    let d = dense_part(&p, 100);
    for prop in [crate::per::Prop::Convex, crate::per::Prop::Local, crate::per::Prop::Complete] {
        assert!(crate::per::check_property(&d.per, prop, 100).holds());
    }
    assert_eq!(d.per.flags().clc(), Tri::Yes);
}

#[test]
fn first_delta_and_retraction() {
    let (f, env) = running();
    let (fam, r1) = delta_and_retraction(&f, &env, 1, ChainOpts { cap: 3, bound: 400 }).unwrap();
    let b = fam.carrier().clone();
    let toks = limit_tokens_upto(&b, 3, 1000).toks;
    let inside: Vec<String> = toks.iter().filter(|x| fam.delta(1, x)).map(|x| b.pretty(x)).collect();
    assert_eq!(inside.len(), 3, "{inside:?}");
    for x in &toks {
        let y = r1.apply(x).unwrap();
        assert!(fam.delta(1, &y));
    }
}

#[test]
fn delta_claims_on_the_running_example() {
    let (f, env) = running();
    let fam = DeltaFamily::new(&f, &env, ChainOpts { cap: 4, bound: 400 }).unwrap();
    let mut sizes = Vec::new();
    for n in 1..=3 {
        let c = check_delta(&fam, n).unwrap();
        assert!(c.holds(), "{c:?}");
        sizes.push(c.delta_size);
    }
    assert!(sizes.windows(2).all(|w| w[0] < w[1]), "{sizes:?}");
}

#[test]
fn trivial_functor_has_no_retraction() {
    let f = FunctorExpr::exp("B", FunctorExpr::Id);
    let env = Env::new().with("B", Per::sierpinski());
    assert!(matches!(DeltaFamily::new(&f, &env, ChainOpts::default()), Err(DenseError::TrivialFunctor(_))));
    let (f, env) = running();
    let fam = DeltaFamily::new(&f, &env, ChainOpts { cap: 2, bound: 400 }).unwrap();
    assert!(matches!(fam.retraction(0), Err(DenseError::StageZero)));
}

#[test]
fn dense_lfp_of_the_running_example() {
    let (f, env) = running();
    let d = dense_lfp(&f, &env, Ordinal::OmegaPlus(1), 3).unwrap();
    assert_eq!(d.classes_by_rank, vec![(0, 1), (1, 2), (2, 3), (3, 4)]);
    assert!(d.unkept_below_cap.is_empty(), "{:?}", d.unkept_below_cap);
    assert!(d.links.iter().all(|v| !v.fails()), "{:?}", d.links);
    assert!(d.links.iter().take(3).all(|v| v.holds()), "{:?}", d.links);
    assert_eq!(d.union_claim, Some(Verdict::Holds));
    let fl = d.per.flags();
    assert!(fl.dense.is_yes() && fl.admissible_pedigree.is_yes());
}

#[test]
fn dense_lfp_of_a_constant() {
    let f = FunctorExpr::konst("A");
    let env = Env::new().with("A", Per::sierpinski());
    let d = dense_lfp(&f, &env, Ordinal::OMEGA, 2).unwrap();
    assert_eq!(d.per.class_count(1000), Some(1));
    assert_eq!(d.classes_by_rank.last(), Some(&(2, 1)));
}

#[test]
fn dense_lfp_needs_dense_parameters() {
    let f = FunctorExpr::sum(FunctorExpr::konst("A"), FunctorExpr::exp("B", FunctorExpr::Id));
    let vee = catalog_basis("vee").unwrap();
    let nd = Per::classes("v", &vee, &[vec![Tok::Atom(1)]], Flags::default()).unwrap();
    let env = Env::new().with("A", nd).with("B", Per::sierpinski());
    assert!(matches!(dense_lfp(&f, &env, Ordinal::OMEGA, 2), Err(DenseError::NonDenseParameter(a)) if a == "A"));
}
