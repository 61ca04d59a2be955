use super::*;
use std::collections::BTreeMap;

use crate::basis::catalog_basis;

fn running_with(a: Per) -> (FunctorExpr, Env) {
    let f = FunctorExpr::sum(FunctorExpr::konst("A"), FunctorExpr::exp("B", FunctorExpr::Id));
    (f, Env::new().with("A", a).with("B", Per::sierpinski()))
}

fn cx(a: Per, rank_bound: u32) -> Arc<EtaCx> {
    let (f, env) = running_with(a);
    EtaCx::new(&f, &env, EtaOpts::new(rank_bound)).unwrap()
}

const TT: Tok = Tok::Atom(1);

/// `(0, a)` and `(1, const d)` as elements of `D`.
fn left(c: &EtaCx, a: Tok) -> Tok {
    c.iso.inv(&Tok::inj(0, a)).unwrap()
}

fn konst(c: &EtaCx, d: Tok) -> Tok {
    let bot = c.env.get("B").unwrap().carrier().bottom();
    c.iso.inv(&Tok::inj(1, Tok::steps(vec![(bot, d)]))).unwrap()
}

#[test]
fn input_per_shapes() {
    let (f, env) = running_with(Per::sierpinski());
    let t = build_input_per(&f, &env).unwrap();
    assert_eq!(t.per.carrier().tokens(100).toks.len(), 2);
    assert_eq!(t.per.class_count(100), Some(1));
    assert_eq!(atomic_subfunctors(&f), vec![Atomic::Const("A".into()), Atomic::Id]);
    assert_eq!((t.kids[0].atoms.clone(), t.kids[1].atoms.clone()), (0..1, 1..2));
    let id = build_input_per(&FunctorExpr::Id, &env).unwrap();
    assert_eq!(id.per.carrier().tokens(10).toks.len(), 1);
    assert_eq!(atomic_subfunctors(&FunctorExpr::Id), vec![Atomic::Id]);
    let p = FunctorExpr::prod(FunctorExpr::konst("A"), FunctorExpr::konst("B"));
    let tp = build_input_per(&p, &env).unwrap();
    assert!(matches!(tp.per.carrier().kind(), Kind::Sum { parts, strict: false } if parts.len() == 2));
    assert_eq!(tp.per.carrier().tokens(10).toks.len(), 3);
}

#[test]
fn non_dense_exponent_is_rejected() {
    let vee = catalog_basis("vee").unwrap();
    let nd = Per::classes("v", &vee, &[vec![Tok::Atom(1)]], Flags::default()).unwrap();
    let f = FunctorExpr::exp("B", FunctorExpr::Id);
    let env = Env::new().with("B", nd);
    assert!(matches!(build_input_per(&f, &env), Err(EtaError::NonDenseExponent(b)) if b == "B"));
}

#[test]
fn path_codes() {
    assert_eq!(encode_path(&[], 2), 1);
    assert_eq!(encode_path(&[1, 1], 2), 1 * 9 + 3 + 1);
    for path in [vec![], vec![0], vec![1, 0, 1], vec![1, 1, 1, 1]] {
        assert_eq!(decode_path(encode_path(&path, 2), 2), Some(path));
    }
    assert_eq!(decode_path(0, 2), None);
    assert_eq!(decode_path(2, 2), None);
    // digit 2 is never used with two atoms
    assert_eq!(decode_path(5, 2), None);
}

#[test]
fn eta_on_atomic_and_left_elements() {
    let f = FunctorExpr::konst("A");
    let env = Env::new().with("A", Per::sierpinski());
    let c = EtaCx::new(&f, &env, EtaOpts::new(1)).unwrap();
    assert_eq!(c.eval_eta(&TT, &Tok::Atom(0)), Tok::inj(0, TT));
    let r = cx(Per::sierpinski(), 2);
    let x = Tok::inj(0, TT);
    for t in r.input.per.carrier().tokens(10).toks {
        assert_eq!(r.eval_eta(&x, &t), Tok::inj(0, TT));
    }
    assert_eq!(r.eta(&r.fd.carrier().bottom()), Tok::empty_steps());
}

#[test]
fn eta_is_equivariant_and_equi_injective_at_stage_two() {
    let r = cx(Per::sierpinski(), 2);
    let (e, i) = eta_injectivity(&r, 2);
    assert!(e.holds() && i.holds(), "{e:?} {i:?}");
    let m = r.eta_map();
    let v = crate::per::is_equivariant(&m, &r.fd, &r.eta_space, 400);
    assert!(!v.fails(), "{v:?}");
}

#[test]
fn theta_examples() {
    let r = cx(Per::sierpinski(), 2);
    assert_eq!(r.theta(&Tok::empty_steps()).unwrap(), r.fd.carrier().bottom());
    let f = FunctorExpr::konst("A");
    let c3 = Per::classes("c3", &catalog_basis("vee").unwrap(), &[vec![Tok::Atom(1)], vec![Tok::Atom(2)]], Flags::all_yes())
        .unwrap();
    let env = Env::new().with("A", c3);
    let c = EtaCx::new(&f, &env, EtaOpts::new(1)).unwrap();
    let t = Tok::Atom(0);
    let q = Tok::steps(vec![(t.clone(), Tok::inj(0, Tok::Atom(1)))]);
    assert_eq!(c.theta(&q).unwrap(), Tok::Atom(1));
    let both = [(t.clone(), Tok::inj(0, Tok::Atom(0))), (t.clone(), Tok::inj(0, Tok::Atom(1)))];
    assert_eq!(c.theta_raw(&both).unwrap(), Tok::Atom(1));
    let clash = [(t.clone(), Tok::inj(0, Tok::Atom(1))), (t, Tok::inj(0, Tok::Atom(2)))];
    assert!(matches!(c.theta_raw(&clash), Err(EtaError::Inconsistent(_))));
}

#[test]
fn eta_theta_adjunction_on_small_compacts() {
    let r = cx(Per::sierpinski(), 2);
    let s = adjunction_scan(&r, 2).unwrap();
    assert!(s.holds(), "{:?}", s.failures);
    assert!(s.witnessed > 10 && s.targets > 10, "{s:?}");
}

#[test]
fn theta_preserves_witnesses() {
    // q ≺ [η(x)] implies ϑ(q) ≺ [x]
    let r = cx(Per::sierpinski(), 2);
    let tb = r.input.per.carrier();
    let ws: Vec<Tok> = r.w.carrier().tokens(1000).toks;
    for x in r.totals_by_rank().iter().take(6) {
        let y = r.iso.fwd(x);
        for t in tb.tokens(10).toks {
            for w in &ws {
                let Some(q) = construct::normalize(tb, r.w.carrier(), &[(t.clone(), w.clone())]) else { continue };
                if !r.witnessed_by(&q, &y) {
                    continue;
                }
                let th = r.theta_raw(q.as_steps().unwrap()).unwrap();
                assert!(prec_check(&r.fd, &th, &y, 10_000).unwrap(), "{}", r.fd.pretty(&th));
            }
        }
    }
}

#[test]
fn zeta_examples() {
    let r = cx(Per::flatbool(), 2);
    let u = r.u.carrier().bottom();
    let x = left(&r, TT);
    let rec = r.evaluate_zeta(&x, &u);
    assert_eq!((rec.path.clone(), rec.code, rec.result.clone(), rec.halted), (vec![], 1, Tok::inj(0, TT), true));
    let y = konst(&r, x.clone());
    let rec = r.evaluate_zeta(&y, &u);
    assert_eq!(rec.path, vec![1]);
    assert_eq!(rec.sequence.len(), 1);
    assert!(r.d.related(&rec.sequence[0], &x));
    assert_eq!(rec.result, Tok::inj(0, TT));
    assert_eq!(r.zeta(&y, &u), Tok::pair(Tok::inj(0, TT), Tok::Atom(encode_path(&[1], 2) as u32 + 1)));
    // bottom of D halts at once with a bottom result
    let b = r.evaluate_zeta(&r.d.carrier().bottom(), &u);
    assert!(b.halted && b.result == Tok::Bot && b.path.is_empty());
}

#[test]
fn totals_halt_within_their_rank() {
    let r = cx(Per::sierpinski(), 3);
    let us = r.u.totals(1000).toks;
    for x in r.totals_by_rank() {
        let rank = r.rank(x).unwrap();
        if rank > 3 {
            continue;
        }
        for u in &us {
            let rec = r.evaluate_zeta(x, u);
            assert!(rec.halted && rec.result != Tok::Bot, "{}", r.d.pretty(x));
            assert!(rec.steps() as u32 <= rank);
        }
    }
}

#[test]
fn equivalent_inputs_evaluate_alike() {
    let r = cx(Per::flatbool(), 3);
    let us = r.u.totals(1000).toks;
    let mut reps: BTreeMap<(Tok, Tok), (Tok, Tok)> = BTreeMap::new();
    for x in r.totals_by_rank().iter().filter(|x| r.rank(x).is_some_and(|k| k <= 3)) {
        for u in &us {
            let key = (r.d.key(x).unwrap(), r.u.key(u).unwrap());
            let (x0, u0) = reps.entry(key).or_insert((x.clone(), u.clone())).clone();
            let (a, b) = (r.evaluate_zeta(&x0, &u0), r.evaluate_zeta(x, u));
            assert_eq!(a.code, b.code);
            assert!(r.e.related(&r.zeta(&x0, &u0), &r.zeta(x, u)), "{}", r.d.pretty(x));
        }
    }
    assert!(reps.len() >= 4);
}

#[test]
fn evaluation_is_monotone() {
    let r = cx(Per::sierpinski(), 2);
    let db = r.d.carrier();
    let xs = limit_tokens_upto(db, 2, 1000).toks;
    let us = r.u.carrier().tokens(1000).toks;
    let ub = r.u.carrier();
    for x in &xs {
        for x2 in &xs {
            if !db.leq(x, x2) {
                continue;
            }
            for u in &us {
                for u2 in &us {
                    if !ub.leq(u, u2) {
                        continue;
                    }
                    let (a, b) = (r.evaluate_zeta(x, u), r.evaluate_zeta(x2, u2));
                    if !(a.halted && b.halted) {
                        continue;
                    }
                    assert!(a.steps() <= b.steps());
                    for m in 0..a.steps() {
                        assert!(db.leq(&a.sequence[m], &b.sequence[m]));
                        assert_eq!(a.path[m], b.path[m]);
                    }
                    if a.steps() < b.steps() {
                        assert_eq!(a.result, Tok::Bot);
                    }
                    assert!(r.e.carrier().leq(&r.zeta(x, u), &r.zeta(x2, u2)));
                }
            }
        }
    }
}

#[test]
fn theta_bar_examples() {
    let r = cx(Per::flatbool(), 2);
    let (z, tree) = r.theta_bar(&Tok::empty_steps(), None).unwrap();
    assert_eq!(z, r.d.carrier().bottom());
    assert!(tree.nodes.is_empty());
    let x = left(&r, TT);
    let q = Tok::steps(vec![(r.u.carrier().bottom(), Tok::pair(Tok::inj(0, TT), Tok::Atom(2)))]);
    let (z, tree) = r.theta_bar(&q, Some(&x)).unwrap();
    assert_eq!(tree.roots.len(), 1);
    assert_eq!(tree.nodes.len(), 1);
    assert!(tree.nodes[0].maximal);
    assert!(r.d.carrier().leq(&z, &x));
    assert!(r.d.related(&z, &x));
    // the same value paired with a code for a path through the constant
    let bad = Tok::steps(vec![(r.u.carrier().bottom(), Tok::pair(Tok::inj(0, TT), Tok::Atom(4)))]);
    assert!(matches!(r.theta_bar(&bad, None), Err(EtaError::MalformedCode(3))));
    let ff = left(&r, Tok::Atom(2));
    assert!(matches!(r.theta_bar(&q, Some(&ff)), Err(EtaError::NotWitnessed(_))));
}

#[test]
fn malformed_codes_are_reported() {
    let r = cx(Per::flatbool(), 2);
    let u = r.u.carrier().bottom();
    let with_code = |c: u32| Tok::steps(vec![(u.clone(), Tok::pair(Tok::inj(0, TT), Tok::Atom(c + 1)))]);
    // 2 has no sentinel, 3 = 1·0 runs through the constant occurrence
    assert!(matches!(r.theta_bar(&with_code(2), None), Err(EtaError::MalformedCode(2))));
    assert!(matches!(r.theta_bar(&with_code(3), None), Err(EtaError::MalformedCode(3))));
    // a path longer than the support
    let long = encode_path(&[1, 1, 1], 2) as u32;
    assert!(matches!(r.theta_bar(&with_code(long), None), Err(EtaError::MalformedCode(_))));
}

#[test]
fn theta_bar_on_compacts_below_eta_bar() {
    let r = cx(Per::sierpinski(), 2);
    let db = r.d.carrier();
    let ds = limit_tokens_upto(db, r.cap(), 10_000).toks;
    let bars: Vec<Tok> = ds.iter().map(|d| r.eta_bar(d)).collect();
    let fb = r.bar_space.carrier();
    let (ub, eb) = (r.u.carrier(), r.e.carrier());
    for x in r.totals_by_rank().iter().filter(|x| r.rank(x).is_some_and(|k| k <= 2)) {
        let full = r.eta_bar(x);
        let steps = full.as_steps().unwrap().to_vec();
        assert!(steps.len() < 12);
        for mask in 0u32..(1 << steps.len()) {
            let sub: Vec<(Tok, Tok)> = (0..steps.len()).filter(|j| mask & (1 << j) != 0).map(|j| steps[j].clone()).collect();
            let q = construct::normalize(ub, eb, &sub).unwrap();
            let (z, _) = r.theta_bar(&q, Some(x)).unwrap();
            assert!(prec_check(&r.d, &z, x, 10_000).unwrap());
            for (d, bd) in ds.iter().zip(&bars) {
                assert_eq!(db.leq(&z, d), fb.leq(&q, bd), "q = {}, r = {}", fb.pretty(&q), db.pretty(d));
            }
        }
    }
}

/// The subset formula of the sum case, on top of the component `ϑ`.
fn theta_sum_by_subsets(c: &EtaCx, steps: &[(Tok, Tok)]) -> Tok {
    let tb = c.input.per.carrier();
    let Kind::Sum { parts, .. } = c.fd.carrier().kind() else { unreachable!() };
    let steps: Vec<&(Tok, Tok)> = steps.iter().filter(|(_, q)| *q != Tok::Bot).collect();
    if steps.is_empty() {
        return Tok::Bot;
    }
    let k = steps[0].1.as_inj().unwrap().0 as usize;
    let i = if c.input.kids[0].atoms.contains(&k) { 0 } else { 1 };
    let mut acc = parts[i].bottom();
    for mask in 1u32..(1 << steps.len()) {
        let sub: Vec<&(Tok, Tok)> = (0..steps.len()).filter(|j| mask & (1 << j) != 0).map(|j| steps[j]).collect();
        if !tb.cons(sub.iter().map(|(p, _)| p)) {
            continue;
        }
        let proj: Vec<(Tok, Tok)> = sub
            .iter()
            .map(|(p, q)| {
                let (p0, p1) = p.as_pair().unwrap();
                (if i == 0 { p0 } else { p1 }.clone(), q.clone())
            })
            .collect();
        let v = c.theta_at(&c.input.kids[i], &parts[i], &proj).unwrap();
        acc = parts[i].join(&acc, &v).unwrap();
    }
    Tok::inj(i as u32, acc)
}

#[test]
fn sum_case_agrees_with_the_subset_formula() {
    let r = cx(Per::sierpinski(), 2);
    let tb = r.input.per.carrier();
    let ts = tb.tokens(10).toks;
    let ws: Vec<Tok> = r.w.carrier().tokens(1000).toks.into_iter().filter(|w| *w != Tok::Bot).collect();
    let mut n = 0;
    for (a, wa) in ts.iter().flat_map(|t| ws.iter().map(move |w| (t, w))) {
        for (b, wb) in ts.iter().flat_map(|t| ws.iter().map(move |w| (t, w))) {
            let fam = vec![(a.clone(), wa.clone()), (b.clone(), wb.clone())];
            let Some(q) = construct::normalize(tb, r.w.carrier(), &fam) else { continue };
            if r.find_witness(&q).is_none() {
                continue;
            }
            let s = q.as_steps().unwrap();
            assert_eq!(r.theta_raw(s).unwrap(), theta_sum_by_subsets(&r, s));
            n += 1;
        }
    }
    assert!(n > 10);
}

#[test]
fn pruned_tree_agrees_with_the_full_tree() {
    let r = cx(Per::sierpinski(), 2);
    let (ub, eb) = (r.u.carrier(), r.e.carrier());
    for x in r.totals_by_rank().iter().filter(|x| r.rank(x).is_some_and(|k| k <= 2)) {
        let full = r.eta_bar(x);
        let steps = full.as_steps().unwrap().to_vec();
        for mask in 0u32..(1 << steps.len()) {
            let sub: Vec<(Tok, Tok)> = (0..steps.len()).filter(|j| mask & (1 << j) != 0).map(|j| steps[j].clone()).collect();
            let q = construct::normalize(ub, eb, &sub).unwrap();
            let (a, ta) = r.theta_bar(&q, Some(x)).unwrap();
            let (b, tf) = r.theta_bar_full(&q, Some(x)).unwrap();
            assert_eq!(a, b);
            assert!(ta.nodes.len() <= tf.nodes.len());
            for n in &tf.nodes {
                assert!(n.sets.windows(2).all(|w| w[1] & !w[0] == 0));
                assert_eq!(n.maximal, n.children.is_empty());
            }
        }
    }
}

#[test]
fn dense_image_round_trips() {
    for a in [Per::sierpinski(), Per::flatbool()] {
        let r = cx(a, 3);
        let rep = dense_image_weak_iso(&r).unwrap();
        assert!(rep.holds(), "{:?}", rep.witness());
        assert!(rep.totals > 4);
        assert_eq!(rep.pedigree, Tri::Yes);
        assert!(rep.per.flags().admissible_pedigree.is_yes());
    }
}

#[test]
fn constant_functor_round_trip() {
    let f = FunctorExpr::konst("A");
    let env = Env::new().with("A", Per::flatbool());
    let c = EtaCx::new(&f, &env, EtaOpts::new(2)).unwrap();
    let rep = dense_image_weak_iso(&c).unwrap();
    assert!(rep.holds(), "{:?}", rep.witness());
    for x in c.totals_by_rank() {
        assert_eq!(c.eta_bar(x).step_count(), 1);
    }
}

#[test]
fn injected_fault_withholds_the_pedigree() {
    let (f, env) = running_with(Per::sierpinski());
    let opts = EtaOpts { fault: Some(Fault::ThetaConstBottom), ..EtaOpts::new(2) };
    let c = EtaCx::new(&f, &env, opts).unwrap();
    let rep = dense_image_weak_iso(&c).unwrap();
    assert!(!rep.holds());
    assert!(rep.witness().is_some());
    assert_eq!(rep.pedigree, Tri::Unknown);
}
