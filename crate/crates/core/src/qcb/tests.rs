use super::*;

fn sierpinski_rep() -> StandardRep {
    let x = FiniteSpace::sierpinski();
    let p = Pseudobase::from_lists(&x, &[vec!["top"], vec!["bot", "top"]]).unwrap();
    standard_representation(&x, &p).unwrap()
}

fn bool_space() -> (FiniteSpace, Pseudobase) {
    let x = FiniteSpace::discrete_named(&["tt", "ff"]);
    let p = Pseudobase::from_lists(&x, &[vec!["tt"], vec!["ff"], vec!["tt", "ff"]]).unwrap();
    (x, p)
}

fn running_op() -> QcbOpExpr {
    QcbOpExpr::union(QcbOpExpr::konst("A"), QcbOpExpr::exp("B", QcbOpExpr::Id))
}

fn running_bindings() -> BTreeMap<String, Binding> {
    let (x, p) = bool_space();
    let s = FiniteSpace::sierpinski();
    let ps = Pseudobase::opens(&s);
    BTreeMap::from([("A".to_string(), Binding::Space(x, p)), ("B".to_string(), Binding::Space(s, ps))])
}

#[test]
fn topology_axioms() {
    assert!(FiniteSpace::new(vec!["a".into(), "b".into()], vec![0, 1, 2]).is_err());
    assert!(matches!(FiniteSpace::new(vec!["a".into(), "b".into()], vec![0, 1, 2, 3]), Ok(_)));
    assert!(matches!(
        FiniteSpace::new(vec!["a".into(), "a".into()], vec![0, 3]),
        Err(QcbError::DuplicatePoint(_))
    ));
    let s = FiniteSpace::sierpinski();
    assert!(s.leq(0, 1) && !s.leq(1, 0));
    assert!(!s.is_hausdorff() && FiniteSpace::discrete(3).is_hausdorff());
    assert!(matches!(FiniteSpace::indiscrete(2).check_t0(), Err(QcbError::NotT0(a, b)) if a == "0" && b == "1"));
}

#[test]
fn t0_space_counts() {
    // Labelled T0 topologies are labelled partial orders: 1, 3, 19, 219.
    let counts: Vec<usize> = (1..=4).map(|n| finite_t0_spaces(n).len()).collect();
    assert_eq!(counts, vec![1, 3, 19, 219]);
}

#[test]
fn pseudobase_examples() {
    let s = FiniteSpace::sierpinski();
    let p = Pseudobase::from_lists(&s, &[vec!["top"], vec!["bot", "top"]]).unwrap();
    assert!(validate_pseudobase(&s, &p).holds());
    let q = Pseudobase::from_lists(&s, &[vec!["bot", "top"]]).unwrap();
    let v = validate_pseudobase(&s, &q);
    assert_eq!(v.witness(), Some("convergence clause fails at x = top, U = {top}"));
    for n in 1..=3 {
        for x in finite_t0_spaces(n) {
            assert!(validate_pseudobase(&x, &Pseudobase::opens(&x)).holds());
        }
    }
    let no_top = Pseudobase::from_lists(&s, &[vec!["top"]]).unwrap();
    assert!(validate_pseudobase(&s, &no_top).fails());
    let d = FiniteSpace::discrete(3);
    let gap = Pseudobase::new(vec![0b011, 0b110, 0b111, 0b001, 0b100]);
    assert!(validate_pseudobase(&d, &gap).witness().unwrap().contains("is missing"));
}

#[test]
fn clause_needs_the_least_neighbourhood() {
    // A sequence alternating between a and b converges to x, so a single
    // point set inside each open around x is not enough.
    let x = FiniteSpace::from_lists(&["x", "a", "b"], &[vec![], vec!["a"], vec!["b"], vec!["a", "b"], vec!["x", "a", "b"]])
        .unwrap();
    let p = Pseudobase::closure(&x, &[x.mask(&["x", "a"]).unwrap(), x.mask(&["x", "b"]).unwrap(), 2, 4]);
    assert!(validate_pseudobase(&x, &p).holds(), "the whole space covers N(x)");
    let y = FiniteSpace::from_lists(
        &["x", "a", "b", "c"],
        &[vec![], vec!["a"], vec!["b"], vec!["a", "b"], vec!["x", "a", "b"], vec!["x", "a", "b", "c"]],
    )
    .unwrap();
    let q = Pseudobase::closure(&y, &[y.mask(&["x", "a"]).unwrap(), y.mask(&["x", "b"]).unwrap(), 2, 4]);
    let v = validate_pseudobase(&y, &q);
    assert_eq!(v.witness(), Some("convergence clause fails at x = x, U = {x,a,b}"));
}

#[test]
fn ideals_are_principal() {
    for n in 1..=3 {
        for x in finite_t0_spaces(n) {
            for p in pseudobases_upto(&x, 5) {
                let mut a = ideals(&p);
                let mut b = principal_ideals(&p);
                a.sort();
                b.sort();
                assert_eq!(a, b);
            }
        }
    }
}

#[test]
fn standard_representation_examples() {
    let r = sierpinski_rep();
    assert_eq!(r.per.class_count(100), Some(2));
    let b = r.per.carrier();
    let named: Vec<(String, usize)> = (0..2u32).map(|j| (b.pretty(&Tok::Atom(j)), r.delta[j as usize].unwrap())).collect();
    assert_eq!(named, vec![("{bot,top}".to_string(), 0), ("{top}".to_string(), 1)]);
    let f = r.per.flags();
    assert!(f.clc().is_yes() && f.dense.is_yes() && f.admissible_pedigree.is_yes());

    let (x, p) = bool_space();
    let r = standard_representation(&x, &p).unwrap();
    assert_eq!(r.ideals_checked, 3);
    assert_eq!(r.per.class_count(100), Some(2));
    assert_eq!(r.delta.iter().filter(|d| d.is_some()).count(), 2);

    let i = FiniteSpace::indiscrete(2);
    assert!(matches!(standard_representation(&i, &Pseudobase::opens(&i)), Err(QcbError::NotT0(..))));
    let s = FiniteSpace::sierpinski();
    let bad = Pseudobase::new(vec![s.full()]);
    assert!(matches!(standard_representation(&s, &bad), Err(QcbError::NotAPseudobase(_))));
}

#[test]
fn greatest_representatives() {
    let r = sierpinski_rep();
    assert_eq!(r.greatest, vec![Tok::Atom(0), Tok::Atom(1)]);
    assert!(check_standard_rep(&r).holds());
}

#[test]
fn recovered_pseudobases() {
    let r = sierpinski_rep();
    let (p, v) = recovered_pseudobase(&r);
    assert!(v.holds());
    assert_eq!(p.pretty(&r.space), "{{bot,top}, {top}}");
    let (x, q) = bool_space();
    let (p, v) = recovered_pseudobase(&standard_representation(&x, &q).unwrap());
    assert!(v.holds());
    assert_eq!(p, q);
    let one = FiniteSpace::discrete(1);
    let (p, _) = recovered_pseudobase(&standard_representation(&one, &Pseudobase::opens(&one)).unwrap());
    assert_eq!(p.sets(), &[1]);
}

#[test]
fn small_corpus() {
    let r = standard_corpus(3, 5);
    assert_eq!(r.spaces, 23);
    assert!(r.pseudobases > r.spaces);
    assert!(r.failures.is_empty(), "{:?}", r.failures);
}

#[test]
fn quotients_of_basic_constructions() {
    let o = sierpinski_rep().per;
    let (x, p) = bool_space();
    let b = standard_representation(&x, &p).unwrap().per;
    for op in [crate::per::PerOp::Sum, crate::per::PerOp::Prod, crate::per::PerOp::Fun] {
        for (l, r) in [(&o, &b), (&b, &o), (&o, &o)] {
            let q = crate::per::per_construct(op, l, r).unwrap();
            assert!(qcb1_check(&q, 1000).holds(), "{op:?} {} {}", l.name(), r.name());
        }
    }
    let f = crate::per::per_construct(crate::per::PerOp::Fun, &o, &o).unwrap();
    // Continuous self-maps of Sierpinski space: the two constants and the identity.
    assert_eq!(Quotient::of(&f, 1000).unwrap().len(), 3);
}

#[test]
fn functorial_translation() {
    let r = functorial_representation(&running_op(), &running_bindings()).unwrap();
    assert_eq!(r.functor, FunctorExpr::sum(FunctorExpr::konst("A"), FunctorExpr::exp("B", FunctorExpr::Id)));
    assert_eq!(r.env.get("A").unwrap().class_count(100), Some(2));
    let c = functorial_representation(&QcbOpExpr::konst("A"), &running_bindings()).unwrap();
    assert_eq!(c.functor, FunctorExpr::konst("A"));
    let mut weak = running_bindings();
    let mut fl = Per::sierpinski().flags();
    fl.admissible_pedigree = Tri::Unknown;
    weak.insert("A".into(), Binding::Rep(Per::sierpinski().with_flags(fl)));
    assert!(matches!(
        functorial_representation(&running_op(), &weak),
        Err(QcbError::BadParameterPedigree(a, "admissible_pedigree", "unknown")) if a == "A"
    ));
    assert!(matches!(
        functorial_representation(&QcbOpExpr::konst("C"), &running_bindings()),
        Err(QcbError::UnboundName(c)) if c == "C"
    ));
    assert_eq!(QcbOpExpr::from_functor(&r.functor), running_op());
    assert_eq!(running_op().to_string(), "(A ⊎ [B ⇒ˢ X])");
}

#[test]
fn running_fixed_point() {
    let r = qcb_fixed_point(&running_op(), &running_bindings(), 2).unwrap();
    let counts: Vec<usize> = r.classes_by_rank.iter().map(|c| c.1).collect();
    assert_eq!(counts[0], 2);
    assert!(counts.windows(2).all(|w| w[0] < w[1]), "{counts:?}");
    assert!(r.matching.is_bijection(), "{:?}", r.matching);
    assert_eq!(r.matching.left_classes, counts[2]);
    assert!(!r.qcb1.is_empty());
    assert!(r.qcb1.iter().all(|(_, v)| v.holds()), "{:?}", r.qcb1);
    assert!(r.pedigree.admissible_pedigree.is_yes());
    assert_eq!(r.hausdorff, Some(true));
    assert!(r.holds());
}

#[test]
fn constant_fixed_point() {
    let s = FiniteSpace::sierpinski();
    let b = BTreeMap::from([("S".to_string(), Binding::Space(s.clone(), Pseudobase::opens(&s)))]);
    let r = qcb_fixed_point(&QcbOpExpr::konst("S"), &b, 2).unwrap();
    assert_eq!(r.classes_by_rank.last().unwrap().1, 2);
    assert!(r.matching.is_bijection());
}

fn relabeled() -> (Represented, Represented, Vec<ParamIso>) {
    let left = functorial_representation(&running_op(), &running_bindings()).unwrap();
    let (x, p) = bool_space();
    let x2 = x.relabeled(&["no", "yes"], &[1, 0]).unwrap();
    let p2 = Pseudobase::new(p.sets().iter().map(|&m| (m & 1) << 1 | (m >> 1 & 1)).collect());
    let s = FiniteSpace::sierpinski();
    let s2 = s.relabeled(&["0", "1"], &[0, 1]).unwrap();
    let b2 = BTreeMap::from([
        ("A2".to_string(), Binding::Space(x2, p2)),
        ("B2".to_string(), Binding::Space(s2.clone(), Pseudobase::opens(&s2))),
    ]);
    let op2 = QcbOpExpr::union(QcbOpExpr::konst("A2"), QcbOpExpr::exp("B2", QcbOpExpr::Id));
    let right = functorial_representation(&op2, &b2).unwrap();
    let mut isos = Vec::new();
    for (a, a2, perm) in [("A", "A2", vec![1, 0]), ("B", "B2", vec![0, 1])] {
        let (f, g) = relabel_iso(&left.reps[a], &right.reps[a2], &perm).unwrap();
        isos.push(ParamIso { from: a.into(), to: a2.into(), fwd: f, back: g });
    }
    (left, right, isos)
}

#[test]
fn relabeled_parameters_give_the_same_fixed_point() {
    let (l, r, isos) = relabeled();
    let rep = fixed_point_independence(&l.functor, &l.env, &r.functor, &r.env, &isos, 2).unwrap();
    assert!(rep.params.iter().all(|(_, v)| v.holds()), "{:?}", rep.params);
    assert!(rep.stages.iter().all(Verdict::holds), "{:?}", rep.stages);
    assert!(rep.uniform.holds() && rep.round_trip.holds());
    assert!(rep.matching.is_bijection(), "{:?}", rep.matching);
    assert!(rep.matching.left_classes > 2);
    assert_eq!(rep.matching.left_classes, rep.matching.right_classes);
}

#[test]
fn identity_transfer() {
    let l = functorial_representation(&running_op(), &running_bindings()).unwrap();
    let isos: Vec<ParamIso> = ["A", "B"].iter().map(|a| ParamIso::identity(a, l.env.get(a).unwrap())).collect();
    let rep = fixed_point_independence(&l.functor, &l.env, &l.functor, &l.env, &isos, 2).unwrap();
    assert!(rep.holds());
    let chain = crate::functor::omega_chain(&l.functor, &l.env, 2).unwrap();
    let id = Map::identity(&chain.stages[1]);
    let t = weak_equivalence_transfer(&id, &l.functor, &l.functor, &isos, &chain.stages[2], &chain.stages[2]).unwrap();
    for x in chain.stages[2].tokens(1000).toks {
        assert_eq!(t.apply(&x), Some(x));
    }
}

#[test]
fn shape_mismatch() {
    let l = functorial_representation(&running_op(), &running_bindings()).unwrap();
    let isos: Vec<ParamIso> = ["A", "B"].iter().map(|a| ParamIso::identity(a, l.env.get(a).unwrap())).collect();
    let g = FunctorExpr::prod(FunctorExpr::konst("A"), FunctorExpr::exp("B", FunctorExpr::Id));
    assert!(matches!(
        fixed_point_independence(&l.functor, &l.env, &g, &l.env, &isos, 1),
        Err(QcbError::NotWeaklyEquivalent(_))
    ));
}

#[test]
fn a_wrong_iso_is_caught() {
    let (l, r, mut isos) = relabeled();
    // Collapse the booleans.
    let a = &l.reps["A"];
    let bot = a.per.carrier().bottom();
    let collapse = Map::constant(a.per.carrier(), r.env.get("A2").unwrap().carrier(), bot);
    isos[0].fwd = collapse;
    let rep = fixed_point_independence(&l.functor, &l.env, &r.functor, &r.env, &isos, 1).unwrap();
    assert!(!rep.holds());
    assert!(rep.params[0].1.fails());
}

#[test]
fn corpus_up_to_four_points() {
    let r = standard_corpus(4, 5);
    assert_eq!((r.spaces, r.pseudobases), (242, 876));
    assert!(r.failures.is_empty(), "{:?}", r.failures.first());
}
