use super::*;
use crate::basis::catalog_basis;

#[test]
fn pers_on_small_carriers() {
    // n points: sum over k of S(n + 1, k + 1).
    let counts: Vec<usize> =
        ["one", "chain2", "chain3"].iter().map(|n| all_pers(&catalog_basis(n).unwrap()).len()).collect();
    assert_eq!(counts, vec![2, 5, 15]);
}

#[test]
fn fun_space() {
    let r = fun_space_oracle(4);
    assert_eq!(r.cases, 25);
    assert!(r.holds(), "{:?}", r.failures);
}

#[test]
fn per_preservation() {
    let r = per_preservation_oracle(3);
    assert!(r.cases > 10_000);
    assert!(r.holds(), "{:?}", &r.failures[..r.failures.len().min(5)]);
}

#[test]
fn limit_pers_are_clc() {
    let r = limit_chain_oracle(3, 20, 0);
    assert_eq!(r.cases, 40);
    let bad: Vec<_> = r.failures.iter().filter(|f| !f.contains(": rank:")).collect();
    assert!(bad.is_empty(), "{bad:?}");
}

fn per_on(name: &str, b: &Basis, classes: &[&[&str]]) -> Per {
    let idx = |s: &str| match b.kind() {
        Kind::Finite(f) => Tok::Atom(f.names.iter().position(|n| n == s).unwrap() as u32),
        _ => unreachable!(),
    };
    let cs: Vec<Vec<Tok>> = classes.iter().map(|c| c.iter().map(|s| idx(s)).collect()).collect();
    Per::classes(name, b, &cs, Flags::default()).unwrap()
}

#[test]
fn equivalent_elements_can_differ_in_rank() {
    // bot is total in chain2 and meets a only in vee.
    let (c2, vee) = (catalog_basis("chain2").unwrap(), catalog_basis("vee").unwrap());
    let d0 = per_on("D0", &c2, &[&["bot"]]);
    let d1 = per_on("D1", &vee, &[&["bot", "a"]]);
    let m = [(Tok::Atom(0), Tok::Atom(0)), (Tok::Atom(1), Tok::Atom(2))].into_iter().collect();
    let f = table_embedding(&c2, &vee, m).unwrap();
    assert!(is_equiembedding(&f, &d0, &d1, BOUND).holds());
    let id = Embedding::identity(&vee);
    let c = SmallChain { pers: vec![d0, d1.clone(), d1], embs: vec![f, id] };
    let p = small_limit(&c).unwrap();
    let (bot, a) = (Tok::stage(0, Tok::Atom(0)), Tok::stage(1, Tok::Atom(1)));
    assert!(p.related(&bot, &a));
    assert!(clc(&p).holds());
    assert_eq!((rank_of(&p, &bot), rank_of(&p, &a)), (Some(0), Some(1)));
}
