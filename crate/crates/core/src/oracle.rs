//! Exhaustive oracle suites over the small catalog carriers.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::basis::{catalog, enumerate_monotone_maps, Basis, FinitePoset, Kind, LimitData, Tok};
use crate::construct::{fun_basis, table_embedding, table_of, Embedding};
use crate::functor::{apply_functor_domain, functor_emb, Env, FunctorExpr};
use crate::per::{
    apply_functor_per, check_property, is_equiembedding, limit_per, per_construct, rank_of, Flags, Per, PerOp,
    Prop, Verdict,
};

/// Budget for the exhaustive checks; every carrier here is far smaller.
const BOUND: usize = 10_000;

#[derive(Clone, Debug, Default)]
pub struct OracleReport {
    pub suite: String,
    pub cases: usize,
    pub failures: Vec<String>,
}

impl OracleReport {
    fn new(suite: &str) -> OracleReport {
        OracleReport { suite: suite.to_string(), ..OracleReport::default() }
    }

    pub fn holds(&self) -> bool {
        self.cases > 0 && self.failures.is_empty()
    }

    fn record(&mut self, what: impl FnOnce() -> String, v: Verdict) {
        self.cases += 1;
        match v {
            Verdict::Holds => {}
            Verdict::Fails(w) => self.failures.push(format!("{}: {w}", what())),
            Verdict::Unknown(n) => self.failures.push(format!("{}: undecided after {n} tokens", what())),
        }
    }
}

pub const SUITES: &[&str] = &["fun-space", "per-preservation", "limit-chains", "standard-reps"];

fn small_catalog(max_size: usize) -> Vec<(FinitePoset, Basis)> {
    catalog()
        .into_iter()
        .filter(|p| p.len() <= max_size)
        .map(|p| {
            let b = p.to_basis().expect("catalog posets are domains");
            (p, b)
        })
        .collect()
}

/// `fun_basis(D, E)` against the brute-force monotone maps, for every ordered
/// pair of catalog posets: same set of value tables, same order.
pub fn fun_space_oracle(max_size: usize) -> OracleReport {
    let mut r = OracleReport::new("fun-space");
    let cat = small_catalog(max_size);
    for (p, d) in &cat {
        for (q, e) in &cat {
            let v = fun_space_case(p, d, q, e);
            r.record(|| format!("[{} -> {}]", p.name, q.name), v);
        }
    }
    r
}

fn fun_space_case(p: &FinitePoset, d: &Basis, q: &FinitePoset, e: &Basis) -> Verdict {
    let f = match fun_basis(d, e) {
        Ok(f) => f,
        Err(err) => return Verdict::Fails(err.to_string()),
    };
    let Kind::Fun { info, .. } = f.kind() else {
        return Verdict::Fails("not a function space".into());
    };
    let toks = f.tokens(BOUND);
    if toks.truncated {
        return Verdict::Unknown(BOUND);
    }
    let atom = |t: &Tok| match t {
        Tok::Atom(i) => *i as usize,
        _ => usize::MAX,
    };
    let tables: Vec<Vec<usize>> = toks
        .toks
        .iter()
        .map(|t| table_of(d, e, info, t.as_steps().unwrap_or(&[])).iter().map(atom).collect())
        .collect();
    // `table_of` follows the exponent's token order, which is the poset's.
    let mut got: Vec<Vec<usize>> = tables.clone();
    got.sort();
    let mut want = enumerate_monotone_maps(p, q);
    want.sort();
    if got != want {
        return Verdict::Fails(format!("{} tokens against {} monotone maps", got.len(), want.len()));
    }
    for (i, a) in toks.toks.iter().enumerate() {
        for (j, b) in toks.toks.iter().enumerate() {
            let pointwise = (0..p.len()).all(|x| q.leq[tables[i][x]][tables[j][x]]);
            if f.leq(a, b) != pointwise {
                return Verdict::Fails(format!("order differs at {} and {}", f.pretty(a), f.pretty(b)));
            }
        }
    }
    Verdict::Holds
}

/// Every symmetric-transitive relation on the tokens of a finite carrier.
pub fn all_pers(carrier: &Basis) -> Vec<Per> {
    let toks = carrier.finite_tokens(BOUND).expect("finite carrier");
    let n = toks.len();
    let mut out = Vec::new();
    // Restricted growth strings over n + 1 labels, label 0 meaning "not total".
    let mut labels = vec![0usize; n];
    fn rec(i: usize, max: usize, labels: &mut Vec<usize>, toks: &[Tok], carrier: &Basis, out: &mut Vec<Per>) {
        if i == labels.len() {
            let classes: Vec<Vec<Tok>> = (1..=max)
                .map(|c| (0..labels.len()).filter(|&k| labels[k] == c).map(|k| toks[k].clone()).collect())
                .collect();
            let name = format!("{}#{}", carrier.name(), out.len());
            out.push(Per::classes(&name, carrier, &classes, Flags::default()).expect("valid classes"));
            return;
        }
        for c in 0..=max + 1 {
            labels[i] = c;
            rec(i + 1, max.max(c), labels, toks, carrier, out);
        }
    }
    rec(0, 0, &mut labels, &toks, carrier, &mut out);
    out
}

fn clc(p: &Per) -> Verdict {
    [Prop::Convex, Prop::Local, Prop::Complete]
        .into_iter()
        .fold(Verdict::Holds, |v, prop| v.and(check_property(p, prop, BOUND)))
}

fn embeddings(src: &Basis, dst: &Basis, p: &FinitePoset, q: &FinitePoset) -> Vec<Embedding> {
    enumerate_monotone_maps(p, q)
        .into_iter()
        .filter_map(|m| {
            let table = m.iter().enumerate().map(|(i, &j)| (Tok::Atom(i as u32), Tok::Atom(j as u32))).collect();
            table_embedding(src, dst, table).ok()
        })
        .collect()
}

/// The shapes `F` whose action on equiembeddings is checked: `Id` next to a
/// fixed parameter `E` under each constructor.
fn shapes() -> Vec<FunctorExpr> {
    let (id, e) = (FunctorExpr::Id, FunctorExpr::konst("E"));
    vec![
        FunctorExpr::sum(id.clone(), e.clone()),
        FunctorExpr::sum(e.clone(), id.clone()),
        FunctorExpr::prod(id.clone(), e.clone()),
        FunctorExpr::prod(e, id.clone()),
        FunctorExpr::exp("E", id),
    ]
}

/// Sum and product preserve convex, local and complete pers; so does the
/// function space with a dense exponent; and the constructors send
/// equiembeddings to equiembeddings. Exhaustive over every per on every
/// catalog carrier with at most `max_size` elements.
pub fn per_preservation_oracle(max_size: usize) -> OracleReport {
    let mut r = OracleReport::new("per-preservation");
    let cat = small_catalog(max_size);
    let pers: Vec<Per> = cat.iter().flat_map(|(_, b)| all_pers(b)).collect();
    let good: Vec<&Per> = pers.iter().filter(|p| clc(p).holds()).collect();
    let dense: Vec<&Per> = pers.iter().filter(|p| check_property(p, Prop::Dense, BOUND).holds()).collect();
    for &d in &good {
        for &e in &good {
            for op in [PerOp::Sum, PerOp::Prod] {
                let v = per_construct(op, d, e).map(|p| clc(&p)).unwrap_or_else(|err| Verdict::Fails(err.to_string()));
                r.record(|| format!("{op:?}({}, {})", d.name(), e.name()), v);
            }
        }
    }
    for &b in &dense {
        for &d in &good {
            let v = per_construct(PerOp::Fun, b, d).map(|p| clc(&p)).unwrap_or_else(|err| Verdict::Fails(err.to_string()));
            r.record(|| format!("[{} -> {}]", b.name(), d.name()), v);
        }
    }
    for (p, src) in &cat {
        for (q, dst) in &cat {
            let src_pers: Vec<&Per> = pers.iter().filter(|x| x.carrier().ptr_eq(src)).collect();
            let dst_pers: Vec<&Per> = pers.iter().filter(|x| x.carrier().ptr_eq(dst)).collect();
            for f in embeddings(src, dst, p, q) {
                for &d in &src_pers {
                    for &d2 in &dst_pers {
                        if !is_equiembedding(&f, d, d2, BOUND).holds() {
                            continue;
                        }
                        for e in &pers {
                            for g in shapes() {
                                let v = image_case(&g, &f, d, d2, e);
                                r.record(|| format!("{g} on {} -> {} with E = {}", d.name(), d2.name(), e.name()), v);
                            }
                        }
                    }
                }
            }
        }
    }
    r
}

fn image_case(g: &FunctorExpr, f: &Embedding, d: &Per, d2: &Per, e: &Per) -> Verdict {
    let env = Env::new().with("E", e.clone());
    let run = || -> Result<Verdict, String> {
        let s = apply_functor_domain(g, f.source(), &env).map_err(|x| x.to_string())?;
        let t = apply_functor_domain(g, f.target(), &env).map_err(|x| x.to_string())?;
        let emb = functor_emb(g, f, &s, &t);
        let ps = apply_functor_per(g, d, &s, &env).map_err(|x| x.to_string())?;
        let pt = apply_functor_per(g, d2, &t, &env).map_err(|x| x.to_string())?;
        Ok(is_equiembedding(&emb, &ps, &pt, BOUND))
    };
    run().unwrap_or_else(Verdict::Fails)
}

/// A chain `D_0 -> D_1 -> D_2` of catalog carriers with clc pers and
/// equiembeddings between them.
#[derive(Clone, Debug)]
pub struct SmallChain {
    pub pers: Vec<Per>,
    pub embs: Vec<Embedding>,
}

/// Every three-stage chain over catalog carriers with at most `max_size`
/// elements, in a fixed order.
pub fn small_chains(max_size: usize) -> Vec<SmallChain> {
    let cat = small_catalog(max_size);
    let good: Vec<Vec<Per>> = cat.iter().map(|(_, b)| all_pers(b).into_iter().filter(|p| clc(p).holds()).collect()).collect();
    let mut links: Vec<(usize, usize, Embedding)> = Vec::new();
    for (i, (p, a)) in cat.iter().enumerate() {
        for (j, (q, b)) in cat.iter().enumerate() {
            for f in embeddings(a, b, p, q) {
                links.push((i, j, f));
            }
        }
    }
    let mut out = Vec::new();
    for (i, j, f) in &links {
        for (j2, k, g) in links.iter().filter(|l| l.0 == *j) {
            debug_assert_eq!(j, j2);
            for d0 in &good[*i] {
                for d1 in good[*j].iter().filter(|d1| is_equiembedding(f, d0, d1, BOUND).holds()) {
                    for d2 in good[*k].iter().filter(|d2| is_equiembedding(g, d1, d2, BOUND).holds()) {
                        out.push(SmallChain { pers: vec![d0.clone(), d1.clone(), d2.clone()], embs: vec![f.clone(), g.clone()] });
                    }
                }
            }
        }
    }
    out
}

/// `count` chains drawn from [`small_chains`] over carriers of at most
/// `max_size` elements, in an order fixed by `seed`.
/// Each chain contributes two cases: the limit per is a per passing
/// convex/local/complete, and related elements share their rank.
pub fn limit_chain_oracle(max_size: usize, count: usize, seed: u64) -> OracleReport {
    let mut r = OracleReport::new("limit-chains");
    let mut chains = small_chains(max_size);
    chains.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    // Prefer chains that grow, so the limit is not just its first stage.
    chains.sort_by_key(|c| std::cmp::Reverse(distinct_carriers(c)));
    for c in chains.iter().take(count) {
        let name = c.pers.iter().map(|p| p.name().to_string()).collect::<Vec<_>>().join(" -> ");
        let (per, rank) = limit_case(c);
        r.record(|| format!("{name}: per"), per);
        r.record(|| format!("{name}: rank"), rank);
    }
    r
}

fn distinct_carriers(c: &SmallChain) -> usize {
    let mut s = BTreeSet::new();
    for p in &c.pers {
        s.insert(p.carrier().name().to_string());
    }
    s.len()
}

/// The limit per of a small chain.
pub fn small_limit(c: &SmallChain) -> Result<Per, String> {
    let stages: Vec<Basis> = c.pers.iter().map(|p| p.carrier().clone()).collect();
    let lim = Basis::new("lim", Kind::Limit(Arc::new(LimitData { stages, embs: c.embs.clone() })));
    limit_per("lim", &c.pers, &lim, BOUND).map_err(|e| e.to_string())
}

fn limit_case(c: &SmallChain) -> (Verdict, Verdict) {
    let p = match small_limit(c) {
        Ok(p) => p,
        Err(e) => return (Verdict::Fails(e), Verdict::Unknown(0)),
    };
    let lim = p.carrier();
    let toks = lim.tokens(BOUND);
    if toks.truncated {
        return (Verdict::Unknown(BOUND), Verdict::Unknown(BOUND));
    }
    let ts: Vec<&Tok> = toks.toks.iter().filter(|t| p.is_total(t)).collect();
    let mut per = Verdict::Holds;
    let mut rank = Verdict::Holds;
    for x in &ts {
        for y in &ts {
            if per.holds() && p.related(x, y) != p.related(y, x) {
                per = Verdict::Fails(format!("not symmetric at {} and {}", lim.pretty(x), lim.pretty(y)));
            }
            if rank.holds() && p.related(x, y) && rank_of(&p, x) != rank_of(&p, y) {
                rank = Verdict::Fails(format!(
                    "{} ~ {} but their ranks are {:?} and {:?}",
                    lim.pretty(x),
                    lim.pretty(y),
                    rank_of(&p, x),
                    rank_of(&p, y)
                ));
            }
            for z in &ts {
                if per.holds() && p.related(x, y) && p.related(y, z) && !p.related(x, z) {
                    per = Verdict::Fails(format!("not transitive at {}", lim.pretty(y)));
                }
            }
        }
    }
    (per.and(clc(&p)), rank)
}

#[cfg(test)]
mod tests;
