//! One function per subcommand, each producing a [`Report`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use domania::basis::{check_domain_axioms, Basis, Status as AxiomStatus};
use domania::dense::{check_delta, dense_lfp, DeltaFamily, DenseError, DensePart};
use domania::eta::{adjunction_scan, dense_image_weak_iso, EtaCx, EtaOpts};
use domania::functor::{fixed_point_iso, inductive_limit_domain, omega_chain, Env, FunctorExpr};
use domania::lfp::{counterexample_phi, per_chain_extend, stabilization_probe, ChainOpts, Ordinal, Stabilization};
use domania::oracle::{fun_space_oracle, limit_chain_oracle, per_preservation_oracle, OracleReport};
use domania::per::{is_equiembedding, Per, Verdict};
use domania::qcb::{
    fixed_point_independence, functorial_representation, qcb_fixed_point, relabel_iso, standard_corpus, Binding,
    ParamIso, QcbError, QcbOpExpr,
};

use crate::parse::{parse_equation, Equation, Source};
use crate::report::{dot, Check, Index, Report, StageRow};
use crate::sources::{builtin_per, load_binding, per_env, qcb_bindings, Ctx};

/// Token budget for the counts in stage rows.
pub const COUNT_BUDGET: usize = 20_000;
/// Token budget for the bounded per checks.
const CHECK_BOUND: usize = 400;

/// A usage or input error; the process exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl<E: std::fmt::Display> From<E> for UsageError {
    fn from(e: E) -> UsageError {
        UsageError(e.to_string())
    }
}

type Res<T> = Result<T, UsageError>;

fn all(o: &OracleReport) -> Vec<&String> {
    o.failures.iter().collect()
}

/// `--eq` takes a file path or the equation text itself.
pub fn load_equation(arg: &str, nat_bound: usize) -> Res<(Equation, Ctx)> {
    let p = Path::new(arg);
    let (text, base) = if p.is_file() {
        let text = std::fs::read_to_string(p).map_err(|e| UsageError(format!("{arg}: {e}")))?;
        (text, p.parent().map(Path::to_path_buf).unwrap_or_default())
    } else if arg.contains('=') {
        (arg.to_string(), PathBuf::from("."))
    } else {
        return Err(UsageError(format!("{arg}: no such equation file")));
    };
    let eq = parse_equation(&text).map_err(|e| UsageError(format!("equation: {e}")))?;
    Ok((eq, Ctx { base, nat_bound }))
}

fn count(b: &Basis) -> Option<usize> {
    b.finite_tokens(COUNT_BUDGET).map(|t| t.len())
}

fn row(index: Index, carrier: &Basis, per: Option<&Per>) -> StageRow {
    StageRow {
        index,
        compact_count: count(carrier),
        total_class_count: per.and_then(|p| p.class_count(COUNT_BUDGET)),
    }
}

fn named(o: Ordinal) -> Index {
    match o {
        Ordinal::Fin(n) => Index::Fin(n),
        Ordinal::OmegaPlus(0) => Index::Named("omega".into()),
        Ordinal::OmegaPlus(k) => Index::Named(format!("omega+{k}")),
    }
}

fn axioms_verdict(b: &Basis, bound: usize) -> Verdict {
    let r = check_domain_axioms(b, bound);
    match r.entries.iter().find_map(|e| match &e.status {
        AxiomStatus::Fail(w) => Some(format!("{}: {w}", e.name)),
        AxiomStatus::Pass => None,
    }) {
        Some(w) => Verdict::Fails(w),
        None if r.bounded => Verdict::Unknown(r.examined),
        None => Verdict::Holds,
    }
}

pub struct SolveArgs {
    pub stages: u32,
    pub dot: Option<PathBuf>,
    pub dot_stage: Option<u32>,
}

pub fn solve_domain(eq: &Equation, cx: &Ctx, a: &SolveArgs) -> Res<Report> {
    let env = per_env(eq, cx)?;
    let f = &eq.body;
    let n = a.stages;
    let mut r = Report::new("solve-domain", Some(eq.to_string()));
    let chain = omega_chain(f, &env, n as usize)?;
    let pers = per_chain_extend(f, &env, Ordinal::Fin(n), ChainOpts { cap: n, bound: CHECK_BOUND });
    for (i, s) in chain.stages.iter().enumerate() {
        let p = pers.as_ref().ok().map(|c| &c.finite[i]);
        r.stages.push(row(Index::Fin(i as u32), s, p));
        r.checks.push(Check::new(format!("domain axioms at stage {i}"), "domain-axioms", i as u64, &axioms_verdict(s, 2000)));
    }
    let coh = match chain.check_coherence(COUNT_BUDGET) {
        Ok(()) => Verdict::Holds,
        Err(w) => Verdict::Fails(w),
    };
    r.checks.push(Check::new("chain coherence", "chain-coherence", n as u64, &coh));
    match &pers {
        Ok(c) => {
            r.pedigree = c.finite[n as usize].flags().into();
            r.checks.push(Check::pass("stage pers and equiembeddings", "per-chain-equiembeddings", n as u64));
        }
        Err(e) => r.checks.push(Check::fail("stage pers and equiembeddings", "per-chain-equiembeddings", n as u64, e.to_string())),
    }
    if n >= 1 {
        let lim = inductive_limit_domain(&chain);
        let iso = match fixed_point_iso(f, &env, &lim, COUNT_BUDGET * 5) {
            Ok(rep) => Check::pass(format!("fixed-point iso on {} tokens", rep.checked), "fixed-point-iso", rep.bound as u64),
            Err(e) => Check::fail("fixed-point iso", "fixed-point-iso", n as u64, e.to_string()),
        };
        r.checks.push(iso);
    }
    if let Some(path) = &a.dot {
        let k = a.dot_stage.unwrap_or(n);
        let stage = chain.stages.get(k as usize).ok_or_else(|| UsageError(format!("no stage {k} (built 0..={n})")))?;
        let p = pers.as_ref().ok().map(|c| &c.finite[k as usize]);
        let text = dot(stage, p, COUNT_BUDGET).ok_or_else(|| UsageError(format!("stage {k} exceeds {COUNT_BUDGET} tokens")))?;
        std::fs::write(path, text).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
    }
    Ok(r)
}

fn truncated(env: &Env) -> bool {
    env.params.values().any(|p| p.carrier().has_truncated_leaf())
}

pub fn per_lfp(eq: &Equation, cx: &Ctx, rank_bound: u32, beyond: u32) -> Res<Report> {
    let env = per_env(eq, cx)?;
    let f = &eq.body;
    let cap = if truncated(&env) { cx.nat_bound as u32 + 1 } else { rank_bound + 1 };
    let chain = per_chain_extend(f, &env, Ordinal::OmegaPlus(beyond.max(1)), ChainOpts { cap, bound: CHECK_BOUND })?;
    let mut r = Report::new("per-lfp", Some(eq.to_string()));
    for i in 0..chain.cap() as usize {
        let v = is_equiembedding(&chain.domains.embs[i], &chain.finite[i], &chain.finite[i + 1], CHECK_BOUND);
        r.checks.push(Check::new(format!("f_{i},{} is an equiembedding", i + 1), "per-chain-equiembeddings", i as u64 + 1, &v));
    }
    let probe = stabilization_probe(&chain, rank_bound);
    let rb = rank_bound as u64;
    let last = match &probe {
        Stabilization::StabilizedAt(a) => {
            r.stabilized_at = Some(named(*a));
            r.checks.push(Check::pass(format!("stabilization probe: stabilized at {a}"), "stabilization", rb));
            match a {
                Ordinal::Fin(n) => Some(*n),
                _ => None,
            }
        }
        Stabilization::NotStabilizedWitness { witness, note } => {
            r.checks.push(Check::pass("NotStabilizedWitness", "nonstabilization-witness", rb).with_witness(format!("{witness}: {note}")));
            None
        }
        Stabilization::UnknownAtBound(b) => {
            r.checks.push(Check::new("stabilization probe", "stabilization", rb, &Verdict::Unknown(*b as usize)));
            None
        }
    };
    let upto = last.unwrap_or(chain.cap());
    let mut indexed: Vec<(Index, &Per)> =
        chain.finite.iter().enumerate().take(upto as usize + 1).map(|(i, p)| (Index::Fin(i as u32), p)).collect();
    if let (None, Some(lp)) = (last, &chain.limit) {
        indexed.extend(lp.beyond.iter().enumerate().map(|(k, p)| (named(Ordinal::OmegaPlus(k as u32)), p)));
    }
    // Carriers only grow along the chain, so the first overflow ends counting.
    let mut overflow = false;
    for (i, p) in indexed {
        let rw = if overflow { StageRow { index: i, compact_count: None, total_class_count: None } } else { row(i, p.carrier(), Some(p)) };
        overflow = rw.compact_count.is_none();
        r.stages.push(rw);
    }
    if let Ok(w) = chain.omega() {
        r.pedigree = w.flags().into();
    }
    Ok(r)
}

fn dense_rows(r: &mut Report, stages: &[DensePart], beyond: &[DensePart]) {
    for (i, d) in stages.iter().enumerate() {
        r.stages.push(row(Index::Fin(i as u32), d.per.carrier(), Some(&d.per)));
    }
    if let Some(d) = beyond.first() {
        r.stages.push(row(named(Ordinal::OMEGA), d.per.carrier(), Some(&d.per)));
    }
}

pub fn dense(eq: &Equation, cx: &Ctx, rank_bound: u32) -> Res<Report> {
    let env = per_env(eq, cx)?;
    let f = &eq.body;
    let dl = dense_lfp(f, &env, Ordinal::OMEGA, rank_bound)?;
    let mut r = Report::new("dense", Some(eq.to_string()));
    dense_rows(&mut r, &dl.stages, &dl.beyond);
    for (i, v) in dl.links.iter().enumerate() {
        r.checks.push(Check::new(format!("dense stage {i} -> {} is an equiembedding", i + 1), "dense-links", i as u64 + 1, v));
    }
    match DeltaFamily::new(f, &env, ChainOpts { cap: rank_bound + 1, ..ChainOpts::default() }) {
        Ok(fam) => {
            for n in 1..=rank_bound {
                let c = check_delta(&fam, n)?;
                let v = [&c.fixed_points, &c.increasing, &c.totals, &c.idempotent, &c.equivariant]
                    .into_iter()
                    .fold(Verdict::Holds, |a, b| a.and(b.clone()));
                let name = format!("Delta_{n} ({} tokens) is Fix(r_{n}), increasing, cut by the stage-{n} totals", c.delta_size);
                r.checks.push(Check::new(name, "delta-retraction", n as u64, &v));
            }
        }
        Err(DenseError::TrivialFunctor(w)) => {
            r.checks.push(Check::new("Delta_n and r_n", "delta-retraction", 0, &Verdict::Unknown(0)).with_witness(format!("trivial functor: {w}")));
        }
        Err(e) => return Err(e.into()),
    }
    if let Some(v) = &dl.union_claim {
        r.checks.push(Check::new("every dense token lies in some Delta_n", "dense-union", dl.chain.cap() as u64, v));
    }
    let classes: Vec<String> = dl.classes_by_rank.iter().map(|(k, c)| format!("{k}:{c}")).collect();
    r.checks.push(Check::pass(format!("classes by rank {}", classes.join(" ")), "fixed-point-classes", rank_bound as u64));
    r.pedigree = dl.per.flags().into();
    Ok(r)
}

pub fn eta_roundtrip(eq: &Equation, cx: &Ctx, rank_bound: u32, adj_rank_bound: u32, max_pairs: usize) -> Res<Report> {
    let env = per_env(eq, cx)?;
    let f = &eq.body;
    let mut r = Report::new("eta-roundtrip", Some(eq.to_string()));
    let c = EtaCx::new(f, &env, EtaOpts::new(rank_bound))?;
    let adj = if adj_rank_bound == rank_bound { c.clone() } else { EtaCx::new(f, &env, EtaOpts::new(adj_rank_bound))? };
    let scan = adjunction_scan(&adj, max_pairs)?;
    let v = match scan.failures.first() {
        Some(w) => Verdict::Fails(format!("{w} ({} failures)", scan.failures.len())),
        None => Verdict::Holds,
    };
    let name = format!(
        "theta(q) <= r iff q <= eta(r): {} witnessed compacts against {} targets, at most {max_pairs} step pairs",
        scan.witnessed, scan.targets
    );
    r.checks.push(Check::new(name, "eta-theta-adjunction", adj_rank_bound as u64, &v));
    let w = dense_image_weak_iso(&c)?;
    let rb = rank_bound as u64;
    let n = w.totals;
    r.checks.push(Check::new(format!("eta-bar is equivariant on {n} totals"), "eta-bar-weak-iso", rb, &w.equivariant));
    r.checks.push(Check::new(format!("eta-bar is equi-injective on {n} totals"), "eta-bar-weak-iso", rb, &w.equi_injective));
    r.checks.push(Check::new("theta-bar(eta-bar(x)) ~ x", "eta-bar-weak-iso", rb, &w.round_trip));
    r.checks.push(Check::new("eta-bar(theta-bar(y)) ~ y on image totals", "eta-bar-weak-iso", rb, &w.image_round_trip));
    r.pedigree = w.per.flags().into();
    Ok(r)
}

fn parse_space_files(items: &[String]) -> Res<BTreeMap<String, PathBuf>> {
    let mut m = BTreeMap::new();
    for it in items {
        let (n, p) = it.split_once('=').ok_or_else(|| UsageError(format!("--space-files {it}: expected NAME=PATH")))?;
        m.insert(n.trim().to_string(), PathBuf::from(p.trim()));
    }
    Ok(m)
}

pub fn qcb(eq: &Equation, cx: &Ctx, space_files: &[String], rank_bound: u32) -> Res<Report> {
    let extra = parse_space_files(space_files)?;
    let b = qcb_bindings(eq, &extra, cx)?;
    let op = QcbOpExpr::from_functor(&eq.body);
    let rep = qcb_fixed_point(&op, &b, rank_bound)?;
    let mut r = Report::new("qcb", Some(format!("{} = {op}", eq.var)));
    dense_rows(&mut r, &rep.dense.stages, &rep.dense.beyond);
    let spaces = b.values().filter(|x| matches!(x, Binding::Space(..))).count();
    r.checks.push(Check::pass(
        format!("functorial representation over {spaces} standard representations"),
        "functorial-representation",
        0,
    ));
    let m = &rep.matching;
    let classes: Vec<String> = rep.classes_by_rank.iter().map(|(k, c)| format!("{k}:{c}")).collect();
    let name = format!(
        "classes of D against F(D): {} and {} up to rank {}; by rank {}",
        m.left_classes,
        m.right_classes,
        m.rank_bound,
        classes.join(" ")
    );
    let v = if m.is_bijection() { Verdict::Holds } else { m.verdict.clone() };
    r.checks.push(Check::new(name, "fixed-point-classes", rank_bound as u64, &v));
    for (node, v) in &rep.qcb1 {
        r.checks.push(Check::new(format!("quotient of {node} at one unrolling"), "qcb-constructions", 1, v));
    }
    if let Some(h) = rep.hausdorff {
        let v = Verdict::Holds;
        let what = if h { "Hausdorff" } else { "not Hausdorff" };
        r.checks.push(Check::new(format!("quotient at one unrolling is {what}"), "qcb-constructions", 1, &v));
    }
    r.pedigree = rep.pedigree.into();
    Ok(r)
}

/// A builtin name or a definition file, for `--param`.
fn param_per(arg: &str, nat_bound: usize) -> Res<(Source, Per)> {
    let src = match parse_equation(&format!("param A = {arg}; X = A")) {
        Ok(e) => e.params[0].1.clone(),
        Err(_) => Source::File(arg.to_string()),
    };
    let per = match &src {
        Source::File(f) => match load_binding(Path::new(f), "A")? {
            Binding::Rep(p) => p,
            Binding::Space(x, p) => domania::qcb::standard_representation(&x, &p)?.per.renamed("A"),
        },
        s => builtin_per(s, nat_bound).unwrap(),
    };
    Ok((src, per))
}

pub fn counterexample(param: &str, nat_bound: usize, check_bound: usize) -> Res<Report> {
    let (src, pa) = param_per(param, nat_bound)?;
    let eq = Equation {
        params: vec![("A".into(), src), ("N".into(), Source::Flatnat)],
        var: "X".into(),
        body: FunctorExpr::sum(FunctorExpr::konst("A"), FunctorExpr::exp("N", FunctorExpr::Id)),
    };
    let rep = counterexample_phi(&pa, nat_bound, check_bound)?;
    let mut r = Report::new("counterexample", Some(eq.to_string()));
    let ranks: Vec<String> = rep.ranks.iter().map(|(n, k)| format!("{n}:{}", k.map_or("-".into(), |k| k.to_string()))).collect();
    let v = if rep.ranks_match { Verdict::Holds } else { Verdict::Fails(format!("ranks {}", ranks.join(" "))) };
    r.checks.push(Check::new(format!("rank(x_n) = n for n <= {check_bound}"), "nonstabilization-ranks", check_bound as u64, &v));
    let v = if rep.phi_total_at_omega_plus_1 {
        Verdict::Holds
    } else {
        Verdict::Fails(format!("{} is not total at stage w+1", rep.phi))
    };
    r.checks.push(Check::new("(1, phi) is total at stage w+1", "nonstabilization-witness", nat_bound as u64, &v));
    let c = match rep.probe {
        Stabilization::NotStabilizedWitness { witness, note } => {
            Check::pass("NotStabilizedWitness", "nonstabilization-witness", check_bound as u64).with_witness(format!("{witness}: {note}"))
        }
        other => Check::fail("NotStabilizedWitness", "nonstabilization-witness", check_bound as u64, format!("probe returned {other:?}")),
    };
    r.checks.push(c);
    Ok(r)
}

fn oracle_check(name: &str, anchor: &'static str, bound: u64, cases: usize, failures: &[&String]) -> Check {
    let v = match failures.first() {
        Some(w) => Verdict::Fails(format!("{w} ({} of {cases} cases fail)", failures.len())),
        None if cases == 0 => Verdict::Unknown(0),
        None => Verdict::Holds,
    };
    Check::new(format!("{name}: {cases} cases"), anchor, bound, &v)
}

pub struct OracleArgs {
    pub max_size: usize,
    pub chains: usize,
    pub max_sets: usize,
    pub seed: u64,
}

pub fn oracle(suite: &str, a: &OracleArgs) -> Res<Report> {
    let mut r = Report::new("oracle", None);
    let m = a.max_size as u64;
    match suite {
        "fun-space" => {
            let o = fun_space_oracle(a.max_size);
            r.checks.push(oracle_check("function spaces against monotone maps", "fun-space-oracle", m, o.cases, &all(&o)));
        }
        "per-preservation" => {
            let o = per_preservation_oracle(a.max_size);
            r.checks.push(oracle_check("sum, product, function space and functor images", "per-preservation", m, o.cases, &all(&o)));
        }
        "limit-chains" => {
            let o = limit_chain_oracle(a.max_size, a.chains, a.seed);
            let (rank, per): (Vec<&String>, Vec<&String>) = o.failures.iter().partition(|f| f.contains(": rank:"));
            let half = o.cases / 2;
            r.checks.push(oracle_check("limit per is a convex, local, complete per", "limit-per", m, half, &per));
            r.checks.push(oracle_check("related limit elements have equal rank", "limit-rank", m, half, &rank));
        }
        "standard-reps" => {
            let c = standard_corpus(a.max_size, a.max_sets);
            let refs: Vec<&String> = c.failures.iter().collect();
            let name = format!("standard representations of {} spaces", c.spaces);
            r.checks.push(oracle_check(&name, "standard-representation", m, c.pseudobases, &refs));
        }
        other => return Err(UsageError(format!("unknown suite {other}"))),
    }
    Ok(r)
}

/// `FROM=TO` or `FROM=TO:p>q,...` with points of `FROM` sent to points of `TO`.
struct IsoSpec {
    from: String,
    to: String,
    points: Vec<(String, String)>,
}

fn parse_iso(s: &str) -> Res<IsoSpec> {
    let bad = || UsageError(format!("--iso {s}: expected FROM=TO[:p>q,...]"));
    let (names, pts) = match s.split_once(':') {
        Some((a, b)) => (a, Some(b)),
        None => (s, None),
    };
    let (from, to) = names.split_once('=').ok_or_else(bad)?;
    let mut points = Vec::new();
    for p in pts.into_iter().flat_map(|p| p.split(',')).filter(|p| !p.trim().is_empty()) {
        let (a, b) = p.split_once('>').ok_or_else(bad)?;
        points.push((a.trim().to_string(), b.trim().to_string()));
    }
    Ok(IsoSpec { from: from.trim().to_string(), to: to.trim().to_string(), points })
}

pub fn independence(eq: &Equation, cx: &Ctx, eq2: &Equation, cx2: &Ctx, isos: &[String], rank_bound: u32) -> Res<Report> {
    let specs = isos.iter().map(|s| parse_iso(s)).collect::<Res<Vec<_>>>()?;
    let bl = qcb_bindings(eq, &BTreeMap::new(), cx)?;
    let mut br = qcb_bindings(eq2, &BTreeMap::new(), cx2)?;
    // Per-valued parameters are matched by the identity, so both sides share one per.
    for s in &specs {
        if let (Some(Binding::Rep(p)), Some(Binding::Rep(_))) = (bl.get(&s.from), br.get(&s.to)) {
            if eq.source(&s.from) != eq2.source(&s.to) || !s.points.is_empty() {
                return Err(UsageError(format!("--iso {}={}: per parameters must have the same source", s.from, s.to)));
            }
            br.insert(s.to.clone(), Binding::Rep(p.renamed(&s.to)));
        }
    }
    let (opl, opr) = (QcbOpExpr::from_functor(&eq.body), QcbOpExpr::from_functor(&eq2.body));
    let left = functorial_representation(&opl, &bl)?;
    let right = functorial_representation(&opr, &br)?;
    let mut params = Vec::new();
    for s in &specs {
        let iso = match (left.reps.get(&s.from), right.reps.get(&s.to)) {
            (Some(a), Some(b)) => {
                let (xa, xb) = (&a.space, &b.space);
                let find = |x: &domania::qcb::FiniteSpace, n: &str| {
                    x.point(n).map_err(|_| UsageError(format!("--iso {}={}: no point {n}", s.from, s.to)))
                };
                let mut perm = Vec::new();
                for (i, pt) in xa.points().iter().enumerate() {
                    let j = if s.points.is_empty() {
                        if xb.points().contains(pt) { find(xb, pt)? } else { i }
                    } else {
                        let (_, q) = s.points.iter().find(|(p, _)| p == pt).ok_or_else(|| {
                            UsageError(format!("--iso {}={}: point {pt} is not mapped", s.from, s.to))
                        })?;
                        find(xb, q)?
                    };
                    perm.push(j);
                }
                let mut seen = perm.clone();
                seen.sort_unstable();
                seen.dedup();
                if seen.len() != xb.len() || perm.len() != xb.len() {
                    return Err(UsageError(format!("--iso {}={}: not a bijection of points", s.from, s.to)));
                }
                match relabel_iso(a, b, &perm) {
                    Ok((f, g)) => ParamIso { from: s.from.clone(), to: s.to.clone(), fwd: f, back: g },
                    Err(QcbError::NotWeaklyEquivalent(w)) => return Err(UsageError(format!("--iso {}={}: {w}", s.from, s.to))),
                    Err(e) => return Err(e.into()),
                }
            }
            (None, None) => {
                let p = left.env.get(&s.from)?;
                let id = ParamIso::identity(&s.from, p);
                ParamIso { to: s.to.clone(), ..id }
            }
            _ => return Err(UsageError(format!("--iso {}={}: a space cannot match a per", s.from, s.to))),
        };
        params.push(iso);
    }
    let mut r = Report::new("independence", Some(format!("{} = {opl} ; {} = {opr}", eq.var, eq2.var)));
    let rb = rank_bound as u64;
    let rep = match fixed_point_independence(&left.functor, &left.env, &right.functor, &right.env, &params, rank_bound) {
        Ok(rep) => rep,
        Err(QcbError::NotWeaklyEquivalent(w)) => {
            r.checks.push(Check::fail("weakly equivalent operations", "parameter-isos", rb, w));
            return Ok(r);
        }
        Err(e) => return Err(e.into()),
    };
    for (name, v) in &rep.params {
        r.checks.push(Check::new(format!("parameter iso {name}"), "parameter-isos", rb, v));
    }
    for (n, v) in rep.stages.iter().enumerate() {
        r.checks.push(Check::new(format!("(phi_{n}, chi_{n}) is a weak iso"), "stage-weak-isos", n as u64, v));
    }
    r.checks.push(Check::new("phi and chi families are uniform", "uniform-families", rb, &rep.uniform));
    let m = &rep.matching;
    let v = if m.is_bijection() { Verdict::Holds } else { m.verdict.clone() };
    let name = format!("class matching: {} and {} classes up to rank {}", m.left_classes, m.right_classes, m.rank_bound);
    r.checks.push(Check::new(name, "independence-matching", rb, &v));
    r.checks.push(Check::new("chi_w . phi_w ~ id and phi_w . chi_w ~ id, ranks kept", "independence-round-trip", rb, &rep.round_trip));
    Ok(r)
}
