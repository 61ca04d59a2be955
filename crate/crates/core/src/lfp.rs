//! The transfinite per chain of a strictly positive functor: finite stages,
//! the ω-limit, stages past ω on the fixed carrier, stabilization, and
//! mediating morphisms into algebras.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::basis::{self, Basis, Listing, Tok};
use crate::construct::{self, Embedding};
use crate::functor::{self, omega_chain, Chain, Env, FixedPointIso, FunctorError, FunctorExpr};
use crate::per::{
    apply_functor_per, eval, functor_map, is_equiembedding, is_equivariant, limit_per, rank_of, ElemExpr, EvalCx,
    Map, Per, PerError, PerKind, Verdict,
};

#[derive(Debug, Error)]
pub enum LfpError {
    #[error(transparent)]
    Functor(#[from] FunctorError),
    #[error(transparent)]
    Per(#[from] PerError),
    #[error("parameter {0} has no total element")]
    TrivialParameter(String),
    #[error("not an algebra: {0}")]
    NotAnAlgebra(String),
    #[error("stage {0} is not available")]
    StageOutOfRange(Ordinal),
}

/// Stage indices `n` and `ω+k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ordinal {
    Fin(u32),
    OmegaPlus(u32),
}

impl Ordinal {
    pub const OMEGA: Ordinal = Ordinal::OmegaPlus(0);

    pub fn parse(s: &str) -> Option<Ordinal> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix('w') {
            let rest = rest.trim();
            if rest.is_empty() {
                return Some(Ordinal::OMEGA);
            }
            return rest.strip_prefix('+')?.trim().parse().ok().map(Ordinal::OmegaPlus);
        }
        s.parse().ok().map(Ordinal::Fin)
    }
}

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ordinal::Fin(n) => write!(f, "{n}"),
            Ordinal::OmegaPlus(0) => f.write_str("w"),
            Ordinal::OmegaPlus(k) => write!(f, "w+{k}"),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ChainOpts {
    /// Highest finite stage built; the ω-limit is capped here.
    pub cap: u32,
    /// Token budget for the bounded checks.
    pub bound: usize,
}

impl Default for ChainOpts {
    fn default() -> ChainOpts {
        ChainOpts { cap: 5, bound: 400 }
    }
}

pub struct PerChain {
    pub functor: FunctorExpr,
    pub env: Env,
    pub domains: Chain,
    /// `finite[n]` lives on `domains.stages[n]`.
    pub finite: Vec<Per>,
    pub limit: Option<LimitPart>,
    pub opts: ChainOpts,
}

pub struct LimitPart {
    pub carrier: Basis,
    pub iso: Arc<FixedPointIso>,
    /// `beyond[k]` is stage `ω+k`, all on the limit carrier.
    pub beyond: Vec<Per>,
}

impl PerChain {
    pub fn stage(&self, a: Ordinal) -> Result<&Per, LfpError> {
        let p = match a {
            Ordinal::Fin(n) => self.finite.get(n as usize),
            Ordinal::OmegaPlus(k) => self.limit.as_ref().and_then(|l| l.beyond.get(k as usize)),
        };
        p.ok_or(LfpError::StageOutOfRange(a))
    }

    pub fn omega(&self) -> Result<&Per, LfpError> {
        self.stage(Ordinal::OMEGA)
    }

    pub fn cap(&self) -> u32 {
        self.opts.cap
    }

    /// Stages present, in order.
    pub fn ordinals(&self) -> Vec<Ordinal> {
        let mut v: Vec<Ordinal> = (0..self.finite.len() as u32).map(Ordinal::Fin).collect();
        if let Some(l) = &self.limit {
            v.extend((0..l.beyond.len() as u32).map(Ordinal::OmegaPlus));
        }
        v
    }

    pub fn iso(&self) -> Option<&Arc<FixedPointIso>> {
        self.limit.as_ref().map(|l| &l.iso)
    }

    /// Rank of a total element of the ω-limit, in the chain's convention.
    pub fn rank(&self, x: &Tok) -> Option<u32> {
        rank_of(self.omega().ok()?, x)
    }

    /// Whether an exponent or parameter is a finite stand-in for an infinite domain.
    pub fn has_truncated_parameter(&self) -> bool {
        self.env.params.values().any(|p| p.carrier().has_truncated_leaf())
    }
}

/// Build the chain up to `upto`, capping the finite stages at `opts.cap`.
pub fn per_chain_extend(f: &FunctorExpr, env: &Env, upto: Ordinal, opts: ChainOpts) -> Result<PerChain, LfpError> {
    let cap = match upto {
        Ordinal::Fin(n) => n,
        Ordinal::OmegaPlus(_) => opts.cap.max(1),
    };
    let opts = ChainOpts { cap, ..opts };
    let domains = omega_chain(f, env, cap as usize)?;
    let mut finite = vec![Per::empty("0", &domains.stages[0])];
    for n in 0..cap as usize {
        let p = apply_functor_per(f, &finite[n], &domains.stages[n + 1], env)?;
        finite.push(p.renamed(&format!("D{}", n + 1)));
    }
    let limit = match upto {
        Ordinal::Fin(_) => {
            for (i, e) in domains.embs.iter().enumerate() {
                if let Verdict::Fails(w) = is_equiembedding(e, &finite[i], &finite[i + 1], opts.bound) {
                    return Err(PerError::IncoherentChain(format!("stage {i}: {w}")).into());
                }
            }
            None
        }
        Ordinal::OmegaPlus(k) => {
            let carrier = functor::inductive_limit_domain(&domains);
            let iso = Arc::new(FixedPointIso::new(f, env, &carrier)?);
            let mut beyond = vec![limit_per("Dw", &finite, &carrier, opts.bound)?];
            for j in 0..k {
                let inner = apply_functor_per(f, &beyond[j as usize], &iso.fd, env)?;
                let flags = inner.flags();
                let name = Ordinal::OmegaPlus(j + 1).to_string();
                beyond.push(Per::new(format!("D{name}"), carrier.clone(), PerKind::Transport(iso.clone(), inner), flags));
            }
            Some(LimitPart { carrier, iso, beyond })
        }
    };
    Ok(PerChain { functor: f.clone(), env: env.clone(), domains, finite, limit, opts })
}

/// Canonical limit tokens with stage tag at most `t`.
pub fn limit_tokens_upto(carrier: &Basis, t: u32, bound: usize) -> Listing {
    let l = functor::limit_data_of(carrier).expect("limit carrier");
    let mut toks = Vec::new();
    for n in 0..=t.min(l.cap()) {
        let st = l.stages[n as usize].tokens(bound);
        for x in st.toks {
            let c = l.canonical(n, &x);
            if c.as_stage().map(|(m, _)| m) == Some(n) {
                if toks.len() >= bound {
                    return Listing { toks, truncated: true };
                }
                toks.push(c);
            }
        }
        if st.truncated {
            return Listing { toks, truncated: true };
        }
    }
    Listing { toks, truncated: false }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stabilization {
    StabilizedAt(Ordinal),
    NotStabilizedWitness { witness: String, note: String },
    UnknownAtBound(u32),
}

/// Does `f⁻` between the two stages preserve totality and relatedness on
/// `toks`? `down` maps a token of the upper stage to the lower one.
fn reflects(upper: &Per, lower: &Per, toks: &[Tok], down: &dyn Fn(&Tok) -> Tok) -> Result<(), Tok> {
    let mut seen: BTreeMap<Tok, Tok> = BTreeMap::new();
    for y in toks {
        let Some(ku) = upper.key(y) else { continue };
        let Some(kl) = lower.key(&down(y)) else { return Err(y.clone()) };
        match seen.get(&ku) {
            Some(k0) if *k0 != kl => return Err(y.clone()),
            Some(_) => {}
            None => {
                seen.insert(ku, kl);
            }
        }
    }
    Ok(())
}

/// Look for the first stage `α` with `f_{α,α+1}` an isomorphism of domain-pers,
/// checking finite stages up to `rank_bound` and then `ω`.
pub fn stabilization_probe(chain: &PerChain, rank_bound: u32) -> Stabilization {
    let exact = !chain.has_truncated_parameter();
    for a in 0..=rank_bound.min(chain.cap().saturating_sub(1)) {
        if a + 1 > chain.cap() {
            break;
        }
        if !exact {
            break;
        }
        let up = chain.domains.stages[a as usize + 1].tokens(basis::DEFAULT_BUDGET);
        if up.truncated {
            continue;
        }
        let e = &chain.domains.embs[a as usize];
        let ok = reflects(&chain.finite[a as usize + 1], &chain.finite[a as usize], &up.toks, &|y| e.proj(y)).is_ok();
        if ok {
            return Stabilization::StabilizedAt(Ordinal::Fin(a));
        }
    }
    let Some(lp) = &chain.limit else {
        return Stabilization::UnknownAtBound(rank_bound);
    };
    if lp.beyond.len() < 2 {
        return Stabilization::UnknownAtBound(rank_bound);
    }
    let (w0, w1) = (&lp.beyond[0], &lp.beyond[1]);
    if exact {
        // stage ω+1 elements of rank at most r sit at tags up to r+1
        let toks = limit_tokens_upto(&lp.carrier, rank_bound + 1, basis::DEFAULT_BUDGET);
        if toks.truncated || rank_bound + 1 > chain.cap() {
            return Stabilization::UnknownAtBound(rank_bound);
        }
        return match reflects(w1, w0, &toks.toks, &|y| y.clone()) {
            Ok(()) => Stabilization::StabilizedAt(Ordinal::OMEGA),
            Err(y) => Stabilization::NotStabilizedWitness {
                witness: lp.carrier.pretty(&y),
                note: "total at stage w+1 but not at stage w".into(),
            },
        };
    }
    match nested_witness(chain, rank_bound) {
        Some(s) => s,
        None => Stabilization::UnknownAtBound(rank_bound),
    }
}

/// The candidate `(1, φ)` with `φ(n) = x_n` for functors `A + [N -> X]` over
/// truncated flat naturals.
fn nested_witness(chain: &PerChain, rank_bound: u32) -> Option<Stabilization> {
    let (a, _) = sum_exp_shape(&chain.functor)?;
    let pa = chain.env.get(&a).ok()?;
    let cx = Counterexample::build(chain, pa).ok()?;
    if !cx.witness_total || cx.witness_rank.is_none_or(|r| r <= rank_bound) {
        return None;
    }
    if !cx.ranks_increase() {
        return None;
    }
    let lp = chain.limit.as_ref()?;
    Some(Stabilization::NotStabilizedWitness {
        witness: lp.carrier.pretty(&cx.witness),
        note: format!(
            "phi = natfn((0,{}), nest) is total at stage w+1; (1, phi) is total at no finite stage among checked ranks <= {rank_bound}; component ranks {}",
            pa.pretty(&cx.a),
            cx.ranks.iter().map(|r| r.map_or("-".into(), |r| r.to_string())).collect::<Vec<_>>().join(",")
        ),
    })
}

/// `A + [B -> X]`: the names of `A` and `B`.
pub fn sum_exp_shape(f: &FunctorExpr) -> Option<(String, String)> {
    match f {
        FunctorExpr::Sum(l, r) => match (l.as_ref(), r.as_ref()) {
            (FunctorExpr::Const(a), FunctorExpr::Exp(b, body)) if **body == FunctorExpr::Id => {
                Some((a.clone(), b.clone()))
            }
            _ => None,
        },
        _ => None,
    }
}

#[derive(Clone, Debug)]
pub struct Counterexample {
    /// The chosen total of the parameter.
    pub a: Tok,
    /// `x_n` as limit tokens, for every natural of the truncated exponent.
    pub xs: Vec<Tok>,
    /// `rank(x_n)`.
    pub ranks: Vec<Option<u32>>,
    /// `φ` in `[N -> D_ω]`.
    pub phi: Tok,
    /// `(1, φ)` as a limit token.
    pub witness: Tok,
    /// Whether `(1, φ)` is total at stage `ω+1`.
    pub witness_total: bool,
    pub witness_rank: Option<u32>,
}

impl Counterexample {
    fn build(chain: &PerChain, pa: &Per) -> Result<Counterexample, LfpError> {
        let lp = chain.limit.as_ref().ok_or(LfpError::StageOutOfRange(Ordinal::OMEGA))?;
        let a = pa
            .totals(basis::DEFAULT_BUDGET)
            .toks
            .into_iter()
            .next()
            .ok_or_else(|| LfpError::TrivialParameter(pa.name().to_string()))?;
        let cx = EvalCx::with_iso(&lp.iso);
        let base = ElemExpr::inj(0, ElemExpr::Tok(a.clone()));
        let fb = match lp.iso.fd.kind() {
            basis::Kind::Sum { parts, .. } => parts[1].clone(),
            _ => unreachable!("sum functor"),
        };
        let phi = eval(&ElemExpr::nat_fn(base.clone(), "nest", true), &fb, &cx)?;
        let nats = construct::fun_parts(&fb).map(|(d, _, _)| d.tokens(basis::DEFAULT_BUDGET).toks.len() - 1).unwrap();
        let mut xs = vec![eval(&base, &lp.carrier, &cx)?];
        for _ in 1..nats {
            let next = crate::per::apply_transformer("nest", xs.last().unwrap(), &lp.carrier, &cx)?;
            xs.push(next);
        }
        let ranks = xs.iter().map(|x| chain.rank(x)).collect();
        let witness = lp
            .iso
            .inv(&Tok::inj(1, phi.clone()))
            .ok_or_else(|| PerError::IllSorted("(1, phi) lies beyond the cap".into()))?;
        let witness_total = lp.beyond.get(1).is_some_and(|p| p.is_total(&witness));
        let witness_rank = chain.rank(&witness);
        Ok(Counterexample { a, xs, ranks, phi, witness, witness_total, witness_rank })
    }

    pub fn ranks_increase(&self) -> bool {
        self.ranks.iter().enumerate().all(|(n, r)| *r == Some(n as u32))
    }
}

#[derive(Clone, Debug)]
pub struct CounterexampleReport {
    pub nat_bound: usize,
    pub check_bound: usize,
    pub a: String,
    /// `(n, rank(x_n))` for `n <= check_bound`.
    pub ranks: Vec<(usize, Option<u32>)>,
    pub ranks_match: bool,
    pub phi: String,
    pub phi_total_at_omega_plus_1: bool,
    /// Rank of `(1, φ)` in the truncated chain; beyond every checked rank.
    pub witness_rank: Option<u32>,
    pub probe: Stabilization,
}

/// The chain of `A + [N -> X]` with enough stages to hold `(1, φ)`.
pub fn counterexample_chain(pa: &Per, nat_bound: usize, bound: usize) -> Result<PerChain, LfpError> {
    let f = FunctorExpr::sum(FunctorExpr::konst("A"), FunctorExpr::exp("N", FunctorExpr::Id));
    let env = Env::new().with("A", pa.clone()).with("N", Per::flatnat(nat_bound));
    per_chain_extend(&f, &env, Ordinal::OmegaPlus(1), ChainOpts { cap: nat_bound as u32 + 1, bound })
}

/// Build `x_n` and `φ` for the parameter `pa`, check the ranks up to `check_bound`
/// and probe stabilization at rank bound `check_bound`.
pub fn counterexample_phi(pa: &Per, nat_bound: usize, check_bound: usize) -> Result<CounterexampleReport, LfpError> {
    if pa.totals(basis::DEFAULT_BUDGET).toks.is_empty() {
        return Err(LfpError::TrivialParameter(pa.name().to_string()));
    }
    let chain = counterexample_chain(pa, nat_bound, 200)?;
    let cx = Counterexample::build(&chain, pa)?;
    let lp = chain.limit.as_ref().unwrap();
    let ranks: Vec<(usize, Option<u32>)> = cx.ranks.iter().take(check_bound + 1).copied().enumerate().collect();
    let ranks_match = ranks.len() == check_bound + 1 && ranks.iter().all(|(n, r)| *r == Some(*n as u32));
    let fb = match lp.iso.fd.kind() {
        basis::Kind::Sum { parts, .. } => parts[1].clone(),
        _ => unreachable!("sum functor"),
    };
    Ok(CounterexampleReport {
        nat_bound,
        check_bound,
        a: pa.pretty(&cx.a),
        ranks,
        ranks_match,
        phi: fb.pretty(&cx.phi),
        phi_total_at_omega_plus_1: cx.witness_total,
        witness_rank: cx.witness_rank,
        probe: stabilization_probe(&chain, check_bound as u32),
    })
}

// ---------------------------------------------------------------------------
// mediating morphisms

#[derive(Clone, Debug)]
pub struct StageCheck {
    pub stage: u32,
    pub equivariant: Verdict,
    pub equiembedding: Verdict,
    /// `h_n = h_{n+1} ∘ f_n` on the tokens of `D_n`.
    pub compatible: bool,
}

pub struct Mediating {
    /// `h_n : D_n -> E`.
    pub maps: Vec<Map>,
    pub stages: Vec<StageCheck>,
    /// The algebra law `h ∘ f⁻ = g ∘ F(h)` on the limit fragment, when the chain has one.
    pub law: Option<Verdict>,
}

/// `h_0` from the trivial domain, then `h_{n+1} = g ∘ F(h_n)`.
pub fn mediating_algebra_morphism(chain: &PerChain, e: &Per, g: &Map) -> Result<Mediating, LfpError> {
    let (f, env, bound) = (&chain.functor, &chain.env, chain.opts.bound);
    let fe = functor::apply_functor_domain(f, e.carrier(), env)?;
    let fe_per = apply_functor_per(f, e, &fe, env)?;
    if let Verdict::Fails(w) = is_equivariant(g, &fe_per, e, bound) {
        return Err(LfpError::NotAnAlgebra(w));
    }
    let st = &chain.domains.stages;
    let mut maps = vec![Map::constant(&st[0], e.carrier(), e.carrier().bottom())];
    for n in 0..chain.cap() as usize {
        let fh = functor_map(f, &maps[n], &st[n + 1], &fe);
        maps.push(fh.then(g).renamed(&format!("h{}", n + 1)));
    }
    let mut stages = Vec::new();
    for (n, h) in maps.iter().enumerate() {
        let equivariant = is_equivariant(h, &chain.finite[n], e, bound);
        let equiembedding = as_embedding(h, &st[n], e.carrier(), bound)
            .map(|emb| is_equiembedding(&emb, &chain.finite[n], e, bound))
            .unwrap_or_else(|w| Verdict::Fails(w));
        let compatible = match chain.domains.embs.get(n) {
            Some(fe_n) => st[n].tokens(bound).toks.iter().all(|x| h.apply(x) == maps[n + 1].apply(&fe_n.fwd(x))),
            None => true,
        };
        stages.push(StageCheck { stage: n as u32, equivariant, equiembedding, compatible });
    }
    let law = chain.limit.as_ref().map(|lp| {
        let hw = omega_map(&maps, &lp.carrier, e.carrier());
        let fhw = functor_map(f, &hw, &lp.iso.fd, &fe);
        let toks = limit_tokens_upto(&lp.carrier, chain.cap() - 1, bound);
        let bad = toks.toks.iter().find(|x| {
            let lhs = hw.apply(x);
            let rhs = fhw.apply(&lp.iso.fwd(x)).and_then(|y| g.apply(&y));
            lhs != rhs
        });
        match bad {
            Some(x) => Verdict::Fails(format!("law fails at {}", lp.carrier.pretty(x))),
            None if toks.truncated => Verdict::Unknown(toks.toks.len()),
            None => Verdict::Holds,
        }
    });
    Ok(Mediating { maps, stages, law })
}

/// `h_ω(s_n:x) = h_n(x)`.
fn omega_map(maps: &[Map], limit: &Basis, target: &Basis) -> Map {
    let maps = maps.to_vec();
    Map::from_fn("h_w", limit, target, move |x| {
        let (n, y) = x.as_stage()?;
        maps.get(n as usize)?.apply(y)
    })
}

/// A token map as an embedding, when it is one on the finite source.
fn as_embedding(h: &Map, src: &Basis, tgt: &Basis, bound: usize) -> Result<Embedding, String> {
    let toks = src.finite_tokens(bound).ok_or("source exceeds the bound")?;
    let mut m = BTreeMap::new();
    for x in toks {
        let y = h.apply(&x).ok_or("map undefined")?;
        m.insert(x, y);
    }
    construct::table_embedding(src, tgt, m).map_err(|e| e.to_string())
}
