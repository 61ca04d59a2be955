//! The input per `T_F`, the maps `η_F` and `ϑ_F`, evaluation sequences and
//! `η̄ = curry(ζ)`, evaluation trees and `ϑ̄`, and the weak isomorphism
//! between the dense least fixed point and its dense image.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::Range;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::basis::{self, Basis, Kind, Tok, DEFAULT_BUDGET};
use crate::construct::{self, apply_fun};
use crate::dense::{dense_lfp, DenseError, DenseLfp};
use crate::functor::{Env, FixedPointIso, FunctorExpr};
use crate::lfp::{limit_tokens_upto, Ordinal};
use crate::per::{
    apply_functor_per, coprod_per, op_flags, per_construct, power_per, prec_check, strict_prod_per, Flags, Map, Per,
    PerOp, Tri, Verdict,
};

#[derive(Debug, Error)]
pub enum EtaError {
    #[error(transparent)]
    Dense(#[from] DenseError),
    #[error("exponent {0} is not flagged dense")]
    NonDenseExponent(String),
    #[error("no total witnesses {0}")]
    NotWitnessed(String),
    #[error("code {0} does not decode to a path")]
    MalformedCode(u64),
    #[error("inconsistent family: {0}")]
    Inconsistent(String),
    #[error("{0} does not fit below the cap")]
    BeyondCap(String),
    #[error("too large: {0}")]
    TooLarge(String),
}

impl From<crate::per::PerError> for EtaError {
    fn from(e: crate::per::PerError) -> EtaError {
        EtaError::Dense(e.into())
    }
}

impl From<crate::functor::FunctorError> for EtaError {
    fn from(e: crate::functor::FunctorError) -> EtaError {
        EtaError::Dense(e.into())
    }
}

type Result<T> = std::result::Result<T, EtaError>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Atomic {
    Id,
    Const(String),
}

/// Atomic occurrences of `f`, left to right.
pub fn atomic_subfunctors(f: &FunctorExpr) -> Vec<Atomic> {
    fn go(f: &FunctorExpr, out: &mut Vec<Atomic>) {
        match f {
            FunctorExpr::Id => out.push(Atomic::Id),
            FunctorExpr::Const(a) => out.push(Atomic::Const(a.clone())),
            FunctorExpr::Sum(l, r) | FunctorExpr::Prod(l, r) => {
                go(l, out);
                go(r, out);
            }
            FunctorExpr::Exp(_, body) => go(body, out),
        }
    }
    let mut out = Vec::new();
    go(f, &mut out);
    out
}

/// `T_F`, with the input pers of the immediate subfunctors.
pub struct InputPer {
    pub functor: FunctorExpr,
    pub per: Per,
    pub kids: Vec<InputPer>,
    /// Indices into `K_F` of the atomic occurrences of this subfunctor.
    pub atoms: Range<usize>,
}

pub fn one_point_per() -> Per {
    Per::classes("{t}", &basis::one_point(), &[vec![Tok::Atom(0)]], Flags::all_yes()).unwrap()
}

pub fn build_input_per(f: &FunctorExpr, env: &Env) -> Result<InputPer> {
    fn go(f: &FunctorExpr, env: &Env, next: &mut usize) -> Result<InputPer> {
        let start = *next;
        let (per, kids) = match f {
            FunctorExpr::Id | FunctorExpr::Const(_) => {
                *next += 1;
                (one_point_per(), Vec::new())
            }
            FunctorExpr::Sum(l, r) => {
                let (a, b) = (go(l, env, next)?, go(r, env, next)?);
                (per_construct(PerOp::Prod, &a.per, &b.per)?, vec![a, b])
            }
            FunctorExpr::Prod(l, r) => {
                let (a, b) = (go(l, env, next)?, go(r, env, next)?);
                (per_construct(PerOp::Sum, &a.per, &b.per)?, vec![a, b])
            }
            FunctorExpr::Exp(bn, body) => {
                let bp = env.get(bn)?;
                if !bp.flags().dense.is_yes() {
                    return Err(EtaError::NonDenseExponent(bn.clone()));
                }
                let t = go(body, env, next)?;
                (per_construct(PerOp::Prod, bp, &t.per)?, vec![t])
            }
        };
        Ok(InputPer { functor: f.clone(), per, kids, atoms: start..*next })
    }
    go(f, env, &mut 0)
}

/// Deliberate defects, for checking that the reports notice them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// `ϑ` sends every constant component to bottom.
    ThetaConstBottom,
}

#[derive(Clone, Copy, Debug)]
pub struct EtaOpts {
    pub rank_bound: u32,
    /// Length of the input sequences in `U`.
    pub support: usize,
    pub fault: Option<Fault>,
}

impl EtaOpts {
    pub fn new(rank_bound: u32) -> EtaOpts {
        EtaOpts { rank_bound, support: rank_bound as usize + 1, fault: None }
    }
}

/// Largest path code range we are willing to materialize as a flat basis.
const MAX_CODES: usize = 4096;

/// Everything `η`, `ϑ`, `ζ` and `ϑ̄` need, built once.
pub struct EtaCx {
    pub functor: FunctorExpr,
    pub env: Env,
    pub dense: DenseLfp,
    pub iso: Arc<FixedPointIso>,
    /// `D`: the stage-ω per on the capped limit carrier.
    pub d: Per,
    /// `F(D)`.
    pub fd: Per,
    pub input: InputPer,
    pub atoms: Vec<Atomic>,
    /// `⊎_k F^k(D)`.
    pub w: Per,
    /// `[T_F -> W]`.
    pub eta_space: Per,
    pub u: Per,
    /// `(⊎ A_n) ⊗ N`.
    pub e: Per,
    /// `[U -> E]`.
    pub bar_space: Per,
    /// `consts[c]` is the `K_F` index of the `c`-th constant occurrence.
    pub consts: Vec<usize>,
    pub code_bound: usize,
    pub opts: EtaOpts,
    prec_memo: Mutex<HashMap<(Tok, Tok), bool>>,
    witnesses: Vec<Tok>,
}

impl std::fmt::Debug for EtaCx {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "EtaCx({})", self.functor)
    }
}

/// `(|K|+1)`-ary numeral of the path with a leading 1.
pub fn encode_path(path: &[usize], k: usize) -> u64 {
    path.iter().fold(1u64, |c, &d| c * (k as u64 + 1) + d as u64)
}

pub fn decode_path(code: u64, k: usize) -> Option<Vec<usize>> {
    let base = k as u64 + 1;
    let mut c = code;
    let mut out = Vec::new();
    while c >= base {
        let d = c % base;
        if d >= k as u64 {
            return None;
        }
        out.push(d as usize);
        c /= base;
    }
    if c != 1 {
        return None;
    }
    out.reverse();
    Some(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvaluationRecord {
    /// `d^m` for `m < M`.
    pub sequence: Vec<Tok>,
    /// `k^m` for `m < M`.
    pub path: Vec<usize>,
    pub code: u64,
    /// In `⊎ A_n` (constant occurrences indexed by position among the constants).
    pub result: Tok,
    pub halted: bool,
}

impl EvaluationRecord {
    pub fn steps(&self) -> usize {
        self.path.len()
    }
}

#[derive(Clone, Debug)]
pub struct TreeNode {
    /// `ς_0 ⊇ ς_1 ⊇ ...` as bit sets over the step pairs.
    pub sets: Vec<u64>,
    /// `p^ς_m` for `m < |ς|`.
    pub premises: Vec<Tok>,
    pub code: u64,
    pub maximal: bool,
    /// Decoration in `W`.
    pub value: Tok,
    pub children: Vec<usize>,
}

#[derive(Clone, Debug, Default)]
pub struct EvalTree {
    /// Nodes of length 1, the children of the empty root.
    pub roots: Vec<usize>,
    pub nodes: Vec<TreeNode>,
}

const TREE_LIMIT: usize = 200_000;

struct Pairs {
    prem: Vec<Vec<Tok>>,
    val: Vec<Tok>,
    code: Vec<u64>,
}

impl EtaCx {
    pub fn new(f: &FunctorExpr, env: &Env, opts: EtaOpts) -> Result<Arc<EtaCx>> {
        let dense = dense_lfp(f, env, Ordinal::OMEGA, opts.rank_bound)?;
        let lp = dense.chain.limit.as_ref().expect("chain reaches omega");
        let iso = lp.iso.clone();
        let d = dense.chain.omega().map_err(DenseError::from)?.clone();
        let fd = apply_functor_per(f, &d, &iso.fd, env)?;
        let input = build_input_per(f, env)?;
        let atoms = atomic_subfunctors(f);
        let mut parts = Vec::new();
        for a in &atoms {
            parts.push(match a {
                Atomic::Id => d.clone(),
                Atomic::Const(n) => env.get(n)?.clone(),
            });
        }
        let w = with_sum_flags(coprod_per("W", parts.clone()), &parts);
        let eta_space = per_construct(PerOp::Fun, &input.per, &w)?;
        let u = power_per(&input.per, opts.support);
        let consts: Vec<usize> = (0..atoms.len()).filter(|&k| atoms[k] != Atomic::Id).collect();
        let cparts: Vec<Per> = consts.iter().map(|&k| parts[k].clone()).collect();
        let a_sum = with_sum_flags(coprod_per("A", cparts.clone()), &cparts);
        let code_bound = (atoms.len() + 1)
            .checked_pow(opts.support as u32)
            .filter(|&c| c <= MAX_CODES)
            .ok_or_else(|| EtaError::TooLarge(format!("path codes for support {}", opts.support)))?;
        let e = strict_prod_per(&a_sum, &Per::flatnat(code_bound));
        let bar_space = per_construct(PerOp::Fun, &u, &e)?;
        let mut witnesses: Vec<(u32, Tok)> = limit_tokens_upto(&lp.carrier, dense.chain.cap(), DEFAULT_BUDGET)
            .toks
            .into_iter()
            .filter_map(|x| dense.chain.rank(&x).map(|r| (r, x)))
            .collect();
        witnesses.sort_by_key(|(r, _)| *r);
        Ok(Arc::new(EtaCx {
            functor: f.clone(),
            env: env.clone(),
            iso,
            d,
            fd,
            input,
            atoms,
            w,
            eta_space,
            u,
            e,
            bar_space,
            consts,
            code_bound,
            opts,
            prec_memo: Mutex::new(HashMap::new()),
            witnesses: witnesses.into_iter().map(|(_, x)| x).collect(),
            dense,
        }))
    }

    pub fn cap(&self) -> u32 {
        self.dense.chain.cap()
    }

    /// Totals of `D` with tag at most the cap, by increasing rank.
    pub fn totals_by_rank(&self) -> &[Tok] {
        &self.witnesses
    }

    pub fn rank(&self, x: &Tok) -> Option<u32> {
        self.dense.chain.rank(x)
    }

    // -----------------------------------------------------------------------
    // η_F and ϑ_F

    fn eval_at(&self, node: &InputPer, b: &Basis, x: &Tok, t: &Tok) -> Tok {
        match (&node.functor, b.kind()) {
            (FunctorExpr::Id | FunctorExpr::Const(_), _) => Tok::inj(node.atoms.start as u32, x.clone()),
            (FunctorExpr::Sum(..), Kind::Sum { parts, .. }) => match x.as_inj() {
                None => Tok::Bot,
                Some((i, y)) => {
                    let (t0, t1) = t.as_pair().expect("pair input");
                    let ti = if i == 0 { t0 } else { t1 };
                    self.eval_at(&node.kids[i as usize], &parts[i as usize], y, ti)
                }
            },
            (FunctorExpr::Prod(..), Kind::Prod { left, right, .. }) => match t.as_inj() {
                None => Tok::Bot,
                Some((i, s)) => {
                    let (x0, x1) = x.as_pair().expect("pair element");
                    if i == 0 {
                        self.eval_at(&node.kids[0], left, x0, s)
                    } else {
                        self.eval_at(&node.kids[1], right, x1, s)
                    }
                }
            },
            (FunctorExpr::Exp(..), Kind::Fun { cod, .. }) => {
                let (b0, s) = t.as_pair().expect("pair input");
                let y = apply_fun(b, x, b0);
                self.eval_at(&node.kids[0], cod, &y, s)
            }
            _ => unreachable!("basis does not match the functor"),
        }
    }

    /// `Eval(η_F(x), t)` for `x ∈ F(D)`.
    pub fn eval_eta(&self, x: &Tok, t: &Tok) -> Tok {
        self.eval_at(&self.input, self.fd.carrier(), x, t)
    }

    pub fn eta(&self, x: &Tok) -> Tok {
        construct::fun_from_fn(self.eta_space.carrier(), &|t| self.eval_eta(x, t))
    }

    pub fn eta_map(self: &Arc<Self>) -> Map {
        let cx = self.clone();
        Map::from_fn("eta", self.fd.carrier(), self.eta_space.carrier(), move |x| Some(cx.eta(x)))
    }

    fn theta_at(&self, node: &InputPer, b: &Basis, steps: &[(Tok, Tok)]) -> Result<Tok> {
        let steps: Vec<(Tok, Tok)> = steps.iter().filter(|(_, q)| *q != Tok::Bot).cloned().collect();
        if steps.is_empty() {
            return Ok(b.bottom());
        }
        match (&node.functor, b.kind()) {
            (FunctorExpr::Id | FunctorExpr::Const(_), _) => {
                let k = node.atoms.start as u32;
                let mut vals = Vec::new();
                for (_, q) in &steps {
                    match q.as_inj() {
                        Some((j, v)) if j == k => vals.push(v.clone()),
                        _ => return Err(EtaError::NotWitnessed(format!("value outside component {k}"))),
                    }
                }
                if self.opts.fault == Some(Fault::ThetaConstBottom) && node.functor != FunctorExpr::Id {
                    return Ok(b.bottom());
                }
                b.lub(vals.iter()).ok_or_else(|| EtaError::Inconsistent(format!("values in component {k}")))
            }
            (FunctorExpr::Sum(..), Kind::Sum { parts, .. }) => {
                let side = |q: &Tok| {
                    let k = q.as_inj()?.0 as usize;
                    (0..2).find(|&i| node.kids[i].atoms.contains(&k))
                };
                let i = side(&steps[0].1).ok_or_else(|| EtaError::NotWitnessed("untagged value".into()))?;
                if steps.iter().any(|(_, q)| side(q) != Some(i)) {
                    return Err(EtaError::NotWitnessed("values from both summands".into()));
                }
                // every consistent subfamily lies below a maximal input, and ϑ is monotone
                let tb = node.per.carrier();
                let mut acc = parts[i].bottom();
                for m in maximal_tokens(tb) {
                    let sub: Vec<&(Tok, Tok)> = steps.iter().filter(|(p, _)| tb.leq(p, &m)).collect();
                    if sub.is_empty() {
                        continue;
                    }
                    let proj: Vec<(Tok, Tok)> = sub
                        .iter()
                        .map(|(p, q)| {
                            let (p0, p1) = p.as_pair().expect("pair input");
                            (if i == 0 { p0 } else { p1 }.clone(), q.clone())
                        })
                        .collect();
                    let v = self.theta_at(&node.kids[i], &parts[i], &proj)?;
                    acc = parts[i].join(&acc, &v).ok_or_else(|| EtaError::Inconsistent("sum case".into()))?;
                }
                Ok(Tok::inj(i as u32, acc))
            }
            (FunctorExpr::Prod(..), Kind::Prod { left, right, .. }) => {
                let mut split: [Vec<(Tok, Tok)>; 2] = [Vec::new(), Vec::new()];
                for (p, q) in &steps {
                    let (i, s) = p.as_inj().ok_or_else(|| EtaError::NotWitnessed("value at bottom input".into()))?;
                    split[i as usize].push((s.clone(), q.clone()));
                }
                Ok(Tok::pair(
                    self.theta_at(&node.kids[0], left, &split[0])?,
                    self.theta_at(&node.kids[1], right, &split[1])?,
                ))
            }
            (FunctorExpr::Exp(..), Kind::Fun { dom, cod, .. }) => {
                let pb = node.per.carrier();
                let (bb, _) = match pb.kind() {
                    Kind::Prod { left, right, .. } => (left, right),
                    _ => unreachable!(),
                };
                let split: Vec<(&Tok, &Tok, &Tok)> = steps
                    .iter()
                    .map(|(p, q)| {
                        let (p0, p1) = p.as_pair().expect("pair input");
                        (p0, p1, q)
                    })
                    .collect();
                let mut out = Vec::new();
                for (p0, _, _) in &split {
                    let inner: Vec<(Tok, Tok)> = split
                        .iter()
                        .filter(|(k0, _, _)| bb.leq(k0, p0))
                        .map(|(_, k1, q)| ((*k1).clone(), (*q).clone()))
                        .collect();
                    out.push(((*p0).clone(), self.theta_at(&node.kids[0], cod, &inner)?));
                }
                construct::normalize(dom, cod, &out).ok_or_else(|| EtaError::Inconsistent("exponent case".into()))
            }
            _ => unreachable!("basis does not match the functor"),
        }
    }

    /// `ϑ_F` on a step set over `T_F -> W`, without the witness check.
    pub fn theta_raw(&self, steps: &[(Tok, Tok)]) -> Result<Tok> {
        self.theta_at(&self.input, self.fd.carrier(), steps)
    }

    fn prec_w(&self, p: &Tok, x: &Tok) -> bool {
        let key = (p.clone(), x.clone());
        if let Some(&v) = self.prec_memo.lock().unwrap().get(&key) {
            return v;
        }
        let v = prec_check(&self.w, p, x, DEFAULT_BUDGET).unwrap_or(false);
        self.prec_memo.lock().unwrap().insert(key, v);
        v
    }

    /// `q ≺ [η(x)]`, tested pointwise on the totals of `T_F`.
    pub fn witnessed_by(&self, q: &Tok, x: &Tok) -> bool {
        let tb = self.input.per.carrier();
        let steps = q.as_steps().expect("step token");
        let tab = self.input.per.class_table().expect("finite input per");
        tab.totals.iter().all(|t| {
            let fired = construct::apply(tb, self.w.carrier(), steps, t);
            self.prec_w(&fired, &self.eval_eta(x, t))
        })
    }

    /// A total of `F(D)` witnessing `q`, searched by increasing rank.
    pub fn find_witness(&self, q: &Tok) -> Option<Tok> {
        self.witnesses.iter().map(|x| self.iso.fwd(x)).find(|y| self.witnessed_by(q, y))
    }

    /// `ϑ_F(q)` for a witnessed compact `q` of `[T_F -> W]`.
    pub fn theta(&self, q: &Tok) -> Result<Tok> {
        let steps = q.as_steps().ok_or_else(|| EtaError::NotWitnessed(self.eta_space.pretty(q)))?;
        if steps.is_empty() {
            return Ok(self.fd.carrier().bottom());
        }
        if self.find_witness(q).is_none() {
            return Err(EtaError::NotWitnessed(self.eta_space.pretty(q)));
        }
        self.theta_raw(steps)
    }

    // -----------------------------------------------------------------------
    // ζ and η̄

    pub fn evaluate_zeta(&self, x: &Tok, u: &Tok) -> EvaluationRecord {
        let us: &[Tok] = match u {
            Tok::Tuple(v) => v,
            _ => panic!("sequence token"),
        };
        let k = self.atoms.len();
        let mut rec = EvaluationRecord { sequence: Vec::new(), path: Vec::new(), code: 1, result: Tok::Bot, halted: false };
        let mut cur = x.clone();
        for um in us {
            let z = self.eval_eta(&self.iso.fwd(&cur), um);
            match z {
                Tok::Inj(j, v) if self.atoms[j as usize] == Atomic::Id => {
                    rec.sequence.push((*v).clone());
                    rec.path.push(j as usize);
                    cur = (*v).clone();
                }
                Tok::Inj(j, v) => {
                    let c = self.consts.iter().position(|&i| i == j as usize).unwrap();
                    rec.result = Tok::inj(c as u32, (*v).clone());
                    rec.halted = true;
                    break;
                }
                _ => {
                    rec.halted = true;
                    break;
                }
            }
        }
        rec.code = encode_path(&rec.path, k);
        if !rec.halted {
            rec.result = Tok::Bot;
        }
        rec
    }

    /// `ζ(x, u)` as a token of `E`.
    pub fn zeta(&self, x: &Tok, u: &Tok) -> Tok {
        let r = self.evaluate_zeta(x, u);
        self.e_token(&r.result, r.code)
    }

    fn e_token(&self, result: &Tok, code: u64) -> Tok {
        if *result == Tok::Bot || code as usize >= self.code_bound {
            self.e.carrier().bottom()
        } else {
            Tok::pair(result.clone(), Tok::Atom(code as u32 + 1))
        }
    }

    pub fn eta_bar(&self, x: &Tok) -> Tok {
        construct::fun_from_fn(self.bar_space.carrier(), &|u| self.zeta(x, u))
    }

    pub fn eta_bar_map(self: &Arc<Self>) -> Map {
        let cx = self.clone();
        Map::from_fn("eta_bar", self.d.carrier(), self.bar_space.carrier(), move |x| Some(cx.eta_bar(x)))
    }

    fn prec_e(&self, p: &Tok, x: &Tok) -> bool {
        let b = self.e.carrier();
        if b.leq(p, x) {
            return true;
        }
        match (p.as_pair(), x.as_pair()) {
            (Some((a, n)), Some((b0, m))) => n == m && self.prec_w(&self.to_w(a), &self.to_w(b0)),
            _ => false,
        }
    }

    /// `⊎ A_n` into `W`.
    fn to_w(&self, a: &Tok) -> Tok {
        match a.as_inj() {
            Some((c, v)) => Tok::inj(self.consts[c as usize] as u32, v.clone()),
            None => Tok::Bot,
        }
    }

    /// `q ≺ [η̄(x)]`, pointwise on the totals of `U`.
    pub fn bar_witnessed_by(&self, q: &Tok, x: &Tok) -> bool {
        let (ub, eb) = (self.u.carrier(), self.e.carrier());
        let steps = q.as_steps().expect("step token");
        let tab = self.u.class_table().expect("finite sequence per");
        tab.totals.iter().all(|u| self.prec_e(&construct::apply(ub, eb, steps, u), &self.zeta(x, u)))
    }

    // -----------------------------------------------------------------------
    // ϑ̄

    /// `ϑ̄(q)` via the evaluation tree. The witness is checked if given and
    /// searched for otherwise.
    ///
    /// Only the children `{j : p^j_m ⊑ t}`, `t ∈ T_F`, are grown: decorations
    /// are monotone in the index sets, so the other subsets add nothing.
    pub fn theta_bar(&self, q: &Tok, witness: Option<&Tok>) -> Result<(Tok, EvalTree)> {
        self.theta_bar_with(q, witness, false)
    }

    /// The tree over all decreasing sequences of index sets.
    pub fn theta_bar_full(&self, q: &Tok, witness: Option<&Tok>) -> Result<(Tok, EvalTree)> {
        self.theta_bar_with(q, witness, true)
    }

    fn theta_bar_with(&self, q: &Tok, witness: Option<&Tok>, full: bool) -> Result<(Tok, EvalTree)> {
        let steps = q.as_steps().ok_or_else(|| EtaError::NotWitnessed(self.bar_space.pretty(q)))?;
        let ebot = self.e.carrier().bottom();
        let steps: Vec<&(Tok, Tok)> = steps.iter().filter(|(_, v)| *v != ebot).collect();
        if steps.is_empty() {
            return Ok((self.d.carrier().bottom(), EvalTree::default()));
        }
        if steps.len() > 60 {
            return Err(EtaError::TooLarge(format!("{} step pairs", steps.len())));
        }
        let mut pairs = Pairs { prem: Vec::new(), val: Vec::new(), code: Vec::new() };
        for (p, v) in &steps {
            let Tok::Tuple(ps) = p else { unreachable!() };
            let (a, n) = v.as_pair().expect("strict pair");
            let Tok::Atom(n) = n else { unreachable!() };
            let code = *n as u64 - 1;
            match decode_path(code, self.atoms.len()) {
                Some(path) if path.iter().all(|&k| self.atoms[k] == Atomic::Id) && path.len() < ps.len() => {}
                _ => return Err(EtaError::MalformedCode(code)),
            }
            pairs.prem.push(ps.to_vec());
            pairs.val.push(self.to_w(a));
            pairs.code.push(code);
        }
        let ok = match witness {
            Some(x) => self.bar_witnessed_by(q, x),
            None => self.witnesses.iter().any(|x| self.bar_witnessed_by(q, x)),
        };
        if !ok {
            return Err(EtaError::NotWitnessed(self.bar_space.pretty(q)));
        }
        let mut tree = EvalTree::default();
        let mut top = Vec::new();
        let codes: BTreeSet<u64> = pairs.code.iter().copied().collect();
        for code in codes {
            let pool = (0..pairs.code.len()).filter(|&j| pairs.code[j] == code).fold(0u64, |m, j| m | (1 << j));
            let path = decode_path(code, self.atoms.len()).unwrap();
            for s in self.child_sets(&pairs, pool, 0, full) {
                let Some(p0) = self.level_premise(&pairs, s, 0) else { continue };
                let id = self.grow(&pairs, &path, code, vec![s], vec![p0.clone()], &mut tree, full)?;
                tree.roots.push(id);
                top.push((p0, tree.nodes[id].value.clone()));
            }
        }
        let y = self.theta_raw(&top)?;
        let x = self.iso.inv(&y).ok_or_else(|| EtaError::BeyondCap(self.fd.pretty(&y)))?;
        Ok((x, tree))
    }

    fn child_sets(&self, pairs: &Pairs, within: u64, m: usize, full: bool) -> Vec<u64> {
        if full {
            return submasks(within);
        }
        let tb = self.input.per.carrier();
        let mut out: Vec<u64> = tb
            .tokens(DEFAULT_BUDGET)
            .toks
            .iter()
            .map(|t| bits(within).filter(|&j| tb.leq(&pairs.prem[j][m], t)).fold(0u64, |a, j| a | (1 << j)))
            .filter(|&s| s != 0)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// `⨆_{j∈s} p^j_m`, `None` when inconsistent.
    fn level_premise(&self, pairs: &Pairs, s: u64, m: usize) -> Option<Tok> {
        let tb = self.input.per.carrier();
        tb.lub(bits(s).map(|j| &pairs.prem[j][m]))
    }

    fn grow(
        &self,
        pairs: &Pairs,
        path: &[usize],
        code: u64,
        sets: Vec<u64>,
        premises: Vec<Tok>,
        tree: &mut EvalTree,
        full: bool,
    ) -> Result<usize> {
        if tree.nodes.len() >= TREE_LIMIT {
            return Err(EtaError::TooLarge(format!("evaluation tree beyond {TREE_LIMIT} nodes")));
        }
        let l = sets.len();
        let last = sets[l - 1];
        let maximal = l == path.len() + 1;
        let (value, children) = if maximal {
            let w = self.w.carrier();
            let v = w
                .lub(bits(last).map(|j| &pairs.val[j]))
                .ok_or_else(|| EtaError::Inconsistent("leaf results".into()))?;
            (v, Vec::new())
        } else {
            let mut kids = Vec::new();
            let mut fam = Vec::new();
            for s in self.child_sets(pairs, last, l, full) {
                let Some(p) = self.level_premise(pairs, s, l) else { continue };
                let mut ss = sets.clone();
                ss.push(s);
                let mut ps = premises.clone();
                ps.push(p.clone());
                let id = self.grow(pairs, path, code, ss, ps, tree, full)?;
                fam.push((p, tree.nodes[id].value.clone()));
                kids.push(id);
            }
            let y = self.theta_raw(&fam)?;
            let d = self.iso.inv(&y).ok_or_else(|| EtaError::BeyondCap(self.fd.pretty(&y)))?;
            (Tok::inj(path[l - 1] as u32, d), kids)
        };
        tree.nodes.push(TreeNode { sets, premises, code, maximal, value, children });
        Ok(tree.nodes.len() - 1)
    }
}

fn with_sum_flags(p: Per, parts: &[Per]) -> Per {
    let mut f = parts.iter().fold(Flags::all_yes(), |a, q| op_flags(PerOp::Sum, a, q.flags()));
    f.countably_based = p.flags().countably_based;
    p.with_flags(f)
}

fn maximal_tokens(b: &Basis) -> Vec<Tok> {
    let ts = b.tokens(DEFAULT_BUDGET).toks;
    ts.iter().filter(|t| !ts.iter().any(|u| u != *t && b.leq(t, u))).cloned().collect()
}

fn bits(s: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |j| s & (1 << j) != 0)
}

/// Non-empty submasks of `m`, largest first.
fn submasks(m: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut s = m;
    while s != 0 {
        out.push(s);
        s = (s - 1) & m;
    }
    out
}

// ---------------------------------------------------------------------------
// Checks

/// Equivariance and equi-injectivity of `η_F ∘ iso` on the `D`-totals of tag at most `tag`.
pub fn eta_injectivity(cx: &EtaCx, tag: u32) -> (Verdict, Verdict) {
    let xs: Vec<&Tok> = cx.witnesses.iter().filter(|x| x.as_stage().map(|(n, _)| n <= tag) == Some(true)).collect();
    key_checks(
        &xs,
        |x| cx.d.key(x),
        |x| cx.eta_space.key(&cx.eta(&cx.iso.fwd(x))),
        |x| cx.d.pretty(x),
    )
}

fn key_checks(
    xs: &[&Tok],
    src: impl Fn(&Tok) -> Option<Tok>,
    img: impl Fn(&Tok) -> Option<Tok>,
    pretty: impl Fn(&Tok) -> String,
) -> (Verdict, Verdict) {
    let mut by_src: BTreeMap<Tok, (Tok, &Tok)> = BTreeMap::new();
    let mut by_img: BTreeMap<Tok, (Tok, &Tok)> = BTreeMap::new();
    let mut equi = Verdict::Holds;
    let mut inj = Verdict::Holds;
    for &x in xs {
        let Some(k) = src(x) else { continue };
        let Some(ik) = img(x) else {
            equi = equi.and(Verdict::Fails(format!("image of {} is not total", pretty(x))));
            continue;
        };
        if let Some((ik0, x0)) = by_src.get(&k) {
            if *ik0 != ik {
                equi = equi.and(Verdict::Fails(format!("{} ~ {} but the images differ", pretty(x0), pretty(x))));
            }
        } else {
            by_src.insert(k.clone(), (ik.clone(), x));
        }
        if let Some((k0, x0)) = by_img.get(&ik) {
            if *k0 != k {
                inj = inj.and(Verdict::Fails(format!("{} and {} have related images", pretty(x0), pretty(x))));
            }
        } else {
            by_img.insert(ik, (k, x));
        }
    }
    (equi, inj)
}

#[derive(Clone, Debug, Default)]
pub struct AdjunctionScan {
    pub candidates: usize,
    pub witnessed: usize,
    pub targets: usize,
    pub failures: Vec<String>,
}

impl AdjunctionScan {
    pub fn holds(&self) -> bool {
        self.failures.is_empty()
    }
}

/// `ϑ(q) ⊑ r ⇔ q ⊑ η(r)` for every witnessed compact `q` with at most
/// `max_pairs` step pairs and every compact `r` of the dense part of `F(D)`.
pub fn adjunction_scan(cx: &EtaCx, max_pairs: usize) -> Result<AdjunctionScan> {
    let tb = cx.input.per.carrier();
    let wb = cx.w.carrier();
    let ts = tb.tokens(DEFAULT_BUDGET).toks;
    let ws: Vec<Tok> = wb.tokens(DEFAULT_BUDGET).toks.into_iter().filter(|w| *w != Tok::Bot).collect();
    let singles: Vec<(Tok, Tok)> = ts.iter().flat_map(|t| ws.iter().map(move |w| (t.clone(), w.clone()))).collect();
    let mut qs: BTreeSet<Tok> = BTreeSet::new();
    qs.insert(Tok::empty_steps());
    let mut fams: Vec<Vec<usize>> = (0..singles.len()).map(|i| vec![i]).collect();
    for _ in 1..max_pairs {
        let mut next = Vec::new();
        for f in &fams {
            for j in f[f.len() - 1] + 1..singles.len() {
                let mut g = f.clone();
                g.push(j);
                next.push(g);
            }
        }
        for g in &next {
            let pairs: Vec<(Tok, Tok)> = g.iter().map(|&i| singles[i].clone()).collect();
            if let Some(q) = construct::normalize(tb, wb, &pairs) {
                qs.insert(q);
            }
        }
        fams = next;
    }
    for (t, w) in &singles {
        if let Some(q) = construct::normalize(tb, wb, &[(t.clone(), w.clone())]) {
            qs.insert(q);
        }
    }
    let fdd = crate::dense::dense_part(&cx.fd, DEFAULT_BUDGET);
    let fb = cx.fd.carrier();
    let rs: Vec<Tok> = fb.tokens(DEFAULT_BUDGET).toks.into_iter().filter(|r| fdd.keeps(r)).collect();
    let etas: Vec<Tok> = rs.iter().map(|r| cx.eta(r)).collect();
    let eb = cx.eta_space.carrier();
    let mut scan = AdjunctionScan { candidates: qs.len(), targets: rs.len(), ..Default::default() };
    for q in &qs {
        let th = match cx.theta(q) {
            Ok(v) => v,
            Err(EtaError::NotWitnessed(_)) => continue,
            Err(e) => return Err(e),
        };
        scan.witnessed += 1;
        for (r, er) in rs.iter().zip(&etas) {
            if fb.leq(&th, r) != eb.leq(q, er) {
                scan.failures.push(format!("q = {}, r = {}", eb.pretty(q), fb.pretty(r)));
                if scan.failures.len() > 10 {
                    return Ok(scan);
                }
            }
        }
    }
    Ok(scan)
}

#[derive(Clone, Debug)]
pub struct WeakIsoReport {
    pub rank_bound: u32,
    pub totals: usize,
    pub equivariant: Verdict,
    pub equi_injective: Verdict,
    /// `ϑ̄(η̄(x)) ≈ x`.
    pub round_trip: Verdict,
    /// `η̄(ϑ̄(y)) ≈ y` on image totals.
    pub image_round_trip: Verdict,
    pub pedigree: Tri,
    /// The dense least fixed point with the pedigree the checks support.
    pub per: Per,
}

impl WeakIsoReport {
    pub fn holds(&self) -> bool {
        self.equivariant.holds() && self.equi_injective.holds() && self.round_trip.holds() && self.image_round_trip.holds()
    }
    pub fn witness(&self) -> Option<&str> {
        [&self.equivariant, &self.equi_injective, &self.round_trip, &self.image_round_trip]
            .into_iter()
            .find_map(|v| v.witness())
    }
}

pub fn dense_image_weak_iso(cx: &EtaCx) -> Result<WeakIsoReport> {
    let rb = cx.opts.rank_bound;
    let xs: Vec<&Tok> = cx.witnesses.iter().filter(|x| cx.rank(x).is_some_and(|r| r <= rb)).collect();
    let bars: HashMap<&Tok, Tok> = xs.iter().map(|&x| (x, cx.eta_bar(x))).collect();
    let (equivariant, equi_injective) = key_checks(
        &xs,
        |x| cx.d.key(x),
        |x| cx.bar_space.key(&bars[x]),
        |x| cx.d.pretty(x),
    );
    let mut round_trip = Verdict::Holds;
    let mut image_round_trip = Verdict::Holds;
    for &x in &xs {
        let y = &bars[x];
        match cx.theta_bar(y, Some(x)) {
            Ok((z, _)) => {
                if !cx.d.related(&z, x) {
                    round_trip = round_trip
                        .and(Verdict::Fails(format!("round trip of {} gives {}", cx.d.pretty(x), cx.d.pretty(&z))));
                }
                if !cx.bar_space.related(&cx.eta_bar(&z), y) {
                    image_round_trip =
                        image_round_trip.and(Verdict::Fails(format!("image round trip at {}", cx.d.pretty(x))));
                }
            }
            Err(e) => {
                round_trip = round_trip.and(Verdict::Fails(format!("{}: {e}", cx.d.pretty(x))));
            }
        }
    }
    let base = cx.dense.per.flags();
    let ok = equivariant.holds() && equi_injective.holds() && round_trip.holds() && image_round_trip.holds();
    let pedigree = if ok && base.dense.is_yes() { base.admissible_pedigree } else { Tri::Unknown };
    let mut flags = base;
    flags.admissible_pedigree = pedigree;
    Ok(WeakIsoReport {
        rank_bound: rb,
        totals: xs.len(),
        equivariant,
        equi_injective,
        round_trip,
        image_round_trip,
        pedigree,
        per: cx.dense.per.with_flags(flags),
    })
}

#[cfg(test)]
mod tests;
