//! Domain-pers: a carrier basis with a partial equivalence relation on its
//! elements.
//!
//! Relatedness is decided through class keys. `key(x)` is `None` when `x` is
//! not total; two totals are related exactly when their keys are equal. For a
//! function space the key of `f` lists the codomain keys of `f` at one
//! representative of every exponent class, after checking that `f` respects
//! the exponent relation. Keys are memoized per node.

mod elem;
mod functorial;
mod limit;
mod maps;
mod props;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use thiserror::Error;

use crate::basis::{self, Basis, Kind, LimitData, Tok, DEFAULT_BUDGET};
use crate::construct::{self, ConstructError, ProdMode, SumMode};
use crate::functor::FixedPointIso;

pub use elem::{apply_transformer, eval, ElemExpr, EvalCx, TRANSFORMERS};
pub use functorial::{apply_functor_per, functor_map};
pub use limit::{limit_per, rank_of, uniform_limit_map};
pub use maps::{
    equi_injective, image_is_equiembedding_check, image_per, is_equiembedding, is_equivariant, maps_related,
    weak_iso_check, Map, MapKind,
};
pub use props::{check_property, prec_check, verify_flags, Prop, Verdict};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tri {
    Yes,
    No,
    #[default]
    Unknown,
}

impl Tri {
    pub fn from_bool(b: bool) -> Tri {
        if b {
            Tri::Yes
        } else {
            Tri::No
        }
    }
    pub fn and(self, o: Tri) -> Tri {
        match (self, o) {
            (Tri::Yes, Tri::Yes) => Tri::Yes,
            (Tri::No, _) | (_, Tri::No) => Tri::No,
            _ => Tri::Unknown,
        }
    }
    pub fn is_yes(self) -> bool {
        self == Tri::Yes
    }
    pub fn as_str(self) -> &'static str {
        match self {
            Tri::Yes => "yes",
            Tri::No => "no",
            Tri::Unknown => "unknown",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Flags {
    pub weakly_convex: Tri,
    pub convex: Tri,
    pub local: Tri,
    pub strongly_local: Tri,
    pub complete: Tri,
    pub upwards_closed: Tri,
    pub dense: Tri,
    pub admissible_pedigree: Tri,
    pub countably_based: Tri,
}

impl Flags {
    /// Flags of a well-behaved finite base per: everything yes.
    pub fn all_yes() -> Flags {
        Flags {
            weakly_convex: Tri::Yes,
            convex: Tri::Yes,
            local: Tri::Yes,
            strongly_local: Tri::Yes,
            complete: Tri::Yes,
            upwards_closed: Tri::Yes,
            dense: Tri::Yes,
            admissible_pedigree: Tri::Yes,
            countably_based: Tri::Yes,
        }
    }

    pub fn clc(&self) -> Tri {
        self.convex.and(self.local).and(self.complete)
    }

    pub fn entries(&self) -> Vec<(&'static str, Tri)> {
        vec![
            ("weakly_convex", self.weakly_convex),
            ("convex", self.convex),
            ("local", self.local),
            ("strongly_local", self.strongly_local),
            ("complete", self.complete),
            ("upwards_closed", self.upwards_closed),
            ("dense", self.dense),
            ("admissible_pedigree", self.admissible_pedigree),
            ("countably_based", self.countably_based),
        ]
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PerError {
    #[error("carrier mismatch: {0}")]
    CarrierMismatch(String),
    #[error("element is not total: {0}")]
    NotTotal(String),
    #[error("ill-sorted element: {0}")]
    IllSorted(String),
    #[error("incoherent chain: {0}")]
    IncoherentChain(String),
    #[error("family is not uniform at stage {0}")]
    NotUniform(u32),
    #[error("relation is not symmetric and transitive: {0}")]
    NotAPer(String),
    #[error(transparent)]
    Construct(#[from] ConstructError),
    #[error("carrier exceeds the enumeration budget")]
    TooLarge,
}

pub enum PerKind {
    /// Explicit classes on a finite carrier: total token to class index.
    Classes(BTreeMap<Tok, u32>),
    /// Componentwise on a sum carrier (separated, strict or lifted).
    Sum(Vec<Per>),
    /// Componentwise on a product carrier (cartesian or strict).
    Prod(Per, Per),
    Power(Per),
    Fun(Per, Per),
    /// Stage pers of a chain of equiembeddings; decided at the top stage.
    Limit(Vec<Per>, Arc<LimitData>),
    /// The relation of `inner` pulled back along the fixed-point iso.
    Transport(Arc<FixedPointIso>, Per),
    /// Restriction of a per to the given set of class keys.
    Image(Per, Arc<BTreeSet<Tok>>),
    /// The same relation on a restricted carrier.
    Restrict(Per),
}

pub struct PerNode {
    pub name: String,
    pub carrier: Basis,
    pub kind: PerKind,
    pub flags: Flags,
    memo: Mutex<HashMap<Tok, Option<Tok>>>,
    table: OnceLock<Option<Arc<ClassTable>>>,
}

#[derive(Clone)]
pub struct Per(pub Arc<PerNode>);

impl fmt::Debug for Per {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Per({})", self.0.name)
    }
}

/// Totals of a finite carrier with their keys.
#[derive(Debug)]
pub struct ClassTable {
    pub totals: Vec<Tok>,
    pub keys: Vec<Tok>,
    /// Class key to indices into `totals`.
    pub classes: BTreeMap<Tok, Vec<usize>>,
}

impl ClassTable {
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }
    pub fn members(&self, key: &Tok) -> Vec<&Tok> {
        self.classes.get(key).map(|v| v.iter().map(|&i| &self.totals[i]).collect()).unwrap_or_default()
    }
}

impl Per {
    pub fn new(name: impl Into<String>, carrier: Basis, kind: PerKind, flags: Flags) -> Per {
        Per(Arc::new(PerNode {
            name: name.into(),
            carrier,
            kind,
            flags,
            memo: Mutex::new(HashMap::new()),
            table: OnceLock::new(),
        }))
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }
    pub fn carrier(&self) -> &Basis {
        &self.0.carrier
    }
    pub fn kind(&self) -> &PerKind {
        &self.0.kind
    }
    pub fn flags(&self) -> Flags {
        self.0.flags
    }
    pub fn ptr_eq(&self, o: &Per) -> bool {
        Arc::ptr_eq(&self.0, &o.0)
    }

    /// Same relation, different flag record.
    pub fn with_flags(&self, flags: Flags) -> Per {
        Per::new(self.name(), self.carrier().clone(), self.kind_clone(), flags)
    }

    /// Same relation under another name.
    pub fn renamed(&self, name: &str) -> Per {
        Per::new(name, self.carrier().clone(), self.kind_clone(), self.flags())
    }

    fn kind_clone(&self) -> PerKind {
        match self.kind() {
            PerKind::Classes(m) => PerKind::Classes(m.clone()),
            PerKind::Sum(v) => PerKind::Sum(v.clone()),
            PerKind::Prod(a, b) => PerKind::Prod(a.clone(), b.clone()),
            PerKind::Power(a) => PerKind::Power(a.clone()),
            PerKind::Fun(a, b) => PerKind::Fun(a.clone(), b.clone()),
            PerKind::Limit(v, l) => PerKind::Limit(v.clone(), l.clone()),
            PerKind::Transport(i, p) => PerKind::Transport(i.clone(), p.clone()),
            PerKind::Image(p, h) => PerKind::Image(p.clone(), h.clone()),
            PerKind::Restrict(p) => PerKind::Restrict(p.clone()),
        }
    }

    /// Per given by explicit classes of tokens.
    pub fn classes(name: &str, carrier: &Basis, classes: &[Vec<Tok>], flags: Flags) -> Result<Per, PerError> {
        let mut m = BTreeMap::new();
        for (i, c) in classes.iter().enumerate() {
            for t in c {
                if !carrier.contains(t) {
                    return Err(PerError::CarrierMismatch(format!("{t:?} not in {}", carrier.name())));
                }
                if m.insert(t.clone(), i as u32).is_some() {
                    return Err(PerError::NotAPer(format!("{} in two classes", carrier.pretty(t))));
                }
            }
        }
        Ok(Per::new(name, carrier.clone(), PerKind::Classes(m), flags))
    }

    /// Per generated by related pairs (symmetric-transitive closure).
    pub fn from_pairs(name: &str, carrier: &Basis, pairs: &[(Tok, Tok)]) -> Result<Per, PerError> {
        let mut parent: BTreeMap<Tok, Tok> = BTreeMap::new();
        fn find(p: &mut BTreeMap<Tok, Tok>, x: &Tok) -> Tok {
            let y = p.get(x).cloned().unwrap_or_else(|| x.clone());
            if y == *x {
                return y;
            }
            let r = find(p, &y);
            p.insert(x.clone(), r.clone());
            r
        }
        for (a, b) in pairs {
            for t in [a, b] {
                if !carrier.contains(t) {
                    return Err(PerError::CarrierMismatch(format!("{t:?} not in {}", carrier.name())));
                }
                parent.entry(t.clone()).or_insert_with(|| t.clone());
            }
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent.insert(ra, rb);
            }
        }
        let keys: Vec<Tok> = parent.keys().cloned().collect();
        let mut groups: BTreeMap<Tok, Vec<Tok>> = BTreeMap::new();
        for k in keys {
            let r = find(&mut parent, &k);
            groups.entry(r).or_default().push(k);
        }
        let classes: Vec<Vec<Tok>> = groups.into_values().collect();
        Per::classes(name, carrier, &classes, Flags::default())
    }

    /// The empty per on a carrier.
    pub fn empty(name: &str, carrier: &Basis) -> Per {
        let mut f = Flags::all_yes();
        f.dense = Tri::from_bool(false);
        Per::new(name, carrier.clone(), PerKind::Classes(BTreeMap::new()), f)
    }

    /// The trivial domain-per: one point, empty relation.
    pub fn trivial() -> Per {
        Per::empty("0", &basis::one_point())
    }

    /// Sierpinski space with only `top` total.
    pub fn sierpinski() -> Per {
        let o = basis::sierpinski();
        Per::classes("O", &o, &[vec![Tok::Atom(1)]], Flags::all_yes()).unwrap()
    }

    /// A flat basis with every non-bottom point total and alone in its class.
    pub fn discrete_flat(carrier: &Basis) -> Per {
        let ts = carrier.tokens(DEFAULT_BUDGET).toks;
        let classes: Vec<Vec<Tok>> = ts.into_iter().filter(|t| !carrier.is_bottom(t)).map(|t| vec![t]).collect();
        Per::classes(carrier.name(), carrier, &classes, Flags::all_yes()).unwrap()
    }

    pub fn flatbool() -> Per {
        Per::discrete_flat(&basis::flatbool())
    }

    pub fn flatnat(bound: usize) -> Per {
        let p = Per::discrete_flat(&basis::flatnat(bound));
        let mut f = p.flags();
        f.countably_based = Tri::Yes;
        p.with_flags(f).renamed("N")
    }

    /// `n`-point flat domain with discrete classes.
    pub fn discrete(n: usize) -> Per {
        let names: Vec<String> = (0..n).map(|i| format!("d{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        Per::discrete_flat(&basis::flat(&format!("D{n}"), &refs))
    }

    // -----------------------------------------------------------------------
    // keys

    pub fn key(&self, x: &Tok) -> Option<Tok> {
        if let Some(v) = self.0.memo.lock().unwrap().get(x) {
            return v.clone();
        }
        let v = self.compute_key(x);
        self.0.memo.lock().unwrap().insert(x.clone(), v.clone());
        v
    }

    pub fn is_total(&self, x: &Tok) -> bool {
        self.key(x).is_some()
    }

    pub fn related(&self, x: &Tok, y: &Tok) -> bool {
        match (self.key(x), self.key(y)) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        }
    }

    fn compute_key(&self, x: &Tok) -> Option<Tok> {
        match self.kind() {
            PerKind::Classes(m) => m.get(x).map(|c| Tok::Atom(*c)),
            PerKind::Sum(parts) => match x {
                Tok::Inj(i, y) => parts.get(*i as usize)?.key(y).map(|k| Tok::inj(*i, k)),
                _ => None,
            },
            PerKind::Prod(a, b) => {
                let (x0, x1) = x.as_pair()?;
                Some(Tok::pair(a.key(x0)?, b.key(x1)?))
            }
            PerKind::Power(a) => match x {
                Tok::Tuple(v) => {
                    let mut ks = Vec::with_capacity(v.len());
                    for y in v.iter() {
                        ks.push(a.key(y)?);
                    }
                    Some(Tok::tuple(ks))
                }
                _ => None,
            },
            PerKind::Fun(d, e) => {
                let (db, eb) = (d.carrier(), e.carrier());
                let steps = x.as_steps()?;
                let tab = d.class_table().expect("function-space exponent must be finite");
                let mut vals: BTreeMap<&Tok, Tok> = BTreeMap::new();
                for (t, k) in tab.totals.iter().zip(&tab.keys) {
                    let v = e.key(&construct::apply(db, eb, steps, t))?;
                    match vals.get(k) {
                        Some(v0) if *v0 != v => return None,
                        Some(_) => {}
                        None => {
                            vals.insert(k, v);
                        }
                    }
                }
                Some(Tok::tuple(vals.into_values().collect()))
            }
            PerKind::Limit(stages, l) => {
                let (n, y) = x.as_stage()?;
                let cap = l.cap();
                stages[cap as usize].key(&l.shift(n, y, cap))
            }
            PerKind::Transport(iso, inner) => {
                x.as_stage()?;
                inner.key(&iso.fwd(x))
            }
            PerKind::Image(p, hit) => p.key(x).filter(|k| hit.contains(k)),
            PerKind::Restrict(p) => p.key(x),
        }
    }

    /// Class table of a finite carrier; `None` when the carrier exceeds the default budget.
    pub fn class_table(&self) -> Option<Arc<ClassTable>> {
        self.0
            .table
            .get_or_init(|| self.build_table(DEFAULT_BUDGET).map(Arc::new))
            .clone()
    }

    fn build_table(&self, budget: usize) -> Option<ClassTable> {
        let ts = self.carrier().finite_tokens(budget)?;
        let mut totals = Vec::new();
        let mut keys = Vec::new();
        let mut classes: BTreeMap<Tok, Vec<usize>> = BTreeMap::new();
        for t in ts {
            if let Some(k) = self.key(&t) {
                classes.entry(k.clone()).or_default().push(totals.len());
                totals.push(t);
                keys.push(k);
            }
        }
        Some(ClassTable { totals, keys, classes })
    }

    /// Totals of the carrier within `budget` enumerated tokens.
    pub fn totals(&self, budget: usize) -> basis::Listing {
        let l = self.carrier().tokens(budget);
        basis::Listing { toks: l.toks.into_iter().filter(|t| self.is_total(t)).collect(), truncated: l.truncated }
    }

    /// Number of classes among the totals within `budget`; `None` when truncated.
    pub fn class_count(&self, budget: usize) -> Option<usize> {
        let l = self.totals(budget);
        if l.truncated {
            return None;
        }
        let ks: BTreeSet<Tok> = l.toks.iter().filter_map(|t| self.key(t)).collect();
        Some(ks.len())
    }

    pub fn is_trivial_within(&self, budget: usize) -> Option<bool> {
        let l = self.totals(budget);
        if !l.toks.is_empty() {
            Some(false)
        } else if l.truncated {
            None
        } else {
            Some(true)
        }
    }

    pub fn pretty(&self, t: &Tok) -> String {
        self.carrier().pretty(t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PerOp {
    Sum,
    Prod,
    Fun,
}

/// Flags of a sum, product or function-space per, by the preservation rules.
pub fn op_flags(op: PerOp, fd: Flags, fe: Flags) -> Flags {
    let mut f = Flags { countably_based: fd.countably_based.and(fe.countably_based), ..Flags::default() };
    match op {
        PerOp::Sum | PerOp::Prod => {
            f.convex = fd.convex.and(fe.convex);
            f.local = fd.local.and(fe.local);
            f.complete = fd.complete.and(fe.complete);
            f.dense = fd.dense.and(fe.dense);
            f.admissible_pedigree = fd.admissible_pedigree.and(fe.admissible_pedigree);
        }
        PerOp::Fun => {
            if fd.dense.is_yes() {
                f.convex = fe.convex;
                f.local = fe.local;
                f.complete = fe.complete;
                f.admissible_pedigree = fd.admissible_pedigree.and(fe.admissible_pedigree);
            }
        }
    }
    f
}

/// Sum, product or function-space per, with flags set by the preservation rules.
pub fn per_construct(op: PerOp, d: &Per, e: &Per) -> Result<Per, PerError> {
    let f = op_flags(op, d.flags(), e.flags());
    let (carrier, kind, sym) = match op {
        PerOp::Sum => (
            construct::sum_basis(d.carrier(), e.carrier(), SumMode::Separated),
            PerKind::Sum(vec![d.clone(), e.clone()]),
            "+",
        ),
        PerOp::Prod => (
            construct::prod_basis(d.carrier(), e.carrier(), ProdMode::Cartesian),
            PerKind::Prod(d.clone(), e.clone()),
            "x",
        ),
        PerOp::Fun => {
            (construct::fun_basis(d.carrier(), e.carrier())?, PerKind::Fun(d.clone(), e.clone()), "->")
        }
    };
    Ok(Per::new(format!("({} {sym} {})", d.name(), e.name()), carrier, kind, f))
}

/// Componentwise per on an existing sum carrier.
pub fn sum_per_on(carrier: &Basis, parts: Vec<Per>, flags: Flags) -> Per {
    let name = parts.iter().map(|p| p.name().to_string()).collect::<Vec<_>>().join(" + ");
    Per::new(format!("({name})"), carrier.clone(), PerKind::Sum(parts), flags)
}

/// Strict product per (carrier `D ⊗ E`).
pub fn strict_prod_per(d: &Per, e: &Per) -> Per {
    let carrier = construct::prod_basis(d.carrier(), e.carrier(), ProdMode::Strict);
    let f = Flags {
        countably_based: d.flags().countably_based.and(e.flags().countably_based),
        ..Flags::default()
    };
    Per::new(format!("({} (x) {})", d.name(), e.name()), carrier, PerKind::Prod(d.clone(), e.clone()), f)
}

/// Lifted disjoint sum of any number of pers.
pub fn coprod_per(name: &str, parts: Vec<Per>) -> Per {
    let carrier = construct::coprod(name, parts.iter().map(|p| p.carrier().clone()).collect());
    let f = Flags {
        countably_based: parts.iter().fold(Tri::Yes, |a, p| a.and(p.flags().countably_based)),
        ..Flags::default()
    };
    Per::new(name, carrier, PerKind::Sum(parts), f)
}

pub fn power_per(d: &Per, len: usize) -> Per {
    let carrier = construct::power_basis(d.carrier(), len);
    let mut f = d.flags();
    f.upwards_closed = Tri::Unknown;
    f.strongly_local = Tri::Unknown;
    f.weakly_convex = Tri::Unknown;
    Per::new(format!("{}^{len}", d.name()), carrier, PerKind::Power(d.clone()), f)
}

/// The pers that appear as carrier kinds, for callers that need to descend.
pub fn is_fun_kind(b: &Basis) -> bool {
    matches!(b.kind(), Kind::Fun { .. })
}

#[cfg(test)]
mod tests;
