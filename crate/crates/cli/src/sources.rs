//! Parameter sources: builtins and JSON definition files.
//!
//! A basis file is `{"name", "tokens", "order"}` with `order` a list of
//! `[below, above]` pairs. A per file is `{"name"?, "carrier", "pairs"}` where
//! `carrier` is a catalog name or an inline basis and `pairs` lists related
//! tokens. A space file is `{"points", "opens", "pseudobase"?}`; a missing
//! pseudobase means the nonempty opens.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use domania::basis::{catalog_basis, mk_finite_basis, Basis, Tok};
use domania::functor::Env;
use domania::per::{check_property, Flags, Per, Prop, Tri};
use domania::qcb::{standard_representation, Binding, FiniteSpace, Pseudobase};
use serde::Deserialize;

use crate::parse::{Equation, Source};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisDef {
    pub name: String,
    pub tokens: Vec<String>,
    #[serde(default)]
    pub order: Vec<(String, String)>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum CarrierDef {
    Catalog(String),
    Inline(BasisDef),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerDef {
    pub name: Option<String>,
    pub carrier: CarrierDef,
    pub pairs: Vec<(String, String)>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceDef {
    pub points: Vec<String>,
    pub opens: Vec<Vec<String>>,
    pub pseudobase: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum FileDef {
    Space(SpaceDef),
    Per(PerDef),
}

/// Where relative `file(...)` paths start, and the flat-naturals bound.
#[derive(Clone, Debug)]
pub struct Ctx {
    pub base: PathBuf,
    pub nat_bound: usize,
}

fn read_def(path: &Path) -> Result<FileDef, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: not a space or per definition: {e}", path.display()))
}

impl BasisDef {
    pub fn build(&self) -> Result<Basis, String> {
        let ts: Vec<&str> = self.tokens.iter().map(String::as_str).collect();
        let ps: Vec<(&str, &str)> = self.order.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        mk_finite_basis(&self.name, &ts, &ps).map_err(|e| format!("basis {}: {e}", self.name))
    }
}

fn tok_named(b: &Basis, s: &str) -> Result<Tok, String> {
    let ts = b.finite_tokens(10_000).ok_or_else(|| format!("carrier {} is too large", b.name()))?;
    ts.into_iter().find(|t| b.pretty(t) == s).ok_or_else(|| format!("{s} is not a token of {}", b.name()))
}

impl PerDef {
    /// The per with its order-theoretic flags decided on the finite carrier.
    pub fn build(&self, name: &str) -> Result<Per, String> {
        let carrier = match &self.carrier {
            CarrierDef::Catalog(n) => catalog_basis(n).ok_or_else(|| format!("no catalog carrier {n}"))?,
            CarrierDef::Inline(b) => b.build()?,
        };
        let mut pairs = Vec::new();
        for (a, b) in &self.pairs {
            pairs.push((tok_named(&carrier, a)?, tok_named(&carrier, b)?));
        }
        let name = self.name.as_deref().unwrap_or(name);
        let p = Per::from_pairs(name, &carrier, &pairs).map_err(|e| e.to_string())?;
        let tri = |prop| check_property(&p, prop, 10_000).to_tri();
        let flags = Flags {
            weakly_convex: tri(Prop::WeaklyConvex),
            convex: tri(Prop::Convex),
            local: tri(Prop::Local),
            strongly_local: tri(Prop::StronglyLocal),
            complete: tri(Prop::Complete),
            upwards_closed: tri(Prop::UpwardsClosed),
            dense: tri(Prop::Dense),
            admissible_pedigree: Tri::Unknown,
            countably_based: Tri::Yes,
        };
        Ok(p.with_flags(flags))
    }
}

impl SpaceDef {
    pub fn build(&self) -> Result<(FiniteSpace, Pseudobase), String> {
        let pts: Vec<&str> = self.points.iter().map(String::as_str).collect();
        fn lists(v: &[Vec<String>]) -> Vec<Vec<&str>> {
            v.iter().map(|l| l.iter().map(String::as_str).collect()).collect()
        }
        let x = FiniteSpace::from_lists(&pts, &lists(&self.opens)).map_err(|e| e.to_string())?;
        let p = match &self.pseudobase {
            Some(p) => Pseudobase::from_lists(&x, &lists(p)).map_err(|e| e.to_string())?,
            None => Pseudobase::opens(&x),
        };
        Ok((x, p))
    }
}

pub fn load_binding(path: &Path, name: &str) -> Result<Binding, String> {
    match read_def(path)? {
        FileDef::Space(s) => {
            let (x, p) = s.build()?;
            Ok(Binding::Space(x, p))
        }
        FileDef::Per(p) => Ok(Binding::Rep(p.build(name)?)),
    }
}

/// The space a builtin denotes in qcb mode, if it is one.
pub fn builtin_space(s: &Source) -> Option<FiniteSpace> {
    match s {
        Source::Sierpinski => Some(FiniteSpace::sierpinski()),
        Source::Flatbool => Some(FiniteSpace::discrete_named(&["tt", "ff"])),
        Source::Discrete(n) => Some(FiniteSpace::discrete(*n)),
        Source::Trivial => Some(FiniteSpace::discrete(1)),
        _ => None,
    }
}

pub fn builtin_per(s: &Source, nat_bound: usize) -> Option<Per> {
    match s {
        Source::Sierpinski => Some(Per::sierpinski()),
        Source::Flatbool => Some(Per::flatbool()),
        Source::Flatnat => Some(Per::flatnat(nat_bound)),
        Source::Discrete(n) => Some(Per::discrete(*n)),
        Source::Trivial => Some(Per::trivial()),
        Source::File(_) => None,
    }
}

/// Per-mode environment. A space file stands for its standard representation.
pub fn per_env(eq: &Equation, cx: &Ctx) -> Result<Env, String> {
    eq.check_bound().map_err(|e| e.to_string())?;
    let mut env = Env::new();
    for a in eq.body.params() {
        let src = eq.source(&a).unwrap();
        let p = match src {
            Source::File(f) => match load_binding(&cx.base.join(f), &a)? {
                Binding::Rep(p) => p,
                Binding::Space(x, p) => {
                    standard_representation(&x, &p).map_err(|e| format!("{a}: {e}"))?.per.renamed(&a)
                }
            },
            s => builtin_per(s, cx.nat_bound).unwrap(),
        };
        env = env.with(&a, p);
    }
    Ok(env)
}

/// Qcb-mode bindings; `extra` comes from `--space-files` and wins over declarations.
pub fn qcb_bindings(
    eq: &Equation,
    extra: &BTreeMap<String, PathBuf>,
    cx: &Ctx,
) -> Result<BTreeMap<String, Binding>, String> {
    let mut out = BTreeMap::new();
    for a in eq.body.params() {
        let b = if let Some(path) = extra.get(&a) {
            load_binding(path, &a)?
        } else {
            match eq.source(&a) {
                None => return Err(format!("unbound name {a}")),
                Some(Source::File(f)) => load_binding(&cx.base.join(f), &a)?,
                Some(Source::Flatnat) => Binding::Rep(Per::flatnat(cx.nat_bound)),
                Some(s) => {
                    let x = builtin_space(s).unwrap();
                    let p = Pseudobase::opens(&x);
                    Binding::Space(x, p)
                }
            }
        };
        out.insert(a, b);
    }
    Ok(out)
}
