//! Token-level maps between carriers and the per-level checks on them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use super::{Flags, Per, PerKind, Verdict};
use crate::basis::{Basis, Kind, Tok};
use crate::construct::{self, verify_embedding, Embedding};
use crate::functor::FixedPointIso;

pub type TokFn = dyn Fn(&Tok) -> Option<Tok> + Send + Sync;

#[derive(Clone)]
pub enum MapKind {
    Identity,
    Table(Arc<BTreeMap<Tok, Tok>>),
    Const(Tok),
    Fwd(Embedding),
    Proj(Embedding),
    /// Applied left to right.
    Compose(Vec<Map>),
    /// Componentwise on sum carriers.
    Sum(Vec<Map>),
    Prod(Map, Map),
    /// `f ↦ post ∘ f ∘ pre` between function spaces with finite exponents.
    Exp { pre: Map, post: Map },
    Iso(Arc<FixedPointIso>),
    IsoInv(Arc<FixedPointIso>),
    Custom(Arc<TokFn>),
}

pub struct MapNode {
    pub name: String,
    pub source: Basis,
    pub target: Basis,
    pub kind: MapKind,
}

#[derive(Clone)]
pub struct Map(pub Arc<MapNode>);

impl fmt::Debug for Map {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Map({}: {} -> {})", self.0.name, self.0.source.name(), self.0.target.name())
    }
}

impl Map {
    pub fn new(name: impl Into<String>, source: &Basis, target: &Basis, kind: MapKind) -> Map {
        Map(Arc::new(MapNode { name: name.into(), source: source.clone(), target: target.clone(), kind }))
    }
    pub fn identity(b: &Basis) -> Map {
        Map::new("id", b, b, MapKind::Identity)
    }
    pub fn table(name: &str, source: &Basis, target: &Basis, m: BTreeMap<Tok, Tok>) -> Map {
        Map::new(name, source, target, MapKind::Table(Arc::new(m)))
    }
    pub fn constant(source: &Basis, target: &Basis, t: Tok) -> Map {
        Map::new(format!("const {}", target.pretty(&t)), source, target, MapKind::Const(t))
    }
    pub fn fwd(e: &Embedding) -> Map {
        Map::new("emb", e.source(), e.target(), MapKind::Fwd(e.clone()))
    }
    pub fn proj(e: &Embedding) -> Map {
        Map::new("proj", e.target(), e.source(), MapKind::Proj(e.clone()))
    }
    pub fn from_fn(
        name: &str,
        source: &Basis,
        target: &Basis,
        f: impl Fn(&Tok) -> Option<Tok> + Send + Sync + 'static,
    ) -> Map {
        Map::new(name, source, target, MapKind::Custom(Arc::new(f)))
    }
    pub fn iso(iso: &Arc<FixedPointIso>) -> Map {
        Map::new("iso", &iso.limit, &iso.fd, MapKind::Iso(iso.clone()))
    }
    pub fn iso_inv(iso: &Arc<FixedPointIso>) -> Map {
        Map::new("iso^-1", &iso.fd, &iso.limit, MapKind::IsoInv(iso.clone()))
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Map) -> Map {
        let mut parts = match self.kind() {
            MapKind::Compose(v) => v.clone(),
            _ => vec![self.clone()],
        };
        match next.kind() {
            MapKind::Compose(v) => parts.extend(v.iter().cloned()),
            _ => parts.push(next.clone()),
        }
        Map::new(format!("{} ; {}", self.name(), next.name()), self.source(), next.target(), MapKind::Compose(parts))
    }

    pub fn renamed(&self, name: &str) -> Map {
        Map::new(name, self.source(), self.target(), self.kind().clone())
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }
    pub fn source(&self) -> &Basis {
        &self.0.source
    }
    pub fn target(&self) -> &Basis {
        &self.0.target
    }
    pub fn kind(&self) -> &MapKind {
        &self.0.kind
    }

    /// Whether monotonicity holds by construction.
    fn structural(&self) -> bool {
        match self.kind() {
            MapKind::Table(_) | MapKind::Custom(_) => false,
            MapKind::Compose(v) | MapKind::Sum(v) => v.iter().all(Map::structural),
            MapKind::Prod(a, b) => a.structural() && b.structural(),
            MapKind::Exp { pre, post } => pre.structural() && post.structural(),
            _ => true,
        }
    }

    /// Image of a token; `None` when the map is not defined there.
    pub fn apply(&self, x: &Tok) -> Option<Tok> {
        match self.kind() {
            MapKind::Identity => Some(x.clone()),
            MapKind::Table(m) => m.get(x).cloned(),
            MapKind::Const(t) => Some(t.clone()),
            MapKind::Fwd(e) => Some(e.fwd(x)),
            MapKind::Proj(e) => Some(e.proj(x)),
            MapKind::Compose(v) => {
                let mut y = x.clone();
                for m in v {
                    y = m.apply(&y)?;
                }
                Some(y)
            }
            MapKind::Sum(parts) => match x {
                Tok::Bot => Some(Tok::Bot),
                Tok::Inj(i, y) => {
                    let z = parts.get(*i as usize)?.apply(y)?;
                    let strict = matches!(self.target().kind(), Kind::Sum { strict: true, .. });
                    if strict && parts[*i as usize].target().is_bottom(&z) {
                        Some(Tok::Bot)
                    } else {
                        Some(Tok::inj(*i, z))
                    }
                }
                _ => None,
            },
            MapKind::Prod(a, b) => {
                let (x0, x1) = x.as_pair()?;
                let (y0, y1) = (a.apply(x0)?, b.apply(x1)?);
                if let Kind::Prod { left, right, strict: true } = self.target().kind() {
                    if left.is_bottom(&y0) || right.is_bottom(&y1) {
                        return Some(self.target().bottom());
                    }
                }
                Some(Tok::pair(y0, y1))
            }
            MapKind::Exp { pre, post } => {
                let (sd, sc, _) = construct::fun_parts(self.source())?;
                x.as_steps()?;
                let failed = std::cell::Cell::new(false);
                let out = construct::fun_from_fn(self.target(), &|d: &Tok| {
                    let v = pre
                        .apply(d)
                        .and_then(|p| construct::try_apply(sd, sc, x.as_steps().unwrap(), &p))
                        .and_then(|v| post.apply(&v));
                    match v {
                        Some(v) => v,
                        None => {
                            failed.set(true);
                            d.clone()
                        }
                    }
                });
                if failed.get() {
                    None
                } else {
                    Some(out)
                }
            }
            MapKind::Iso(iso) => x.as_stage().map(|_| iso.fwd(x)),
            MapKind::IsoInv(iso) => iso.inv(x),
            MapKind::Custom(f) => f(x),
        }
    }
}

struct Frag {
    toks: Vec<Tok>,
    truncated: bool,
}

fn frag(b: &Basis, bound: usize) -> Frag {
    let l = b.tokens(bound);
    Frag { toks: l.toks, truncated: l.truncated }
}

fn close(fail: Option<String>, unknown: bool, n: usize) -> Verdict {
    match fail {
        Some(w) => Verdict::Fails(w),
        None if unknown => Verdict::Unknown(n),
        None => Verdict::Holds,
    }
}

/// Monotone on the fragment, and related totals go to related totals.
pub fn is_equivariant(f: &Map, d: &Per, e: &Per, bound: usize) -> Verdict {
    let fr = frag(d.carrier(), bound);
    let mut unknown = fr.truncated;
    let mut imgs: Vec<Option<Tok>> = Vec::with_capacity(fr.toks.len());
    for x in &fr.toks {
        let y = f.apply(x);
        if y.is_none() {
            unknown = true;
        }
        imgs.push(y);
    }
    let (db, eb) = (d.carrier(), e.carrier());
    if !f.structural() {
        for (i, x) in fr.toks.iter().enumerate() {
            for (j, y) in fr.toks.iter().enumerate() {
                if let (Some(fx), Some(fy)) = (&imgs[i], &imgs[j]) {
                    if db.leq(x, y) && !eb.leq(fx, fy) {
                        return Verdict::Fails(format!("not monotone at {} <= {}", db.pretty(x), db.pretty(y)));
                    }
                }
            }
        }
    }
    let mut seen: BTreeMap<Tok, (usize, Tok)> = BTreeMap::new();
    for (i, x) in fr.toks.iter().enumerate() {
        let Some(k) = d.key(x) else { continue };
        let Some(fx) = &imgs[i] else { continue };
        let Some(ek) = e.key(fx) else {
            return Verdict::Fails(format!("{} is total but its image {} is not", db.pretty(x), eb.pretty(fx)));
        };
        match seen.get(&k) {
            Some((j, ek0)) if *ek0 != ek => {
                return Verdict::Fails(format!(
                    "{} ~ {} but the images are unrelated",
                    db.pretty(&fr.toks[*j]),
                    db.pretty(x)
                ))
            }
            Some(_) => {}
            None => {
                seen.insert(k, (i, ek));
            }
        }
    }
    close(None, unknown, fr.toks.len())
}

/// `f ≈ g` in the function-space per, given that `f` is equivariant: compare on totals only.
pub fn maps_related(f: &Map, g: &Map, d: &Per, e: &Per, bound: usize) -> Verdict {
    let fr = frag(d.carrier(), bound);
    let mut unknown = fr.truncated;
    for x in &fr.toks {
        if !d.is_total(x) {
            continue;
        }
        match (f.apply(x), g.apply(x)) {
            (Some(a), Some(b)) => {
                if !e.related(&a, &b) {
                    return Verdict::Fails(format!("images of {} are unrelated", d.pretty(x)));
                }
            }
            _ => unknown = true,
        }
    }
    close(None, unknown, fr.toks.len())
}

/// `f(x) ≈ f(y)` implies `x ≈ y` on the enumerated totals.
pub fn equi_injective(f: &Map, d: &Per, e: &Per, bound: usize) -> Verdict {
    let fr = frag(d.carrier(), bound);
    let mut unknown = fr.truncated;
    let mut buckets: BTreeMap<Tok, (Tok, Tok)> = BTreeMap::new();
    for x in &fr.toks {
        let Some(k) = d.key(x) else { continue };
        let Some(ek) = f.apply(x).and_then(|y| e.key(&y)) else {
            unknown = true;
            continue;
        };
        match buckets.get(&ek) {
            Some((k0, x0)) if *k0 != k => {
                return Verdict::Fails(format!(
                    "{} and {} have related images but are unrelated",
                    d.pretty(x0),
                    d.pretty(x)
                ))
            }
            Some(_) => {}
            None => {
                buckets.insert(ek, (k, x.clone()));
            }
        }
    }
    close(None, unknown, fr.toks.len())
}

/// Embedding laws, equivariance, and `f(x) ≈ y ⇒ x ≈ f⁻(y)`.
pub fn is_equiembedding(emb: &Embedding, d: &Per, e: &Per, bound: usize) -> Verdict {
    if let Err(err) = verify_embedding(emb, bound) {
        return Verdict::Fails(format!("not an embedding: {err}"));
    }
    let fwd = Map::fwd(emb);
    let v = is_equivariant(&fwd, d, e, bound);
    if v.fails() {
        return v;
    }
    let fr = frag(d.carrier(), bound);
    let mut by_image: BTreeMap<Tok, (Tok, Tok)> = BTreeMap::new();
    for x in &fr.toks {
        if let Some(k) = d.key(x) {
            if let Some(ek) = e.key(&emb.fwd(x)) {
                by_image.entry(ek).or_insert((k, x.clone()));
            }
        }
    }
    let er = frag(e.carrier(), bound);
    for y in &er.toks {
        let Some(ek) = e.key(y) else { continue };
        let Some((k, x)) = by_image.get(&ek) else { continue };
        let py = emb.proj(y);
        if d.key(&py).as_ref() != Some(k) {
            return Verdict::Fails(format!(
                "f({}) ~ {} but the projection {} is not related to {}",
                d.pretty(x),
                e.pretty(y),
                d.pretty(&py),
                d.pretty(x)
            ));
        }
    }
    v.and(close(None, fr.truncated || er.truncated, fr.toks.len().min(er.toks.len())))
}

/// The image per `φ[D]` on the target carrier.
pub fn image_per(phi: &Map, d: &Per, e: &Per, bound: usize) -> Per {
    let mut hit = BTreeSet::new();
    let fr = d.totals(bound);
    for u in &fr.toks {
        if let Some(k) = phi.apply(u).and_then(|y| e.key(&y)) {
            hit.insert(k);
        }
    }
    let flags = Flags { countably_based: e.flags().countably_based, ..Flags::default() };
    Per::new(format!("{}[{}]", phi.name(), d.name()), e.carrier().clone(), PerKind::Image(e.clone(), Arc::new(hit)), flags)
}

/// The identity from the image per into the target is an equiembedding.
pub fn image_is_equiembedding_check(phi: &Map, d: &Per, e: &Per, bound: usize) -> Verdict {
    let img = image_per(phi, d, e, bound);
    is_equiembedding(&Embedding::identity(e.carrier()), &img, e, bound)
}

/// `χ∘φ ≈ id` and `φ∘χ ≈ id` on totals, after checking both maps are equivariant.
pub fn weak_iso_check(phi: &Map, chi: &Map, d: &Per, e: &Per, bound: usize) -> Verdict {
    let v = is_equivariant(phi, d, e, bound).and(is_equivariant(chi, e, d, bound));
    if v.fails() {
        return v;
    }
    let round = |a: &Map, b: &Map, p: &Per| -> Verdict {
        let fr = p.totals(bound);
        let mut unknown = fr.truncated;
        for x in &fr.toks {
            match a.apply(x).and_then(|y| b.apply(&y)) {
                Some(z) => {
                    if !p.related(&z, x) {
                        return Verdict::Fails(format!("round trip of {} gives {}", p.pretty(x), p.pretty(&z)));
                    }
                }
                None => unknown = true,
            }
        }
        close(None, unknown, fr.toks.len())
    };
    v.and(round(phi, chi, d)).and(round(chi, phi, e))
}

