//! Property checks on domain-pers, exhaustive on finite carriers.

use std::collections::BTreeMap;

use super::{Per, PerError, Tri};
use crate::basis::Tok;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails(String),
    /// No failure among the first `n` tokens, but the carrier is larger.
    Unknown(usize),
}

impl Verdict {
    pub fn holds(&self) -> bool {
        *self == Verdict::Holds
    }
    pub fn fails(&self) -> bool {
        matches!(self, Verdict::Fails(_))
    }
    pub fn to_tri(&self) -> Tri {
        match self {
            Verdict::Holds => Tri::Yes,
            Verdict::Fails(_) => Tri::No,
            Verdict::Unknown(_) => Tri::Unknown,
        }
    }
    pub fn witness(&self) -> Option<&str> {
        match self {
            Verdict::Fails(w) => Some(w),
            _ => None,
        }
    }
    /// Combine verdicts: the first failure wins, then unknown.
    pub fn and(self, o: Verdict) -> Verdict {
        match (self, o) {
            (Verdict::Fails(w), _) | (_, Verdict::Fails(w)) => Verdict::Fails(w),
            (Verdict::Unknown(a), Verdict::Unknown(b)) => Verdict::Unknown(a.min(b)),
            (Verdict::Unknown(a), _) | (_, Verdict::Unknown(a)) => Verdict::Unknown(a),
            _ => Verdict::Holds,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Prop {
    WeaklyConvex,
    Convex,
    Local,
    StronglyLocal,
    Complete,
    UpwardsClosed,
    Dense,
}

impl Prop {
    pub const ALL: [Prop; 7] = [
        Prop::WeaklyConvex,
        Prop::Convex,
        Prop::Local,
        Prop::StronglyLocal,
        Prop::Complete,
        Prop::UpwardsClosed,
        Prop::Dense,
    ];
    pub fn name(self) -> &'static str {
        match self {
            Prop::WeaklyConvex => "weakly_convex",
            Prop::Convex => "convex",
            Prop::Local => "local",
            Prop::StronglyLocal => "strongly_local",
            Prop::Complete => "complete",
            Prop::UpwardsClosed => "upwards_closed",
            Prop::Dense => "dense",
        }
    }
}

struct Frag {
    toks: Vec<Tok>,
    keys: Vec<Option<Tok>>,
    classes: BTreeMap<Tok, Vec<usize>>,
    truncated: bool,
}

fn fragment(p: &Per, bound: usize) -> Frag {
    let l = p.carrier().tokens(bound);
    let keys: Vec<Option<Tok>> = l.toks.iter().map(|t| p.key(t)).collect();
    let mut classes: BTreeMap<Tok, Vec<usize>> = BTreeMap::new();
    for (i, k) in keys.iter().enumerate() {
        if let Some(k) = k {
            classes.entry(k.clone()).or_default().push(i);
        }
    }
    Frag { toks: l.toks, keys, classes, truncated: l.truncated }
}

pub fn check_property(p: &Per, prop: Prop, bound: usize) -> Verdict {
    let f = fragment(p, bound);
    let b = p.carrier();
    let pr = |t: &Tok| b.pretty(t);
    let fail = match prop {
        Prop::WeaklyConvex | Prop::Convex => {
            let mut w = None;
            'c: for members in f.classes.values() {
                for &i in members {
                    for &j in members {
                        let (x, y) = (&f.toks[i], &f.toks[j]);
                        if !b.leq(x, y) {
                            continue;
                        }
                        // on a finite carrier every element is compact, so the
                        // two notions coincide
                        for z in b.down_set(y) {
                            let j = b.join(x, &z).expect("both below y");
                            if p.key(&j) != f.keys[i] {
                                w = Some(format!(
                                    "{} ~ {}, but not {} ~ {}",
                                    pr(x),
                                    pr(y),
                                    pr(x),
                                    pr(&j)
                                ));
                                break 'c;
                            }
                        }
                    }
                }
            }
            w
        }
        Prop::Local => f.classes.values().find_map(|m| {
            if b.cons(m.iter().map(|&i| &f.toks[i])) {
                None
            } else {
                Some(format!("class of {} is inconsistent", pr(&f.toks[m[0]])))
            }
        }),
        Prop::StronglyLocal => f.classes.values().find_map(|m| {
            for &i in m {
                for &j in m {
                    let ok = m.iter().any(|&k| b.leq(&f.toks[i], &f.toks[k]) && b.leq(&f.toks[j], &f.toks[k]));
                    if !ok {
                        return Some(format!(
                            "class of {} is not directed at {}, {}",
                            pr(&f.toks[m[0]]),
                            pr(&f.toks[i]),
                            pr(&f.toks[j])
                        ));
                    }
                }
            }
            None
        }),
        Prop::Complete => f.classes.iter().find_map(|(k, m)| match b.lub(m.iter().map(|&i| &f.toks[i])) {
            None => Some(format!("class of {} is inconsistent", pr(&f.toks[m[0]]))),
            Some(l) => {
                if p.key(&l).as_ref() == Some(k) {
                    None
                } else {
                    Some(format!("lub {} of the class of {} is not in it", pr(&l), pr(&f.toks[m[0]])))
                }
            }
        }),
        Prop::UpwardsClosed => {
            let mut w = None;
            'u: for (i, x) in f.toks.iter().enumerate() {
                if f.keys[i].is_none() {
                    continue;
                }
                for (j, y) in f.toks.iter().enumerate() {
                    if b.leq(x, y) && f.keys[j] != f.keys[i] {
                        w = Some(format!("{} below {} but not related", pr(x), pr(y)));
                        break 'u;
                    }
                }
            }
            w
        }
        Prop::Dense => {
            let totals: Vec<&Tok> = f.toks.iter().zip(&f.keys).filter(|(_, k)| k.is_some()).map(|(t, _)| t).collect();
            let missing = f.toks.iter().find(|t| !totals.iter().any(|x| b.leq(t, x)));
            match missing {
                Some(_) if f.truncated => return Verdict::Unknown(f.toks.len()),
                Some(t) => Some(format!("{} has no total extension", pr(t))),
                None => None,
            }
        }
    };
    match fail {
        Some(w) => Verdict::Fails(w),
        None if f.truncated => Verdict::Unknown(f.toks.len()),
        None => Verdict::Holds,
    }
}

/// Compare the recorded yes/no flags with exhaustive checks; returns the mismatches.
pub fn verify_flags(p: &Per, bound: usize) -> Vec<String> {
    let fl = p.flags();
    let recorded = [
        (Prop::WeaklyConvex, fl.weakly_convex),
        (Prop::Convex, fl.convex),
        (Prop::Local, fl.local),
        (Prop::StronglyLocal, fl.strongly_local),
        (Prop::Complete, fl.complete),
        (Prop::UpwardsClosed, fl.upwards_closed),
        (Prop::Dense, fl.dense),
    ];
    let mut out = Vec::new();
    for (prop, t) in recorded {
        if t == Tri::Unknown {
            continue;
        }
        let v = check_property(p, prop, bound);
        if matches!(v, Verdict::Unknown(_)) {
            continue;
        }
        if v.to_tri() != t {
            out.push(format!("{} recorded {} but checks {}", prop.name(), t.as_str(), v.to_tri().as_str()));
        }
    }
    out
}

/// `p ≺ [x]`: some `y ≈ x` lies above `p`, among the first `bound` tokens.
pub fn prec_check(per: &Per, p: &Tok, x: &Tok, bound: usize) -> Result<bool, PerError> {
    let k = per.key(x).ok_or_else(|| PerError::NotTotal(per.pretty(x)))?;
    let b = per.carrier();
    if b.leq(p, x) {
        return Ok(true);
    }
    let l = b.tokens(bound);
    Ok(l.toks.iter().any(|y| b.leq(p, y) && per.key(y).as_ref() == Some(&k)))
}
