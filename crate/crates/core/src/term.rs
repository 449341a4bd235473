//! The term IR: initial functions, construction rules and quantum recursion.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::fmt;

pub type T = Arc<Term>;

/// Normalizes an angle into `[0, 2π)`.
pub fn norm_angle(theta: f64) -> f64 {
    let r = libm::fmod(theta, TAU);
    let r = if r < 0.0 { r + TAU } else { r };
    if r >= TAU || r == 0.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rec {
    SelfRef,
    Id,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KQRec {
    pub k: usize,
    pub t: usize,
    pub g: T,
    pub h: T,
    pub p: T,
    /// Indexed by the numeric value of the k-bit prefix.
    pub fs: Vec<Rec>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Id,
    Not,
    Phase(f64),
    Rot(f64),
    Swap,
    Meas(u8),
    /// Controlled rotation by ω_j, or its conjugate when `inv` is set.
    Crot { j: u32, inv: bool },
    Compo(T, T),
    Switch(usize, T, T),
    Branch(T, T),
    KQRec(Arc<KQRec>),
}

pub fn id() -> T {
    Arc::new(Term::Id)
}
pub fn not() -> T {
    Arc::new(Term::Not)
}
pub fn swap() -> T {
    Arc::new(Term::Swap)
}
pub fn phase(theta: f64) -> T {
    Arc::new(Term::Phase(norm_angle(theta)))
}
pub fn rot(theta: f64) -> T {
    Arc::new(Term::Rot(norm_angle(theta)))
}
pub fn meas(a: u8) -> T {
    Arc::new(Term::Meas(a))
}
pub fn crot(j: u32) -> T {
    Arc::new(Term::Crot { j, inv: false })
}
/// `compo(g, h)` applies `h` first.
pub fn compo(g: T, h: T) -> T {
    Arc::new(Term::Compo(g, h))
}
pub fn switch(t: usize, g: T, h: T) -> T {
    Arc::new(Term::Switch(t, g, h))
}
pub fn branch(g: T, h: T) -> T {
    Arc::new(Term::Branch(g, h))
}
pub fn kqrec(k: usize, t: usize, g: T, h: T, p: T, fs: Vec<Rec>) -> T {
    Arc::new(Term::KQRec(Arc::new(KQRec { k, t, g, h, p, fs })))
}
/// KQRec whose branch map is given as a predicate on the prefix value.
pub fn kqrec_with(k: usize, t: usize, g: T, h: T, p: T, f: impl Fn(u128) -> Rec) -> T {
    let fs = (0..(1u128 << k)).map(f).collect();
    kqrec(k, t, g, h, p, fs)
}

impl Term {
    pub fn name(&self) -> &'static str {
        match self {
            Term::Id => "i",
            Term::Not => "not",
            Term::Phase(_) => "phase",
            Term::Rot(_) => "rot",
            Term::Swap => "swap",
            Term::Meas(_) => "meas",
            Term::Crot { .. } => "crot",
            Term::Compo(..) => "compo",
            Term::Switch(..) => "switch",
            Term::Branch(..) => "branch",
            Term::KQRec(_) => "kqrec",
        }
    }

    pub fn children(&self) -> Vec<(&'static str, &T)> {
        match self {
            Term::Compo(g, h) | Term::Switch(_, g, h) | Term::Branch(g, h) => {
                vec![("g", g), ("h", h)]
            }
            Term::KQRec(q) => vec![("g", &q.g), ("h", &q.h), ("p", &q.p)],
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        let p = if self.path.is_empty() { "root" } else { &self.path };
        write!(f, "{s} at {p}: {}", self.message)
    }
}

/// Walks each distinct node once, however often it is shared.
fn walk_unique<'a>(t: &'a T, path: String, seen: &mut BTreeMap<usize, ()>, out: &mut Vec<(String, &'a T)>) {
    if seen.insert(Arc::as_ptr(t) as usize, ()).is_some() {
        return;
    }
    out.push((path.clone(), t));
    for (lab, c) in t.children() {
        let p = if path.is_empty() { format!("{}.{lab}", t.name()) } else { format!("{path}/{}.{lab}", t.name()) };
        walk_unique(c, p, seen, out);
    }
}

pub fn is_meas_free(t: &T) -> bool {
    let mut nodes = Vec::new();
    walk_unique(t, String::new(), &mut BTreeMap::new(), &mut nodes);
    nodes.iter().all(|(_, n)| !matches!(***n, Term::Meas(_)))
}

pub fn validate(t: &T) -> Vec<Diagnostic> {
    let mut nodes = Vec::new();
    walk_unique(t, String::new(), &mut BTreeMap::new(), &mut nodes);
    let mut out = Vec::new();
    let mut err = |path: &String, message: String| {
        out.push(Diagnostic { severity: Severity::Error, path: path.clone(), message })
    };
    for (path, n) in &nodes {
        match &***n {
            Term::Phase(a) | Term::Rot(a) if !(a.is_finite() && (0.0..TAU).contains(a)) => {
                err(path, format!("angle {a} outside [0, 2pi)"))
            }
            Term::Meas(a) if *a > 1 => err(path, format!("meas bit {a} is not 0 or 1")),
            Term::Crot { j, .. } => {
                if !cfg!(feature = "crot") {
                    err(path, "crot requires the crot extension".into());
                }
                if *j == 0 {
                    err(path, "crot needs j >= 1".into());
                }
            }
            Term::Switch(0, ..) => err(path, "switch threshold must be >= 1".into()),
            Term::KQRec(q) => {
                if q.k == 0 || q.k > 16 {
                    err(path, format!("k = {} outside 1..=16", q.k));
                } else if q.fs.len() != 1 << q.k {
                    err(path, format!("fs has {} entries, expected {}", q.fs.len(), 1usize << q.k));
                }
                if q.t == 0 {
                    err(path, "t must be >= 1".into());
                }
                if q.t < q.k {
                    err(path, format!("t < k (t = {}, k = {})", q.t, q.k));
                }
                if !q.fs.contains(&Rec::SelfRef) {
                    err(path, "no SelfRef branch".into());
                }
                if !is_meas_free(&q.p) {
                    err(path, "p contains meas".into());
                }
            }
            _ => {}
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NotInvertible;

impl fmt::Display for NotInvertible {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "term contains meas and has no inverse")
    }
}

pub fn invert(t: &T) -> Result<T, NotInvertible> {
    fn go(t: &T, memo: &mut BTreeMap<usize, T>) -> Result<T, NotInvertible> {
        let key = Arc::as_ptr(t) as usize;
        if let Some(r) = memo.get(&key) {
            return Ok(r.clone());
        }
        let r = match &**t {
            Term::Id | Term::Not | Term::Swap => t.clone(),
            Term::Phase(a) => phase(-a),
            Term::Rot(a) => rot(-a),
            Term::Meas(_) => return Err(NotInvertible),
            Term::Crot { j, inv } => Arc::new(Term::Crot { j: *j, inv: !inv }),
            Term::Compo(g, h) => compo(go(h, memo)?, go(g, memo)?),
            Term::Switch(s, g, h) => switch(*s, go(g, memo)?, go(h, memo)?),
            Term::Branch(g, h) => branch(go(g, memo)?, go(h, memo)?),
            Term::KQRec(q) => {
                kqrec(q.k, q.t, go(&q.g, memo)?, go(&q.p, memo)?, go(&q.h, memo)?, q.fs.clone())
            }
        };
        memo.insert(key, r.clone());
        Ok(r)
    }
    go(t, &mut BTreeMap::new())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DcReport {
    pub total: u128,
    pub per_constructor: BTreeMap<&'static str, u128>,
    pub dag_total: u128,
}

/// Structural identity of a node given the ids of its children.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Shape {
    Leaf(&'static str, u64, bool),
    Node(&'static str, usize, Vec<usize>, Vec<Rec>),
}

pub fn dc(t: &T) -> DcReport {
    struct Ctx {
        tree: BTreeMap<usize, (u128, BTreeMap<&'static str, u128>, usize)>,
        shapes: BTreeMap<Shape, usize>,
    }
    fn go(t: &T, cx: &mut Ctx) -> (u128, BTreeMap<&'static str, u128>, usize) {
        let key = Arc::as_ptr(t) as usize;
        if let Some(r) = cx.tree.get(&key) {
            return r.clone();
        }
        let mut total = 1u128;
        let mut per = BTreeMap::new();
        per.insert(t.name(), 1u128);
        let mut ids = Vec::new();
        for (_, c) in t.children() {
            let (ct, cp, cid) = go(c, cx);
            total += ct;
            for (k, v) in cp {
                *per.entry(k).or_insert(0) += v;
            }
            ids.push(cid);
        }
        let shape = match &**t {
            Term::Phase(a) | Term::Rot(a) => Shape::Leaf(t.name(), a.to_bits(), false),
            Term::Meas(a) => Shape::Leaf(t.name(), *a as u64, false),
            Term::Crot { j, inv } => Shape::Leaf(t.name(), *j as u64, *inv),
            Term::Switch(s, ..) => Shape::Node(t.name(), *s, ids, Vec::new()),
            Term::KQRec(q) => Shape::Node(t.name(), q.k * 1000 + q.t, ids, q.fs.clone()),
            Term::Compo(..) | Term::Branch(..) => Shape::Node(t.name(), 0, ids, Vec::new()),
            _ => Shape::Leaf(t.name(), 0, false),
        };
        let next = cx.shapes.len();
        let id = *cx.shapes.entry(shape).or_insert(next);
        let r = (total, per, id);
        cx.tree.insert(key, r.clone());
        r
    }
    let mut cx = Ctx { tree: BTreeMap::new(), shapes: BTreeMap::new() };
    let (total, per_constructor, _) = go(t, &mut cx);
    DcReport { total, per_constructor, dag_total: cx.shapes.len() as u128 }
}
