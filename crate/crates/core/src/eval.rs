//! Denotational semantics on sparse states.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::state::{mask, Amplitude, State, StateError, DENSE_CAP};
use crate::term::{validate, Diagnostic, KQRec, Rec, Term, T};

#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    InvalidTerm(Vec<Diagnostic>),
    State(StateError),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::InvalidTerm(d) => {
                write!(f, "invalid term")?;
                for x in d {
                    write!(f, "; {x}")?;
                }
                Ok(())
            }
            EvalError::State(e) => write!(f, "{e}"),
        }
    }
}

impl From<StateError> for EvalError {
    fn from(e: StateError) -> Self {
        EvalError::State(e)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RecStats {
    /// Deepest nesting of recursive (ℓ > t) cases.
    pub max_depth: usize,
    /// SelfRef branches entered with a non-null residual.
    pub self_calls: usize,
    active: usize,
}

#[derive(Debug, Clone, Default)]
pub struct EvalStats {
    nodes: BTreeMap<usize, RecStats>,
}

impl EvalStats {
    /// Statistics for a KQRec node, looked up by identity.
    pub fn of(&self, t: &T) -> RecStats {
        match &**t {
            Term::KQRec(q) => self.nodes.get(&(Arc::as_ptr(q) as usize)).copied().unwrap_or_default(),
            _ => RecStats::default(),
        }
    }
}

pub fn eval(t: &T, phi: &State) -> Result<State, EvalError> {
    eval_with_stats(t, phi).map(|r| r.0)
}

pub fn eval_with_stats(t: &T, phi: &State) -> Result<(State, EvalStats), EvalError> {
    let d = validate(t);
    if !d.is_empty() {
        return Err(EvalError::InvalidTerm(d));
    }
    let mut st = EvalStats::default();
    let r = run(t, phi.clone(), &mut st);
    Ok((r, st))
}

/// Evaluation without validation, for terms already known to be valid.
pub fn eval_unchecked(t: &T, phi: &State) -> State {
    run(t, phi.clone(), &mut EvalStats::default())
}

fn top(n: usize) -> u128 {
    1u128 << (n - 1)
}

fn run(t: &Term, phi: State, st: &mut EvalStats) -> State {
    if phi.is_null() {
        return phi;
    }
    let n = phi.width();
    let leaf = matches!(t, Term::Not | Term::Phase(_) | Term::Rot(_) | Term::Meas(_) | Term::Crot { .. });
    if n == 0 && leaf {
        return phi;
    }
    match t {
        Term::Id => phi,
        Term::Not => phi.map_keys(|k| k ^ top(n)),
        Term::Phase(a) => {
            let w = Amplitude::from_polar(1.0, *a);
            let e = phi.into_entries().into_iter().map(|(k, x)| (k, if k & top(n) != 0 { x * w } else { x })).collect();
            State::from_sorted(n, e)
        }
        Term::Rot(a) => {
            let (s, c) = (libm::sin(*a), libm::cos(*a));
            let b = top(n);
            let mut e = Vec::with_capacity(2 * phi.entries().len());
            for &(k, x) in phi.entries() {
                if k & b == 0 {
                    e.push((k, x * c));
                    e.push((k | b, x * s));
                } else {
                    e.push((k, x * c));
                    e.push((k & !b, -x * s));
                }
            }
            State::from_entries(n, e)
        }
        Term::Swap => {
            if n <= 1 {
                return phi;
            }
            let (a, b) = (top(n), top(n) >> 1);
            phi.map_keys(|k| {
                let x = (k & a != 0) as u128;
                let y = (k & b != 0) as u128;
                (k & !(a | b)) | (y * a) | (x * b)
            })
        }
        Term::Meas(a) => {
            let want = if *a == 1 { top(n) } else { 0 };
            let e = phi.into_entries().into_iter().filter(|e| e.0 & top(n) == want).collect();
            State::from_sorted(n, e)
        }
        Term::Crot { j, inv } => {
            let j = *j as usize;
            if n < j + 1 {
                return phi;
            }
            let ang = core::f64::consts::TAU / libm::pow(2.0, j as f64);
            let w = Amplitude::from_polar(1.0, if *inv { -ang } else { ang });
            let low = mask(j);
            let e = phi
                .into_entries()
                .into_iter()
                .map(|(k, x)| (k, if k & top(n) != 0 && k & low == 0 { x * w } else { x }))
                .collect();
            State::from_sorted(n, e)
        }
        Term::Compo(g, h) => {
            let mid = run(h, phi, st);
            run(g, mid, st)
        }
        Term::Switch(s, g, h) => {
            if n <= *s {
                run(g, phi, st)
            } else {
                run(h, phi, st)
            }
        }
        Term::Branch(g, h) => {
            if n <= 1 {
                return phi;
            }
            let parts = phi
                .split_prefix(1)
                .into_iter()
                .map(|(p, r)| (p, if p == 0 { run(g, r, st) } else { run(h, r, st) }))
                .collect();
            State::join_prefix(n, 1, parts)
        }
        Term::KQRec(q) => run_kq(q, phi, st),
    }
}

fn run_kq(q: &Arc<KQRec>, phi: State, st: &mut EvalStats) -> State {
    let n = phi.width();
    if n <= q.t {
        return run(&q.g, phi, st);
    }
    let key = Arc::as_ptr(q) as usize;
    {
        let s = st.nodes.entry(key).or_default();
        s.active += 1;
        s.max_depth = s.max_depth.max(s.active);
    }
    let pre = run(&q.p, phi, st);
    let mut parts = Vec::new();
    if !pre.is_null() {
        for (s, r) in pre.split_prefix(q.k) {
            let out = match q.fs[s as usize] {
                Rec::SelfRef => {
                    st.nodes.entry(key).or_default().self_calls += 1;
                    run_kq(q, r, st)
                }
                Rec::Id => r,
            };
            parts.push((s, out));
        }
    }
    st.nodes.entry(key).or_default().active -= 1;
    let joined = State::join_prefix(n, q.k, parts);
    run(&q.h, joined, st)
}

/// Columns are images of basis states in lexicographic order.
pub fn matrix_of(t: &T, n: usize) -> Result<Vec<Vec<Amplitude>>, EvalError> {
    if n > DENSE_CAP {
        return Err(StateError::TooLarge(n).into());
    }
    let d = validate(t);
    if !d.is_empty() {
        return Err(EvalError::InvalidTerm(d));
    }
    let dim = 1usize << n;
    let mut m = alloc::vec![alloc::vec![Amplitude::new(0.0, 0.0); dim]; dim];
    for col in 0..dim {
        let v = eval_unchecked(t, &State::basis_key(col as u128, n)).densify()?;
        for (row, a) in v.into_iter().enumerate() {
            m[row][col] = a;
        }
    }
    Ok(m)
}

/// Dense application of a matrix to a state, as an independent cross-check.
pub fn apply_dense(m: &[Vec<Amplitude>], phi: &State) -> Result<State, StateError> {
    let v = phi.densify()?;
    let out: Vec<Amplitude> = m.iter().map(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum()).collect();
    State::sparsify(&out, phi.width())
}

/// ‖U†U − I‖ in the max norm.
pub fn unitarity_defect(m: &[Vec<Amplitude>]) -> f64 {
    let d = m.len();
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let mut s = Amplitude::new(0.0, 0.0);
            for r in m {
                s += r[i].conj() * r[j];
            }
            if i == j {
                s -= 1.0;
            }
            worst = worst.max(s.norm());
        }
    }
    worst
}
