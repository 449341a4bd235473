//! Sparse qustrings.
//!
//! Keys are `u128` bit patterns with the first qubit in the most significant
//! used position, so numeric order coincides with lexicographic bitstring order.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Amplitude = Complex64;

pub const MAX_QUBITS: usize = 128;
pub const PRUNE_EPS: f64 = 1e-14;
pub const DENSE_CAP: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StateError {
    PrefixTooLong { prefix: usize, len: usize },
    LengthMismatch(usize, usize),
    TooLarge(usize),
    TooWide(usize),
    BadBit(char),
    BadDense { len: usize, n: usize },
}

impl fmt::Display for StateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateError::PrefixTooLong { prefix, len } => {
                write!(f, "prefix of length {prefix} exceeds register length {len}")
            }
            StateError::LengthMismatch(a, b) => write!(f, "register lengths differ: {a} vs {b}"),
            StateError::TooLarge(n) => write!(f, "{n} qubits exceeds the dense cap of {DENSE_CAP}"),
            StateError::TooWide(n) => write!(f, "{n} qubits exceeds the maximum of {MAX_QUBITS}"),
            StateError::BadBit(c) => write!(f, "invalid bit character {c:?}"),
            StateError::BadDense { len, n } => {
                write!(f, "vector of length {len} does not match {n} qubits")
            }
        }
    }
}

#[inline]
pub(crate) fn mask(n: usize) -> u128 {
    if n >= 128 {
        u128::MAX
    } else {
        (1u128 << n) - 1
    }
}

#[inline]
fn keep(a: Amplitude) -> bool {
    a.re.abs() >= PRUNE_EPS || a.im.abs() >= PRUNE_EPS
}

pub fn parse_bits(s: &str) -> Result<(u128, usize), StateError> {
    if s.len() > MAX_QUBITS {
        return Err(StateError::TooWide(s.len()));
    }
    let mut k = 0u128;
    for c in s.chars() {
        k <<= 1;
        match c {
            '0' => {}
            '1' => k |= 1,
            _ => return Err(StateError::BadBit(c)),
        }
    }
    Ok((k, s.len()))
}

pub fn bits_to_string(key: u128, n: usize) -> String {
    (0..n)
        .map(|i| if (key >> (n - 1 - i)) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// A qustring of fixed register width. An empty entry list is the null vector.
#[derive(Clone, PartialEq)]
pub struct State {
    n: usize,
    entries: Vec<(u128, Amplitude)>,
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "State[{}]{{", self.n)?;
        for (i, (k, a)) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}: {}{:+}i", bits_to_string(*k, self.n), a.re, a.im)?;
        }
        write!(f, "}}")
    }
}

impl State {
    pub fn null(n: usize) -> Self {
        State { n, entries: Vec::new() }
    }

    pub fn scalar(a: Amplitude) -> Self {
        Self::from_sorted(0, vec![(0, a)])
    }

    pub fn basis_key(key: u128, n: usize) -> Self {
        debug_assert!(n <= MAX_QUBITS && key & !mask(n) == 0);
        State { n, entries: vec![(key, Amplitude::new(1.0, 0.0))] }
    }

    pub fn basis(x: &str) -> Result<Self, StateError> {
        let (k, n) = parse_bits(x)?;
        Ok(Self::basis_key(k, n))
    }

    /// Builds a state from arbitrary entries, summing duplicates and pruning.
    pub fn from_entries(n: usize, mut entries: Vec<(u128, Amplitude)>) -> Self {
        entries.sort_unstable_by_key(|e| e.0);
        let mut out: Vec<(u128, Amplitude)> = Vec::with_capacity(entries.len());
        for (k, a) in entries {
            debug_assert!(k & !mask(n) == 0);
            match out.last_mut() {
                Some(last) if last.0 == k => last.1 += a,
                _ => out.push((k, a)),
            }
        }
        out.retain(|e| keep(e.1));
        State { n, entries: out }
    }

    /// Entries must already be strictly increasing by key.
    pub(crate) fn from_sorted(n: usize, mut entries: Vec<(u128, Amplitude)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        entries.retain(|e| keep(e.1));
        State { n, entries }
    }

    pub fn width(&self) -> usize {
        self.n
    }

    /// Length of the state: 0 for the null vector.
    pub fn ell(&self) -> usize {
        if self.is_null() {
            0
        } else {
            self.n
        }
    }

    pub fn is_null(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(u128, Amplitude)] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<(u128, Amplitude)> {
        self.entries
    }

    pub fn amplitude(&self, key: u128) -> Amplitude {
        match self.entries.binary_search_by_key(&key, |e| e.0) {
            Ok(i) => self.entries[i].1,
            Err(_) => Amplitude::new(0.0, 0.0),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|e| e.1.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.norm_sqr())
    }

    pub fn scale(&self, a: Amplitude) -> Self {
        let e = self.entries.iter().map(|&(k, v)| (k, v * a)).collect();
        Self::from_sorted(self.n, e)
    }

    pub fn add(&self, other: &State) -> Result<Self, StateError> {
        let n = match (self.is_null(), other.is_null()) {
            (true, _) => return Ok(other.clone()),
            (_, true) => return Ok(self.clone()),
            _ if self.n != other.n => return Err(StateError::LengthMismatch(self.n, other.n)),
            _ => self.n,
        };
        let mut e = self.entries.clone();
        e.extend_from_slice(&other.entries);
        Ok(Self::from_entries(n, e))
    }

    pub fn tensor(&self, other: &State) -> Result<Self, StateError> {
        if self.is_null() || other.is_null() {
            return Ok(State::null(self.n + other.n));
        }
        let n = self.n + other.n;
        if n > MAX_QUBITS {
            return Err(StateError::TooWide(n));
        }
        let mut e = Vec::with_capacity(self.entries.len() * other.entries.len());
        for &(ka, a) in &self.entries {
            for &(kb, b) in &other.entries {
                let hi = if other.n >= 128 { 0 } else { ka << other.n };
                e.push((hi | kb, a * b));
            }
        }
        Ok(Self::from_sorted(n, e))
    }

    pub fn project_prefix(&self, s: &str) -> Result<Self, StateError> {
        let (k, m) = parse_bits(s)?;
        self.project_key(k, m)
    }

    /// ⟨s|φ⟩ for a prefix given as a key of `m` bits.
    pub fn project_key(&self, s: u128, m: usize) -> Result<Self, StateError> {
        if m > self.n {
            return Err(StateError::PrefixTooLong { prefix: m, len: self.n });
        }
        let rest = self.n - m;
        let lo = if rest >= 128 { 0 } else { s << rest };
        let hi = lo | mask(rest);
        let start = self.entries.partition_point(|e| e.0 < lo);
        let end = self.entries.partition_point(|e| e.0 <= hi);
        let e = self.entries[start..end].iter().map(|&(k, a)| (k & mask(rest), a)).collect();
        Ok(State { n: rest, entries: e })
    }

    /// Splits on the first `m` bits into groups, each residual paired with its prefix.
    pub(crate) fn split_prefix(&self, m: usize) -> Vec<(u128, State)> {
        debug_assert!(m <= self.n);
        let rest = self.n - m;
        let mut out: Vec<(u128, State)> = Vec::new();
        for &(k, a) in &self.entries {
            let p = if rest >= 128 { 0 } else { k >> rest };
            let r = k & mask(rest);
            match out.last_mut() {
                Some((q, st)) if *q == p => st.entries.push((r, a)),
                _ => out.push((p, State { n: rest, entries: vec![(r, a)] })),
            }
        }
        out
    }

    /// Inverse of `split_prefix`: prefixes must be increasing and residuals of equal width.
    pub(crate) fn join_prefix(n: usize, m: usize, parts: Vec<(u128, State)>) -> Self {
        let rest = n - m;
        let mut e = Vec::new();
        for (p, st) in parts {
            debug_assert!(st.is_null() || st.n == rest);
            let hi = if rest >= 128 { 0 } else { p << rest };
            e.extend(st.entries.into_iter().map(|(k, a)| (hi | k, a)));
        }
        State { n, entries: e }
    }

    pub(crate) fn map_keys(&self, f: impl Fn(u128) -> u128) -> Self {
        let e = self.entries.iter().map(|&(k, a)| (f(k), a)).collect();
        Self::from_entries(self.n, e)
    }

    pub fn inner(&self, other: &State) -> Result<Amplitude, StateError> {
        if self.is_null() || other.is_null() {
            return Ok(Amplitude::new(0.0, 0.0));
        }
        if self.n != other.n {
            return Err(StateError::LengthMismatch(self.n, other.n));
        }
        let (mut i, mut j) = (0, 0);
        let mut acc = Amplitude::new(0.0, 0.0);
        while i < self.entries.len() && j < other.entries.len() {
            let (ka, a) = self.entries[i];
            let (kb, b) = other.entries[j];
            if ka < kb {
                i += 1;
            } else if kb < ka {
                j += 1;
            } else {
                acc += a.conj() * b;
                i += 1;
                j += 1;
            }
        }
        Ok(acc)
    }

    /// Largest amplitude-wise difference; null states compare as zero vectors.
    pub fn max_diff(&self, other: &State) -> f64 {
        let mut d = 0.0f64;
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() || j < b.len() {
            let (x, y) = match (a.get(i), b.get(j)) {
                (Some(p), Some(q)) if p.0 == q.0 => {
                    i += 1;
                    j += 1;
                    (p.1, q.1)
                }
                (Some(p), Some(q)) if p.0 < q.0 => {
                    i += 1;
                    (p.1, Amplitude::new(0.0, 0.0))
                }
                (Some(p), None) => {
                    i += 1;
                    (p.1, Amplitude::new(0.0, 0.0))
                }
                (_, Some(q)) => {
                    j += 1;
                    (Amplitude::new(0.0, 0.0), q.1)
                }
                (None, None) => unreachable!(),
            };
            d = d.max((x - y).norm());
        }
        if !self.is_null() && !other.is_null() && self.n != other.n {
            return f64::INFINITY;
        }
        d
    }

    pub fn densify(&self) -> Result<Vec<Amplitude>, StateError> {
        if self.n > DENSE_CAP {
            return Err(StateError::TooLarge(self.n));
        }
        let mut v = vec![Amplitude::new(0.0, 0.0); 1usize << self.n];
        for &(k, a) in &self.entries {
            v[k as usize] = a;
        }
        Ok(v)
    }

    pub fn sparsify(v: &[Amplitude], n: usize) -> Result<Self, StateError> {
        if n > DENSE_CAP {
            return Err(StateError::TooLarge(n));
        }
        if v.len() != 1usize << n {
            return Err(StateError::BadDense { len: v.len(), n });
        }
        let e = v.iter().enumerate().map(|(i, &a)| (i as u128, a)).collect();
        Ok(Self::from_sorted(n, e))
    }

    /// Deterministic dense random state of unit norm.
    pub fn random(n: usize, seed: u64) -> Self {
        assert!((1..=DENSE_CAP + 8).contains(&n), "random_state width out of range");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut e: Vec<(u128, Amplitude)> = (0..(1u128 << n))
            .map(|k| (k, Amplitude::new(gaussian(&mut rng), gaussian(&mut rng))))
            .collect();
        let norm = libm::sqrt(e.iter().map(|x| x.1.norm_sqr()).sum::<f64>());
        for x in &mut e {
            x.1 /= norm;
        }
        Self::from_sorted(n, e)
    }
}

fn uniform(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

pub(crate) fn gaussian(rng: &mut impl RngCore) -> f64 {
    let (u, v) = (uniform(rng), uniform(rng));
    libm::sqrt(-2.0 * libm::log(u)) * libm::cos(core::f64::consts::TAU * v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Amplitude {
        Amplitude::new(re, im)
    }

    #[test]
    fn basis_and_scalar() {
        let s = State::basis("01").unwrap();
        assert_eq!(s.width(), 2);
        assert_eq!(s.entries(), &[(1, c(1.0, 0.0))]);
        let e = State::basis("").unwrap();
        assert_eq!(e.width(), 0);
        assert_eq!(e.amplitude(0), c(1.0, 0.0));
        assert_eq!(State::basis("101").unwrap().entries()[0].0, 5);
    }

    #[test]
    fn tensor_conventions() {
        let a = State::basis("0").unwrap().scale(c(0.0, 2.0));
        let b = State::basis("1").unwrap().scale(c(3.0, 0.0));
        let t = a.tensor(&b).unwrap();
        assert_eq!(t.width(), 2);
        assert_eq!(t.entries(), &[(1, c(0.0, 6.0))]);
        let z = State::null(3).tensor(&b).unwrap();
        assert!(z.is_null());
        assert_eq!(z.ell(), 0);
        let h = State::scalar(c(0.5, 0.0)).tensor(&State::basis("1").unwrap()).unwrap();
        assert_eq!(h.entries(), &[(1, c(0.5, 0.0))]);
    }

    #[test]
    fn projection() {
        let r = core::f64::consts::FRAC_1_SQRT_2;
        let phi = State::from_entries(2, vec![(1, c(r, 0.0)), (2, c(r, 0.0))]);
        let p = phi.project_prefix("0").unwrap();
        assert_eq!(p.width(), 1);
        assert_eq!(p.entries(), &[(1, c(r, 0.0))]);
        let q = State::basis("01").unwrap().project_prefix("1").unwrap();
        assert!(q.is_null());
        let ab = State::from_entries(2, vec![(1, c(0.6, 0.0)), (2, c(0.8, 0.0))]);
        let s = ab.project_prefix("01").unwrap();
        assert_eq!(s.width(), 0);
        assert_eq!(s.amplitude(0), c(0.6, 0.0));
        assert!(matches!(ab.project_prefix("011"), Err(StateError::PrefixTooLong { .. })));
    }

    #[test]
    fn inner_products() {
        let z = State::basis("0").unwrap();
        let o = State::basis("1").unwrap();
        assert_eq!(z.inner(&z).unwrap(), c(1.0, 0.0));
        assert_eq!(z.inner(&o).unwrap(), c(0.0, 0.0));
        let s = State::from_entries(2, vec![(1, c(0.6, 0.1)), (2, c(0.0, 0.7))]);
        let v = s.inner(&s).unwrap();
        assert!((v.re - (0.37 + 0.49)).abs() < 1e-15 && v.im == 0.0);
        assert!(z.inner(&State::basis("00").unwrap()).is_err());
        assert_eq!(z.inner(&State::null(5)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn dense_round_trip() {
        assert_eq!(State::basis("1").unwrap().densify().unwrap(), vec![c(0.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(State::null(2).densify().unwrap(), vec![c(0.0, 0.0); 4]);
        let r = core::f64::consts::FRAC_1_SQRT_2;
        let s = State::sparsify(&[c(r, 0.0), c(r, 0.0)], 1).unwrap();
        assert_eq!(s.entries(), &[(0, c(r, 0.0)), (1, c(r, 0.0))]);
        assert!(matches!(State::null(13).densify(), Err(StateError::TooLarge(13))));
        let x = State::random(6, 4);
        assert_eq!(State::sparsify(&x.densify().unwrap(), 6).unwrap().max_diff(&x), 0.0);
    }

    #[test]
    fn random_states() {
        assert_eq!(State::random(3, 7), State::random(3, 7));
        assert!((State::random(5, 1).norm() - 1.0).abs() < 1e-12);
        assert_ne!(State::random(1, 2), State::random(1, 3));
        assert_eq!(State::random(4, 9).entries().len(), 16);
    }

    #[test]
    fn pruning_detects_null() {
        let a = State::basis("1").unwrap();
        let s = a.add(&a.scale(c(-1.0, 0.0))).unwrap();
        assert!(s.is_null());
        assert_eq!(s.width(), 1);
    }

    #[test]
    fn wide_registers() {
        let x: String = core::iter::repeat_n('1', 128).collect();
        let s = State::basis(&x).unwrap();
        assert_eq!(s.entries()[0].0, u128::MAX);
        let p = s.project_prefix("1").unwrap();
        assert_eq!(p.width(), 127);
        assert!(State::basis(&(x + "0")).is_err());
    }
}
