//! Derived quantum functions built from the initial functions and rules.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_4, TAU};
use core::fmt;

use crate::state::DENSE_CAP;
use crate::term::*;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StdlibError {
    UnknownGate(String),
    EmptyList,
    IncompleteFamily { got: usize, want: usize },
    NotBijective,
    TooLarge(usize),
    BadArgument(String),
}

impl fmt::Display for StdlibError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StdlibError::UnknownGate(g) => write!(f, "unknown gate {g:?}"),
            StdlibError::EmptyList => write!(f, "empty term list"),
            StdlibError::IncompleteFamily { got, want } => {
                write!(f, "family has {got} members, expected {want}")
            }
            StdlibError::NotBijective => write!(f, "table is not a bijection"),
            StdlibError::TooLarge(k) => write!(f, "size {k} exceeds {DENSE_CAP}"),
            StdlibError::BadArgument(m) => write!(f, "{m}"),
        }
    }
}

pub fn cnot() -> T {
    branch(id(), not())
}

pub fn z1(theta: f64) -> T {
    compo(not(), compo(phase(theta), not()))
}

pub fn zrot(theta: f64) -> T {
    compo(z1(theta), phase(-theta))
}

pub fn gps(theta: f64) -> T {
    compo(z1(theta), phase(theta))
}

/// NOT∘ROT_{π/4}; the reverse order gives the wrong signs.
pub fn wh() -> T {
    compo(not(), rot(FRAC_PI_4))
}

pub fn cphase(theta: f64) -> T {
    branch(id(), phase(theta))
}

pub fn basic_gate(name: &str, theta: f64) -> Result<T, StdlibError> {
    Ok(match name {
        "cnot" => cnot(),
        "z1" => z1(theta),
        "zrot" => zrot(theta),
        "gps" => gps(theta),
        "wh" => wh(),
        "cphase" => cphase(theta),
        _ => return Err(StdlibError::UnknownGate(name.into())),
    })
}

/// `[f1, f2, .., fn]` becomes f1∘f2∘..∘fn, so fn runs first.
pub fn compo_all(terms: &[T]) -> Result<T, StdlibError> {
    let (last, rest) = terms.split_last().ok_or(StdlibError::EmptyList)?;
    Ok(rest.iter().rev().fold(last.clone(), |acc, f| compo(f.clone(), acc)))
}

/// Applies the list in order: the first element runs first.
pub(crate) fn seq(terms: Vec<T>) -> T {
    terms.into_iter().reduce(|acc, f| compo(f, acc)).unwrap_or_else(id)
}

pub fn length_guard(k: usize, g: T) -> T {
    if k <= 1 {
        g
    } else {
        switch(k - 1, id(), g)
    }
}

fn repeat(k: usize, f: T) -> T {
    seq(vec![f; k])
}

pub fn remove_1() -> T {
    kqrec(1, 1, id(), id(), swap(), vec![Rec::SelfRef; 2])
}

pub fn rep_1() -> T {
    kqrec(1, 1, id(), swap(), id(), vec![Rec::SelfRef; 2])
}

pub fn remove_k(k: usize) -> T {
    length_guard(k, repeat(k, remove_1()))
}

pub fn rep_k(k: usize) -> T {
    length_guard(k, repeat(k, rep_1()))
}

pub fn reverse() -> T {
    kqrec(1, 1, id(), remove_1(), id(), vec![Rec::SelfRef; 2])
}

/// Applies `g` to the register with the first `i` qubits skipped.
pub fn on_bit(i: usize, g: T) -> T {
    (0..i).fold(g, |acc, _| branch(acc.clone(), acc))
}

/// Exchanges the qubits at positions `i` and `i + 1`.
pub fn adj_swap(i: usize) -> T {
    if i <= 4 {
        on_bit(i, swap())
    } else {
        length_guard(i + 2, seq(vec![remove_k(i), swap(), rep_k(i)]))
    }
}

fn adj_swaps(ops: &[usize]) -> T {
    seq(ops.iter().map(|&i| adj_swap(i)).collect())
}

/// Adjacent swaps moving position `from` to position `to`.
pub(crate) fn move_ops(from: usize, to: usize) -> Vec<usize> {
    if from <= to {
        (from..to).collect()
    } else {
        (to..from).rev().collect()
    }
}

pub fn swap_k(k: usize) -> T {
    let mut ops = Vec::new();
    for j in 0..k {
        ops.extend(move_ops(k + j, j));
    }
    length_guard(2 * k, adj_swaps(&ops))
}

pub fn rearranger(kind: &str, k: usize) -> Result<T, StdlibError> {
    if kind != "reverse" && k == 0 {
        return Err(StdlibError::BadArgument("k must be >= 1".into()));
    }
    Ok(match kind {
        "remove_k" => remove_k(k),
        "rep_k" => rep_k(k),
        "swap_k" => swap_k(k),
        "reverse" => reverse(),
        _ => return Err(StdlibError::BadArgument(alloc::format!("unknown rearranger {kind:?}"))),
    })
}

pub fn branch_k(k: usize, gs: &[T]) -> Result<T, StdlibError> {
    if k == 0 || gs.len() != 1 << k {
        return Err(StdlibError::IncompleteFamily { got: gs.len(), want: 1 << k.min(63) });
    }
    Ok(branch_tree(gs))
}

fn branch_tree(gs: &[T]) -> T {
    if gs.len() == 2 {
        return branch(gs[0].clone(), gs[1].clone());
    }
    let (a, b) = gs.split_at(gs.len() / 2);
    branch(branch_tree(a), branch_tree(b))
}

pub fn rev_branch_k(k: usize, gs: &[T]) -> Result<T, StdlibError> {
    let b = branch_k(k, gs)?;
    Ok(seq(vec![rep_k(k), b, remove_k(k)]))
}

/// Flips position `j` of the first `k` qubits when the others match `ctrl`.
fn mcx(k: usize, j: usize, ctrl: u128) -> T {
    let ops = move_ops(j, k - 1);
    let back: Vec<usize> = ops.iter().rev().copied().collect();
    let mut chain = not();
    for pos in (0..k).rev().filter(|&p| p != j) {
        let bit = (ctrl >> (k - 1 - pos)) & 1;
        chain = if bit == 1 { branch(id(), chain) } else { branch(chain, id()) };
    }
    seq(vec![adj_swaps(&ops), chain, adj_swaps(&back)])
}

/// Transpositions, in application order, whose product is `f`.
pub fn transpositions(f: &[u128]) -> Vec<(u128, u128)> {
    let mut seen = vec![false; f.len()];
    let mut out = Vec::new();
    for start in 0..f.len() {
        if seen[start] {
            continue;
        }
        let mut cyc = vec![start as u128];
        seen[start] = true;
        let mut x = f[start] as usize;
        while x != start {
            seen[x] = true;
            cyc.push(x as u128);
            x = f[x] as usize;
        }
        for i in (0..cyc.len().saturating_sub(1)).rev() {
            out.push((cyc[i], cyc[i + 1]));
        }
    }
    out
}

/// A transposition of k-bit strings as Hamming-1 transpositions in application order.
fn gray_path(a: u128, b: u128, k: usize) -> Vec<(u128, u128)> {
    let mut steps = Vec::new();
    let mut c = a;
    for pos in 0..k {
        let m = 1u128 << (k - 1 - pos);
        if (a ^ b) & m != 0 {
            steps.push((c, c ^ m));
            c ^= m;
        }
    }
    let last = steps.pop().expect("distinct endpoints");
    let mut out = steps.clone();
    out.push(last);
    out.extend(steps.into_iter().rev());
    out
}

pub fn lift_bijection(k: usize, f: &[u128]) -> Result<T, StdlibError> {
    if k == 0 || k > DENSE_CAP {
        return Err(StdlibError::TooLarge(k));
    }
    if f.len() != 1 << k {
        return Err(StdlibError::NotBijective);
    }
    let set: BTreeSet<u128> = f.iter().copied().collect();
    if set.len() != f.len() || f.iter().any(|&x| x >= 1 << k) {
        return Err(StdlibError::NotBijective);
    }
    let mut ops = Vec::new();
    for (a, b) in transpositions(f) {
        for (c, d) in gray_path(a, b, k) {
            let diff = c ^ d;
            let j = k - 1 - diff.trailing_zeros() as usize;
            ops.push(mcx(k, j, c & !diff));
        }
    }
    Ok(length_guard(k, seq(ops)))
}

pub fn tensor_split(f: T, k: usize, g: T) -> T {
    let last = kqrec(1, k, f.clone(), id(), id(), vec![Rec::SelfRef; 2]);
    let head = seq(vec![remove_k(k), last, rep_k(k)]);
    let tail = branch_tree(&vec![g; 1 << k]);
    switch(k, f, compo(head, tail))
}

pub fn prefix_skip(f: T, k: usize) -> T {
    let inner = (1..k).fold(f, |acc, _| branch(id(), acc));
    kqrec(1, 1, id(), branch(id(), inner), id(), vec![Rec::SelfRef, Rec::Id])
}

pub fn qft(k: usize) -> Result<T, StdlibError> {
    if k == 0 || k > DENSE_CAP {
        return Err(StdlibError::TooLarge(k));
    }
    let mut ops = Vec::new();
    for i in 0..k {
        ops.push(on_bit(i, wh()));
        for j in i + 1..k {
            let theta = TAU / (1u64 << (j - i + 1)) as f64;
            ops.push(on_bit(i, branch(id(), on_bit(j - i - 1, phase(theta)))));
        }
    }
    let mut rev = Vec::new();
    for i in 0..k {
        rev.extend(move_ops(k - 1, i));
    }
    ops.push(adj_swaps(&rev));
    Ok(length_guard(k, seq(ops)))
}

/// Interleaves pairs of `A 11 B 11` into `(a1 b1)..(ak bk)(11 11)`.
pub fn interleave() -> T {
    let bubble = kqrec_with(2, 2, id(), swap_k(2), id(), |s| if s == 3 { Rec::Id } else { Rec::SelfRef });
    let p = branch_tree(&[bubble.clone(), bubble.clone(), bubble, id()]);
    kqrec_with(4, 4, id(), id(), p, |s| if s >> 3 == 0 { Rec::SelfRef } else { Rec::Id })
}

pub fn copy2() -> T {
    let table: Vec<u128> = (0..16u128)
        .map(|x| {
            let (x0, x3) = (x >> 3 & 1, x & 1);
            x ^ (((x0 ^ 1) & x3) << 2)
        })
        .collect();
    let xor = lift_bijection(4, &table).expect("involution");
    let xall = kqrec_with(4, 4, id(), id(), xor, |s| if s >> 3 == 0 { Rec::SelfRef } else { Rec::Id });
    let il = interleave();
    let il_inv = invert(&il).expect("meas-free");
    seq(vec![il, xall, il_inv])
}
