//! Small machines used for tests, examples and the acceptance suite.
//!
//! All use two state bits (q0 = 00, qf = 11) and the time bound p(n) = n + 2.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_4;

use crate::qtm::{Dir, QtmSpec, Sym, Transition};
use crate::state::Amplitude;

type Delta = BTreeMap<(u32, Sym), Vec<Transition>>;

fn t(q: u32, tau: Sym, d: Dir, re: f64) -> Transition {
    Transition { q, tau, d, amp: Amplitude::new(re, 0.0) }
}

/// Rows for the two unused states, swapping them in place.
fn fillers(delta: &mut Delta) {
    for s in Sym::ALL {
        delta.insert((1, s), vec![t(2, s, Dir::N, 1.0)]);
        delta.insert((2, s), vec![t(1, s, Dir::N, 1.0)]);
    }
}

fn build(rows: impl Fn(Sym) -> Vec<Transition>) -> QtmSpec {
    let mut delta = Delta::new();
    for s in Sym::ALL {
        delta.insert((0, s), rows(s));
    }
    fillers(&mut delta);
    QtmSpec::new(2, vec![2, 1], delta)
}

pub fn identity() -> QtmSpec {
    build(|s| vec![t(3, s, Dir::N, 1.0)])
}

pub fn not_machine() -> QtmSpec {
    build(|s| {
        let f = match s {
            Sym::Zero => Sym::One,
            Sym::One => Sym::Zero,
            Sym::Blank => Sym::Blank,
        };
        vec![t(3, f, Dir::N, 1.0)]
    })
}

/// Rotates the first cell by π/4.
pub fn rotation() -> QtmSpec {
    let (c, s) = (libm::cos(FRAC_PI_4), libm::sin(FRAC_PI_4));
    build(|x| match x {
        Sym::Zero => vec![t(3, Sym::Zero, Dir::N, c), t(3, Sym::One, Dir::N, s)],
        Sym::One => vec![t(3, Sym::Zero, Dir::N, -s), t(3, Sym::One, Dir::N, c)],
        Sym::Blank => vec![t(3, Sym::Blank, Dir::N, 1.0)],
    })
}

pub fn violates_unit_length() -> QtmSpec {
    let mut m = identity();
    m.delta.insert((0, Sym::Zero), vec![t(3, Sym::Zero, Dir::N, 1.0), t(3, Sym::One, Dir::N, 1.0)]);
    m
}

pub fn violates_orthogonality() -> QtmSpec {
    let mut m = identity();
    m.delta.insert((0, Sym::Zero), vec![t(1, Sym::Zero, Dir::N, 1.0)]);
    m.delta.insert((0, Sym::One), vec![t(1, Sym::Zero, Dir::N, 1.0)]);
    m
}

/// Orthonormal rows, but two of them reach state 01 on the same cell from opposite sides.
pub fn violates_separability() -> QtmSpec {
    let mut delta = Delta::new();
    delta.insert((0, Sym::Zero), vec![t(1, Sym::Zero, Dir::R, 1.0)]);
    delta.insert((2, Sym::Zero), vec![t(1, Sym::Zero, Dir::L, 1.0)]);
    delta.insert((0, Sym::One), vec![t(1, Sym::One, Dir::N, 1.0)]);
    delta.insert((0, Sym::Blank), vec![t(1, Sym::Blank, Dir::N, 1.0)]);
    for s in Sym::ALL {
        delta.insert((1, s), vec![t(2, s, Dir::N, 1.0)]);
    }
    delta.insert((2, Sym::One), vec![t(3, Sym::One, Dir::N, 1.0)]);
    delta.insert((2, Sym::Blank), vec![t(3, Sym::Blank, Dir::N, 1.0)]);
    QtmSpec::new(2, vec![2, 1], delta)
}

/// Flips the first cell, steps left, then returns right and halts.
pub fn flip_walk() -> QtmSpec {
    let mut delta = Delta::new();
    for s in Sym::ALL {
        let f = match s {
            Sym::Zero => Sym::One,
            Sym::One => Sym::Zero,
            Sym::Blank => Sym::Blank,
        };
        delta.insert((0, s), vec![t(1, f, Dir::L, 1.0)]);
        delta.insert((1, s), vec![t(3, s, Dir::R, 1.0)]);
        delta.insert((2, s), vec![t(2, s, Dir::N, 1.0)]);
    }
    QtmSpec::new(2, vec![2, 1], delta)
}
