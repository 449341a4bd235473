//! Core of the sqp toolkit: sparse qustrings, the term calculus with its
//! evaluator, a library of derived terms, single-tape quantum Turing machines
//! and a compiler from such machines into terms.
#![no_std]

extern crate alloc;

pub mod compiler;
pub mod eval;
pub mod gen;
pub mod machines;
pub mod qtm;
pub mod state;
pub mod stdlib;
pub mod term;

pub use eval::{eval, eval_with_stats, matrix_of, EvalError, EvalStats};
pub use state::{Amplitude, State, StateError};
pub use term::{dc, invert, is_meas_free, validate, DcReport, Rec, Term, T};
