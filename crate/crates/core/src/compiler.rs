//! Compiles a conservative, plain, unidirectional QTM into a single term.
//!
//! Register layout used between stages, for input length n and p = p(n):
//!
//! * input: `0^p 1  0^N 1  x` with N = 9p + 3n + ℓ + 4
//! * after the initializer: `(00)^p 11  q  cells`, where q = 0^ℓ and `cells`
//!   lists n + 2p + 1 four-bit blocks in cyclic order: cells 0..=n+p, then
//!   cells -p..=-1. A block is `1 h s1 s2` with h = 1 on the head cell.
//! * the loop turns each counter pair `00` into `0 f`, f recording whether a
//!   step was taken.
//! * after the output stage: `~M  rest  q  markers  11  pairs`, where the
//!   markers of the extracted cells carry the output symbol in their first bit.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::qtm::{self, state_str, Dir, QtmSpec, SkewConfig, Sym};
use crate::state::{Amplitude, State};
use crate::stdlib::*;
use crate::term::*;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompileError {
    UnsupportedRow(String),
    NotUnidirectional(String),
    Ill(Vec<Diagnostic>),
    Input(String),
}

impl fmt::Display for CompileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompileError::UnsupportedRow(m) => write!(f, "unsupported row: {m}"),
            CompileError::NotUnidirectional(q) => write!(f, "state {q} is entered from more than one direction"),
            CompileError::Ill(d) => {
                write!(f, "machine fails its checks")?;
                for x in d {
                    write!(f, "; {x}")?;
                }
                Ok(())
            }
            CompileError::Input(m) => write!(f, "{m}"),
        }
    }
}

/// Swaps qubit positions `i < j`.
fn transpose(i: usize, j: usize) -> T {
    let mut ops = move_ops(j, i);
    ops.extend(move_ops(i + 1, j));
    seq(ops.into_iter().map(adj_swap).collect())
}

/// Moves the block at positions `a..a+len` to start at position 0.
fn block_to_front(a: usize, len: usize) -> T {
    let ops: Vec<usize> = (0..len).flat_map(|j| move_ops(a + j, j)).collect();
    seq(ops.into_iter().map(adj_swap).collect())
}

/// A single-qubit term with the given 2x2 matrix (columns are images).
pub fn single_qubit(u: [[Amplitude; 2]; 2]) -> T {
    let (c, s) = (u[0][0].norm(), u[1][0].norm());
    let theta = libm::atan2(s, c);
    let (alpha, beta, delta);
    if s < 1e-12 {
        alpha = u[0][0].arg();
        beta = u[1][1].arg() - alpha;
        delta = 0.0;
    } else if c < 1e-12 {
        alpha = u[1][0].arg();
        beta = 0.0;
        delta = (-u[0][1]).arg() - alpha;
    } else {
        alpha = u[0][0].arg();
        beta = u[1][0].arg() - alpha;
        delta = (-u[0][1]).arg() - alpha;
    }
    let mut ops = Vec::new();
    let nz = |a: f64| {
        let a = norm_angle(a);
        a > 1e-15 && a < 2.0 * PI - 1e-15
    };
    if nz(delta) {
        ops.push(phase(delta));
    }
    if nz(theta) {
        ops.push(rot(theta));
    }
    if nz(beta) {
        ops.push(phase(beta));
    }
    if nz(alpha) {
        ops.push(gps(alpha));
    }
    seq(ops)
}

/// Input keys, output keys and the 2x2 matrix between them.
type Block = ([u128; 2], [u128; 2], [[Amplitude; 2]; 2]);

fn key(q: u32, s: Sym) -> u128 {
    ((q as u128) << 2) | s.code()
}

/// The local unitary on `q σ̂` (ℓ + 2 qubits) realizing δ with directions dropped.
pub fn transition_unitary(m: &QtmSpec) -> Result<T, CompileError> {
    let l = m.state_bits;
    let dim = 1usize << (l + 2);
    let mut rows: Vec<Vec<(u128, Amplitude)>> = vec![Vec::new(); dim];
    for r in 0..dim as u128 {
        let (q, sc) = ((r >> 2) as u32, r & 3);
        match Sym::from_code(sc) {
            None => rows[r as usize].push((r, Amplitude::new(1.0, 0.0))),
            Some(s) => {
                for t in m.row(q, s) {
                    rows[r as usize].push((key(t.q, t.tau), t.amp));
                }
            }
        }
    }
    let label = |r: usize| format!("delta({},{})", state_str((r >> 2) as u32, l), Sym::from_code(r as u128 & 3).map_or('?', |s| s.as_char()));
    let mut blocks: Vec<Block> = Vec::new();
    let mut used = vec![false; dim];
    let mut singles = Vec::new();
    for r in 0..dim {
        if used[r] {
            continue;
        }
        match rows[r].len() {
            1 => singles.push(r),
            2 => {
                let mut tg = [rows[r][0].0, rows[r][1].0];
                tg.sort_unstable();
                let mate = (r + 1..dim).find(|&o| {
                    !used[o] && rows[o].len() == 2 && {
                        let mut t2 = [rows[o][0].0, rows[o][1].0];
                        t2.sort_unstable();
                        t2 == tg
                    }
                });
                let o = mate.ok_or_else(|| CompileError::UnsupportedRow(format!("{}: no partner row", label(r))))?;
                used[o] = true;
                let amp = |row: usize, c: u128| rows[row].iter().find(|e| e.0 == c).map_or(Amplitude::new(0.0, 0.0), |e| e.1);
                let u = [[amp(r, tg[0]), amp(o, tg[0])], [amp(r, tg[1]), amp(o, tg[1])]];
                blocks.push(([r as u128, o as u128], tg, u));
            }
            k => return Err(CompileError::UnsupportedRow(format!("{}: {k} targets", label(r)))),
        }
        used[r] = true;
    }
    if singles.len() % 2 != 0 {
        return Err(CompileError::UnsupportedRow("odd number of single-target rows".into()));
    }
    for pair in singles.chunks(2) {
        let (a, b) = (&rows[pair[0]][0], &rows[pair[1]][0]);
        let z = Amplitude::new(0.0, 0.0);
        blocks.push(([pair[0] as u128, pair[1] as u128], [a.0, b.0], [[a.1, z], [z, b.1]]));
    }
    let mut pin = vec![u128::MAX; dim];
    let mut pout = vec![u128::MAX; dim];
    let mut gs = Vec::new();
    for (j, (ins, outs, u)) in blocks.iter().enumerate() {
        for b in 0..2 {
            pin[ins[b] as usize] = ((j as u128) << 1) | b as u128;
            pout[((j as u128) << 1 | b as u128) as usize] = outs[b];
        }
        gs.push(single_qubit(*u));
    }
    let lin = lift_bijection(l + 2, &pin).map_err(|_| CompileError::UnsupportedRow("transition targets collide".into()))?;
    let lout = lift_bijection(l + 2, &pout).map_err(|_| CompileError::UnsupportedRow("transition targets collide".into()))?;
    let mid = branch_k(l + 1, &gs).expect("complete family");
    Ok(seq(vec![lin, mid, lout]))
}

/// Right cyclic rotation of the head bits over a register of whole cells.
fn rotate_right() -> T {
    kqrec_with(4, 4, id(), transpose(1, 5), id(), |_| Rec::SelfRef)
}

fn rotate_left() -> T {
    kqrec_with(4, 4, id(), id(), transpose(1, 5), |_| Rec::SelfRef)
}

/// One machine step on `q cells`.
pub fn step_core(m: &QtmSpec) -> Result<T, CompileError> {
    let l = m.state_bits;
    let dirs = qtm::unidirectional(m).map_err(|q| CompileError::NotUnidirectional(state_str(q, l)))?;
    let v = transition_unitary(m)?;
    let to_front = seq(vec![block_to_front(l, 2)]);
    let back = invert(&to_front).expect("meas-free");
    let a = seq(vec![to_front, branch(id(), branch(id(), v)), back]);
    let tq = block_to_front(l, 4);
    let sweep = kqrec_with(4, l + 3, id(), id(), compo(tq, a), |_| Rec::SelfRef);
    let (rr, lr) = (rotate_right(), rotate_left());
    let moves: Vec<T> = (0..m.num_states())
        .map(|q| match dirs.get(&q) {
            Some(Dir::R) => rr.clone(),
            Some(Dir::L) => lr.clone(),
            _ => id(),
        })
        .collect();
    let mv = branch_k(l, &moves).expect("complete family");
    Ok(seq(vec![sweep, rep_k(l), mv]))
}

/// Phase -1 exactly when the leading ℓ qubits are all 1.
fn halted_phase(l: usize) -> T {
    (1..l).fold(phase(PI), |acc, _| branch(id(), acc))
}

/// Flagged step on `f q cells`: sets f to "not halted" and steps only then.
pub fn flagged_step(step: T, l: usize) -> T {
    seq(vec![wh(), branch(id(), halted_phase(l)), wh(), not(), branch(id(), step)])
}

/// Applies `f` to the register after the `11` terminating a run of `0?` pairs.
fn after_pairs(f: T) -> T {
    kqrec_with(2, 2, id(), branch(id(), branch(id(), f)), id(), |s| if s >> 1 == 0 { Rec::SelfRef } else { Rec::Id })
}

pub fn loop_term(f2: T) -> T {
    let rot3 = block_to_front(1, 2);
    let tf = kqrec_with(2, 2, id(), id(), rot3, |s| if s >> 1 == 0 { Rec::SelfRef } else { Rec::Id });
    let h0 = seq(vec![tf.clone(), after_pairs(f2), invert(&tf).expect("meas-free")]);
    kqrec_with(2, 2, id(), branch(h0, id()), id(), |s| if s >> 1 == 0 { Rec::SelfRef } else { Rec::Id })
}

/// Moves the first bit past the first 1 to the front: `0^a 1 0 r` to `0^(a+1) 1 r`.
fn pull_zero() -> T {
    kqrec(1, 1, id(), swap(), id(), vec![Rec::SelfRef, Rec::Id])
}

/// Applies `f` once per leading zero, to the register after the first 1.
fn repeat_by_counter(f: T) -> T {
    kqrec(1, 1, id(), branch(prefix_skip(f, 1), id()), id(), vec![Rec::SelfRef, Rec::Id])
}

pub fn initializer(m: &QtmSpec) -> T {
    let l = m.state_bits;
    let ps = |f: T| prefix_skip(f, 1);
    let rot4 = lift_bijection(4, &(0..16u128).map(|x| ((x & 1) << 3) | (x >> 1)).collect::<Vec<_>>()).expect("bijection");
    let cellify = kqrec_with(4, 4, id(), id(), compo(rot4, seq(vec![rep_1(); 3])), |_| Rec::SelfRef);
    let mark = compo(on_bit(1, not()), kqrec_with(4, 4, not(), id(), not(), |_| Rec::SelfRef));
    let blank = compo(remove_k(4), compo(not(), on_bit(2, not())));
    let insert_q = invert(&pull_zero()).expect("meas-free");
    let double = kqrec(1, 1, id(), branch(pull_zero(), id()), id(), vec![Rec::SelfRef, Rec::Id]);
    seq(vec![
        ps(seq(vec![reverse(), cellify, reverse()])),
        ps(ps(mark)),
        ps(seq(vec![insert_q; l])),
        repeat_by_counter(compo(blank.clone(), blank.clone())),
        ps(blank),
        double,
    ])
}

/// Output stage: moves `~M` to the front of the register.
pub fn output_term(m: &QtmSpec) -> T {
    let mark_out = lift_bijection(4, &(0..16u128).map(|x| x ^ ((x & 1) << 3)).collect::<Vec<_>>()).expect("bijection");
    let extract = kqrec_with(2, 2, id(), cnot(), compo(remove_k(2), mark_out), |s| if s >> 1 == 0 { Rec::SelfRef } else { Rec::Id });
    let gather = kqrec_with(2, 2, id(), remove_k(2), id(), |s| if s >> 1 == 0 { Rec::SelfRef } else { Rec::Id });
    compo(gather, after_pairs(compo(extract, remove_k(m.state_bits))))
}

/// Strips the tilde code: `~M ρ` becomes `M 1 ρ 1 0^|M|`.
pub fn decode_output_term() -> T {
    let h = compo(branch(remove_1(), remove_1()), swap());
    kqrec_with(2, 2, id(), h, id(), |s| if s >> 1 == 0 { Rec::SelfRef } else { Rec::Id })
}

#[derive(Debug, Clone)]
pub struct CompileArtifact {
    pub init_term: T,
    pub step_term: T,
    pub loop_term: T,
    pub output_term: T,
    pub decode_output_term: T,
    pub full_term: T,
    pub state_bits: usize,
    pub time_bound: Vec<u64>,
}

pub const REGISTER_LENGTH_FORMULA: &str = "l(phi^p(x)) = 10p(n) + 4n + l + 6, input 0^p 1 0^N 1 x with N = 9p(n) + 3n + l + 4";

pub fn pad_length(p: usize, n: usize, l: usize) -> usize {
    9 * p + 3 * n + l + 4
}

pub fn register_length(p: usize, n: usize, l: usize) -> usize {
    10 * p + 4 * n + l + 6
}

impl CompileArtifact {
    pub fn assemble(m: &QtmSpec, init: T, step: T) -> Self {
        let lp = loop_term(step.clone());
        let out = output_term(m);
        let full = seq(vec![init.clone(), lp.clone(), out.clone()]);
        CompileArtifact {
            init_term: init,
            step_term: step,
            loop_term: lp,
            output_term: out,
            decode_output_term: decode_output_term(),
            full_term: full,
            state_bits: m.state_bits,
            time_bound: m.time_bound.clone(),
        }
    }

    pub fn p(&self, n: usize) -> usize {
        self.time_bound.iter().rev().fold(0u64, |acc, &c| acc * n as u64 + c) as usize
    }

    pub fn stages(&self) -> [(&'static str, &T); 6] {
        [
            ("init", &self.init_term),
            ("step", &self.step_term),
            ("loop", &self.loop_term),
            ("output", &self.output_term),
            ("decode_output", &self.decode_output_term),
            ("full", &self.full_term),
        ]
    }
}

pub fn compile_step(m: &QtmSpec) -> Result<T, CompileError> {
    Ok(flagged_step(step_core(m)?, m.state_bits))
}

pub fn compile_full(m: &QtmSpec) -> Result<CompileArtifact, CompileError> {
    let mut d: Vec<Diagnostic> = qtm::check_wellformed(m);
    d.extend(qtm::check_shape(m).into_iter().filter(|x| x.severity == Severity::Error));
    if !d.is_empty() {
        return Err(CompileError::Ill(d));
    }
    let step = compile_step(m)?;
    Ok(CompileArtifact::assemble(m, initializer(m), step))
}

pub fn bits_key(bits: &[u8]) -> u128 {
    bits.iter().fold(0u128, |a, &b| (a << 1) | b as u128)
}

pub fn key_bits(k: u128, n: usize) -> Vec<u8> {
    (0..n).map(|i| ((k >> (n - 1 - i)) & 1) as u8).collect()
}

/// The padded input register for `x`.
pub fn input_register(x: &[Sym], p: usize, l: usize) -> Result<Vec<u8>, CompileError> {
    let n = x.len();
    if n == 0 {
        return Err(CompileError::Input("input must be non-empty".into()));
    }
    let mut v = vec![0u8; p];
    v.push(1);
    v.extend(core::iter::repeat_n(0, pad_length(p, n, l)));
    v.push(1);
    for s in x {
        match s {
            Sym::Zero => v.push(0),
            Sym::One => v.push(1),
            Sym::Blank => return Err(CompileError::Input("input symbols must be 0 or 1".into())),
        }
    }
    if v.len() > crate::state::MAX_QUBITS {
        return Err(CompileError::Input(format!("register of {} qubits is too wide", v.len())));
    }
    Ok(v)
}

/// Cyclic cell order: right cells first, then the left region.
fn cyclic_cells(c: &SkewConfig, right: usize) -> Vec<i64> {
    let p = c.p() as i64;
    (0..right as i64).chain(-p..0).collect()
}

/// `q cells` for a configuration with `right` cells from 0 on (extra ones blank).
pub fn layout_code(c: &SkewConfig, l: usize, right: usize) -> Vec<u8> {
    let mut v: Vec<u8> = state_str(c.q, l).bytes().map(|b| b - b'0').collect();
    for i in cyclic_cells(c, right) {
        let s = if i <= c.p() as i64 { c.cell(i) } else { Sym::Blank };
        let sc = s.code();
        v.extend_from_slice(&[1, (i == c.h) as u8, (sc >> 1) as u8, (sc & 1) as u8]);
    }
    v
}

/// Inverse of [`layout_code`]; cells beyond p must be blank.
pub fn layout_decode(bits: &[u8], l: usize, p: usize, right: usize) -> Option<SkewConfig> {
    let cells = right + p;
    if bits.len() != l + 4 * cells || right < p + 1 {
        return None;
    }
    let q = bits[..l].iter().fold(0u32, |a, &b| (a << 1) | b as u32);
    let mut c = SkewConfig { z2: vec![Sym::Blank; p + 1], z1: vec![Sym::Blank; p], h: 0, q };
    let mut heads = 0;
    let order: Vec<i64> = (0..right as i64).chain(-(p as i64)..0).collect();
    for (blk, &i) in bits[l..].chunks(4).zip(&order) {
        if blk[0] != 1 {
            return None;
        }
        if blk[1] == 1 {
            heads += 1;
            c.h = i;
        }
        let s = Sym::from_code(((blk[2] as u128) << 1) | blk[3] as u128)?;
        if i > p as i64 {
            if s != Sym::Blank {
                return None;
            }
        } else {
            c.set_cell(i, s);
        }
    }
    (heads == 1 && c.h.unsigned_abs() as usize <= p).then_some(c)
}

/// Reads a tilde-coded prefix, returning the symbols and the bits consumed.
pub fn read_tilde(bits: &[u8]) -> Option<(Vec<Sym>, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i + 1 < bits.len() {
        match (bits[i], bits[i + 1]) {
            (1, 1) => return Some((out, i + 2)),
            (a, b) => out.push(Sym::from_code(((a as u128) << 1) | b as u128)?),
        }
        i += 2;
    }
    None
}

/// A final register split into the output, the decoded configuration and the step flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinalRegister {
    pub output: Vec<Sym>,
    pub config: SkewConfig,
    pub flags: Vec<u8>,
}

pub fn decode_final(bits: &[u8], l: usize, p: usize, n: usize) -> Option<FinalRegister> {
    let (output, used) = read_tilde(bits)?;
    let j = output.len();
    let cells = n + 2 * p + 1;
    if j >= cells || output.contains(&Sym::Blank) {
        return None;
    }
    let rest_cells = cells - j - 1;
    let mut at = used;
    let take = |at: &mut usize, k: usize| -> Option<&[u8]> {
        let s = bits.get(*at..*at + k)?;
        *at += k;
        Some(s)
    };
    let rest = take(&mut at, 4 * rest_cells)?.to_vec();
    let q = take(&mut at, l)?.to_vec();
    let markers = take(&mut at, 2 * (j + 1))?.to_vec();
    if take(&mut at, 2)? != [1, 1] {
        return None;
    }
    let pairs = take(&mut at, 2 * p)?;
    if at != bits.len() || pairs.chunks(2).any(|c| c[0] != 0) {
        return None;
    }
    let flags = pairs.chunks(2).rev().map(|c| c[1]).collect();
    let mut code = q;
    for (i, s) in output.iter().chain(core::iter::once(&Sym::Blank)).enumerate() {
        let sc = s.code();
        let m1 = markers[2 * i] ^ (sc & 1) as u8;
        code.extend_from_slice(&[m1, markers[2 * i + 1], (sc >> 1) as u8, (sc & 1) as u8]);
    }
    code.extend_from_slice(&rest);
    let config = layout_decode(&code, l, p, n + p + 1)?;
    (config.output() == output).then_some(FinalRegister { output, config, flags })
}

/// Host-side transform matching [`decode_output_term`].
pub fn strip_tilde(bits: &[u8]) -> Option<Vec<u8>> {
    let (m, used) = read_tilde(bits)?;
    let mut out: Vec<u8> = m.iter().map(|s| (s.code() & 1) as u8).collect();
    out.push(1);
    out.extend_from_slice(&bits[used..]);
    out.push(1);
    out.extend(core::iter::repeat_n(0, m.len()));
    Some(out)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    /// Largest deviation of output-prefix squared amplitudes.
    pub max_prefix_dev: f64,
    /// Largest deviation of residual inner-product magnitudes.
    pub max_inner_dev: f64,
    /// Largest residual overlap between distinct final configurations of one input.
    pub max_orth_residual: f64,
    /// Squared amplitude of compiled components that do not decode.
    pub undecoded_mass: f64,
    /// Deviation of the superposed evaluation from the sum of basis evaluations.
    pub linearity_dev: f64,
    pub prefix_probs: BTreeMap<Vec<Sym>, (f64, f64)>,
    pub loop_count: usize,
}

impl VerifyReport {
    pub fn worst(&self) -> f64 {
        [self.max_prefix_dev, self.max_inner_dev, self.max_orth_residual, self.undecoded_mass, self.linearity_dev]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// A subterm of `t` structurally equal to `target`.
pub fn find_subterm(t: &T, target: &T) -> Option<T> {
    if t == target {
        return Some(t.clone());
    }
    t.children().into_iter().find_map(|(_, c)| find_subterm(c, target))
}

type Residual = BTreeMap<Vec<u8>, Amplitude>;

fn residual_inner(a: &Residual, b: &Residual) -> Amplitude {
    a.iter().filter_map(|(k, x)| b.get(k).map(|y| x.conj() * y)).sum()
}

/// Compares the compiled term against direct simulation on a weighted set of inputs.
///
/// Inputs must share one length. The weights form the superposed input; pairwise
/// residual conditions are checked over every pair of inputs.
pub fn verify_against_qtm(
    m: &QtmSpec,
    art: &CompileArtifact,
    inputs: &[(Vec<Sym>, Amplitude)],
) -> Result<VerifyReport, CompileError> {
    let n = inputs.first().map(|x| x.0.len()).ok_or_else(|| CompileError::Input("no inputs".into()))?;
    if inputs.iter().any(|x| x.0.len() != n) {
        return Err(CompileError::Input("inputs differ in length".into()));
    }
    let (l, p) = (m.state_bits, m.p(n));
    let width = register_length(p, n, l);
    let mut rep = VerifyReport::default();
    let mut direct_sum: BTreeMap<SkewConfig, Amplitude> = BTreeMap::new();
    let mut compiled_sum = State::null(width);
    let mut per_input: Vec<(BTreeMap<SkewConfig, Amplitude>, BTreeMap<SkewConfig, Residual>)> = Vec::new();
    for (x, w) in inputs {
        let run = qtm::run(m, x).map_err(|e| CompileError::Input(format!("{e}")))?;
        for (c, a) in &run.finals.entries {
            *direct_sum.entry(c.clone()).or_default() += a * w;
        }
        let reg = input_register(x, p, l)?;
        let (out, stats) = crate::eval::eval_with_stats(&art.full_term, &State::basis_key(bits_key(&reg), reg.len()))
            .map_err(|e| CompileError::Input(format!("{e}")))?;
        rep.loop_count = find_subterm(&art.full_term, &art.loop_term).map_or(0, |t| stats.of(&t).self_calls);
        compiled_sum = compiled_sum.add(&out.scale(*w)).map_err(|e| CompileError::Input(format!("{e}")))?;
        let mut res: BTreeMap<SkewConfig, Residual> = BTreeMap::new();
        for &(k, a) in out.entries() {
            let bits = key_bits(k, width);
            match decode_final(&bits, l, p, n) {
                Some(f) => {
                    let (_, used) = read_tilde(&bits).expect("decoded");
                    res.entry(f.config).or_default().insert(bits[used..].to_vec(), a);
                }
                None => rep.undecoded_mass = rep.undecoded_mass.max(a.norm_sqr()),
            }
        }
        per_input.push((run.finals.entries, res));
    }
    for (d, c) in &per_input {
        for r in d.keys().chain(c.keys()) {
            for r2 in d.keys().chain(c.keys()) {
                if r < r2 {
                    let ov = c.get(r).zip(c.get(r2)).map_or(0.0, |(a, b)| residual_inner(a, b).norm());
                    rep.max_orth_residual = rep.max_orth_residual.max(ov);
                }
            }
        }
    }
    for (i, (di, ci)) in per_input.iter().enumerate() {
        for (dj, cj) in &per_input[i..] {
            let configs: Vec<&SkewConfig> = di.keys().chain(ci.keys()).collect();
            for r in &configs {
                for r2 in dj.keys().chain(cj.keys()) {
                    let want = if *r == r2 {
                        di.get(*r).zip(dj.get(r2)).map_or(0.0, |(a, b)| a.norm() * b.norm())
                    } else {
                        0.0
                    };
                    let got = ci.get(*r).zip(cj.get(r2)).map_or(0.0, |(a, b)| residual_inner(a, b).norm());
                    rep.max_inner_dev = rep.max_inner_dev.max((want - got).abs());
                }
            }
        }
    }
    let regs: Vec<State> = inputs
        .iter()
        .map(|(x, w)| {
            let reg = input_register(x, p, l).expect("checked");
            State::basis_key(bits_key(&reg), reg.len()).scale(*w)
        })
        .collect();
    let sup = regs.iter().skip(1).fold(regs[0].clone(), |a, b| a.add(b).expect("same width"));
    let out = crate::eval::eval_unchecked(&art.full_term, &sup);
    rep.linearity_dev = out.max_diff(&compiled_sum);
    for (c, a) in &direct_sum {
        rep.prefix_probs.entry(c.output()).or_default().0 += a.norm_sqr();
    }
    let mut undecoded = 0.0;
    for &(k, a) in out.entries() {
        match read_tilde(&key_bits(k, width)) {
            Some((mm, _)) => rep.prefix_probs.entry(mm).or_default().1 += a.norm_sqr(),
            None => undecoded += a.norm_sqr(),
        }
    }
    rep.undecoded_mass = rep.undecoded_mass.max(undecoded);
    rep.max_prefix_dev = rep.prefix_probs.values().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{eval_unchecked, matrix_of, unitarity_defect};
    use crate::machines;
    use crate::qtm::ConfigSuperposition;

    fn syms(s: &str) -> Vec<Sym> {
        s.chars().map(|c| Sym::from_char(c).unwrap()).collect()
    }

    fn state_of(bits: &[u8]) -> State {
        State::basis_key(bits_key(bits), bits.len())
    }

    fn all() -> [QtmSpec; 4] {
        [machines::identity(), machines::not_machine(), machines::rotation(), machines::flip_walk()]
    }

    #[test]
    fn single_qubit_synthesis() {
        let r = core::f64::consts::FRAC_1_SQRT_2;
        let i = Amplitude::new(0.0, 1.0);
        let cases = [
            [[Amplitude::new(r, 0.0), Amplitude::new(-r, 0.0)], [Amplitude::new(r, 0.0), Amplitude::new(r, 0.0)]],
            [[Amplitude::new(0.0, 0.0), i], [i, Amplitude::new(0.0, 0.0)]],
            [[i, Amplitude::new(0.0, 0.0)], [Amplitude::new(0.0, 0.0), Amplitude::new(-1.0, 0.0)]],
            [[i * r, Amplitude::new(r, 0.0)], [Amplitude::new(r, 0.0), i * r]],
        ];
        for u in cases {
            let m = matrix_of(&single_qubit(u), 1).unwrap();
            for a in 0..2 {
                for b in 0..2 {
                    assert!((m[a][b] - u[a][b]).norm() < 1e-12, "{u:?}");
                }
            }
        }
    }

    #[test]
    fn transition_unitary_matches_rows() {
        for m in all() {
            let v = transition_unitary(&m).unwrap();
            let mat = matrix_of(&v, 4).unwrap();
            assert!(unitarity_defect(&mat) < 1e-12);
            for q in 0..4u32 {
                for s in Sym::ALL {
                    let col = key(q, s) as usize;
                    for t in m.row(q, s) {
                        let got = mat[key(t.q, t.tau) as usize][col];
                        assert!((got - t.amp).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn layout_round_trip() {
        let c = SkewConfig::initial(&syms("101"), 5);
        let bits = layout_code(&c, 2, 9);
        assert_eq!(bits.len(), 2 + 4 * 14);
        assert_eq!(&bits[..6], &[0, 0, 1, 1, 0, 1]);
        assert_eq!(layout_decode(&bits, 2, 5, 9), Some(c));
    }

    #[test]
    fn step_commutes_with_layout() {
        for m in all() {
            let step = compile_step(&m).unwrap();
            for x in ["0", "1", "10"] {
                let x = syms(x);
                let (n, p) = (x.len(), m.p(x.len()));
                let right = n + p + 1;
                let enc = |flag: u8, cs: &ConfigSuperposition| {
                    let mut st = State::null(1 + 2 + 4 * (right + p));
                    for (c, a) in &cs.entries {
                        let mut b = vec![flag];
                        b.extend(layout_code(c, 2, right));
                        st = st.add(&state_of(&b).scale(*a)).unwrap();
                    }
                    st
                };
                let mut cur = ConfigSuperposition::basis(n, SkewConfig::initial(&x, p));
                let halted = |cs: &ConfigSuperposition| cs.entries.keys().all(|c| c.q == m.qf());
                let mut steps = 0;
                while !halted(&cur) {
                    let got = eval_unchecked(&step, &enc(0, &cur));
                    cur = qtm::step_evolve(&m, &cur).unwrap();
                    assert!(got.max_diff(&enc(1, &cur)) < 1e-12);
                    steps += 1;
                    assert!(steps <= p);
                }
                let idle = enc(0, &cur);
                assert!(eval_unchecked(&step, &idle).max_diff(&idle) < 1e-12);
            }
        }
    }

    #[test]
    fn initializer_builds_layout() {
        let m = machines::identity();
        for (x, p) in [("1", 2usize), ("01", 4), ("110", 5)] {
            let x = syms(x);
            let reg = input_register(&x, p, 2).unwrap();
            let out = eval_unchecked(&initializer(&m), &state_of(&reg));
            let mut want = vec![0u8; 2 * p];
            want.extend([1, 1]);
            want.extend(layout_code(&SkewConfig::initial(&x, p), 2, x.len() + p + 1));
            assert_eq!(want.len(), register_length(p, x.len(), 2));
            assert!(out.max_diff(&state_of(&want)) < 1e-12);
        }
    }

    #[test]
    fn strip_tilde_matches_term() {
        let bits = [0u8, 1, 0, 0, 1, 1, 1, 0, 1];
        let out = eval_unchecked(&decode_output_term(), &state_of(&bits));
        let want = strip_tilde(&bits).unwrap();
        assert_eq!(want, vec![1, 0, 1, 1, 0, 1, 1, 0, 0]);
        assert!(out.max_diff(&state_of(&want)) < 1e-12);
    }

    #[test]
    fn compiled_machines_agree() {
        for m in all() {
            let art = compile_full(&m).unwrap();
            for x in ["0", "1", "01", "110"] {
                let rep = verify_against_qtm(&m, &art, &[(syms(x), Amplitude::new(1.0, 0.0))]).unwrap();
                assert!(rep.worst() < 1e-9, "{x}: {rep:?}");
                assert_eq!(rep.loop_count, m.p(x.len()));
            }
        }
    }

    #[test]
    fn rotation_superposed_and_pairs() {
        let m = machines::rotation();
        let art = compile_full(&m).unwrap();
        let r = core::f64::consts::FRAC_1_SQRT_2;
        let ins = [(syms("00"), Amplitude::new(r, 0.0)), (syms("10"), Amplitude::new(r, 0.0))];
        let rep = verify_against_qtm(&m, &art, &ins).unwrap();
        assert!(rep.worst() < 1e-9, "{rep:?}");
        let one = verify_against_qtm(&m, &art, &[(syms("0"), Amplitude::new(1.0, 0.0))]).unwrap();
        let probs: Vec<f64> = one.prefix_probs.values().map(|v| v.1).collect();
        assert_eq!(probs.len(), 2);
        assert!(probs.iter().all(|p| (p - 0.5).abs() < 1e-9));
    }

    #[test]
    fn corrupted_step_is_detected() {
        let m = machines::not_machine();
        let bad = compo(on_bit(6, not()), compile_step(&m).unwrap());
        let art = CompileArtifact::assemble(&m, initializer(&m), bad);
        let rep = verify_against_qtm(&m, &art, &[(syms("1"), Amplitude::new(1.0, 0.0))]).unwrap();
        assert!(rep.worst() > 0.5);
    }

    #[test]
    fn rejects_ill_formed() {
        assert!(matches!(compile_full(&machines::violates_unit_length()), Err(CompileError::Ill(_))));
    }
}
