//! Single-tape quantum Turing machines over the alphabet {0, 1, b}.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::state::{Amplitude, PRUNE_EPS};
use crate::term::{Diagnostic, Severity};

const TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sym {
    Zero,
    One,
    Blank,
}

impl Sym {
    pub const ALL: [Sym; 3] = [Sym::Zero, Sym::One, Sym::Blank];

    pub fn code(self) -> u128 {
        match self {
            Sym::Zero => 0b00,
            Sym::One => 0b01,
            Sym::Blank => 0b10,
        }
    }

    pub fn from_code(c: u128) -> Option<Sym> {
        match c {
            0b00 => Some(Sym::Zero),
            0b01 => Some(Sym::One),
            0b10 => Some(Sym::Blank),
            _ => None,
        }
    }

    pub fn from_char(c: char) -> Option<Sym> {
        match c {
            '0' => Some(Sym::Zero),
            '1' => Some(Sym::One),
            'b' => Some(Sym::Blank),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Sym::Zero => '0',
            Sym::One => '1',
            Sym::Blank => 'b',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dir {
    L,
    N,
    R,
}

impl Dir {
    pub fn delta(self) -> i64 {
        match self {
            Dir::L => -1,
            Dir::N => 0,
            Dir::R => 1,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Dir::L => 'L',
            Dir::N => 'N',
            Dir::R => 'R',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub q: u32,
    pub tau: Sym,
    pub d: Dir,
    pub amp: Amplitude,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QtmSpec {
    pub state_bits: usize,
    pub delta: BTreeMap<(u32, Sym), Vec<Transition>>,
    /// Polynomial coefficients, constant term first.
    pub time_bound: Vec<u64>,
}

pub fn state_str(q: u32, bits: usize) -> String {
    (0..bits).map(|i| if (q >> (bits - 1 - i)) & 1 == 1 { '1' } else { '0' }).collect()
}

impl QtmSpec {
    /// Fills absent final-state rows with the normal-form loop back to q0.
    pub fn new(state_bits: usize, time_bound: Vec<u64>, mut delta: BTreeMap<(u32, Sym), Vec<Transition>>) -> Self {
        let qf = (1u32 << state_bits) - 1;
        for s in Sym::ALL {
            delta.entry((qf, s)).or_insert_with(|| {
                vec![Transition { q: 0, tau: s, d: Dir::R, amp: Amplitude::new(1.0, 0.0) }]
            });
        }
        QtmSpec { state_bits, delta, time_bound }
    }

    pub fn num_states(&self) -> u32 {
        1 << self.state_bits
    }

    pub fn qf(&self) -> u32 {
        self.num_states() - 1
    }

    pub fn p(&self, n: usize) -> usize {
        self.time_bound.iter().rev().fold(0u64, |acc, &c| acc * n as u64 + c) as usize
    }

    pub fn row(&self, p: u32, s: Sym) -> &[Transition] {
        self.delta.get(&(p, s)).map(|v| v.as_slice()).unwrap_or(&[])
    }

    fn state_label(&self, p: u32, s: Sym) -> String {
        format!("delta({},{})", state_str(p, self.state_bits), s.as_char())
    }
}

type Coord = (u32, Sym, Dir);

fn row_vec(m: &QtmSpec, p: u32, s: Sym) -> BTreeMap<Coord, Amplitude> {
    let mut v = BTreeMap::new();
    for t in m.row(p, s) {
        *v.entry((t.q, t.tau, t.d)).or_insert(Amplitude::new(0.0, 0.0)) += t.amp;
    }
    v
}

fn dot<K: Ord>(a: &BTreeMap<K, Amplitude>, b: &BTreeMap<K, Amplitude>) -> Amplitude {
    a.iter().filter_map(|(k, x)| b.get(k).map(|y| x.conj() * y)).sum()
}

fn err(path: String, message: String) -> Diagnostic {
    Diagnostic { severity: Severity::Error, path, message }
}

/// Head offset after the move, with `None` standing for the natural sign.
type SepCoord = (u32, Option<i64>);

fn sep_vec(m: &QtmSpec, p: u32, s: Sym, tau: Sym, eps: i64) -> BTreeMap<SepCoord, Amplitude> {
    let mut v = BTreeMap::new();
    for t in m.row(p, s).iter().filter(|t| t.tau == tau) {
        let d = t.d.delta();
        if (2 * d - eps).abs() > 1 {
            continue;
        }
        let e_d = if d == 0 { 3.0 } else { 2.0 };
        let h = if eps != 0 { Some(2 * d - eps) } else { None };
        *v.entry((t.q, h)).or_insert(Amplitude::new(0.0, 0.0)) += t.amp / libm::sqrt(e_d);
    }
    v
}

pub fn check_wellformed(m: &QtmSpec) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let rows: Vec<(u32, Sym)> = (0..m.num_states()).flat_map(|p| Sym::ALL.map(|s| (p, s))).collect();
    let vecs: Vec<_> = rows.iter().map(|&(p, s)| row_vec(m, p, s)).collect();
    for (i, &(p, s)) in rows.iter().enumerate() {
        let nn: f64 = vecs[i].values().map(|a| a.norm_sqr()).sum();
        if (nn - 1.0).abs() > TOL {
            out.push(err(m.state_label(p, s), format!("unit length violated: squared norm {nn}")));
        }
    }
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let d = dot(&vecs[i], &vecs[j]);
            if d.norm() > TOL {
                out.push(err(
                    format!("{}/{}", m.state_label(rows[i].0, rows[i].1), m.state_label(rows[j].0, rows[j].1)),
                    format!("orthogonality violated: dot product magnitude {}", d.norm()),
                ));
            }
        }
    }
    let mut seps = Vec::new();
    for &(p, s) in &rows {
        for tau in Sym::ALL {
            for eps in -2..=2 {
                let v = sep_vec(m, p, s, tau, eps);
                if !v.is_empty() {
                    seps.push(((p, s, tau, eps), v));
                }
            }
        }
    }
    for i in 0..seps.len() {
        for j in i + 1..seps.len() {
            let ((p1, s1, t1, e1), ref v1) = seps[i];
            let ((p2, s2, t2, e2), ref v2) = seps[j];
            if e1 == e2 {
                continue;
            }
            let d = dot(v1, v2);
            if d.norm() > TOL {
                out.push(err(
                    format!("{}/{}", m.state_label(p1, s1), m.state_label(p2, s2)),
                    format!(
                        "separability violated for tau=({},{}) eps=({e1},{e2}): magnitude {}",
                        t1.as_char(),
                        t2.as_char(),
                        d.norm()
                    ),
                ));
            }
        }
    }
    out
}

pub fn check_shape(m: &QtmSpec) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let qf = m.qf();
    for (&(p, s), row) in &m.delta {
        let path = m.state_label(p, s);
        if p >= m.num_states() {
            out.push(err(path.clone(), "state outside the state set".into()));
        }
        if p == qf {
            let ok = row.len() == 1
                && row[0].q == 0
                && row[0].tau == s
                && row[0].d == Dir::R
                && (row[0].amp - Amplitude::new(1.0, 0.0)).norm() < TOL;
            if !ok {
                out.push(err(path, "normal form requires delta(qf,s) = |q0,s,R>".into()));
            }
            continue;
        }
        let plain = match row.as_slice() {
            [t] => (t.amp.norm() - 1.0).abs() < TOL,
            [a, b] => {
                (a.q, a.tau, a.d) != (b.q, b.tau, b.d)
                    && a.amp.im.abs() < TOL
                    && b.amp.im.abs() < TOL
                    && (a.amp.re * a.amp.re + b.amp.re * b.amp.re - 1.0).abs() < TOL
            }
            _ => false,
        };
        if !plain {
            out.push(err(path, format!("not plain: {} branch(es)", row.len())));
        }
    }
    for p in 0..qf {
        for s in Sym::ALL {
            if !m.delta.contains_key(&(p, s)) {
                out.push(err(m.state_label(p, s), "missing transition row".into()));
            }
        }
    }
    out.push(Diagnostic {
        severity: Severity::Warning,
        path: String::new(),
        message: "stationarity is checked at run time".into(),
    });
    out
}

/// Direction shared by every transition entering each state, if any.
pub fn unidirectional(m: &QtmSpec) -> Result<BTreeMap<u32, Dir>, u32> {
    let mut dirs = BTreeMap::new();
    for row in m.delta.values() {
        for t in row {
            match dirs.insert(t.q, t.d) {
                Some(d) if d != t.d => return Err(t.q),
                _ => {}
            }
        }
    }
    Ok(dirs)
}

/// Tape of cells -p..=p; `z1` holds cells -p..-1 and `z2` cells 0..=p.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SkewConfig {
    pub z2: Vec<Sym>,
    pub z1: Vec<Sym>,
    pub h: i64,
    pub q: u32,
}

impl SkewConfig {
    pub fn initial(x: &[Sym], p: usize) -> Self {
        let mut z2 = vec![Sym::Blank; p + 1];
        z2[..x.len()].copy_from_slice(x);
        SkewConfig { z2, z1: vec![Sym::Blank; p], h: 0, q: 0 }
    }

    pub fn p(&self) -> usize {
        self.z1.len()
    }

    pub fn cell(&self, i: i64) -> Sym {
        if i >= 0 {
            self.z2[i as usize]
        } else {
            self.z1[(self.p() as i64 + i) as usize]
        }
    }

    pub fn set_cell(&mut self, i: i64, s: Sym) {
        if i >= 0 {
            self.z2[i as usize] = s;
        } else {
            let p = self.p() as i64;
            self.z1[(p + i) as usize] = s;
        }
    }

    /// Symbols from cell 0 up to the first blank.
    pub fn output(&self) -> Vec<Sym> {
        self.z2.iter().take_while(|&&s| s != Sym::Blank).copied().collect()
    }

    pub fn tape_string(&self) -> String {
        self.z1.iter().chain(&self.z2).map(|s| s.as_char()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigSuperposition {
    pub n: usize,
    pub entries: BTreeMap<SkewConfig, Amplitude>,
}

impl ConfigSuperposition {
    pub fn basis(n: usize, c: SkewConfig) -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(c, Amplitude::new(1.0, 0.0));
        ConfigSuperposition { n, entries }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        let mut d = 0.0f64;
        for (k, a) in &self.entries {
            d = d.max((a - other.entries.get(k).copied().unwrap_or_default()).norm());
        }
        for (k, b) in &other.entries {
            if !self.entries.contains_key(k) {
                d = d.max(b.norm());
            }
        }
        d
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QtmError {
    HeadOutOfRegion,
    NotSimultaneous { step: usize },
    NotStationary,
    NotClean,
    TimeBoundExceeded { bound: usize },
    EmptyInput,
    InputTooLong { n: usize, p: usize },
    InvalidCode(String),
}

impl fmt::Display for QtmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QtmError::HeadOutOfRegion => write!(f, "head left the essential region"),
            QtmError::NotSimultaneous { step } => write!(f, "paths halt at different times (step {step})"),
            QtmError::NotStationary => write!(f, "head not at the start cell on halting"),
            QtmError::NotClean => write!(f, "non-blank symbol left of the start cell on halting"),
            QtmError::TimeBoundExceeded { bound } => write!(f, "not halted within {bound} steps"),
            QtmError::EmptyInput => write!(f, "input must be non-empty"),
            QtmError::InputTooLong { n, p } => write!(f, "input of length {n} does not fit p(n) = {p}"),
            QtmError::InvalidCode(m) => write!(f, "invalid code: {m}"),
        }
    }
}

/// One step of the machine; halted components are carried unchanged.
pub fn step_evolve(m: &QtmSpec, c: &ConfigSuperposition) -> Result<ConfigSuperposition, QtmError> {
    evolve(m, c, true)
}

/// One application of the time evolution operator, final state included.
pub fn evolve_full(m: &QtmSpec, c: &ConfigSuperposition) -> Result<ConfigSuperposition, QtmError> {
    evolve(m, c, false)
}

fn evolve(m: &QtmSpec, c: &ConfigSuperposition, carry_halted: bool) -> Result<ConfigSuperposition, QtmError> {
    let qf = m.qf();
    let mut out: BTreeMap<SkewConfig, Amplitude> = BTreeMap::new();
    for (cfg, &a) in &c.entries {
        if carry_halted && cfg.q == qf {
            *out.entry(cfg.clone()).or_default() += a;
            continue;
        }
        let p = cfg.p() as i64;
        for t in m.row(cfg.q, cfg.cell(cfg.h)) {
            let h = cfg.h + t.d.delta();
            if h < -p || h > p {
                return Err(QtmError::HeadOutOfRegion);
            }
            let mut nc = cfg.clone();
            nc.set_cell(cfg.h, t.tau);
            nc.h = h;
            nc.q = t.q;
            *out.entry(nc).or_default() += a * t.amp;
        }
    }
    out.retain(|_, a| a.re.abs() >= PRUNE_EPS || a.im.abs() >= PRUNE_EPS);
    Ok(ConfigSuperposition { n: c.n, entries: out })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub steps: usize,
    pub finals: ConfigSuperposition,
}

impl RunResult {
    /// Squared amplitude per output string.
    pub fn output_distribution(&self) -> BTreeMap<Vec<Sym>, f64> {
        let mut d = BTreeMap::new();
        for (c, a) in &self.finals.entries {
            *d.entry(c.output()).or_insert(0.0) += a.norm_sqr();
        }
        d
    }
}

pub fn start(m: &QtmSpec, x: &[Sym]) -> Result<ConfigSuperposition, QtmError> {
    let n = x.len();
    if n == 0 {
        return Err(QtmError::EmptyInput);
    }
    let p = m.p(n);
    if n > p {
        return Err(QtmError::InputTooLong { n, p });
    }
    Ok(ConfigSuperposition::basis(n, SkewConfig::initial(x, p)))
}

pub fn run(m: &QtmSpec, x: &[Sym]) -> Result<RunResult, QtmError> {
    let mut c = start(m, x)?;
    let p = m.p(x.len());
    let qf = m.qf();
    for step in 1..=p {
        c = step_evolve(m, &c)?;
        let halted = c.entries.keys().filter(|k| k.q == qf).count();
        if halted == 0 {
            continue;
        }
        if halted != c.entries.len() {
            return Err(QtmError::NotSimultaneous { step });
        }
        if c.entries.keys().any(|k| k.h != 0) {
            return Err(QtmError::NotStationary);
        }
        if c.entries.keys().any(|k| k.z1.iter().any(|&s| s != Sym::Blank)) {
            return Err(QtmError::NotClean);
        }
        return Ok(RunResult { steps: step, finals: c });
    }
    Err(QtmError::TimeBoundExceeded { bound: p })
}

/// State bits, then one marker/symbol block per cell from -p to p.
pub fn encode_config(c: &SkewConfig, state_bits: usize, p: usize) -> Vec<u8> {
    let mut out: Vec<u8> = state_str(c.q, state_bits).bytes().map(|b| b - b'0').collect();
    for i in -(p as i64)..=p as i64 {
        out.extend_from_slice(if i == c.h { &[1, 1] } else { &[1, 0] });
        let s = c.cell(i).code();
        out.extend_from_slice(&[(s >> 1) as u8, (s & 1) as u8]);
    }
    out
}

pub fn decode_config(bits: &[u8], state_bits: usize, p: usize) -> Result<SkewConfig, QtmError> {
    let want = 8 * p + state_bits + 4;
    if bits.len() != want {
        return Err(QtmError::InvalidCode(format!("length {} instead of {want}", bits.len())));
    }
    let q = bits[..state_bits].iter().fold(0u32, |a, &b| (a << 1) | b as u32);
    let mut c = SkewConfig { z2: vec![Sym::Blank; p + 1], z1: vec![Sym::Blank; p], h: 0, q };
    let mut heads = 0;
    for (j, blk) in bits[state_bits..].chunks(4).enumerate() {
        let i = j as i64 - p as i64;
        match (blk[0], blk[1]) {
            (1, 1) => {
                heads += 1;
                c.h = i;
            }
            (1, 0) => {}
            _ => return Err(QtmError::InvalidCode(format!("bad marker at cell {i}"))),
        }
        let s = Sym::from_code(((blk[2] as u128) << 1) | blk[3] as u128)
            .ok_or_else(|| QtmError::InvalidCode(format!("bad symbol at cell {i}")))?;
        c.set_cell(i, s);
    }
    if heads != 1 {
        return Err(QtmError::InvalidCode(format!("{heads} head markers")));
    }
    Ok(c)
}

/// Tilde code: each symbol as two bits followed by the terminator 11.
pub fn tilde(s: &[Sym]) -> Vec<u8> {
    let mut out = Vec::with_capacity(2 * s.len() + 2);
    for x in s {
        let c = x.code();
        out.extend_from_slice(&[(c >> 1) as u8, (c & 1) as u8]);
    }
    out.extend_from_slice(&[1, 1]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machines;

    #[test]
    fn bundled_machines_wellformed() {
        for m in [machines::identity(), machines::not_machine(), machines::rotation()] {
            assert!(check_wellformed(&m).is_empty(), "{:?}", check_wellformed(&m));
            assert!(check_shape(&m).iter().all(|d| d.severity == Severity::Warning));
            assert!(unidirectional(&m).is_ok());
        }
    }

    #[test]
    fn seeded_violations() {
        let d = check_wellformed(&machines::violates_unit_length());
        assert!(d.iter().any(|x| x.message.starts_with("unit length")));
        let d = check_wellformed(&machines::violates_orthogonality());
        assert!(d.iter().any(|x| x.message.starts_with("orthogonality")));
        let d = check_wellformed(&machines::violates_separability());
        assert!(d.iter().all(|x| x.message.starts_with("separability")) && !d.is_empty());
    }

    #[test]
    fn shape_violations() {
        let mut m = machines::rotation();
        let one = Amplitude::new(1.0, 0.0);
        let r = m.delta.get_mut(&(0, Sym::Blank)).unwrap();
        r.push(Transition { q: 1, tau: Sym::Zero, d: Dir::N, amp: one });
        r.push(Transition { q: 1, tau: Sym::One, d: Dir::N, amp: one });
        assert!(check_shape(&m).iter().any(|d| d.message.starts_with("not plain")));
        let mut m = machines::not_machine();
        m.delta.insert((3, Sym::Zero), vec![Transition { q: 0, tau: Sym::Zero, d: Dir::L, amp: one }]);
        assert!(check_shape(&m).iter().any(|d| d.message.starts_with("normal form")));
    }

    #[test]
    fn not_machine_run() {
        let m = machines::not_machine();
        let r = run(&m, &[Sym::One]).unwrap();
        assert_eq!(r.steps, 1);
        assert_eq!(r.finals.entries.len(), 1);
        let (c, a) = r.finals.entries.iter().next().unwrap();
        assert_eq!((c.output(), c.q, c.h), (vec![Sym::Zero], 3, 0));
        assert!((a.norm_sqr() - 1.0).abs() < 1e-12);
        let id = run(&machines::identity(), &[Sym::Zero, Sym::One]).unwrap();
        assert_eq!(id.output_distribution().into_iter().collect::<Vec<_>>(), vec![(vec![Sym::Zero, Sym::One], 1.0)]);
    }

    #[test]
    fn rotation_splits() {
        let r = run(&machines::rotation(), &[Sym::Zero]).unwrap();
        let d = r.output_distribution();
        assert!((d[&vec![Sym::Zero]] - 0.5).abs() < 1e-12 && (d[&vec![Sym::One]] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn halted_configs_carried() {
        let m = machines::not_machine();
        let mut c = SkewConfig::initial(&[Sym::One], 3);
        c.q = 3;
        let s = ConfigSuperposition::basis(1, c);
        assert_eq!(step_evolve(&m, &s).unwrap(), s);
    }

    #[test]
    fn run_errors() {
        let mut m = machines::identity();
        let one = Amplitude::new(1.0, 0.0);
        m.delta.insert((0, Sym::Zero), vec![Transition { q: 1, tau: Sym::Zero, d: Dir::N, amp: one }]);
        m.delta.insert((1, Sym::Zero), vec![Transition { q: 3, tau: Sym::Zero, d: Dir::N, amp: one }]);
        let r = core::f64::consts::FRAC_1_SQRT_2;
        m.delta.insert(
            (0, Sym::One),
            vec![
                Transition { q: 3, tau: Sym::One, d: Dir::N, amp: Amplitude::new(r, 0.0) },
                Transition { q: 1, tau: Sym::Zero, d: Dir::N, amp: Amplitude::new(r, 0.0) },
            ],
        );
        assert_eq!(run(&m, &[Sym::One]), Err(QtmError::NotSimultaneous { step: 1 }));
        assert_eq!(run(&m, &[]), Err(QtmError::EmptyInput));
    }

    #[test]
    fn code_layout() {
        let c = SkewConfig { z2: vec![Sym::One, Sym::Blank], z1: vec![Sym::Blank], h: 0, q: 0 };
        let bits: String = encode_config(&c, 2, 1).iter().map(|b| (b'0' + b) as char).collect();
        assert_eq!(bits, "00101011011010");
        let c3 = SkewConfig::initial(&[Sym::One], 3);
        assert_eq!(encode_config(&c3, 2, 3).len(), 30);
        assert_eq!(decode_config(&encode_config(&c3, 2, 3), 2, 3).unwrap(), c3);
        let mut bad = encode_config(&c3, 2, 3);
        bad[2] = 0;
        assert!(decode_config(&bad, 2, 3).is_err());
        assert_eq!(tilde(&[Sym::One]), vec![0, 1, 1, 1]);
    }
}
