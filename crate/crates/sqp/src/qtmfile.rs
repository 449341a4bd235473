//! The structured text form of QTM specs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use sqp_core::qtm::{state_str, Dir, QtmSpec, Sym, Transition};
use sqp_core::Amplitude;

use crate::text::{parse_angle, ParseError};

fn err(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError { line, col: 1, msg: msg.into() }
}

/// `re,im`, a plain real, or `cos(θ)`, `sin(θ)`, `exp(iθ)`, each optionally negated.
pub fn parse_amp(s: &str) -> Option<Amplitude> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) if b.contains('(') => (true, b),
        _ => (false, s),
    };
    let call = |name: &str| body.strip_prefix(name).and_then(|r| r.strip_prefix('(')).and_then(|r| r.strip_suffix(')'));
    let a = if let Some(th) = call("cos") {
        Amplitude::new(parse_angle(th)?.cos(), 0.0)
    } else if let Some(th) = call("sin") {
        Amplitude::new(parse_angle(th)?.sin(), 0.0)
    } else if let Some(th) = call("exp") {
        let th = parse_angle(th.strip_prefix('i')?)?;
        Amplitude::new(th.cos(), th.sin())
    } else if let Some((re, im)) = body.split_once(',') {
        Amplitude::new(re.parse().ok()?, im.parse().ok()?)
    } else {
        Amplitude::new(body.parse().ok()?, 0.0)
    };
    (a.re.is_finite() && a.im.is_finite()).then_some(if neg { -a } else { a })
}

fn parse_state(s: &str, l: usize, line: usize) -> Result<u32, ParseError> {
    if s.len() != l || !s.bytes().all(|b| b == b'0' || b == b'1') {
        return Err(err(line, format!("state `{s}` is not a {l}-bit string")));
    }
    Ok(u32::from_str_radix(s, 2).expect("binary"))
}

fn parse_sym(s: &str, line: usize) -> Result<Sym, ParseError> {
    let mut c = s.chars();
    match (c.next().and_then(Sym::from_char), c.next()) {
        (Some(x), None) => Ok(x),
        _ => Err(err(line, format!("symbol `{s}` is not 0, 1 or b"))),
    }
}

pub fn parse_qtm(src: &str) -> Result<QtmSpec, ParseError> {
    let mut l: Option<usize> = None;
    let mut tb: Option<Vec<u64>> = None;
    let mut delta: BTreeMap<(u32, Sym), Vec<Transition>> = BTreeMap::new();
    for (i, raw) in src.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split(';').next().unwrap_or("").trim();
        let Some((head, rest)) = line.split_once(char::is_whitespace).or((!line.is_empty()).then_some((line, ""))) else {
            continue;
        };
        match head {
            "state_bits" => {
                let v: usize = rest.trim().parse().map_err(|_| err(ln, "expected `state_bits <l>`"))?;
                if !(1..=16).contains(&v) {
                    return Err(err(ln, "state_bits must be between 1 and 16"));
                }
                if l.replace(v).is_some() {
                    return Err(err(ln, "duplicate state_bits"));
                }
            }
            "time_bound" => {
                let c: Result<Vec<u64>, _> = rest.split_whitespace().map(str::parse).collect();
                let c = c.map_err(|_| err(ln, "time_bound takes natural coefficients"))?;
                if c.is_empty() {
                    return Err(err(ln, "time_bound needs at least one coefficient"));
                }
                tb = Some(c);
            }
            "delta" => {
                let l = l.ok_or_else(|| err(ln, "state_bits must precede delta lines"))?;
                let (lhs, rhs) = rest.split_once("->").ok_or_else(|| err(ln, "expected `->`"))?;
                let lhs: Vec<&str> = lhs.split_whitespace().collect();
                if lhs.len() != 2 {
                    return Err(err(ln, "expected `delta <p> <symbol> -> ...`"));
                }
                let key = (parse_state(lhs[0], l, ln)?, parse_sym(lhs[1], ln)?);
                let mut ts = Vec::new();
                for part in rhs.split("->") {
                    let part = part.trim();
                    let inner = part.strip_prefix('(').and_then(|p| p.split_once(')')).ok_or_else(|| err(ln, "expected `(<q> <symbol> <L|N|R>)`"))?;
                    let f: Vec<&str> = inner.0.split_whitespace().collect();
                    if f.len() != 3 {
                        return Err(err(ln, "expected `(<q> <symbol> <L|N|R>)`"));
                    }
                    let d = match f[2] {
                        "L" => Dir::L,
                        "N" => Dir::N,
                        "R" => Dir::R,
                        o => return Err(err(ln, format!("direction `{o}` is not L, N or R"))),
                    };
                    let amp = inner.1.trim().strip_prefix("amp").map(str::trim).ok_or_else(|| err(ln, "expected `amp <expr>`"))?;
                    let amp = parse_amp(amp).ok_or_else(|| err(ln, format!("bad amplitude `{amp}`")))?;
                    ts.push(Transition { q: parse_state(f[0], l, ln)?, tau: parse_sym(f[1], ln)?, d, amp });
                }
                if ts.len() > 2 {
                    return Err(err(ln, "at most two right-hand tuples per row"));
                }
                if delta.insert(key, ts).is_some() {
                    return Err(err(ln, format!("duplicate row for ({}, {})", lhs[0], lhs[1])));
                }
            }
            o => return Err(err(ln, format!("unknown directive `{o}`"))),
        }
    }
    let l = l.ok_or_else(|| err(1, "missing state_bits"))?;
    let tb = tb.ok_or_else(|| err(1, "missing time_bound"))?;
    Ok(QtmSpec::new(l, tb, delta))
}

fn real(x: f64) -> String {
    format!("{:?}", if x == 0.0 { 0.0 } else { x })
}

pub fn print_qtm(m: &QtmSpec) -> String {
    let l = m.state_bits;
    let mut s = format!("state_bits {l}\ntime_bound");
    for c in &m.time_bound {
        let _ = write!(s, " {c}");
    }
    s.push('\n');
    for ((q, sym), ts) in &m.delta {
        let _ = write!(s, "delta {} {}", state_str(*q, l), sym.as_char());
        for t in ts {
            let _ = write!(s, " -> ({} {} {}) amp {},{}", state_str(t.q, l), t.tau.as_char(), t.d.as_char(), real(t.amp.re), real(t.amp.im));
        }
        s.push('\n');
    }
    s
}
