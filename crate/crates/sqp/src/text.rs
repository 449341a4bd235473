//! Text forms of terms and states.

use std::fmt::Write as _;

use sqp_core::state::{bits_to_string, parse_bits};
use sqp_core::term::*;
use sqp_core::{Amplitude, State};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

/// Seventeen significant digits, positional for moderate exponents.
pub fn format_angle(x: f64) -> String {
    if x == 0.0 {
        return "0.0".into();
    }
    let sci = format!("{:.16e}", x);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-5..=2).contains(&exp) {
        return sci;
    }
    let neg = mant.starts_with('-');
    let digits: String = mant.chars().filter(char::is_ascii_digit).collect();
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if exp < 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-exp - 1) as usize));
        out.push_str(&digits);
    } else {
        let cut = exp as usize + 1;
        out.push_str(&digits[..cut]);
        out.push('.');
        out.push_str(&digits[cut..]);
    }
    out
}

/// Decimal radians, `pi`, `pi/N`, `Mpi/N` or `Mpi`, optionally signed.
pub fn parse_angle(s: &str) -> Option<f64> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s),
    };
    let v = if let Some(i) = body.find("pi") {
        let mul: f64 = if i == 0 { 1.0 } else { body[..i].parse().ok()? };
        let rest = &body[i + 2..];
        let div: f64 = if rest.is_empty() {
            1.0
        } else {
            rest.strip_prefix('/')?.parse().ok()?
        };
        if div == 0.0 {
            return None;
        }
        mul * std::f64::consts::PI / div
    } else {
        body.parse::<f64>().ok().filter(|v| v.is_finite())?
    };
    Some(if neg { -v } else { v })
}

pub fn print_term(t: &T) -> String {
    let mut s = String::new();
    write_term(&mut s, t);
    s
}

fn write_term(s: &mut String, t: &T) {
    match &**t {
        Term::Id => s.push_str("(i)"),
        Term::Not => s.push_str("(not)"),
        Term::Swap => s.push_str("(swap)"),
        Term::Phase(a) => {
            let _ = write!(s, "(phase {})", format_angle(*a));
        }
        Term::Rot(a) => {
            let _ = write!(s, "(rot {})", format_angle(*a));
        }
        Term::Meas(a) => {
            let _ = write!(s, "(meas {a})");
        }
        Term::Crot { j, inv } => {
            let _ = write!(s, "(crot {j}{})", if *inv { " inv" } else { "" });
        }
        Term::Compo(g, h) => pair(s, "compo", "", g, h),
        Term::Branch(g, h) => pair(s, "branch", "", g, h),
        Term::Switch(th, g, h) => pair(s, "switch", &format!(" {th}"), g, h),
        Term::KQRec(r) => {
            let _ = write!(s, "(kqrec {} {} :g ", r.k, r.t);
            write_term(s, &r.g);
            s.push_str(" :h ");
            write_term(s, &r.h);
            s.push_str(" :p ");
            write_term(s, &r.p);
            s.push_str(" :fs");
            for (i, f) in r.fs.iter().enumerate() {
                let _ = write!(s, " {}={}", bits_to_string(i as u128, r.k), if *f == Rec::SelfRef { "self" } else { "id" });
            }
            s.push(')');
        }
    }
}

fn pair(s: &mut String, head: &str, extra: &str, g: &T, h: &T) {
    let _ = write!(s, "({head}{extra} ");
    write_term(s, g);
    s.push(' ');
    write_term(s, h);
    s.push(')');
}

#[derive(Debug, Clone, PartialEq)]
enum Tok<'a> {
    Open,
    Close,
    Atom(&'a str),
}

struct Lexer<'a> {
    toks: Vec<(Tok<'a>, usize, usize)>,
    pos: usize,
    end: (usize, usize),
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        let mut toks = Vec::new();
        let mut end = (1, 1);
        for (ln, line) in src.lines().enumerate() {
            let line = line.split(';').next().unwrap_or("");
            let b = line.as_bytes();
            let mut i = 0;
            while i < b.len() {
                match b[i] {
                    b'(' => toks.push((Tok::Open, ln + 1, i + 1)),
                    b')' => toks.push((Tok::Close, ln + 1, i + 1)),
                    c if c.is_ascii_whitespace() => {}
                    _ => {
                        let st = i;
                        while i < b.len() && !b[i].is_ascii_whitespace() && b[i] != b'(' && b[i] != b')' {
                            i += 1;
                        }
                        toks.push((Tok::Atom(&line[st..i]), ln + 1, st + 1));
                        continue;
                    }
                }
                i += 1;
            }
            end = (ln + 1, line.len() + 1);
        }
        Lexer { toks, pos: 0, end }
    }

    fn err<X>(&self, msg: impl Into<String>) -> Result<X, ParseError> {
        let (line, col) = self.toks.get(self.pos).map_or(self.end, |t| (t.1, t.2));
        Err(ParseError { line, col, msg: msg.into() })
    }

    fn peek(&self) -> Option<&Tok<'a>> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn next(&mut self) -> Result<Tok<'a>, ParseError> {
        match self.toks.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.0.clone())
            }
            None => self.err("unexpected end of input"),
        }
    }

    fn atom(&mut self, what: &str) -> Result<&'a str, ParseError> {
        match self.peek() {
            Some(Tok::Atom(a)) => {
                let a = *a;
                self.pos += 1;
                Ok(a)
            }
            _ => self.err(format!("expected {what}")),
        }
    }

    fn num<N: std::str::FromStr>(&mut self, what: &str) -> Result<N, ParseError> {
        let a = self.atom(what)?;
        match a.parse() {
            Ok(v) => Ok(v),
            Err(_) => {
                self.pos -= 1;
                self.err(format!("expected {what}, found `{a}`"))
            }
        }
    }

    fn angle(&mut self) -> Result<f64, ParseError> {
        let a = self.atom("angle")?;
        match parse_angle(a) {
            Some(v) => Ok(v),
            None => {
                self.pos -= 1;
                self.err(format!("bad angle `{a}`"))
            }
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Atom(a)) if *a == kw => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err(format!("expected `{kw}`")),
        }
    }

    fn close(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Close) => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err("expected `)`"),
        }
    }

    fn term(&mut self) -> Result<T, ParseError> {
        if self.peek() != Some(&Tok::Open) {
            return self.err("expected `(`");
        }
        self.next()?;
        let head = self.atom("constructor name")?;
        let t = match head {
            "i" => id(),
            "not" => not(),
            "swap" => swap(),
            "phase" => phase(self.angle()?),
            "rot" => rot(self.angle()?),
            "meas" => {
                let a: u8 = self.num("0 or 1")?;
                if a > 1 {
                    self.pos -= 1;
                    return self.err("meas bit must be 0 or 1");
                }
                meas(a)
            }
            "crot" => {
                let j: u32 = self.num("crot index")?;
                let inv = matches!(self.peek(), Some(Tok::Atom("inv")));
                if inv {
                    self.pos += 1;
                }
                std::sync::Arc::new(Term::Crot { j, inv })
            }
            "compo" => compo(self.term()?, self.term()?),
            "branch" => branch(self.term()?, self.term()?),
            "switch" => {
                let th: usize = self.num("switch threshold")?;
                switch(th, self.term()?, self.term()?)
            }
            "kqrec" => self.kqrec()?,
            other => {
                self.pos -= 1;
                return self.err(format!("unknown constructor `{other}`"));
            }
        };
        self.close()?;
        Ok(t)
    }

    fn kqrec(&mut self) -> Result<T, ParseError> {
        let k: usize = self.num("k")?;
        if !(1..=16).contains(&k) {
            self.pos -= 1;
            return self.err("k must be between 1 and 16");
        }
        let t: usize = self.num("t")?;
        self.keyword(":g")?;
        let g = self.term()?;
        self.keyword(":h")?;
        let h = self.term()?;
        self.keyword(":p")?;
        let p = self.term()?;
        self.keyword(":fs")?;
        let mut fs: Vec<Option<Rec>> = vec![None; 1 << k];
        while let Some(Tok::Atom(a)) = self.peek() {
            let a = *a;
            let parsed = a.split_once('=').and_then(|(bits, rec)| {
                let rec = match rec {
                    "self" => Rec::SelfRef,
                    "id" => Rec::Id,
                    _ => return None,
                };
                parse_bits(bits).ok().filter(|x| x.1 == k).map(|x| (bits, x.0, rec))
            });
            let Some((bits, v, rec)) = parsed else {
                return self.err(format!("bad :fs entry `{a}`"));
            };
            if fs[v as usize].replace(rec).is_some() {
                return self.err(format!("duplicate :fs entry for {bits}"));
            }
            self.pos += 1;
        }
        if let Some(i) = fs.iter().position(Option::is_none) {
            return self.err(format!("missing :fs entry for {}", bits_to_string(i as u128, k)));
        }
        Ok(kqrec(k, t, g, h, p, fs.into_iter().map(|r| r.expect("checked")).collect()))
    }
}

pub fn parse_term(src: &str) -> Result<T, ParseError> {
    let mut lx = Lexer::new(src);
    let t = lx.term()?;
    if lx.peek().is_some() {
        return lx.err("trailing input after term");
    }
    Ok(t)
}

fn fmt_real(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:?}")
}

pub fn format_amplitude(a: Amplitude) -> String {
    format!("{} {}", fmt_real(a.re), fmt_real(a.im))
}

pub fn print_state(s: &State) -> String {
    let mut out = format!("qubits {}\n", s.width());
    for &(k, a) in s.entries() {
        let _ = writeln!(out, "{} {}", bits_to_string(k, s.width()), format_amplitude(a));
    }
    out
}

pub fn parse_state(src: &str) -> Result<State, ParseError> {
    let err = |line: usize, msg: String| ParseError { line, col: 1, msg };
    let mut lines = src
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split(';').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hl, header) = lines.next().ok_or_else(|| err(1, "missing `qubits <n>` header".into()))?;
    let n: usize = header
        .strip_prefix("qubits")
        .and_then(|r| r.trim().parse().ok())
        .ok_or_else(|| err(hl, "expected `qubits <n>`".into()))?;
    if n > sqp_core::state::MAX_QUBITS {
        return Err(err(hl, format!("at most {} qubits are supported", sqp_core::state::MAX_QUBITS)));
    }
    let mut entries = Vec::new();
    for (ln, l) in lines {
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 3 {
            return Err(err(ln, "expected `<bits> <re> <im>`".into()));
        }
        let bits = if n == 0 && f[0] == "-" { "" } else { f[0] };
        let (k, len) = parse_bits(bits).map_err(|e| err(ln, e.to_string()))?;
        if len != n {
            return Err(err(ln, format!("bitstring has {len} bits, header says {n}")));
        }
        let re: f64 = f[1].parse().map_err(|_| err(ln, format!("bad real `{}`", f[1])))?;
        let im: f64 = f[2].parse().map_err(|_| err(ln, format!("bad real `{}`", f[2])))?;
        entries.push((k, Amplitude::new(re, im)));
    }
    Ok(State::from_entries(n, entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn angles() {
        assert_eq!(format_angle(PI / 4.0), "0.78539816339744828");
        assert_eq!(format_angle(PI), "3.1415926535897931");
        assert_eq!(parse_angle("pi/4"), Some(PI / 4.0));
        assert_eq!(parse_angle("2pi/3"), Some(2.0 * PI / 3.0));
        assert_eq!(parse_angle("-pi"), Some(-PI));
        assert_eq!(parse_angle("0.5"), Some(0.5));
        assert_eq!(parse_angle("pi/0"), None);
        for x in [1e-9, 0.1, 6.25, 1.0, 123.456, 3e-300] {
            assert_eq!(parse_angle(&format_angle(x)), Some(x), "{x}");
        }
    }

    #[test]
    fn term_round_trip() {
        let src = "(kqrec 2 2 :g (i) :h (branch (not) (phase pi/2)) :p (switch 3 (rot 0.25) (swap)) :fs 11=id 00=self 01=self 10=id)";
        let t = parse_term(src).unwrap();
        let printed = print_term(&t);
        assert_eq!(
            printed,
            "(kqrec 2 2 :g (i) :h (branch (not) (phase 1.5707963267948966)) :p (switch 3 (rot 0.25000000000000000) (swap)) :fs 00=self 01=self 10=id 11=id)"
        );
        assert_eq!(print_term(&parse_term(&printed).unwrap()), printed);
        let c = parse_term("(compo (crot 3 inv) (meas 1))").unwrap();
        assert_eq!(print_term(&c), "(compo (crot 3 inv) (meas 1))");
    }

    #[test]
    fn term_errors() {
        let e = parse_term("(compo (not)\n  (bogus))").unwrap_err();
        assert_eq!((e.line, e.col), (2, 4));
        assert!(parse_term("(kqrec 1 1 :g (i) :h (i) :p (i) :fs 0=self)").unwrap_err().msg.contains("missing :fs entry for 1"));
        assert!(parse_term("(not) (not)").is_err());
        assert!(parse_term("(meas 2)").is_err());
    }

    #[test]
    fn states() {
        let s = parse_state("; comment\nqubits 2\n10 0.6 0\n01 0 -0.8\n").unwrap();
        let p = print_state(&s);
        assert_eq!(p, "qubits 2\n01 0.0 -0.8\n10 0.6 0.0\n");
        assert_eq!(parse_state(&p).unwrap(), s);
        assert!(parse_state("qubits 2\n101 1 0\n").is_err());
        assert!(parse_state("qbits 2\n").is_err());
        let sc = parse_state("qubits 0\n- 1 0\n").unwrap();
        assert_eq!(sc.width(), 0);
    }
}
