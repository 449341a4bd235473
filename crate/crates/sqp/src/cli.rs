//! Command-line dispatch. `run` returns the process exit code.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use sqp_core::compiler::{compile_full, verify_against_qtm, CompileArtifact};
use sqp_core::eval::{apply_dense, eval_unchecked, unitarity_defect};
use sqp_core::qtm::{self, QtmSpec, Sym};
use sqp_core::state::DENSE_CAP;
use sqp_core::stdlib;
use sqp_core::term::*;
use sqp_core::{dc, eval, matrix_of, machines, Amplitude, State};

use crate::artifact::{read_artifact, report_text, write_artifact};
use crate::qtmfile::{parse_qtm, print_qtm};
use crate::text::{format_amplitude, parse_angle, parse_state, parse_term, print_state, print_term};

pub const EXIT_CHECK: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "sqp", version, about = "Quantum recursion terms, QTMs and the compiler between them")]
pub struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Apply a term to a state.
    Eval {
        #[arg(long)]
        term: PathBuf,
        #[arg(long)]
        state: PathBuf,
        /// Apply the dense matrix instead of the sparse evaluator.
        #[arg(long)]
        dense: bool,
    },
    /// Print the matrix of a term on n qubits, row-major as `re im` pairs.
    Matrix {
        #[arg(long)]
        term: PathBuf,
        #[arg(long)]
        qubits: usize,
    },
    /// Print the inverse term.
    Invert {
        #[arg(long)]
        term: PathBuf,
    },
    /// Descriptional complexity: tree and DAG counts.
    Dc {
        #[arg(long)]
        term: PathBuf,
    },
    /// Linearity, norm, dimension, unitarity and inverse checks on random states.
    Check {
        #[arg(long)]
        term: PathBuf,
        #[arg(long)]
        qubits: usize,
        #[arg(long, env = "SQP_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        samples: usize,
    },
    /// Emit a library term: cnot, z1 θ, zrot θ, gps θ, wh, cphase θ, remove k, rep k,
    /// swap_k k, reverse, qft k, interleave, copy2, lift k v0 v1 ...
    Mk {
        name: String,
        args: Vec<String>,
    },
    #[command(subcommand)]
    Qtm(QtmCmd),
}

#[derive(Subcommand, Debug)]
enum QtmCmd {
    /// Well-formedness and shape diagnostics.
    Check {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Run the machine and print the final superposition.
    Run {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        input: String,
    },
    /// Compile the machine into a directory of stage terms and a manifest.
    Compile {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a compiled artifact against direct simulation.
    ///
    /// Several inputs are verified as one uniform superposition; pairwise residual
    /// conditions are checked across all of them.
    Verify {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        artifact: PathBuf,
        #[arg(long, required = true)]
        input: Vec<String>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Print a bundled machine: identity, not, rotation, flip_walk.
    Example { name: String },
}

struct Fail(i32, String);

type Res = Result<String, Fail>;

fn usage(m: impl Into<String>) -> Fail {
    Fail(EXIT_USAGE, m.into())
}

fn read(p: &Path) -> Result<String, Fail> {
    fs::read_to_string(p).map_err(|e| Fail(EXIT_IO, format!("{}: {e}", p.display())))
}

fn load_term(p: &Path) -> Result<T, Fail> {
    parse_term(&read(p)?).map_err(|e| Fail(EXIT_IO, format!("{}: {e}", p.display())))
}

fn load_valid_term(p: &Path) -> Result<T, Fail> {
    let t = load_term(p)?;
    let errs: Vec<String> = validate(&t).iter().filter(|d| d.severity == Severity::Error).map(|d| d.to_string()).collect();
    if errs.is_empty() {
        Ok(t)
    } else {
        Err(Fail(EXIT_CHECK, errs.join("\n")))
    }
}

fn load_spec(p: &Path) -> Result<QtmSpec, Fail> {
    parse_qtm(&read(p)?).map_err(|e| Fail(EXIT_IO, format!("{}: {e}", p.display())))
}

fn input_syms(x: &str) -> Result<Vec<Sym>, Fail> {
    if x.is_empty() {
        return Err(usage("input must be non-empty"));
    }
    x.chars()
        .map(|c| match c {
            '0' => Ok(Sym::Zero),
            '1' => Ok(Sym::One),
            _ => Err(usage(format!("input symbol `{c}` is not 0 or 1"))),
        })
        .collect()
}

fn dense_width(n: usize) -> Result<(), Fail> {
    if n > DENSE_CAP {
        Err(usage(format!("--qubits {n} exceeds the dense limit {DENSE_CAP}")))
    } else {
        Ok(())
    }
}

fn cmd_eval(term: &Path, state: &Path, dense: bool) -> Res {
    let t = load_valid_term(term)?;
    let phi = parse_state(&read(state)?).map_err(|e| Fail(EXIT_IO, format!("{}: {e}", state.display())))?;
    let out = if dense {
        dense_width(phi.width())?;
        let m = matrix_of(&t, phi.width()).map_err(|e| Fail(EXIT_CHECK, e.to_string()))?;
        apply_dense(&m, &phi).map_err(|e| Fail(EXIT_CHECK, e.to_string()))?
    } else {
        eval(&t, &phi).map_err(|e| Fail(EXIT_CHECK, e.to_string()))?
    };
    Ok(print_state(&out))
}

fn cmd_matrix(term: &Path, n: usize) -> Res {
    dense_width(n)?;
    let t = load_valid_term(term)?;
    let m = matrix_of(&t, n).map_err(|e| Fail(EXIT_CHECK, e.to_string()))?;
    let mut s = String::new();
    for r in 0..m.len() {
        let row: Vec<String> = (0..m.len()).map(|c| format_amplitude(m[r][c])).collect();
        s.push_str(&row.join("  "));
        s.push('\n');
    }
    Ok(s)
}

fn cmd_dc(term: &Path) -> Res {
    let d = dc(&load_term(term)?);
    let mut s = format!("total {}\ndag_total {}\n", d.total, d.dag_total);
    for (k, v) in &d.per_constructor {
        let _ = writeln!(s, "{k} {v}");
    }
    Ok(s)
}

fn cmd_check(term: &Path, n: usize, seed: u64, samples: usize) -> Res {
    if n == 0 || n > DENSE_CAP + 8 {
        return Err(usage(format!("--qubits must be between 1 and {}", DENSE_CAP + 8)));
    }
    let t = load_valid_term(term)?;
    let free = is_meas_free(&t);
    let mut rows: Vec<(&str, Option<f64>, f64)> = Vec::new();
    let (mut add, mut hom, mut norm, mut inv, mut dim) = (0f64, 0f64, 0f64, 0f64, true);
    let zero = eval_unchecked(&t, &State::null(n)).is_null();
    let tinv = invert(&t).ok();
    for i in 0..samples as u64 {
        let s = seed.wrapping_mul(1_000_003).wrapping_add(2 * i);
        let (phi, psi) = (State::random(n, s), State::random(n, s + 1));
        let a = Amplitude::new(0.3 + (i as f64) * 0.1, -0.7);
        let fphi = eval_unchecked(&t, &phi);
        let both = eval_unchecked(&t, &phi.add(&psi).expect("same width"));
        add = add.max(both.max_diff(&fphi.add(&eval_unchecked(&t, &psi)).expect("same width")));
        hom = hom.max(eval_unchecked(&t, &phi.scale(a)).max_diff(&fphi.scale(a)));
        dim &= fphi.is_null() || fphi.width() == n;
        norm = norm.max((fphi.norm() - phi.norm()).abs());
        if let Some(ti) = &tinv {
            inv = inv.max(eval_unchecked(ti, &fphi).max_diff(&phi));
        }
    }
    rows.push(("null", None, if zero { 0.0 } else { 1.0 }));
    rows.push(("additivity", Some(add), 1e-10));
    rows.push(("homogeneity", Some(hom), 1e-10));
    rows.push(("dimension", None, if dim { 0.0 } else { 1.0 }));
    let mut s = String::new();
    let mut ok = true;
    let mut line = |s: &mut String, name: &str, dev: f64, tol: f64| {
        let pass = dev <= tol;
        ok &= pass;
        let _ = writeln!(s, "{} {name} {dev:.3e}", if pass { "pass" } else { "fail" });
    };
    for (name, dev, tol) in rows {
        match dev {
            Some(d) => line(&mut s, name, d, tol),
            None => line(&mut s, name, tol, 0.0),
        }
    }
    if free {
        line(&mut s, "norm", norm, 1e-10);
        line(&mut s, "inverse", inv, 1e-9);
        if n <= DENSE_CAP {
            let m = matrix_of(&t, n).map_err(|e| Fail(EXIT_CHECK, e.to_string()))?;
            line(&mut s, "unitarity", unitarity_defect(&m), 1e-9);
        } else {
            s.push_str("skip unitarity (too many qubits for the dense matrix)\n");
        }
    } else {
        s.push_str("skip norm (term contains meas)\nskip inverse (term contains meas)\nskip unitarity (term contains meas)\n");
    }
    if ok {
        Ok(s)
    } else {
        Err(Fail(EXIT_CHECK, s))
    }
}

fn num(args: &[String], i: usize) -> Result<usize, Fail> {
    args.get(i).and_then(|a| a.parse().ok()).ok_or_else(|| usage(format!("argument {} must be a natural number", i + 1)))
}

fn angle(args: &[String]) -> Result<f64, Fail> {
    args.first().and_then(|a| parse_angle(a)).ok_or_else(|| usage("expected an angle argument"))
}

fn cmd_mk(name: &str, args: &[String]) -> Res {
    let se = |e: stdlib::StdlibError| usage(e.to_string());
    let t = match name {
        "cnot" | "wh" => stdlib::basic_gate(name, 0.0).map_err(se)?,
        "z1" | "zrot" | "gps" | "cphase" => stdlib::basic_gate(name, angle(args)?).map_err(se)?,
        "remove" => stdlib::remove_k(num(args, 0)?.max(1)),
        "rep" => stdlib::rep_k(num(args, 0)?.max(1)),
        "swap_k" => stdlib::rearranger("swap_k", num(args, 0)?).map_err(se)?,
        "reverse" => stdlib::reverse(),
        "qft" => stdlib::qft(num(args, 0)?).map_err(se)?,
        "interleave" => stdlib::interleave(),
        "copy2" => stdlib::copy2(),
        "lift" => {
            let k = num(args, 0)?;
            let table: Result<Vec<u128>, _> = args[1..].iter().map(|a| a.parse()).collect();
            let table = table.map_err(|_| usage("lift table entries must be natural numbers"))?;
            stdlib::lift_bijection(k, &table).map_err(se)?
        }
        _ => return Err(usage(format!("unknown library term `{name}`"))),
    };
    Ok(print_term(&t) + "\n")
}

fn cmd_qtm_check(spec: &Path) -> Res {
    let m = load_spec(spec)?;
    let mut d = qtm::check_wellformed(&m);
    d.extend(qtm::check_shape(&m));
    let mut s = String::new();
    for x in &d {
        let _ = writeln!(s, "{x}");
    }
    let errors = d.iter().filter(|x| x.severity == Severity::Error).count();
    let _ = writeln!(s, "{} error(s), {} warning(s)", errors, d.len() - errors);
    if errors == 0 {
        Ok(s)
    } else {
        Err(Fail(EXIT_CHECK, s))
    }
}

fn cmd_qtm_run(spec: &Path, input: &str) -> Res {
    let m = load_spec(spec)?;
    let x = input_syms(input)?;
    let r = qtm::run(&m, &x).map_err(|e| Fail(EXIT_CHECK, e.to_string()))?;
    let mut s = format!("steps {}\n", r.steps);
    for (c, a) in &r.finals.entries {
        let _ = writeln!(s, "{} q={} h={} tape={}", format_amplitude(*a), qtm::state_str(c.q, m.state_bits), c.h, c.tape_string());
    }
    for (out, p) in r.output_distribution() {
        let o: String = out.iter().map(|x| x.as_char()).collect();
        let _ = writeln!(s, "output {} {p:.12}", if o.is_empty() { "-" } else { &o });
    }
    Ok(s)
}

fn cmd_qtm_compile(spec: &Path, out: &Path) -> Res {
    let m = load_spec(spec)?;
    let art = compile_full(&m).map_err(|e| Fail(EXIT_CHECK, e.to_string()))?;
    write_artifact(out, &art).map_err(|e| Fail(EXIT_IO, e.to_string()))?;
    Ok(crate::artifact::manifest_text(&art))
}

fn cmd_qtm_verify(spec: &Path, dir: &Path, inputs: &[String], tol: f64) -> Res {
    let m = load_spec(spec)?;
    let art: CompileArtifact = read_artifact(dir).map_err(|e| Fail(EXIT_IO, e.to_string()))?;
    let w = Amplitude::new(1.0 / (inputs.len() as f64).sqrt(), 0.0);
    let xs: Result<Vec<(Vec<Sym>, Amplitude)>, Fail> = inputs.iter().map(|x| Ok((input_syms(x)?, w))).collect();
    let rep = verify_against_qtm(&m, &art, &xs?).map_err(|e| Fail(EXIT_CHECK, e.to_string()))?;
    let s = report_text(&rep);
    if rep.worst() <= tol {
        Ok(s + "pass\n")
    } else {
        Err(Fail(EXIT_CHECK, s + "fail\n"))
    }
}

fn cmd_example(name: &str) -> Res {
    let m = match name {
        "identity" => machines::identity(),
        "not" => machines::not_machine(),
        "rotation" => machines::rotation(),
        "flip_walk" => machines::flip_walk(),
        _ => return Err(usage(format!("unknown example machine `{name}`"))),
    };
    Ok(print_qtm(&m))
}

fn dispatch(cli: Cli) -> Res {
    match cli.cmd {
        Cmd::Eval { term, state, dense } => cmd_eval(&term, &state, dense),
        Cmd::Matrix { term, qubits } => cmd_matrix(&term, qubits),
        Cmd::Invert { term } => {
            let t = load_term(&term)?;
            invert(&t).map(|i| print_term(&i) + "\n").map_err(|_| Fail(EXIT_CHECK, "term contains meas and has no inverse".into()))
        }
        Cmd::Dc { term } => cmd_dc(&term),
        Cmd::Check { term, qubits, seed, samples } => cmd_check(&term, qubits, seed, samples),
        Cmd::Mk { name, args } => cmd_mk(&name, &args),
        Cmd::Qtm(q) => match q {
            QtmCmd::Check { spec } => cmd_qtm_check(&spec),
            QtmCmd::Run { spec, input } => cmd_qtm_run(&spec, &input),
            QtmCmd::Compile { spec, out } => cmd_qtm_compile(&spec, &out),
            QtmCmd::Verify { spec, artifact, input, tol } => cmd_qtm_verify(&spec, &artifact, &input, tol),
            QtmCmd::Example { name } => cmd_example(&name),
        },
    }
}

/// Parses `args` (including the program name), writes output and returns the exit code.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match crate::with_big_stack(move || dispatch(cli)) {
        Ok(s) => {
            let _ = out.write_all(s.as_bytes());
            0
        }
        Err(Fail(code, msg)) => {
            let msg = if msg.ends_with('\n') { msg } else { msg + "\n" };
            let _ = if code == EXIT_CHECK { out.write_all(msg.as_bytes()) } else { err.write_all(format!("error: {msg}").as_bytes()) };
            code
        }
    }
}
