//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI, TAU};
use std::time::Instant;

use sqp_core::compiler::{compile_full, verify_against_qtm};
use sqp_core::eval::{apply_dense, eval_unchecked, unitarity_defect};
use sqp_core::gen::TermGen;
use sqp_core::qtm::{self, check_wellformed, ConfigSuperposition, SkewConfig, Sym};
use sqp_core::stdlib::*;
use sqp_core::term::*;
use sqp_core::{dc, eval, machines, matrix_of, Amplitude, State};

type Matrix = Vec<Vec<Amplitude>>;
type Criterion = (&'static str, fn() -> Outcome);

const C0: Amplitude = Amplitude::new(0.0, 0.0);
const C1: Amplitude = Amplitude::new(1.0, 0.0);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn max_dev(a: &Matrix, b: &Matrix) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn linearity_suite() -> Outcome {
    let start = Instant::now();
    let mut gen = TermGen::new(20_240_601);
    let (mut worst, mut dim_ok, mut null_ok) = (0.0f64, true, true);
    for i in 0..200u64 {
        let f = gen.term();
        let n = 1 + (i % 8) as usize;
        let (phi, psi) = (State::random(n, 2 * i), State::random(n, 2 * i + 1));
        let a = Amplitude::new(0.6 - 0.01 * i as f64, 0.8);
        let fphi = eval_unchecked(&f, &phi);
        null_ok &= eval_unchecked(&f, &State::null(n)).is_null();
        worst = worst.max(eval_unchecked(&f, &phi.add(&psi).unwrap()).max_diff(&fphi.add(&eval_unchecked(&f, &psi)).unwrap()));
        worst = worst.max(eval_unchecked(&f, &phi.scale(a)).max_diff(&fphi.scale(a)));
        dim_ok &= fphi.width() == n;
        worst = worst.max((fphi.norm() - phi.norm()).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-10 && dim_ok && null_ok && secs < 30.0,
        format!("200 terms, max deviation {worst:.2e}, dimension {dim_ok}, null {null_ok}, {secs:.2}s"),
    )
}

fn stdlib_instances() -> Vec<(String, T)> {
    let mut v: Vec<(String, T)> = vec![
        ("cnot".into(), cnot()),
        ("wh".into(), wh()),
        ("z1(pi/3)".into(), z1(PI / 3.0)),
        ("zrot(1.1)".into(), zrot(1.1)),
        ("gps(0.7)".into(), gps(0.7)),
        ("cphase(pi/2)".into(), cphase(FRAC_PI_2)),
        ("reverse".into(), reverse()),
        ("interleave".into(), interleave()),
        ("copy2".into(), copy2()),
        ("tensor_split".into(), tensor_split(wh(), 1, cnot())),
        ("prefix_skip".into(), prefix_skip(wh(), 1)),
    ];
    for k in 1..=4 {
        v.push((format!("remove_{k}"), remove_k(k)));
        v.push((format!("rep_{k}"), rep_k(k)));
        v.push((format!("swap_{k}"), swap_k(k)));
        v.push((format!("qft({k})"), qft(k).unwrap()));
        let gs: Vec<T> = (0..1usize << k).map(|i| [id(), not(), wh(), phase(0.3 * i as f64)][i % 4].clone()).collect();
        v.push((format!("branch_{k}"), branch_k(k, &gs).unwrap()));
        v.push((format!("rev_branch_{k}"), rev_branch_k(k, &gs).unwrap()));
        let size = 1u128 << k;
        let perm: Vec<u128> = (0..size).map(|x| (x * 5 + 3) % size).collect();
        v.push((format!("lift_{k}"), lift_bijection(k, &perm).unwrap()));
    }
    v
}

fn unitarity() -> Outcome {
    let start = Instant::now();
    let (mut worst, mut count, mut who) = (0.0f64, 0, String::new());
    for (name, t) in stdlib_instances() {
        for n in 1..=8 {
            let d = unitarity_defect(&matrix_of(&t, n).unwrap());
            if d > worst {
                worst = d;
                who = format!("{name} on {n} qubits");
            }
            count += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 1e-9 && secs < 60.0, format!("{count} matrices, worst defect {worst:.2e} ({who}), {secs:.2}s"))
}

fn inverse_round_trip() -> Outcome {
    let start = Instant::now();
    let mut gen = TermGen::new(77);
    let (mut worst, mut with_rec) = (0.0f64, 0);
    for i in 0..100u64 {
        let f = gen.term();
        with_rec += (dc(&f).per_constructor.get("kqrec").copied().unwrap_or(0) > 0) as usize;
        let phi = State::random(1 + (i % 8) as usize, 1000 + i);
        let back = eval_unchecked(&invert(&f).unwrap(), &eval_unchecked(&f, &phi));
        worst = worst.max(back.max_diff(&phi));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-9 && with_rec > 0 && secs < 30.0,
        format!("100 terms ({with_rec} with kqrec), max deviation {worst:.2e}, {secs:.2}s"),
    )
}

fn gate_matrices() -> Outcome {
    let r = Amplitude::new(FRAC_1_SQRT_2, 0.0);
    let wh_ref = vec![vec![r, r], vec![r, -r]];
    let cnot_ref: Matrix = [0usize, 1, 3, 2].iter().map(|&c| (0..4).map(|j| if j == c { C1 } else { C0 }).collect()).collect();
    let diag: Matrix = (0..4).map(|i| (0..4).map(|j| if i != j { C0 } else if i == 3 { Amplitude::new(0.0, 1.0) } else { C1 }).collect()).collect();
    let d = [
        max_dev(&matrix_of(&cnot(), 2).unwrap(), &cnot_ref),
        max_dev(&matrix_of(&wh(), 1).unwrap(), &wh_ref),
        max_dev(&matrix_of(&cphase(FRAC_PI_2), 2).unwrap(), &diag),
    ];
    outcome(d.iter().all(|&x| x <= 1e-12), format!("cnot {:.1e}, wh {:.1e}, cphase(pi/2) {:.1e}", d[0], d[1], d[2]))
}

fn qft_matrices() -> Outcome {
    let mut worst = 0.0f64;
    for k in 1..=5usize {
        let dim = 1usize << k;
        let norm = (dim as f64).sqrt();
        let dft: Matrix = (0..dim)
            .map(|s| (0..dim).map(|t| Amplitude::from_polar(1.0 / norm, TAU * ((s * t) % dim) as f64 / dim as f64)).collect())
            .collect();
        worst = worst.max(max_dev(&matrix_of(&qft(k).unwrap(), k).unwrap(), &dft));
    }
    let same = max_dev(&matrix_of(&qft(1).unwrap(), 1).unwrap(), &matrix_of(&wh(), 1).unwrap());
    outcome(worst <= 1e-9 && same <= 1e-12, format!("k = 1..5 worst {worst:.2e}, qft(1) vs wh {same:.1e}"))
}

fn rearrangers() -> Outcome {
    let mut bad = 0;
    for x in 0..16u128 {
        let bits: Vec<char> = format!("{x:04b}").chars().collect();
        let rep: String = [bits[3], bits[0], bits[1], bits[2]].iter().collect();
        let rem: String = [bits[1], bits[2], bits[3], bits[0]].iter().collect();
        let input = State::basis_key(x, 4);
        bad += (eval(&rep_1(), &input).unwrap() != State::basis(&rep).unwrap()) as usize;
        bad += (eval(&remove_1(), &input).unwrap() != State::basis(&rem).unwrap()) as usize;
    }
    outcome(bad == 0, format!("32 basis cases, {bad} mismatches"))
}

fn dc_numbers() -> Outcome {
    let initial = [id(), not(), swap(), phase(0.4), rot(0.4), meas(0), meas(1)];
    let ones = initial.iter().all(|t| dc(t).total == 1);
    let cnot_dc = dc(&branch(id(), not())).total;
    let derived = |s: u64| -> Vec<u128> {
        let th = 0.1 + s as f64;
        [z1(th), zrot(th), gps(th), cphase(th), wh()].iter().map(|t| dc(t).total).collect()
    };
    let (a, b) = (derived(1), derived(2));
    let pinned = a == [5, 7, 7, 3, 3];
    outcome(
        ones && cnot_dc == 3 && a == b && pinned,
        format!("initial functions 1: {ones}, Branch(Id,Not) {cnot_dc}, z1/zrot/gps/cphase/wh {a:?}, stable {}", a == b),
    )
}

fn random_superposition(m: &qtm::QtmSpec, seed: u64) -> ConfigSuperposition {
    let st = State::random(6, seed);
    let p = 60;
    let mut entries = BTreeMap::new();
    for (i, &(k, a)) in st.entries().iter().enumerate() {
        let x: Vec<Sym> = (0..3).map(|j| [Sym::Zero, Sym::One][((k >> j) & 1) as usize]).collect();
        let mut c = SkewConfig::initial(&x, p);
        c.q = ((k >> 3) as u32) % m.num_states();
        c.h = (i as i64 % 5) - 2;
        *entries.entry(c).or_insert(C0) += a;
    }
    ConfigSuperposition { n: 3, entries }
}

fn wellformedness() -> Outcome {
    let valid = [machines::identity(), machines::not_machine(), machines::rotation()];
    let valid_ok = valid.iter().all(|m| check_wellformed(m).is_empty());
    let detect = |m: qtm::QtmSpec, tag: &str| check_wellformed(&m).iter().any(|d| d.message.starts_with(tag));
    let caught = [
        detect(machines::violates_unit_length(), "unit length violated"),
        detect(machines::violates_orthogonality(), "orthogonality violated"),
        detect(machines::violates_separability(), "separability violated"),
    ];
    let mut drift = 0.0f64;
    for (i, m) in valid.iter().enumerate() {
        let mut c = random_superposition(m, 40 + i as u64);
        let n0 = c.norm_sqr().sqrt();
        for _ in 0..50 {
            c = qtm::evolve_full(m, &c).unwrap();
        }
        drift = drift.max((c.norm_sqr().sqrt() - n0).abs());
    }
    outcome(
        valid_ok && caught.iter().all(|&x| x) && drift <= 1e-9,
        format!("valid machines clean {valid_ok}, violations caught {caught:?}, 50-step norm drift {drift:.2e}"),
    )
}

fn all_inputs(n: usize) -> Vec<Vec<Sym>> {
    (0..1u32 << n).map(|v| (0..n).map(|j| if (v >> (n - 1 - j)) & 1 == 1 { Sym::One } else { Sym::Zero }).collect()).collect()
}

fn compiler_end_to_end() -> Outcome {
    let start = Instant::now();
    let (mut prefix, mut inner, mut orth, mut runs) = (0.0f64, 0.0f64, 0.0f64, 0);
    let mut rotation_probs = Vec::new();
    for (name, m) in [("identity", machines::identity()), ("not", machines::not_machine()), ("rotation", machines::rotation())] {
        let art = compile_full(&m).unwrap();
        for n in 1..=3 {
            let xs = all_inputs(n);
            let w = Amplitude::new(1.0 / (xs.len() as f64).sqrt(), 0.0);
            let mut batches: Vec<Vec<(Vec<Sym>, Amplitude)>> = xs.iter().map(|x| vec![(x.clone(), C1)]).collect();
            batches.push(xs.iter().map(|x| (x.clone(), w)).collect());
            for b in batches {
                let r = verify_against_qtm(&m, &art, &b).unwrap();
                prefix = prefix.max(r.max_prefix_dev).max(r.undecoded_mass);
                inner = inner.max(r.max_inner_dev);
                orth = orth.max(r.max_orth_residual);
                runs += 1;
                if name == "rotation" && b.len() == 1 && b[0].0 == [Sym::Zero] {
                    rotation_probs = r.prefix_probs.values().map(|v| v.1).collect();
                }
            }
        }
    }
    let dist_ok = rotation_probs.len() == 2 && rotation_probs.iter().all(|p| (p - 0.5).abs() <= 1e-6);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        prefix <= 1e-6 && inner <= 1e-6 && orth <= 1e-6 && dist_ok && secs < 120.0,
        format!(
            "{runs} verifications, prefix {prefix:.2e}, inner {inner:.2e}, orthogonality {orth:.2e}, rotation {rotation_probs:.6?}, {secs:.2}s"
        ),
    )
}

fn tilde_state(xs: &[Sym]) -> State {
    let bits: String = qtm::tilde(xs).iter().map(|b| if *b == 1 { '1' } else { '0' }).collect();
    State::basis(&bits).unwrap()
}

fn copy2_contract() -> Outcome {
    let c = copy2();
    let (mut worst, mut cases) = (0.0f64, 0);
    for k in 1..=3 {
        let zeros = tilde_state(&vec![Sym::Zero; k]);
        let psi = State::random(2, k as u64);
        let xs = all_inputs(k);
        for x in &xs {
            let t = tilde_state(x);
            let input = zeros.tensor(&t).unwrap().tensor(&psi).unwrap();
            let want = t.tensor(&t).unwrap().tensor(&psi).unwrap();
            worst = worst.max(eval(&c, &input).unwrap().max_diff(&want));
            cases += 1;
        }
        let amps: Vec<Amplitude> = State::random(k + 1, 99 + k as u64).entries().iter().map(|e| e.1).collect();
        let mut sup_in = State::null(zeros.width() * 2 + 2);
        let mut sup_want = State::null(zeros.width() * 2 + 2);
        for (x, a) in xs.iter().zip(amps.iter().cycle()) {
            let t = tilde_state(x);
            sup_in = sup_in.add(&zeros.tensor(&t).unwrap().tensor(&psi).unwrap().scale(*a)).unwrap();
            sup_want = sup_want.add(&t.tensor(&t).unwrap().tensor(&psi).unwrap().scale(*a)).unwrap();
        }
        worst = worst.max(eval(&c, &sup_in).unwrap().max_diff(&sup_want));
        cases += 1;
    }
    outcome(worst <= 1e-9, format!("{cases} cases for k <= 3, max deviation {worst:.2e}"))
}

fn sparse_dense() -> Outcome {
    let start = Instant::now();
    let mut gen = TermGen::new(4242);
    let mut worst = 0.0f64;
    for i in 0..100u64 {
        let f = gen.term();
        let n = 1 + (i % 10) as usize;
        let phi = State::random(n, 500 + i);
        let m = matrix_of(&f, n).unwrap();
        worst = worst.max(eval_unchecked(&f, &phi).max_diff(&apply_dense(&m, &phi).unwrap()));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 1e-10, format!("100 pairs, n <= 10, max deviation {worst:.2e}, {secs:.2}s"))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("linearity, null, dimension and norm suite", linearity_suite),
        ("unitarity of library terms", unitarity),
        ("inverse round trip", inverse_round_trip),
        ("gate matrices", gate_matrices),
        ("qft against the DFT", qft_matrices),
        ("REP_1 and REMOVE_1", rearrangers),
        ("descriptional complexity", dc_numbers),
        ("machine well-formedness", wellformedness),
        ("compiler end to end", compiler_end_to_end),
        ("COPY_2 contract", copy2_contract),
        ("sparse and dense agreement", sparse_dense),
    ];
    let failed = sqp::with_big_stack(move || {
        let mut failed = 0;
        for (i, (name, f)) in criteria.iter().enumerate() {
            let o = f();
            println!("criterion {:>2} {} {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
            failed += !o.pass as usize;
        }
        failed
    });
    println!("acceptance: {} of 11 criteria passed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
