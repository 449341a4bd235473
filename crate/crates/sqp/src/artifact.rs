//! Reading and writing compile artifacts as a directory of text files.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use sqp_core::compiler::{CompileArtifact, VerifyReport, REGISTER_LENGTH_FORMULA};
use sqp_core::dc;

use crate::text::{parse_term, print_term, ParseError};

#[derive(Debug, thiserror::Error)]
pub enum ArtifactError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("{path}: {msg}")]
    Manifest { path: PathBuf, msg: String },
}

pub const MANIFEST: &str = "manifest.txt";

fn stage_file(name: &str) -> String {
    format!("{name}_term.txt")
}

pub fn manifest_text(art: &CompileArtifact) -> String {
    let mut s = format!("state_bits {}\ntime_bound", art.state_bits);
    for c in &art.time_bound {
        let _ = write!(s, " {c}");
    }
    let _ = writeln!(s, "\nregister_length_formula {REGISTER_LENGTH_FORMULA}");
    s.push_str("padding_layout (00)^p 11 q cells; cells 0..=n+p then -p..=-1; cell = 1 h s1 s2\n");
    s.push_str("output_layout ~M rest q markers 11 pairs\n");
    for (name, t) in art.stages() {
        let d = dc(t);
        let _ = writeln!(s, "stage {name} {} total {} dag {}", stage_file(name), d.total, d.dag_total);
    }
    s
}

pub fn write_artifact(dir: &Path, art: &CompileArtifact) -> Result<(), ArtifactError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ArtifactError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    for (name, t) in art.stages() {
        let p = dir.join(stage_file(name));
        fs::write(&p, print_term(t) + "\n").map_err(io(&p))?;
    }
    let p = dir.join(MANIFEST);
    fs::write(&p, manifest_text(art)).map_err(io(&p))
}

pub fn read_artifact(dir: &Path) -> Result<CompileArtifact, ArtifactError> {
    let read = |name: &str| {
        let p = dir.join(name);
        fs::read_to_string(&p).map_err(|source| ArtifactError::Io { path: p, source })
    };
    let term = |name: &str| {
        let file = stage_file(name);
        parse_term(&read(&file)?).map_err(|source| ArtifactError::Parse { path: dir.join(&file), source })
    };
    let mpath = dir.join(MANIFEST);
    let bad = |msg: &str| ArtifactError::Manifest { path: mpath.clone(), msg: msg.into() };
    let manifest = read(MANIFEST)?;
    let field = |key: &str| manifest.lines().find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(' ')));
    let state_bits = field("state_bits").and_then(|v| v.trim().parse().ok()).ok_or_else(|| bad("missing state_bits"))?;
    let time_bound = field("time_bound")
        .and_then(|v| v.split_whitespace().map(str::parse).collect::<Result<Vec<u64>, _>>().ok())
        .ok_or_else(|| bad("missing time_bound"))?;
    Ok(CompileArtifact {
        init_term: term("init")?,
        step_term: term("step")?,
        loop_term: term("loop")?,
        output_term: term("output")?,
        decode_output_term: term("decode_output")?,
        full_term: term("full")?,
        state_bits,
        time_bound,
    })
}

fn sci(x: f64) -> String {
    format!("{x:.3e}")
}

pub fn report_text(r: &VerifyReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "max_prefix_dev {}", sci(r.max_prefix_dev));
    let _ = writeln!(s, "max_inner_dev {}", sci(r.max_inner_dev));
    let _ = writeln!(s, "max_orth_residual {}", sci(r.max_orth_residual));
    let _ = writeln!(s, "undecoded_mass {}", sci(r.undecoded_mass));
    let _ = writeln!(s, "linearity_dev {}", sci(r.linearity_dev));
    let _ = writeln!(s, "loop_count {}", r.loop_count);
    for (m, (d, c)) in &r.prefix_probs {
        let m: String = m.iter().map(|x| x.as_char()).collect();
        let m = if m.is_empty() { "-".into() } else { m };
        let _ = writeln!(s, "output {m} direct {d:.12} compiled {c:.12}");
    }
    s
}
