//! Deterministic output files: per-method traces, reconstructions, and a summary table.
//!
//! Floats are written in Rust's shortest round-trip form, so re-parsing a
//! CSV value reproduces the `f64` exactly. Wall times are not written; they
//! vary between runs.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiment::{ProblemInstance, RunSummary};
use crate::solver::IterationRecord;
use crate::spaces::PrimalVector;

pub const TRACE_HEADER: &str = "n,lambda,mu,residual,error,delta_n,i_n";
pub const SUMMARY_HEADER: &str = "method,strategy,noise_level,delta,n_delta,stop_reason,error,lambda_step_sum";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn trace_csv(records: &[IterationRecord]) -> String {
    let mut s = String::with_capacity(64 * (records.len() + 1));
    s.push_str(TRACE_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.n,
            r.lambda,
            r.mu,
            r.residual_norm,
            opt(r.error),
            opt(r.delta_n),
            r.i_n
        );
    }
    s
}

pub fn summary_csv(summaries: &[RunSummary]) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for r in summaries {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.method,
            r.strategy,
            r.noise_level,
            r.delta,
            r.n_delta,
            r.stop_reason.as_str(),
            r.final_error,
            r.lambda_step_sum
        );
    }
    s
}

/// 16-bit binary PGM, grey levels scaled linearly from the image's min to max.
pub fn pgm16(image: &PrimalVector) -> Vec<u8> {
    let g = image.grid();
    let v = image.as_slice();
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let mut out = format!("P5\n{} {}\n65535\n", g.cols, g.rows).into_bytes();
    out.reserve(2 * v.len());
    for &x in v {
        let level = if span > 0.0 {
            ((x - lo) / span * 65535.0).round() as u16
        } else {
            0
        };
        out.extend_from_slice(&level.to_be_bytes());
    }
    out
}

/// Raw little-endian `f64` samples in row-major order.
pub fn f64_sidecar(image: &PrimalVector) -> Vec<u8> {
    image.as_slice().iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn read_f64_sidecar(path: &Path) -> Result<Vec<f64>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Format(format!("{} is not a whole number of f64 samples", path.display())));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let write = || -> std::io::Result<()> {
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(bytes)?;
        tmp.flush()?;
        tmp.persist(path).map_err(|e| e.error)?;
        Ok(())
    };
    write().map_err(|e| Error::io(path, e))
}

/// Writes `summary.csv`, `truth.{pgm,f64}` and per method
/// `trace_<method>.csv` and `recon_<method>.{pgm,f64}` into `dir`.
pub fn write_outputs(summaries: &[RunSummary], instance: &ProblemInstance, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for s in summaries {
        write_atomic(&dir.join(format!("trace_{}.csv", s.method)), trace_csv(&s.records).as_bytes())?;
        write_atomic(&dir.join(format!("recon_{}.pgm", s.method)), &pgm16(&s.solution))?;
        write_atomic(&dir.join(format!("recon_{}.f64", s.method)), &f64_sidecar(&s.solution))?;
    }
    if !summaries.is_empty() {
        write_atomic(&dir.join("truth.pgm"), &pgm16(&instance.truth))?;
        write_atomic(&dir.join("truth.f64"), &f64_sidecar(&instance.truth))?;
    }
    write_atomic(&dir.join("summary.csv"), summary_csv(summaries).as_bytes())
}
