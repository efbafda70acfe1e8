//! Deterministic, atomic file output.
//!
//! Every artifact is written to a temporary sibling and renamed into
//! place, so partially written files never appear under the output
//! directory. All serialization is ordering-stable (BTree-backed maps,
//! shortest-roundtrip float formatting), which makes reruns with the
//! same configuration byte-identical.

use std::path::Path;

use vqgap_core::driver::RunResult;
use vqgap_core::Histogram;

use crate::CliError;

/// Writes bytes atomically (temp file + rename).
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let parent = path
        .parent()
        .ok_or_else(|| CliError::runtime(format!("no parent directory for {}", path.display())))?;
    std::fs::create_dir_all(parent)?;
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::runtime(format!("serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Histogram CSV: `bitstring,count`, ascending basis index, qubit 0
/// first in each bitstring.
pub fn histogram_csv(histogram: &Histogram) -> String {
    let mut out = String::from("bitstring,count\n");
    for (bits, count) in histogram.iter() {
        out.push_str(&format!("{bits},{count}\n"));
    }
    out
}

/// Writes the per-repetition artifacts: the full result JSON plus the
/// trace and histogram CSV renderings.
pub fn write_run_result(dir: &Path, repetition: u64, run: &RunResult) -> Result<(), CliError> {
    let stem = format!("rep_{repetition:04}");
    write_json(&dir.join(format!("{stem}.json")), run)?;
    write_atomic(
        &dir.join(format!("{stem}_trace.csv")),
        run.trace.to_csv().as_bytes(),
    )?;
    write_atomic(
        &dir.join(format!("{stem}_hist.csv")),
        histogram_csv(&run.final_histogram).as_bytes(),
    )?;
    Ok(())
}
