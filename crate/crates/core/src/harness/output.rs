//! CSV writers. Floats go through the csv crate's shortest round-trip
//! formatting, so files reproduce bit-identical values when parsed back.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

use super::experiments::ExperimentResult;

fn write_rows<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(!rows.is_empty()).from_path(path)?;
    if rows.is_empty() {
        w.write_record(header)?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub const TRIAL_COLUMNS: [&str; 10] =
    ["scheme", "sweep_name", "sweep_value", "trial", "ee", "rate", "iterations", "seed", "power", "path_hash"];

pub const SUMMARY_COLUMNS: [&str; 13] = [
    "experiment",
    "scheme",
    "sweep_name",
    "sweep_value",
    "snr_db",
    "m_active",
    "trials",
    "ee_mean",
    "ee_std_error",
    "rate_mean",
    "rate_std_error",
    "power_mean",
    "master_seed",
];

pub const ITERATION_COLUMNS: [&str; 6] =
    ["sweep_name", "sweep_value", "iteration", "eta_mean", "eta_std_error", "trials"];

/// Writes `<name>_trials.csv`, `<name>_summary.csv` and, for the
/// convergence experiment, `<name>_iterations.csv`. Returns the paths.
pub fn write_experiment(dir: &Path, res: &ExperimentResult) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let name = res.name();
    let trials = dir.join(format!("{name}_trials.csv"));
    let summary = dir.join(format!("{name}_summary.csv"));
    write_rows(&trials, &res.records, &TRIAL_COLUMNS)?;
    write_rows(&summary, &res.summary, &SUMMARY_COLUMNS)?;
    let mut paths = vec![trials, summary];
    if !res.iterations.is_empty() {
        let it = dir.join(format!("{name}_iterations.csv"));
        write_rows(&it, &res.iterations, &ITERATION_COLUMNS)?;
        paths.push(it);
    }
    Ok(paths)
}

pub fn write_all(dir: &Path, results: &[ExperimentResult]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for r in results {
        out.extend(write_experiment(dir, r)?);
    }
    Ok(out)
}
