//! Result serialization: row-level CSV, summary JSON, atomic writes.
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! re-parsing the CSV recovers bit-identical values and every summary
//! statistic can be recomputed exactly from the rows.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use mdpu_core::stats::{mean, sample_std};
use serde::Serialize;

/// Version tag for the CSV row schema.
pub const ROWS_SCHEMA_VERSION: u32 = 1;
/// Version tag for the summary JSON schema.
pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

/// Exact CSV column set, in order.
pub const CSV_HEADER: &str =
    "method,loss,pi_plus,m,n_mdp,n_u,seed,epoch,train_risk_raw,train_risk_corrected,test_accuracy";

/// One (run, epoch) observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: String,
    pub loss: String,
    pub pi_plus: f64,
    pub m: usize,
    pub n_mdp: usize,
    pub n_u: usize,
    pub seed: u64,
    pub epoch: usize,
    pub train_risk_raw: f64,
    pub train_risk_corrected: f64,
    pub test_accuracy: f64,
}

/// Render rows as CSV with the mandated header.
pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.method,
            r.loss,
            r.pi_plus,
            r.m,
            r.n_mdp,
            r.n_u,
            r.seed,
            r.epoch,
            r.train_risk_raw,
            r.train_risk_corrected,
            r.test_accuracy
        )
        .expect("string write");
    }
    out
}

/// Mean and sample standard deviation over per-seed values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub mean: f64,
    /// Sample std (n-1); 0 when only one seed ran.
    pub std: f64,
    pub per_seed: Vec<f64>,
}

impl Aggregate {
    pub fn from_values(values: Vec<f64>) -> Self {
        let m = mean(&values);
        let s = if values.len() < 2 {
            0.0
        } else {
            sample_std(&values)
        };
        Self {
            mean: m,
            std: s,
            per_seed: values,
        }
    }
}

/// Per-method accuracy aggregation across seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: String,
    /// Final-epoch test accuracy across seeds.
    pub final_accuracy: Option<Aggregate>,
    /// Accuracy averaged over all epochs, then aggregated across seeds.
    pub epoch_avg_accuracy: Option<Aggregate>,
    /// Final-epoch raw training risk across seeds.
    pub final_train_raw: Option<Aggregate>,
}

/// Summary for one experiment (one config, all seeds and methods).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub schema_version: u32,
    /// Schema of the companion CSV rows.
    pub rows_schema_version: u32,
    pub experiment: serde_json::Value,
    pub test_n: usize,
    /// Fraction of positives in the test set actually used.
    pub test_empirical_prior: f64,
    pub methods: Vec<MethodSummary>,
    /// Set when the trajectory is empty (0 epochs): no rows exist.
    pub note: Option<String>,
}

/// Write bytes to `path` atomically (temp file + rename) creating
/// parent directories as needed.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path)
        .with_context(|| format!("renaming {} into place", tmp.display()))?;
    Ok(())
}
