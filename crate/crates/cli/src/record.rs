//! Run records and the CSV artifacts written next to them.

use std::path::PathBuf;

use anyhow::Result;
use manybody_core::analysis::log_energy;
use manybody_core::train::EpochMetrics;
use serde::{Deserialize, Serialize};

use crate::config::ResolvedConfig;
use crate::util::sha256_hex;

pub const RECORD_FORMAT: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub metrics: EpochMetrics,
    /// Milliseconds since training started, at the end of this epoch.
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub run: u64,
    pub model_init: u64,
    pub split_and_shuffle: u64,
    /// `None` when the dataset was read from disk without a generator seed.
    pub dataset: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub threads: usize,
    pub available_parallelism: usize,
    pub debug_assertions: bool,
    pub target_arch: String,
    pub target_os: String,
    pub crate_version: String,
}

impl Environment {
    pub fn capture(threads: usize) -> Self {
        Self {
            threads,
            available_parallelism: std::thread::available_parallelism().map_or(1, |n| n.get()),
            debug_assertions: cfg!(debug_assertions),
            target_arch: std::env::consts::ARCH.into(),
            target_os: std::env::consts::OS.into(),
            crate_version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub format_version: u32,
    pub resolved: ResolvedConfig,
    pub seeds: Seeds,
    pub dataset_manifest_sha256: String,
    pub metrics: Vec<EpochRow>,
    /// SHA-256 of `metrics.csv` without the `wall_ms` column.
    pub metrics_sha256: String,
    pub checkpoint: PathBuf,
    pub best_checkpoint: Option<PathBuf>,
    pub best_epoch: Option<usize>,
    pub aborted: Option<String>,
    pub environment: Environment,
}

/// `metrics.csv`: one row per epoch. `energy_kK` holds the order-`K`
/// component energy for `K = 3..=nu`.
pub fn metrics_csv(rows: &[EpochRow], nu: usize, with_wall: bool) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["epoch", "train_loss", "test_metric", "dirichlet_energy"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((3..=nu).map(|k| format!("energy_k{k}")));
    if with_wall {
        header.push("wall_ms".into());
    }
    w.write_record(&header)?;
    for r in rows {
        let m = &r.metrics;
        let mut rec = vec![
            m.epoch.to_string(),
            m.train_loss.to_string(),
            m.test_metric.to_string(),
            m.dirichlet_energy.to_string(),
        ];
        rec.extend(m.order_energy.iter().skip(1).map(|e| e.to_string()));
        if with_wall {
            rec.push(format!("{:.3}", r.wall_ms));
        }
        w.write_record(&rec)?;
    }
    Ok(w.into_inner()?)
}

/// Hash of the deterministic part of the metrics table.
pub fn metrics_hash(rows: &[EpochRow], nu: usize) -> Result<String> {
    Ok(sha256_hex(&metrics_csv(rows, nu, false)?))
}

/// `energy_trace.csv`: long format, one row per epoch and order `k = 2..=nu`.
pub fn energy_trace_csv(rows: &[EpochRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["epoch", "k", "energy", "log_energy"])?;
    for r in rows {
        for (j, e) in r.metrics.order_energy.iter().enumerate() {
            w.write_record([
                r.metrics.epoch.to_string(),
                (j + 2).to_string(),
                e.to_string(),
                log_energy(*e).to_string(),
            ])?;
        }
    }
    Ok(w.into_inner()?)
}

/// `bound.csv`: the evaluated graph closest to its energy bound, per epoch.
pub fn bound_csv(rows: &[EpochRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["epoch", "observed_energy", "bound_value", "ratio", "satisfied"])?;
    for r in rows {
        let b = &r.metrics.bound;
        w.write_record([
            r.metrics.epoch.to_string(),
            b.observed_energy.to_string(),
            b.bound_value.to_string(),
            b.ratio().to_string(),
            r.metrics.bound_satisfied.to_string(),
        ])?;
    }
    Ok(w.into_inner()?)
}
