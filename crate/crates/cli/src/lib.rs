//! Experiment driver around `manybody_core`: dataset files, run configs,
//! training runs with reproducible records, evaluation, benchmarks and probes.

pub mod bench;
pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod record;
pub mod util;

pub use commands::Global;
