//! Numerical engine for many-body message passing on graphs.
//!
//! The crate is `no_std` and needs only `alloc`. Everything that touches the
//! filesystem, the clock or the command line lives in the companion `manybody`
//! crate.
//!
//! Layout:
//! - [`graph`]: immutable graphs, Laplacians, hop distances, clustering
//! - [`curvature`]: Balanced Forman curvature and motif edge weights
//! - [`spectral`]: symmetric eigensolvers, Chebyshev filters, motif spectra
//! - [`model`]: motif enumeration, the layer update, gradients, probes
//! - [`optim`]: Adam
//! - [`synth`]: synthetic graph families and graph-level targets
//! - [`analysis`]: Dirichlet energy, energy bounds, per-order energies
//! - [`train`]: deterministic training loop over in-memory datasets
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod curvature;
mod error;
pub mod graph;
pub mod math;
pub mod matrix;
pub mod model;
pub mod optim;
pub mod rng;
pub mod spectral;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
pub use graph::{Graph, LaplacianKind};
pub use matrix::{FeatureMatrix, Matrix};
