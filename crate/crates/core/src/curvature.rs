//! Balanced Forman curvature per edge and the motif edge weights derived from it.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::graph::Graph;
use crate::math;
use crate::{Error, Result};

/// Per-edge curvature, indexed by dense edge id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureMap {
    pub values: Vec<f64>,
    /// `sign(values[e])` with `sign(0) = 0`.
    pub rounded: Vec<i8>,
}

impl CurvatureMap {
    pub fn from_values(values: Vec<f64>) -> Self {
        let rounded = values.iter().map(|&v| math::sign(v)).collect();
        Self { values, rounded }
    }

    /// Map with every curvature at zero, for modes that never read it.
    pub fn zeros(n_edges: usize) -> Self {
        Self::from_values(vec![0.0; n_edges])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// How the edges of a star motif are weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightMode {
    /// `w = Ricci(e)`.
    Literal,
    /// `w = 2 − Ricci(e)`, non-negative since curvature is at least −2.
    ShiftedPositive,
    /// `w = sign(Ricci(e))`.
    SignRounded,
    /// `w = 1`; the per-order Chebyshev coefficients carry the edge contribution.
    UnweightedLearnable,
}

impl WeightMode {
    /// Whether motif spectra depend only on a small discrete key and can be shared.
    pub fn is_cacheable(self) -> bool {
        matches!(self, WeightMode::SignRounded | WeightMode::UnweightedLearnable)
    }

    pub fn needs_curvature(self) -> bool {
        !matches!(self, WeightMode::UnweightedLearnable)
    }

    pub fn weight(self, cm: &CurvatureMap, edge: usize) -> f64 {
        match self {
            WeightMode::Literal => cm.values[edge],
            WeightMode::ShiftedPositive => 2.0 - cm.values[edge],
            WeightMode::SignRounded => f64::from(cm.rounded[edge]),
            WeightMode::UnweightedLearnable => 1.0,
        }
    }
}

/// Balanced Forman curvature of a single edge `(i, j)`.
///
/// `2/d_i + 2/d_j − 2 + 2·t/max(d) + t/min(d) + (□_i + □_j) / (γ_max · max(d))`
/// where `t` counts triangles on the edge, `□_i` counts neighbors `k` of `i`
/// that close a diagonal-free 4-cycle `i–j–w–k` and `γ_max` is the largest
/// number of such cycles through one node. The 4-cycle term is dropped when
/// no such cycle exists.
pub fn edge_curvature(g: &Graph, i: usize, j: usize) -> f64 {
    let (di, dj) = (g.degree(i) as f64, g.degree(j) as f64);
    let (dmax, dmin) = (di.max(dj), di.min(dj));
    let tri = g.common_neighbors(i, j) as f64;

    let (sq_i, gamma_i) = squares_from(g, i, j);
    let (sq_j, gamma_j) = squares_from(g, j, i);
    let gamma = gamma_i.max(gamma_j);

    let mut ric = 2.0 / di + 2.0 / dj - 2.0 + 2.0 * tri / dmax + tri / dmin;
    if gamma > 0 {
        ric += (sq_i + sq_j) as f64 / (gamma as f64 * dmax);
    }
    ric
}

/// Neighbors `k` of `a` (outside the closed ball of `b`) that reach a node
/// `w ∈ N(b)` outside the closed ball of `a`; returns their count and the
/// largest number of such `w` for a single `k`.
fn squares_from(g: &Graph, a: usize, b: usize) -> (usize, usize) {
    let mut count = 0;
    let mut gamma = 0;
    for &k in g.neighbors(a) {
        if k == b || g.has_edge(k, b) {
            continue;
        }
        let cycles = g
            .neighbors(k)
            .iter()
            .filter(|&&w| w != a && g.has_edge(w, b) && !g.has_edge(w, a))
            .count();
        if cycles > 0 {
            count += 1;
            gamma = gamma.max(cycles);
        }
    }
    (count, gamma)
}

/// Curvature of every edge, in edge-id order. Cost `O(|E|·d_max²)` up to the
/// adjacency lookups.
pub fn balanced_forman(g: &Graph) -> CurvatureMap {
    let values = g
        .edges()
        .iter()
        .map(|&(i, j)| edge_curvature(g, i, j))
        .collect();
    CurvatureMap::from_values(values)
}

/// Weights for the edges `(center, leaf)` of a star motif, in `leaves` order.
pub fn motif_edge_weights(
    g: &Graph,
    cm: &CurvatureMap,
    center: usize,
    leaves: &[usize],
    mode: WeightMode,
) -> Result<Vec<f64>> {
    leaves
        .iter()
        .map(|&leaf| {
            g.edge_id(center, leaf)
                .map(|e| mode.weight(cm, e))
                .ok_or(Error::NotAnEdge(center, leaf))
        })
        .collect()
}
