//! Star-motif enumeration and the per-graph motif plan.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;

use super::config::ModelConfig;
use crate::curvature::{balanced_forman, CurvatureMap, WeightMode};
use crate::graph::{Graph, LaplacianKind};
use crate::math;
use crate::rng;
use crate::spectral::{
    chebyshev_values, eigh, eigvalsh, shifted_eigenvalues, star_laplacian, EigenDecomposition,
    FilterBasis, MotifSpectrumCache, WeightsKey,
};
use crate::{Error, Result};

/// A `k`-star: the center plus `k − 1` of its neighbors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MotifInstance {
    pub center: usize,
    /// Ascending.
    pub leaves: Vec<usize>,
}

/// Enumerates the `k`-motifs centered at `i`.
///
/// All `C(d_i, k−1)` leaf sets are returned in lexicographic order when `cap`
/// is 0 or not binding. Otherwise `cap` distinct sets are drawn uniformly
/// without replacement (so every neighbor is equally likely to appear) and
/// returned in lexicographic order.
pub fn enumerate_motifs(g: &Graph, i: usize, k: usize, cap: usize, seed: u64) -> Vec<MotifInstance> {
    assert!(k >= 2, "motif size must be at least 2");
    let nb = g.neighbors(i);
    let r = k - 1;
    if nb.len() < r {
        return Vec::new();
    }
    let total = math::binomial_u64(nb.len(), r);
    let to_motif = |pos: &[usize]| MotifInstance {
        center: i,
        leaves: pos.iter().map(|&p| nb[p]).collect(),
    };
    if cap == 0 || total <= cap as u64 {
        let mut out = Vec::with_capacity(total as usize);
        let mut pos: Vec<usize> = (0..r).collect();
        loop {
            out.push(to_motif(&pos));
            let mut j = r;
            while j > 0 && pos[j - 1] == nb.len() - r + (j - 1) {
                j -= 1;
            }
            if j == 0 {
                return out;
            }
            pos[j - 1] += 1;
            for t in j..r {
                pos[t] = pos[t - 1] + 1;
            }
        }
    }
    let mut rng = rng::rng(motif_seed(seed, i, k));
    let mut ranks: Vec<u64> = if total <= usize::MAX as u64 {
        index::sample(&mut rng, total as usize, cap)
            .into_iter()
            .map(|x| x as u64)
            .collect()
    } else {
        // too many subsets to index; rejection-sample whole leaf sets
        let mut seen = alloc::collections::BTreeSet::new();
        while seen.len() < cap {
            let mut s: Vec<usize> = index::sample(&mut rng, nb.len(), r).into_vec();
            s.sort_unstable();
            seen.insert(s);
        }
        return seen.iter().map(|s| to_motif(s)).collect();
    };
    ranks.sort_unstable();
    ranks.iter().map(|&rank| to_motif(&unrank(nb.len(), r, rank))).collect()
}

fn motif_seed(seed: u64, node: usize, k: usize) -> u64 {
    rng::split(rng::split(seed, node as u64), k as u64)
}

/// Lexicographic combination of rank `rank` among `r`-subsets of `0..n`.
fn unrank(n: usize, r: usize, mut rank: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(r);
    let mut x = 0;
    for slot in 0..r {
        loop {
            let remaining = math::binomial_u64(n - x - 1, r - slot - 1);
            if rank < remaining {
                break;
            }
            rank -= remaining;
            x += 1;
        }
        out.push(x);
        x += 1;
    }
    out
}

/// Row 0 of `Uᵀ T_{k'}(Λ̃) U` for `k' = 1..=k`, stored row-major as
/// `basis[a * k + (k' − 1)]`. The center coefficient of a motif for
/// coefficients `θ` is then `c_a = Σ_{k'} θ_{k'} basis[a, k']`.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterBasis {
    pub k: usize,
    pub basis: Vec<f64>,
    /// Set when every motif edge weight is zero; the motif sends nothing.
    pub degenerate: bool,
}

impl CenterBasis {
    pub fn from_decomposition(decomp: &EigenDecomposition, basis: FilterBasis) -> Self {
        let k = decomp.dim();
        let mut out = vec![0.0; k * k];
        let Some(shifted) = shifted_eigenvalues(&decomp.eigenvalues, decomp.spectral_scale()) else {
            return Self {
                k,
                basis: out,
                degenerate: true,
            };
        };
        let v = &decomp.eigenvectors;
        for (m, &x) in shifted.iter().enumerate() {
            let t = chebyshev_values(x, k);
            for a in 0..k {
                let q = match basis {
                    FilterBasis::EigenvectorRows => v[(0, m)] * v[(a, m)],
                    FilterBasis::EigenvectorColumns => v[(m, 0)] * v[(m, a)],
                };
                for kp in 1..=k {
                    out[a * k + kp - 1] += q * t[kp];
                }
            }
        }
        Self {
            k,
            basis: out,
            degenerate: false,
        }
    }

    /// `c = basis · θ`.
    pub fn coefficients(&self, theta: &[f64], out: &mut [f64]) {
        let k = self.k;
        for a in 0..k {
            out[a] = (0..k).map(|j| self.basis[a * k + j] * theta[j]).sum();
        }
    }
}

/// Every `k`-motif of a graph for one order, flattened.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderPlan {
    pub k: usize,
    /// Motifs of node `i` are `offsets[i]..offsets[i+1]`.
    pub offsets: Vec<usize>,
    /// `k` node ids per motif, center first, then the leaves in the order the
    /// spectrum expects.
    pub nodes: Vec<usize>,
    /// Index into `bases` per motif.
    pub spectrum: Vec<usize>,
    pub bases: Vec<CenterBasis>,
}

impl OrderPlan {
    pub fn n_motifs(&self) -> usize {
        self.spectrum.len()
    }

    pub fn motif_count(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn motif_nodes(&self, m: usize) -> &[usize] {
        &self.nodes[m * self.k..(m + 1) * self.k]
    }
}

/// Everything about one graph the model needs, computed once.
#[derive(Debug, Clone)]
pub struct GraphContext {
    pub graph: Graph,
    pub curvature: CurvatureMap,
    pub inv_sqrt_degree: Vec<f64>,
    /// Largest eigenvalue of the symmetric normalized Laplacian.
    pub lambda_max: f64,
    /// Plans for `k = 3..=nu`.
    pub orders: Vec<OrderPlan>,
    /// Motifs whose weights are all zero.
    pub degenerate_motifs: usize,
    pub cache_decompositions: usize,
}

impl GraphContext {
    /// Computes curvature (when the weight mode reads it) and the motif plans.
    pub fn new(graph: Graph, config: &ModelConfig) -> Result<Self> {
        let curvature = if config.weight_mode.needs_curvature() && config.has_higher_order() {
            balanced_forman(&graph)
        } else {
            CurvatureMap::zeros(graph.n_edges())
        };
        Self::with_curvature(graph, curvature, config)
    }

    pub fn with_curvature(graph: Graph, curvature: CurvatureMap, config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        if curvature.len() != graph.n_edges() {
            return Err(Error::Dimension(alloc::format!(
                "{} curvature values for {} edges",
                curvature.len(),
                graph.n_edges()
            )));
        }
        let n = graph.n_nodes();
        let inv_sqrt_degree = (0..n)
            .map(|i| match graph.degree(i) {
                0 => 0.0,
                d => 1.0 / math::sqrt(d as f64),
            })
            .collect();
        let lambda_max = global_lambda_max(&graph)?;

        let mut cache = MotifSpectrumCache::new();
        let mut orders = Vec::new();
        let mut degenerate_motifs = 0;
        for k in config.higher_orders() {
            let plan = build_order(&graph, &curvature, config, k, &mut cache)?;
            degenerate_motifs += plan
                .spectrum
                .iter()
                .filter(|&&s| plan.bases[s].degenerate)
                .count();
            orders.push(plan);
        }
        Ok(Self {
            graph,
            curvature,
            inv_sqrt_degree,
            lambda_max,
            orders,
            degenerate_motifs,
            cache_decompositions: cache.decompositions(),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.graph.n_nodes()
    }

    /// Orders `k ≥ 3` with at least one motif at node `i`.
    pub fn present_orders(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.orders
            .iter()
            .enumerate()
            .filter(move |(_, p)| p.motif_count(i) > 0)
            .map(|(j, _)| j)
    }
}

fn global_lambda_max(g: &Graph) -> Result<f64> {
    if g.n_edges() == 0 {
        return Ok(0.0);
    }
    let l = g.laplacian(LaplacianKind::SymmetricNormalized, None)?;
    let ev = if g.n_nodes() <= 64 {
        eigh(&l)?.eigenvalues
    } else {
        eigvalsh(&l)?
    };
    Ok(ev.last().copied().unwrap_or(0.0))
}

fn build_order(
    g: &Graph,
    cm: &CurvatureMap,
    config: &ModelConfig,
    k: usize,
    cache: &mut MotifSpectrumCache,
) -> Result<OrderPlan> {
    let n = g.n_nodes();
    let mode = config.weight_mode;
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    let mut nodes = Vec::new();
    let mut spectrum = Vec::new();
    let mut bases = Vec::new();
    let mut shared: BTreeMap<WeightsKey, usize> = BTreeMap::new();

    for i in 0..n {
        for motif in enumerate_motifs(g, i, k, config.enumeration_cap, config.rng_seed) {
            let weights: Vec<f64> = motif
                .leaves
                .iter()
                .map(|&leaf| mode.weight(cm, g.edge_id(i, leaf).expect("leaf is a neighbor")))
                .collect();
            nodes.push(i);
            if mode.is_cacheable() {
                // leaves sorted by weight so one spectrum serves every arrangement
                let mut order: Vec<usize> = (0..weights.len()).collect();
                order.sort_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(a.cmp(&b)));
                nodes.extend(order.iter().map(|&j| motif.leaves[j]));
                let key = match mode {
                    WeightMode::UnweightedLearnable => WeightsKey::Unweighted,
                    _ => WeightsKey::signs(
                        &order.iter().map(|&j| weights[j] as i8).collect::<Vec<_>>(),
                    ),
                };
                let idx = match shared.get(&key) {
                    Some(&idx) => idx,
                    None => {
                        let spec = cache.get(k, key.clone())?;
                        bases.push(CenterBasis::from_decomposition(&spec.decomposition, config.basis));
                        shared.insert(key, bases.len() - 1);
                        bases.len() - 1
                    }
                };
                spectrum.push(idx);
            } else {
                nodes.extend_from_slice(&motif.leaves);
                let decomp = eigh(&star_laplacian(&weights))?;
                bases.push(CenterBasis::from_decomposition(&decomp, config.basis));
                spectrum.push(bases.len() - 1);
            }
        }
        offsets.push(spectrum.len());
    }
    Ok(OrderPlan {
        k,
        offsets,
        nodes,
        spectrum,
        bases,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::config::Head;
    use std::collections::BTreeSet;

    fn star(leaves: usize) -> Graph {
        let e: Vec<_> = (1..=leaves).map(|j| (0, j)).collect();
        Graph::new(leaves + 1, &e).unwrap()
    }

    #[test]
    fn exhaustive_counts() {
        let g = star(4);
        let m = enumerate_motifs(&g, 0, 3, 0, 0);
        assert_eq!(m.len(), 6);
        assert_eq!(m[0].leaves, std::vec![1, 2]);
        assert_eq!(m[5].leaves, std::vec![3, 4]);
        assert!(enumerate_motifs(&g, 1, 3, 0, 0).is_empty());
        assert_eq!(enumerate_motifs(&g, 0, 5, 0, 0).len(), 1);
    }

    #[test]
    fn sampled_subsets_are_distinct_and_reproducible() {
        let g = star(10);
        let a = enumerate_motifs(&g, 0, 4, 20, 99);
        let b = enumerate_motifs(&g, 0, 4, 20, 99);
        assert_eq!(a, b);
        assert_eq!(a.len(), 20);
        let sets: BTreeSet<_> = a.iter().map(|m| m.leaves.clone()).collect();
        assert_eq!(sets.len(), 20);
        for m in &a {
            assert!(m.leaves.windows(2).all(|w| w[0] < w[1]));
            assert!(m.leaves.iter().all(|l| g.has_edge(0, *l)));
        }
        assert!(a.windows(2).all(|w| w[0].leaves < w[1].leaves));
        assert_ne!(a, enumerate_motifs(&g, 0, 4, 20, 100));
        // a binding cap of C(10,3) = 120 falls back to exhaustive
        assert_eq!(enumerate_motifs(&g, 0, 4, 120, 1).len(), 120);
    }

    #[test]
    fn sampling_is_fair_across_neighbors() {
        let g = star(8);
        let mut hits = [0usize; 9];
        for seed in 0..400 {
            for m in enumerate_motifs(&g, 0, 3, 5, seed) {
                for l in m.leaves {
                    hits[l] += 1;
                }
            }
        }
        // 400 draws of 5 pairs: each leaf expected 400·5·2/8 = 500 times
        for &h in &hits[1..] {
            assert!((h as f64 - 500.0).abs() < 90.0, "{hits:?}");
        }
    }

    #[test]
    fn unrank_matches_enumeration() {
        let g = star(7);
        let all = enumerate_motifs(&g, 0, 4, 0, 0);
        for (rank, m) in all.iter().enumerate() {
            let pos = unrank(7, 3, rank as u64);
            let leaves: Vec<usize> = pos.iter().map(|p| g.neighbors(0)[*p]).collect();
            assert_eq!(leaves, m.leaves);
        }
    }

    #[test]
    fn sign_rounded_plan_shares_spectra() {
        let g = star(5);
        let mut cfg = ModelConfig::new(4, 1, 2, 2, Head::GraphRegression);
        cfg.weight_mode = WeightMode::SignRounded;
        cfg.enumeration_cap = 0;
        let ctx = GraphContext::new(g, &cfg).unwrap();
        // every leaf edge has curvature 2/1 + 2/5 − 2 > 0, so one spectrum per order
        assert_eq!(ctx.orders[0].bases.len(), 1);
        assert_eq!(ctx.orders[1].bases.len(), 1);
        assert_eq!(ctx.orders[0].n_motifs(), 10);
        assert_eq!(ctx.cache_decompositions, 2);
    }

    #[test]
    fn literal_zero_curvature_motifs_are_degenerate() {
        let e: Vec<_> = (0..6).map(|i| (i, (i + 1) % 6)).collect();
        let g = Graph::new(6, &e).unwrap();
        let mut cfg = ModelConfig::new(3, 1, 2, 2, Head::GraphRegression);
        cfg.weight_mode = WeightMode::Literal;
        let ctx = GraphContext::new(g, &cfg).unwrap();
        assert_eq!(ctx.degenerate_motifs, 6);
        assert!(ctx.orders[0].bases.iter().all(|b| b.degenerate));
    }
}
