//! Synthetic graph families, node features and graph-level targets.
//!
//! Every generator is a pure function of its arguments and a `u64` seed.
//! Dataset instances draw their seeds from `rng::split(spec.seed, index)`.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::graph::Graph;
use crate::matrix::Matrix;
use crate::spectral::eigvalsh;
use crate::{math, rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    ErdosRenyi,
    Ring,
    CrossedRing,
    CliquePath,
    Spine,
    Heterophilic,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKind {
    /// `exp(average shortest path / c1)`
    DistEmph,
    /// `ln(1 + c2 · average clustering)`
    ClustEmph,
    /// `Σ |λ(distance matrix)|`
    SpectralDist,
    /// `Σ |λ(A)|`
    SpectralAdj,
    #[default]
    None,
}

impl TargetKind {
    pub fn needs_connected(self) -> bool {
        matches!(self, TargetKind::DistEmph | TargetKind::SpectralDist)
    }
}

/// Redraws allowed per Erdős–Rényi instance when the target needs connectivity.
pub const MAX_REDRAWS: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub family: Family,
    #[serde(default = "one")]
    pub count: usize,
    /// Inclusive node-count range; fixed-shape families use the lower end as the ring size.
    #[serde(default = "default_nodes")]
    pub n_nodes: (usize, usize),
    /// Inclusive edge-probability range for Erdős–Rényi graphs.
    #[serde(default = "default_edge_prob")]
    pub edge_prob: (f64, f64),
    #[serde(default = "default_classes")]
    pub n_classes: usize,
    #[serde(default = "default_feature_dim")]
    pub feature_dim: usize,
    #[serde(default = "default_avg_degree")]
    pub avg_degree: f64,
    #[serde(default = "default_p_hetero")]
    pub p_hetero: f64,
    /// Scale of the heterophilic class-mean vectors relative to the unit noise.
    #[serde(default = "one_f")]
    pub class_sep: f64,
    #[serde(default)]
    pub target: TargetKind,
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default = "default_c2")]
    pub c2: f64,
    #[serde(default = "default_clique")]
    pub clique_size: usize,
    #[serde(default = "default_path_len")]
    pub path_len: usize,
    #[serde(default = "default_spine")]
    pub spine_len: usize,
    #[serde(default = "default_leaves")]
    pub leaves_per_node: usize,
    #[serde(default = "one")]
    pub chord_offset: usize,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> usize {
    1
}
fn one_f() -> f64 {
    1.0
}
fn default_nodes() -> (usize, usize) {
    (100, 150)
}
fn default_edge_prob() -> (f64, f64) {
    (0.15, 0.3)
}
fn default_classes() -> usize {
    7
}
fn default_feature_dim() -> usize {
    8
}
fn default_avg_degree() -> f64 {
    10.0
}
fn default_p_hetero() -> f64 {
    0.8
}
fn default_c1() -> f64 {
    2.0
}
fn default_c2() -> f64 {
    10.0
}
fn default_clique() -> usize {
    4
}
fn default_path_len() -> usize {
    3
}
fn default_spine() -> usize {
    8
}
fn default_leaves() -> usize {
    3
}

impl DatasetSpec {
    pub fn new(family: Family) -> Self {
        Self {
            family,
            count: 1,
            n_nodes: default_nodes(),
            edge_prob: default_edge_prob(),
            n_classes: default_classes(),
            feature_dim: default_feature_dim(),
            avg_degree: default_avg_degree(),
            p_hetero: default_p_hetero(),
            class_sep: 1.0,
            target: TargetKind::None,
            c1: default_c1(),
            c2: default_c2(),
            clique_size: default_clique(),
            path_len: default_path_len(),
            spine_len: default_spine(),
            leaves_per_node: default_leaves(),
            chord_offset: 1,
            seed: 0,
        }
    }

    /// Checks ranges; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: &str| Err(Error::Config(format!("{field}: {why}")));
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.count < 1 {
            return bad("count", "must be at least 1");
        }
        if self.n_nodes.0 < 2 || self.n_nodes.0 > self.n_nodes.1 {
            return bad("n_nodes", "need 2 <= min <= max");
        }
        if !(prob(self.edge_prob.0) && prob(self.edge_prob.1)) || self.edge_prob.0 > self.edge_prob.1 {
            return bad("edge_prob", "need 0 <= min <= max <= 1");
        }
        if !prob(self.p_hetero) {
            return bad("p_hetero", "must lie in [0, 1]");
        }
        if self.feature_dim < 1 {
            return bad("feature_dim", "must be at least 1");
        }
        if !(self.c1 > 0.0 && self.c1.is_finite() && self.c2.is_finite()) {
            return bad("c1", "c1 must be positive and c2 finite");
        }
        match self.family {
            Family::Heterophilic => {
                if self.n_classes < 2 {
                    return bad("n_classes", "must be at least 2");
                }
                if !(self.avg_degree >= 0.0 && self.avg_degree < (self.n_nodes.0 - 1) as f64) {
                    return bad("avg_degree", "must be in [0, n_nodes - 1)");
                }
                if !(self.class_sep >= 0.0 && self.class_sep.is_finite()) {
                    return bad("class_sep", "must be finite and non-negative");
                }
            }
            Family::Ring if self.n_nodes.0 < 3 => return bad("n_nodes", "a ring needs 3 nodes"),
            Family::CrossedRing => {
                if self.n_nodes.0 < 6 || self.n_nodes.0 % 2 != 0 {
                    return bad("n_nodes", "a crossed ring needs an even size of at least 6");
                }
                if self.chord_offset < 1 || self.chord_offset >= self.n_nodes.0 / 2 {
                    return bad("chord_offset", "must be in [1, n_nodes / 2)");
                }
            }
            Family::CliquePath if self.clique_size < 2 => return bad("clique_size", "must be at least 2"),
            Family::Spine if self.spine_len < 1 => return bad("spine_len", "must be at least 1"),
            _ => {}
        }
        Ok(())
    }
}

/// One generated graph with its node data.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub graph: Graph,
    pub features: Matrix,
    pub labels: Option<Vec<usize>>,
    pub target: Option<f64>,
}

/// Each unordered pair independently with probability `p`.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("edge probability {p} outside [0, 1]")));
    }
    let mut r = rng::rng(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    Graph::new(n, &edges)
}

/// Cycle `C_n`.
pub fn ring(n: usize) -> Result<Graph> {
    if n < 3 {
        return Err(Error::Config("a ring needs at least 3 nodes".into()));
    }
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    Graph::new(n, &edges)
}

/// Cycle `C_n` (`n` even) plus crossing chords across the ring.
///
/// With `h = n/2` and offset `c`, every even `i < h` adds the pair of chords
/// `(i, i + h + c)` and `(i + c, i + h)` (indices mod `n`). For `c = 1`
/// consecutive antipodal pairs are linked crosswise, so each chord crosses
/// its partner.
pub fn crossed_ring(n: usize, offset: usize) -> Result<Graph> {
    if n < 6 || n % 2 != 0 {
        return Err(Error::Config("a crossed ring needs an even size of at least 6".into()));
    }
    let h = n / 2;
    if offset < 1 || offset >= h {
        return Err(Error::Config("chord offset must be in [1, n/2)".into()));
    }
    let mut edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    for i in (0..h).step_by(2) {
        edges.push((i, (i + h + offset) % n));
        edges.push(((i + offset) % n, (i + h) % n));
    }
    Graph::new(n, &edges)
}

/// Two copies of `K_m` joined through `path_len` intermediate path nodes.
///
/// Node `m − 1` of the first clique connects to the path, whose last node
/// connects to node `m` (the first node of the second clique).
pub fn clique_path(m: usize, path_len: usize) -> Result<Graph> {
    if m < 2 {
        return Err(Error::Config("clique size must be at least 2".into()));
    }
    let n = 2 * m + path_len;
    let second = m + path_len;
    let mut edges = Vec::new();
    for a in 0..m {
        for b in a + 1..m {
            edges.push((a, b));
            edges.push((second + a, second + b));
        }
    }
    let mut prev = m - 1;
    for p in m..second {
        edges.push((prev, p));
        prev = p;
    }
    edges.push((prev, second));
    Graph::new(n, &edges)
}

/// A path of `s` spine nodes `0..s`, each with `f` private leaves.
///
/// The leaves of spine node `i` are `s + i·f .. s + (i+1)·f`.
pub fn spine(s: usize, f: usize) -> Result<Graph> {
    if s < 1 {
        return Err(Error::Config("spine length must be at least 1".into()));
    }
    let mut edges: Vec<_> = (1..s).map(|i| (i - 1, i)).collect();
    for i in 0..s {
        for l in 0..f {
            edges.push((i, s + i * f + l));
        }
    }
    Graph::new(s + s * f, &edges)
}

/// Labels, graph and features of the heterophilic benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct Heterophilic {
    pub graph: Graph,
    pub labels: Vec<usize>,
    pub features: Matrix,
}

/// Uniform labels; `round(n · avg_degree / 2)` edges, each from repeated
/// uniform pair proposals accepted with probability `p_hetero` when the
/// labels differ and `1 − p_hetero` when they agree. Features are
/// `class_sep · μ_label + ε` with `μ_c, ε ~ N(0, I)`.
pub fn heterophilic(
    n: usize,
    n_classes: usize,
    feature_dim: usize,
    avg_degree: f64,
    p_hetero: f64,
    class_sep: f64,
    seed: u64,
) -> Result<Heterophilic> {
    if n_classes < 2 {
        return Err(Error::Config("n_classes must be at least 2".into()));
    }
    if !(0.0..=1.0).contains(&p_hetero) {
        return Err(Error::Config(format!("p_hetero {p_hetero} outside [0, 1]")));
    }
    let m = math::round_to_usize(n as f64 * avg_degree / 2.0);
    let max_edges = n * n.saturating_sub(1) / 2;
    if m > max_edges {
        return Err(Error::Config("avg_degree too large for the node count".into()));
    }
    let mut r = rng::rng(rng::split(seed, 1));
    let labels: Vec<usize> = (0..n).map(|_| r.random_range(0..n_classes)).collect();

    let mut r = rng::rng(rng::split(seed, 2));
    let mut present = alloc::collections::BTreeSet::new();
    let budget = 1000 * m.max(1) as u64;
    let mut attempts = 0u64;
    while present.len() < m {
        attempts += 1;
        if attempts > budget {
            return Err(Error::Invalid("edge sampler exceeded its attempt budget".into()));
        }
        let a = r.random_range(0..n);
        let b = r.random_range(0..n);
        if a == b {
            continue;
        }
        let p = if labels[a] != labels[b] { p_hetero } else { 1.0 - p_hetero };
        if r.random_bool(p) {
            present.insert((a.min(b), a.max(b)));
        }
    }
    let edges: Vec<_> = present.into_iter().collect();
    let graph = Graph::new(n, &edges)?;

    let mut r = rng::rng(rng::split(seed, 3));
    let means: Vec<f64> = (0..n_classes * feature_dim).map(|_| gauss(&mut r)).collect();
    let mut data = Vec::with_capacity(n * feature_dim);
    for &c in &labels {
        for d in 0..feature_dim {
            data.push(class_sep * means[c * feature_dim + d] + gauss(&mut r));
        }
    }
    Ok(Heterophilic {
        graph,
        labels,
        features: Matrix::features(n, feature_dim, data)?,
    })
}

fn gauss(r: &mut rng::Rng) -> f64 {
    StandardNormal.sample(r)
}

/// `[degree/(n−1), local clustering, N(0, 0.1²) padding…]`, `dim` columns.
pub fn structural_features(g: &Graph, dim: usize, seed: u64) -> Result<Matrix> {
    if dim < 1 {
        return Err(Error::Config("feature_dim must be at least 1".into()));
    }
    let n = g.n_nodes();
    let denom = (n.max(2) - 1) as f64;
    let mut r = rng::rng(seed);
    let mut data = Vec::with_capacity(n * dim);
    for i in 0..n {
        let row = [g.degree(i) as f64 / denom, g.local_clustering(i)];
        for d in 0..dim {
            data.push(if d < 2 { row[d] } else { 0.1 * gauss(&mut r) });
        }
    }
    Matrix::features(n, dim, data)
}

/// Graph-level regression target.
pub fn energy_target(g: &Graph, kind: TargetKind, c1: f64, c2: f64) -> Result<f64> {
    match kind {
        TargetKind::DistEmph => {
            if !g.is_connected() {
                return Err(Error::Disconnected);
            }
            Ok(math::exp(g.average_shortest_path() / c1))
        }
        TargetKind::ClustEmph => Ok(math::ln(1.0 + c2 * g.average_clustering())),
        TargetKind::SpectralDist => abs_eigen_sum(&g.distance_matrix()?),
        TargetKind::SpectralAdj => abs_eigen_sum(&g.adjacency_matrix()),
        TargetKind::None => Err(Error::Config("target kind `none` has no value".into())),
    }
}

fn abs_eigen_sum(m: &Matrix) -> Result<f64> {
    Ok(eigvalsh(m)?.iter().map(|v| math::abs(*v)).sum())
}

/// Instance `index` of a dataset.
pub fn generate_instance(spec: &DatasetSpec, index: usize) -> Result<Instance> {
    spec.validate()?;
    let seed = rng::split(spec.seed, index as u64);
    let mut r = rng::rng(rng::split(seed, 0));
    let (lo, hi) = spec.n_nodes;
    let mut labels = None;
    let mut features = None;
    let graph = match spec.family {
        Family::ErdosRenyi => {
            let n = r.random_range(lo..=hi);
            let (plo, phi) = spec.edge_prob;
            let p = if phi > plo { r.random_range(plo..=phi) } else { plo };
            // distance targets need a connected graph; redraw from derived seeds
            let mut attempt = 0;
            loop {
                let g = erdos_renyi(n, p, rng::split(rng::split(seed, 1), attempt))?;
                if !spec.target.needs_connected() || g.is_connected() {
                    break g;
                }
                attempt += 1;
                if attempt == MAX_REDRAWS {
                    return Err(Error::Disconnected);
                }
            }
        }
        Family::Ring => ring(lo)?,
        Family::CrossedRing => crossed_ring(lo, spec.chord_offset)?,
        Family::CliquePath => clique_path(spec.clique_size, spec.path_len)?,
        Family::Spine => spine(spec.spine_len, spec.leaves_per_node)?,
        Family::Heterophilic => {
            let n = r.random_range(lo..=hi);
            let h = heterophilic(
                n,
                spec.n_classes,
                spec.feature_dim,
                spec.avg_degree,
                spec.p_hetero,
                spec.class_sep,
                rng::split(seed, 1),
            )?;
            labels = Some(h.labels);
            features = Some(h.features);
            h.graph
        }
    };
    let features = match features {
        Some(f) => f,
        None => structural_features(&graph, spec.feature_dim, rng::split(seed, 2))?,
    };
    let target = match spec.target {
        TargetKind::None => None,
        kind => Some(energy_target(&graph, kind, spec.c1, spec.c2)?),
    };
    Ok(Instance {
        graph,
        features,
        labels,
        target,
    })
}

/// All `spec.count` instances in index order.
pub fn generate(spec: &DatasetSpec) -> Result<Vec<Instance>> {
    (0..spec.count).map(|i| generate_instance(spec, i)).collect()
}

/// Expected cross-label edge fraction of [`heterophilic`] given the label
/// counts: proposals differ in label with probability `q`, so accepted edges
/// are cross-label with probability `p q / (p q + (1 − p)(1 − q))`.
pub fn expected_cross_fraction(label_counts: &[usize], p_hetero: f64) -> f64 {
    let n: usize = label_counts.iter().sum();
    let n = n as f64;
    let same: f64 = label_counts.iter().map(|&c| c as f64 * (c as f64 - 1.0)).sum::<f64>() / (n * (n - 1.0));
    let q = 1.0 - same;
    let acc_cross = p_hetero * q;
    let acc_same = (1.0 - p_hetero) * (1.0 - q);
    if acc_cross + acc_same == 0.0 {
        return 0.0;
    }
    acc_cross / (acc_cross + acc_same)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn erdos_renyi_extremes() {
        assert_eq!(erdos_renyi(10, 0.0, 1).unwrap().n_edges(), 0);
        assert_eq!(erdos_renyi(10, 1.0, 1).unwrap().n_edges(), 45);
        assert!(erdos_renyi(10, 1.5, 1).is_err());
    }

    #[test]
    fn erdos_renyi_edge_count_statistics() {
        let (n, p, seeds) = (500usize, 0.2, 30);
        let pairs = (n * (n - 1) / 2) as f64;
        let mean: f64 = (0..seeds)
            .map(|s| erdos_renyi(n, p, s).unwrap().n_edges() as f64)
            .sum::<f64>()
            / seeds as f64;
        let sigma = (pairs * p * (1.0 - p) / seeds as f64).sqrt();
        assert!((mean - p * pairs).abs() < 3.0 * sigma, "{mean}");
    }

    #[test]
    fn fixed_shapes() {
        let r = ring(6).unwrap();
        assert_eq!(r.n_edges(), 6);
        assert!(r.degrees().iter().all(|&d| d == 2));

        let s = spine(5, 3).unwrap();
        assert_eq!(s.n_nodes(), 20);
        assert_eq!(s.degree(2), 5);
        assert_eq!(s.degree(0), 4);
        assert_eq!(s.degree(7), 1);

        let cp = clique_path(4, 3).unwrap();
        assert_eq!(cp.n_edges(), 2 * 6 + 4);
        assert!(cp.is_connected());
        assert_eq!(cp.n_nodes(), 11);

        let cr = crossed_ring(8, 1).unwrap();
        // 8 ring edges plus two chords for each of i = 0, 2
        assert_eq!(cr.n_edges(), 12);
        assert!(cr.has_edge(0, 5) && cr.has_edge(1, 4));
        assert!(crossed_ring(7, 1).is_err());
        assert!(clique_path(1, 2).is_err());
    }

    #[test]
    fn heterophilic_full_acceptance_has_no_same_label_edges() {
        let h = heterophilic(300, 3, 4, 6.0, 1.0, 1.0, 5).unwrap();
        assert_eq!(h.graph.n_edges(), 900);
        assert!(h.graph.edges().iter().all(|&(a, b)| h.labels[a] != h.labels[b]));
    }

    fn cross_fraction(h: &Heterophilic) -> f64 {
        let cross = h.graph.edges().iter().filter(|&&(a, b)| h.labels[a] != h.labels[b]).count();
        cross as f64 / h.graph.n_edges() as f64
    }

    fn counts(labels: &[usize], c: usize) -> Vec<usize> {
        let mut out = vec![0; c];
        for &l in labels {
            out[l] += 1;
        }
        out
    }

    #[test]
    fn heterophilic_cross_fraction_matches_acceptance_model() {
        for (n, tol) in [(500usize, 0.05), (2000, 0.03)] {
            let h = heterophilic(n, 7, 4, 10.0, 0.8, 1.0, 11).unwrap();
            let expected = expected_cross_fraction(&counts(&h.labels, 7), 0.8);
            let got = cross_fraction(&h);
            assert!((got - expected).abs() < tol, "n={n}: {got} vs {expected}");
        }
        // closed form for balanced labels: q = 6/7
        let q: f64 = 6.0 / 7.0;
        let closed = 0.8 * q / (0.8 * q + 0.2 * (1.0 - q));
        assert!((expected_cross_fraction(&[1000; 7], 0.8) - closed).abs() < 1e-3);
    }

    #[test]
    fn heterophilic_labels_are_uniform() {
        let n = 2000;
        let h = heterophilic(n, 7, 2, 4.0, 0.8, 1.0, 3).unwrap();
        let p = 1.0 / 7.0;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for c in counts(&h.labels, 7) {
            assert!((c as f64 - n as f64 * p).abs() < 3.0 * sigma);
        }
    }

    #[test]
    fn targets() {
        let k3 = Graph::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let v = energy_target(&k3, TargetKind::ClustEmph, 2.0, 10.0).unwrap();
        assert!((v - 11f64.ln()).abs() < 1e-12);
        let dyad = Graph::new(2, &[(0, 1)]).unwrap();
        assert!((energy_target(&dyad, TargetKind::SpectralAdj, 2.0, 10.0).unwrap() - 2.0).abs() < 1e-12);
        let c6 = ring(6).unwrap();
        assert!((energy_target(&c6, TargetKind::SpectralAdj, 2.0, 10.0).unwrap() - 8.0).abs() < 1e-10);
        // path of 3: average distance (1+1+2)/3
        let p3 = Graph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let d = energy_target(&p3, TargetKind::DistEmph, 2.0, 10.0).unwrap();
        assert!((d - (4.0f64 / 6.0).exp()).abs() < 1e-12);
        let split = Graph::new(4, &[(0, 1), (2, 3)]).unwrap();
        assert!(matches!(
            energy_target(&split, TargetKind::SpectralDist, 2.0, 10.0),
            Err(Error::Disconnected)
        ));
    }

    #[test]
    fn generation_is_deterministic_and_validated() {
        let mut spec = DatasetSpec::new(Family::ErdosRenyi);
        spec.count = 3;
        spec.n_nodes = (20, 30);
        spec.target = TargetKind::ClustEmph;
        spec.seed = 9;
        let a = generate(&spec).unwrap();
        assert_eq!(a, generate(&spec).unwrap());
        assert!(a.iter().all(|i| i.target.is_some() && i.features.cols() == 8));
        assert_ne!(a[0].graph, a[1].graph);
        spec.edge_prob = (0.1, 1.2);
        let err = spec.validate().unwrap_err();
        assert!(alloc::format!("{err}").contains("edge_prob"));
    }

    #[test]
    fn features_have_structure_columns() {
        let g = ring(5).unwrap();
        let f = structural_features(&g, 4, 0).unwrap();
        assert_eq!(f[(0, 0)], 0.5);
        assert_eq!(f[(0, 1)], 0.0);
        assert!(f[(0, 2)] != 0.0);
    }
}
