//! Immutable undirected graphs in compressed adjacency form.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;
use crate::matrix::Matrix;
use crate::{Error, Result};

/// Marks an unreachable pair in [`Graph::shortest_path_lengths`].
pub const UNREACHABLE: u32 = u32::MAX;

/// Undirected simple graph. Node ids are dense `0..n_nodes`.
///
/// Edges are stored once as `(u, v)` with `u < v`, sorted; the position in
/// that list is the edge id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LaplacianKind {
    /// `D − A`
    Unnormalized,
    /// `I − D^{-1/2} A D^{-1/2}`
    SymmetricNormalized,
    /// `D^{-1/2} A D^{-1/2}`
    NormalizedAdjacency,
}

impl Graph {
    /// Builds a graph from an edge list. Duplicate and reversed pairs collapse
    /// into one edge.
    pub fn new(n_nodes: usize, edge_list: &[(usize, usize)]) -> Result<Self> {
        let mut edges = Vec::with_capacity(edge_list.len());
        for &(a, b) in edge_list {
            for node in [a, b] {
                if node >= n_nodes {
                    return Err(Error::NodeOutOfRange { node, n_nodes });
                }
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            edges.push((a.min(b), a.max(b)));
        }
        edges.sort_unstable();
        edges.dedup();

        let mut degree = vec![0usize; n_nodes];
        for &(a, b) in &edges {
            degree[a] += 1;
            degree[b] += 1;
        }
        let mut offsets = Vec::with_capacity(n_nodes + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets.clone();
        let mut neighbors = vec![0usize; offsets[n_nodes]];
        for &(a, b) in &edges {
            neighbors[fill[a]] = b;
            fill[a] += 1;
            neighbors[fill[b]] = a;
            fill[b] += 1;
        }
        for i in 0..n_nodes {
            neighbors[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        Ok(Self {
            n_nodes,
            edges,
            offsets,
            neighbors,
        })
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    #[inline]
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Canonical sorted edge list, `u < v`.
    #[inline]
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Neighbors of `i`, ascending.
    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n_nodes).map(|i| self.degree(i)).collect()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n_nodes).map(|i| self.degree(i)).max().unwrap_or(0)
    }

    #[inline]
    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a < self.n_nodes && b < self.n_nodes && self.neighbors(a).binary_search(&b).is_ok()
    }

    /// Dense edge id of the unordered pair, if it is an edge.
    pub fn edge_id(&self, a: usize, b: usize) -> Option<usize> {
        self.edges.binary_search(&(a.min(b), a.max(b))).ok()
    }

    /// Relabels nodes: node `i` becomes `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Graph> {
        if perm.len() != self.n_nodes {
            return Err(Error::Dimension(format!(
                "permutation of length {} for {} nodes",
                perm.len(),
                self.n_nodes
            )));
        }
        let edges: Vec<_> = self.edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
        Graph::new(self.n_nodes, &edges)
    }

    pub fn adjacency_matrix(&self) -> Matrix {
        let mut a = Matrix::zeros(self.n_nodes, self.n_nodes);
        for &(u, v) in &self.edges {
            a[(u, v)] = 1.0;
            a[(v, u)] = 1.0;
        }
        a
    }

    /// Dense Laplacian of the requested kind. `weights`, when given, holds one
    /// value per edge id and replaces the unit adjacency entries.
    pub fn laplacian(&self, kind: LaplacianKind, weights: Option<&[f64]>) -> Result<Matrix> {
        if let Some(w) = weights {
            if w.len() != self.edges.len() {
                return Err(Error::Dimension(format!(
                    "{} weights for {} edges",
                    w.len(),
                    self.edges.len()
                )));
            }
        }
        let n = self.n_nodes;
        let weight = |e: usize| weights.map_or(1.0, |w| w[e]);
        let mut deg = vec![0.0; n];
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            deg[u] += weight(e);
            deg[v] += weight(e);
        }
        let mut m = Matrix::zeros(n, n);
        match kind {
            LaplacianKind::Unnormalized => {
                for (e, &(u, v)) in self.edges.iter().enumerate() {
                    m[(u, v)] = -weight(e);
                    m[(v, u)] = -weight(e);
                }
                for (i, d) in deg.iter().enumerate() {
                    m[(i, i)] = *d;
                }
            }
            LaplacianKind::SymmetricNormalized | LaplacianKind::NormalizedAdjacency => {
                let inv_sqrt: Vec<f64> = deg
                    .iter()
                    .map(|&d| if d > 0.0 { 1.0 / math::sqrt(d) } else { 0.0 })
                    .collect();
                let sign = if kind == LaplacianKind::SymmetricNormalized {
                    -1.0
                } else {
                    1.0
                };
                for (e, &(u, v)) in self.edges.iter().enumerate() {
                    let a = sign * weight(e) * inv_sqrt[u] * inv_sqrt[v];
                    m[(u, v)] = a;
                    m[(v, u)] = a;
                }
                if kind == LaplacianKind::SymmetricNormalized {
                    for (i, d) in deg.iter().enumerate() {
                        if *d > 0.0 {
                            m[(i, i)] = 1.0;
                        }
                    }
                }
            }
        }
        Ok(m)
    }

    /// Hop distances from `source` by BFS.
    pub fn bfs(&self, source: usize) -> Vec<u32> {
        let mut dist = vec![UNREACHABLE; self.n_nodes];
        let mut queue = VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            for &v in self.neighbors(u) {
                if dist[v] == UNREACHABLE {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// All-pairs hop distances, row-major `n × n`. Unreachable pairs hold
    /// [`UNREACHABLE`].
    pub fn shortest_path_lengths(&self) -> Vec<u32> {
        let n = self.n_nodes;
        let mut out = Vec::with_capacity(n * n);
        for s in 0..n {
            out.extend(self.bfs(s));
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.n_nodes == 0 || self.bfs(0).iter().all(|&d| d != UNREACHABLE)
    }

    /// Mean hop distance over reachable ordered pairs `i ≠ j`.
    pub fn average_shortest_path(&self) -> f64 {
        let n = self.n_nodes;
        let (mut sum, mut count) = (0u64, 0u64);
        for s in 0..n {
            for (t, &d) in self.bfs(s).iter().enumerate() {
                if t != s && d != UNREACHABLE {
                    sum += d as u64;
                    count += 1;
                }
            }
        }
        if count == 0 {
            0.0
        } else {
            sum as f64 / count as f64
        }
    }

    /// Dense matrix of hop distances, for connected graphs.
    pub fn distance_matrix(&self) -> Result<Matrix> {
        let n = self.n_nodes;
        let d = self.shortest_path_lengths();
        if d.contains(&UNREACHABLE) {
            return Err(Error::Disconnected);
        }
        Matrix::from_vec(n, n, d.into_iter().map(f64::from).collect())
    }

    /// Number of triangles through node `i`.
    pub fn triangles_at(&self, i: usize) -> usize {
        let nb = self.neighbors(i);
        let mut t = 0;
        for (a, &u) in nb.iter().enumerate() {
            for &v in &nb[a + 1..] {
                if self.has_edge(u, v) {
                    t += 1;
                }
            }
        }
        t
    }

    /// Number of common neighbors of `a` and `b`.
    pub fn common_neighbors(&self, a: usize, b: usize) -> usize {
        let (x, y) = (self.neighbors(a), self.neighbors(b));
        let (mut i, mut j, mut c) = (0, 0, 0);
        while i < x.len() && j < y.len() {
            match x[i].cmp(&y[j]) {
                core::cmp::Ordering::Less => i += 1,
                core::cmp::Ordering::Greater => j += 1,
                core::cmp::Ordering::Equal => {
                    c += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        c
    }

    pub fn local_clustering(&self, i: usize) -> f64 {
        let d = self.degree(i);
        if d < 2 {
            return 0.0;
        }
        2.0 * self.triangles_at(i) as f64 / (d * (d - 1)) as f64
    }

    /// Mean local clustering coefficient; nodes with degree < 2 count as 0.
    pub fn average_clustering(&self) -> f64 {
        if self.n_nodes == 0 {
            return 0.0;
        }
        (0..self.n_nodes).map(|i| self.local_clustering(i)).sum::<f64>() / self.n_nodes as f64
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::spectral::eigh;
    use proptest::prelude::*;
    use std::vec::Vec;

    fn k3() -> Graph {
        Graph::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn build_examples() {
        assert_eq!(k3().degrees(), vec![2, 2, 2]);
        let path = Graph::new(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(path.degrees(), vec![1, 2, 1]);
        let dup = Graph::new(2, &[(0, 1), (1, 0)]).unwrap();
        assert_eq!(dup.n_edges(), 1);
        assert_eq!(dup.degrees(), vec![1, 1]);
    }

    #[test]
    fn build_rejects_bad_input() {
        assert_eq!(
            Graph::new(2, &[(0, 2)]),
            Err(Error::NodeOutOfRange { node: 2, n_nodes: 2 })
        );
        assert_eq!(Graph::new(2, &[(1, 1)]), Err(Error::SelfLoop(1)));
    }

    #[test]
    fn edge_ids_follow_sorted_pairs() {
        let g = Graph::new(4, &[(3, 2), (1, 0), (2, 0)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 2), (2, 3)]);
        assert_eq!(g.edge_id(3, 2), Some(2));
        assert_eq!(g.edge_id(1, 3), None);
    }

    #[test]
    fn laplacian_examples() {
        let l = k3().laplacian(LaplacianKind::Unnormalized, None).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(l[(i, j)], if i == j { 2.0 } else { -1.0 });
            }
        }
        let ln = k3().laplacian(LaplacianKind::SymmetricNormalized, None).unwrap();
        let ev = eigh(&ln).unwrap().eigenvalues;
        for (a, b) in ev.iter().zip([0.0, 1.5, 1.5]) {
            assert!((a - b).abs() < 1e-12, "{ev:?}");
        }
        let e = Graph::new(2, &[(0, 1)]).unwrap();
        let l2 = e.laplacian(LaplacianKind::SymmetricNormalized, None).unwrap();
        assert_eq!(l2.as_slice(), &[1.0, -1.0, -1.0, 1.0]);
        let a2 = e.laplacian(LaplacianKind::NormalizedAdjacency, None).unwrap();
        assert_eq!(a2.as_slice(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn isolated_nodes_have_zero_normalized_rows() {
        let g = Graph::new(3, &[(0, 1)]).unwrap();
        let l = g.laplacian(LaplacianKind::SymmetricNormalized, None).unwrap();
        assert!(l.row(2).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn weighted_laplacian_uses_edge_weights() {
        let g = Graph::new(3, &[(0, 1), (0, 2)]).unwrap();
        let l = g.laplacian(LaplacianKind::Unnormalized, Some(&[2.0, 3.0])).unwrap();
        assert_eq!(l.row(0), &[5.0, -2.0, -3.0]);
        assert!(g.laplacian(LaplacianKind::Unnormalized, Some(&[1.0])).is_err());
    }

    #[test]
    fn distance_examples() {
        let path = Graph::new(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(path.shortest_path_lengths()[2], 2);
        let d = k3().shortest_path_lengths();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(d[i * 3 + j], u32::from(i != j));
            }
        }
        let ring: Vec<_> = (0..6).map(|i| (i, (i + 1) % 6)).collect();
        let ring = Graph::new(6, &ring).unwrap();
        assert_eq!(ring.shortest_path_lengths()[3], 3);
        let split = Graph::new(3, &[(0, 1)]).unwrap();
        assert_eq!(split.shortest_path_lengths()[2], UNREACHABLE);
        assert!(split.distance_matrix().is_err());
        assert_eq!(split.average_shortest_path(), 1.0);
    }

    /// Counts triangles at `i` over all node triples.
    fn brute_clustering(g: &Graph) -> f64 {
        let n = g.n_nodes();
        let mut total = 0.0;
        for i in 0..n {
            let d = g.degree(i);
            if d < 2 {
                continue;
            }
            let mut t = 0;
            for a in 0..n {
                for b in (a + 1)..n {
                    if a != i && b != i && g.has_edge(i, a) && g.has_edge(i, b) && g.has_edge(a, b) {
                        t += 1;
                    }
                }
            }
            total += 2.0 * t as f64 / (d * (d - 1)) as f64;
        }
        total / n as f64
    }

    #[test]
    fn clustering_examples() {
        assert_eq!(k3().average_clustering(), 1.0);
        let star = Graph::new(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        assert_eq!(star.average_clustering(), 0.0);
        let k4_minus = Graph::new(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]).unwrap();
        let oracle = brute_clustering(&k4_minus);
        assert!((oracle - 5.0 / 6.0).abs() < 1e-15);
        assert!((k4_minus.average_clustering() - oracle).abs() < 1e-15);
    }

    pub(crate) fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
        (2..=max_n).prop_flat_map(|n| {
            proptest::collection::vec((0..n, 0..n), 0..(n * 3)).prop_map(move |pairs| {
                let e: Vec<_> = pairs.into_iter().filter(|(a, b)| a != b).collect();
                Graph::new(n, &e).unwrap()
            })
        })
    }

    fn arb_graph_perm(max_n: usize) -> impl Strategy<Value = (Graph, Vec<usize>)> {
        arb_graph(max_n).prop_flat_map(|g| {
            let n = g.n_nodes();
            (Just(g), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn structure_invariants(g in arb_graph(24)) {
            for i in 0..g.n_nodes() {
                prop_assert_eq!(g.degree(i), g.neighbors(i).len());
                for &j in g.neighbors(i) {
                    prop_assert!(j != i);
                    prop_assert!(g.neighbors(j).contains(&i));
                }
            }
        }

        #[test]
        fn unnormalized_rows_sum_to_zero(g in arb_graph(24)) {
            let l = g.laplacian(LaplacianKind::Unnormalized, None).unwrap();
            for i in 0..g.n_nodes() {
                prop_assert_eq!(l.row(i).iter().sum::<f64>(), 0.0);
            }
        }

        #[test]
        fn normalized_spectrum_in_unit_interval(g in arb_graph(64)) {
            let l = g.laplacian(LaplacianKind::SymmetricNormalized, None).unwrap();
            let ev = eigh(&l).unwrap().eigenvalues;
            prop_assert!(ev[0] > -1e-10);
            prop_assert!(*ev.last().unwrap() < 2.0 + 1e-10);
        }

        #[test]
        fn laplacian_is_permutation_conjugate((g, perm) in arb_graph_perm(20)) {
            let pg = g.permute(&perm).unwrap();
            for kind in [LaplacianKind::Unnormalized, LaplacianKind::SymmetricNormalized, LaplacianKind::NormalizedAdjacency] {
                let l = g.laplacian(kind, None).unwrap();
                let pl = pg.laplacian(kind, None).unwrap();
                for i in 0..g.n_nodes() {
                    for j in 0..g.n_nodes() {
                        prop_assert_eq!(pl[(perm[i], perm[j])], l[(i, j)]);
                    }
                }
            }
        }
    }
}
