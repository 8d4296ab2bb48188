//! Independent reference implementations used by the integration and
//! acceptance tests. Everything here is dense and written for clarity, not
//! speed, and shares no code path with the engine beyond `Graph` and `Matrix`
//! containers and the symmetric eigensolver.
#![allow(dead_code)]

use manybody_core::curvature::WeightMode;
use manybody_core::model::{Head, ModelConfig, Params};
use manybody_core::spectral::eigh;
use manybody_core::{Graph, LaplacianKind, Matrix};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdős–Rényi graph drawn with the test's own generator.
pub fn random_graph(n: usize, p: f64, r: &mut ChaCha8Rng) -> Graph {
    let mut e = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if r.random::<f64>() < p {
                e.push((a, b));
            }
        }
    }
    Graph::new(n, &e).unwrap()
}

pub fn random_matrix(rows: usize, cols: usize, r: &mut ChaCha8Rng) -> Matrix {
    let data = (0..rows * cols).map(|_| r.random_range(-1.0..1.0)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

pub fn random_perm(n: usize, r: &mut ChaCha8Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(r);
    p
}

fn dense_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let m = b[0].len();
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for k in 0..b.len() {
            for j in 0..m {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// `2L/λ − I` for a dense `L`; `−I` when `λ = 0`.
fn shifted(l: &[Vec<f64>], lambda: f64) -> Vec<Vec<f64>> {
    let n = l.len();
    let s = if lambda > 0.0 { 2.0 / lambda } else { 0.0 };
    (0..n)
        .map(|i| (0..n).map(|j| s * l[i][j] - if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// `Σ_k θ_k T_{k+start}(M)` as a dense matrix, via the matrix recurrence.
fn dense_chebyshev(m: &[Vec<f64>], theta: &[f64], start: usize) -> Vec<Vec<f64>> {
    let n = m.len();
    let eye: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut terms = vec![eye, m.to_vec()];
    while terms.len() < start + theta.len() {
        let k = terms.len();
        let next = dense_mul(m, &terms[k - 1]);
        let t: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| 2.0 * next[i][j] - terms[k - 2][i][j]).collect())
            .collect();
        terms.push(t);
    }
    let mut out = vec![vec![0.0; n]; n];
    for (c, t) in theta.iter().zip(&terms[start..]) {
        for i in 0..n {
            for j in 0..n {
                out[i][j] += c * t[i][j];
            }
        }
    }
    out
}

fn lambda_max(l: &Matrix) -> f64 {
    if l.rows() == 0 {
        return 0.0;
    }
    eigh(l).unwrap().eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Two-body message through the dense polynomial of the global Laplacian.
pub fn dense_two_body(g: &Graph, h: &Matrix, theta2: &[f64]) -> Matrix {
    let l = g.laplacian(LaplacianKind::SymmetricNormalized, None).unwrap();
    let lam = if g.n_edges() == 0 { 0.0 } else { lambda_max(&l) };
    let p = dense_chebyshev(&shifted(&to_rows(&l), lam), theta2, 0);
    Matrix::from_rows(&dense_mul(&p, &to_rows(h))).unwrap()
}

/// Same message through the eigendecomposition, `V g(Λ̃) Vᵀ H`.
pub fn spectral_two_body(g: &Graph, h: &Matrix, theta2: &[f64]) -> Matrix {
    let l = g.laplacian(LaplacianKind::SymmetricNormalized, None).unwrap();
    let d = eigh(&l).unwrap();
    let lam = d.eigenvalues.last().copied().unwrap_or(0.0);
    let n = g.n_nodes();
    let filt: Vec<f64> = d
        .eigenvalues
        .iter()
        .map(|&e| {
            let x = if lam > 0.0 { 2.0 * e / lam - 1.0 } else { -1.0 };
            theta2
                .iter()
                .enumerate()
                .map(|(k, c)| c * (k as f64 * x.clamp(-1.0, 1.0).acos()).cos())
                .sum()
        })
        .collect();
    let mut op = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            op[i][j] = (0..n).map(|m| d.eigenvectors[(i, m)] * filt[m] * d.eigenvectors[(j, m)]).sum();
        }
    }
    Matrix::from_rows(&dense_mul(&op, &to_rows(h))).unwrap()
}

/// Brute-force Balanced Forman curvature per edge id: counts every
/// chord-free 4-cycle `i–j–w–k` by scanning all node pairs.
pub fn brute_curvature(g: &Graph) -> Vec<f64> {
    let n = g.n_nodes();
    let adj = |a: usize, b: usize| g.has_edge(a, b);
    g.edges()
        .iter()
        .map(|&(i, j)| {
            let di = (0..n).filter(|&x| adj(i, x)).count() as f64;
            let dj = (0..n).filter(|&x| adj(j, x)).count() as f64;
            let tri = (0..n).filter(|&x| adj(i, x) && adj(j, x)).count() as f64;
            let mut per_k = vec![0usize; n];
            let mut per_w = vec![0usize; n];
            for k in 0..n {
                for w in 0..n {
                    let distinct = k != i && k != j && w != i && w != j && k != w;
                    if distinct && adj(i, k) && adj(k, w) && adj(w, j) && !adj(i, w) && !adj(j, k) {
                        per_k[k] += 1;
                        per_w[w] += 1;
                    }
                }
            }
            let sq = per_k.iter().filter(|&&c| c > 0).count() + per_w.iter().filter(|&&c| c > 0).count();
            let gamma = per_k.iter().chain(&per_w).copied().max().unwrap_or(0);
            let (dmax, dmin) = (di.max(dj), di.min(dj));
            let mut r = 2.0 / di + 2.0 / dj - 2.0 + 2.0 * tri / dmax + tri / dmin;
            if gamma > 0 {
                r += sq as f64 / (gamma as f64 * dmax);
            }
            r
        })
        .collect()
}

fn combinations(items: &[usize], r: usize) -> Vec<Vec<usize>> {
    if r == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        for mut rest in combinations(&items[i + 1..], r - 1) {
            rest.insert(0, x);
            out.push(rest);
        }
    }
    out
}

fn weight(mode: WeightMode, ricci: f64) -> f64 {
    match mode {
        WeightMode::Literal => ricci,
        WeightMode::ShiftedPositive => 2.0 - ricci,
        WeightMode::SignRounded => {
            if ricci > 0.0 {
                1.0
            } else if ricci < 0.0 {
                -1.0
            } else {
                0.0
            }
        }
        WeightMode::UnweightedLearnable => 1.0,
    }
}

/// Higher-order message of every node: for each order, the exhaustive sum
/// over stars (leaves ascending) of the center row of the dense filter
/// `Σ θ_k T_k(2L/λ − I)` on the weighted star Laplacian, then the product
/// over the orders present at the node.
pub fn dense_higher_order(g: &Graph, ricci: &[f64], mode: WeightMode, h: &Matrix, theta_k: &[Vec<f64>], nu: usize) -> Matrix {
    let n = g.n_nodes();
    let d = h.cols();
    let mut y = Matrix::zeros(n, d);
    for i in 0..n {
        let mut acc: Option<Vec<f64>> = None;
        for k in 3..=nu {
            let stars = combinations(g.neighbors(i), k - 1);
            if stars.is_empty() {
                continue;
            }
            let mut sum = vec![0.0; d];
            for leaves in stars {
                let mut l = vec![vec![0.0; k]; k];
                for (a, &leaf) in leaves.iter().enumerate() {
                    let w = weight(mode, ricci[g.edge_id(i, leaf).unwrap()]);
                    l[0][0] += w;
                    l[a + 1][a + 1] += w;
                    l[0][a + 1] -= w;
                    l[a + 1][0] -= w;
                }
                let lam = lambda_max(&Matrix::from_rows(&l).unwrap());
                if lam == 0.0 {
                    continue;
                }
                let f = dense_chebyshev(&shifted(&l, lam), &theta_k[k - 3], 1);
                let nodes: Vec<usize> = std::iter::once(i).chain(leaves).collect();
                for (a, &node) in nodes.iter().enumerate() {
                    for c in 0..d {
                        sum[c] += f[0][a] * h[(node, c)];
                    }
                }
            }
            acc = Some(match acc {
                None => sum,
                Some(prev) => prev.iter().zip(&sum).map(|(a, b)| a * b).collect(),
            });
        }
        if let Some(v) = acc {
            y.row_mut(i).copy_from_slice(&v);
        }
    }
    y
}

/// Full model through the dense oracles: projection, residual layers, head.
/// Handles exhaustive enumeration with sum aggregation only.
pub fn dense_forward(g: &Graph, ricci: &[f64], config: &ModelConfig, params: &Params, x: &Matrix) -> (Matrix, Matrix) {
    let mut h = matmul_t(x, &params.input);
    for layer in &params.layers {
        let xm = dense_two_body(g, &h, &layer.theta2);
        let mut next = h.clone();
        add(&mut next, &matmul_t(&xm, &layer.w_x));
        if let Some(wy) = &layer.w_y {
            let ym = dense_higher_order(g, ricci, config.weight_mode, &h, &layer.theta_k, config.nu);
            add(&mut next, &matmul_t(&ym, wy));
        }
        h = next;
    }
    let out = match config.head {
        Head::GraphRegression => {
            let mut s = params.head_b[0];
            for i in 0..h.rows() {
                for c in 0..h.cols() {
                    s += params.head_w[(0, c)] * h[(i, c)];
                }
            }
            Matrix::from_vec(1, 1, vec![s]).unwrap()
        }
        Head::NodeClassification { n_classes } => {
            let mut o = matmul_t(&h, &params.head_w);
            for i in 0..o.rows() {
                for c in 0..n_classes {
                    o[(i, c)] += params.head_b[c];
                }
            }
            o
        }
    };
    (h, out)
}

fn matmul_t(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.rows(), b.rows());
    for i in 0..a.rows() {
        for j in 0..b.rows() {
            out[(i, j)] = (0..a.cols()).map(|k| a[(i, k)] * b[(j, k)]).sum();
        }
    }
    out
}

fn add(a: &mut Matrix, b: &Matrix) {
    for (x, y) in a.as_mut_slice().iter_mut().zip(b.as_slice()) {
        *x += y;
    }
}

/// Central-difference gradient of `loss` with respect to every flattened parameter.
pub fn fd_gradient(params: &Params, eps: f64, mut loss: impl FnMut(&Params) -> f64) -> Vec<f64> {
    let base = params.flatten();
    let mut p = params.clone();
    let mut out = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        let mut v = base.clone();
        v[i] = base[i] + eps;
        p.assign_flat(&v).unwrap();
        let plus = loss(&p);
        v[i] = base[i] - eps;
        p.assign_flat(&v).unwrap();
        let minus = loss(&p);
        out.push((plus - minus) / (2.0 * eps));
    }
    out
}

/// Relative error with an absolute floor for entries that are zero on both sides.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Hop distances by Floyd–Warshall.
pub fn hop_distances(g: &Graph) -> Vec<Vec<usize>> {
    let n = g.n_nodes();
    let inf = usize::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for i in 0..n {
        d[i][i] = 0;
    }
    for &(a, b) in g.edges() {
        d[a][b] = 1;
        d[b][a] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}
