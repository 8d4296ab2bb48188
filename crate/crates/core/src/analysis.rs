//! Dirichlet energy, the layer-depth energy bound, per-order energies and
//! small statistics used by the benchmark reports.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::graph::{Graph, LaplacianKind};
use crate::math;
use crate::matrix::Matrix;
use crate::model::{GraphContext, LayerCache, ModelConfig, Params};
use crate::{Error, Result};

/// Floor applied before taking logarithms of energies.
pub const LOG_FLOOR: f64 = 1e-12;

/// `Σ_{(i,j)∈E} ‖h_i/√d_i − h_j/√d_j‖²`.
pub fn dirichlet_energy(g: &Graph, h: &Matrix) -> Result<f64> {
    check_rows(g, h)?;
    let mut total = 0.0;
    for &(i, j) in g.edges() {
        let si = 1.0 / math::sqrt(g.degree(i) as f64);
        let sj = 1.0 / math::sqrt(g.degree(j) as f64);
        for (a, b) in h.row(i).iter().zip(h.row(j)) {
            let d = a * si - b * sj;
            total += d * d;
        }
    }
    Ok(total)
}

/// `Tr(Hᵀ 𝓛 H)` with the dense symmetric normalized Laplacian.
pub fn dirichlet_energy_trace(g: &Graph, h: &Matrix) -> Result<f64> {
    check_rows(g, h)?;
    let l = g.laplacian(LaplacianKind::SymmetricNormalized, None)?;
    Ok(l.matmul(h)?.frob_dot(h))
}

fn check_rows(g: &Graph, h: &Matrix) -> Result<()> {
    if h.rows() != g.n_nodes() {
        return Err(Error::Dimension(alloc::format!(
            "{} feature rows for {} nodes",
            h.rows(),
            g.n_nodes()
        )));
    }
    Ok(())
}

/// `ν · C(d_max, ν − 1)`, the per-layer growth factor of order `ν` in the bound.
pub fn bound_factor(nu: usize, d_max: usize) -> f64 {
    nu as f64 * math::binomial(d_max, nu - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub observed_energy: f64,
    pub bound_value: f64,
    pub satisfied: bool,
}

impl BoundReport {
    /// `observed / bound`, 0 when both vanish.
    pub fn ratio(&self) -> f64 {
        if self.bound_value > 0.0 {
            self.observed_energy / self.bound_value
        } else if self.observed_energy > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }
}

/// Energy bound from the raw constants:
/// `λ_max · N · (Π_{ν'=2..ν} (ν' C(d_max, ν'−1))^t · Π_t w_t · h)²`.
pub fn bound_value(lambda_max: f64, n_nodes: usize, d_max: usize, nu: usize, layer_bounds: &[f64], h: f64) -> f64 {
    let t = layer_bounds.len() as f64;
    let mut inner = h;
    for v in 2..=nu {
        inner *= math::pow(bound_factor(v, d_max), t);
    }
    for w in layer_bounds {
        inner *= w;
    }
    lambda_max * n_nodes as f64 * inner * inner
}

/// Bound for `params` on `ctx`, with `w_t` the largest parameter magnitude of
/// layer `t` and `h` the largest magnitude of the layer-0 features `h0`.
pub fn energy_bound(
    ctx: &GraphContext,
    config: &ModelConfig,
    params: &Params,
    h0_bound: f64,
    observed_energy: f64,
) -> BoundReport {
    let w: Vec<f64> = (0..params.layers.len()).map(|t| params.layer_max_abs(t)).collect();
    let bound = bound_value(
        ctx.lambda_max,
        ctx.n_nodes(),
        ctx.graph.max_degree(),
        config.nu,
        &w,
        h0_bound,
    );
    BoundReport {
        observed_energy,
        bound_value: bound,
        satisfied: observed_energy <= bound,
    }
}

/// How per-layer energies are reduced to one value per order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerAveraging {
    /// Mean over layers of each layer's energy.
    #[default]
    MeanOfEnergies,
    /// Energy of the mean component over layers.
    EnergyOfMean,
}

/// Energy of one order's message component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderEnergy {
    pub k: usize,
    pub energy: f64,
    pub log_energy: f64,
}

/// Dirichlet energy of the two-body message (`k = 2`) and of every per-order
/// motif sum (`k ≥ 3`), reduced over layers.
pub fn per_order_energy(g: &Graph, caches: &[LayerCache], averaging: LayerAveraging) -> Result<Vec<OrderEnergy>> {
    if caches.is_empty() {
        return Err(Error::MissingCache("no layer intermediates".into()));
    }
    let n_orders = caches[0].orders.len();
    let mut out = Vec::with_capacity(n_orders + 1);
    for j in 0..=n_orders {
        let energy = match averaging {
            LayerAveraging::MeanOfEnergies => {
                let mut sum = 0.0;
                for c in caches {
                    sum += dirichlet_energy(g, component(j, c))?;
                }
                sum / caches.len() as f64
            }
            LayerAveraging::EnergyOfMean => {
                let first = component(j, &caches[0]);
                let mut mean = Matrix::zeros(first.rows(), first.cols());
                for c in caches {
                    mean.add_assign(component(j, c));
                }
                mean.scale(1.0 / caches.len() as f64);
                dirichlet_energy(g, &mean)?
            }
        };
        out.push(OrderEnergy {
            k: j + 2,
            energy,
            log_energy: log_energy(energy),
        });
    }
    Ok(out)
}

fn component(j: usize, c: &LayerCache) -> &Matrix {
    if j == 0 {
        &c.x
    } else {
        &c.orders[j - 1]
    }
}

pub fn log_energy(e: f64) -> f64 {
    math::ln(e.max(LOG_FLOOR))
}

/// Least-squares line through `(x, y)` with its coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Dimension("linear fit needs at least two matched points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Invalid("linear fit needs distinct x values".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let e = b - (slope * a + intercept);
            e * e
        })
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(LinearFit { slope, intercept, r2 })
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, math::sqrt(var))
}

/// Median of the means of `groups` consecutive, equally sized chunks.
pub fn median_of_means(xs: &[f64], groups: usize) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let groups = groups.clamp(1, xs.len());
    let size = xs.len() / groups;
    let mut means: Vec<f64> = (0..groups)
        .map(|g| {
            let end = if g + 1 == groups { xs.len() } else { (g + 1) * size };
            let chunk = &xs[g * size..end];
            chunk.iter().sum::<f64>() / chunk.len() as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let m = means.len();
    if m % 2 == 1 {
        means[m / 2]
    } else {
        0.5 * (means[m / 2 - 1] + means[m / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::binomial;
    use proptest::prelude::*;
    use std::vec;
    use std::vec::Vec;

    #[test]
    fn energy_examples() {
        let dyad = Graph::new(2, &[(0, 1)]).unwrap();
        let h = Matrix::from_vec(2, 1, vec![1.0, -1.0]).unwrap();
        assert_eq!(dirichlet_energy(&dyad, &h).unwrap(), 4.0);
        let c5 = Graph::new(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]).unwrap();
        let ones = Matrix::filled(5, 3, 1.7);
        assert_eq!(dirichlet_energy(&c5, &ones).unwrap(), 0.0);
        assert!(dirichlet_energy_trace(&c5, &ones).unwrap().abs() < 1e-12);
    }

    #[test]
    fn k3_bound_is_72() {
        let k3 = Graph::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let lmax = crate::spectral::eigh(&k3.laplacian(LaplacianKind::SymmetricNormalized, None).unwrap())
            .unwrap()
            .eigenvalues[2];
        let b = bound_value(lmax, 3, k3.max_degree(), 2, &[1.0], 1.0);
        assert!((b - 72.0).abs() < 1e-9, "{b}");
        let lonely = Graph::new(1, &[]).unwrap();
        assert_eq!(bound_value(0.0, lonely.n_nodes(), 0, 2, &[1.0], 1.0), 0.0);
    }

    #[test]
    fn bound_factor_monotonicity() {
        // increasing in ν while (ν+1)(d−ν+1) > ν², e.g. d = 30 up to ν = 5
        for nu in 2..5 {
            assert!(bound_factor(nu + 1, 30) > bound_factor(nu, 30));
        }
        // but not for every d ≥ ν: at d = 4, 3·C(4,2) = 18 > 4·C(4,3) = 16
        assert_eq!(bound_factor(3, 4), 18.0);
        assert_eq!(bound_factor(4, 4), 16.0);
        assert_eq!(bound_factor(2, 5), 2.0 * binomial(5, 1));
    }

    #[test]
    fn cumulative_bound_grows_with_order() {
        for d in 2..12 {
            let mut prev = bound_value(1.0, 10, d, 2, &[1.0, 1.0], 1.0);
            for nu in 3..=d + 1 {
                let b = bound_value(1.0, 10, d, nu, &[1.0, 1.0], 1.0);
                assert!(b >= prev, "d={d} nu={nu}");
                prev = b;
            }
        }
    }

    #[test]
    fn energy_zero_iff_scaled_constant_per_component() {
        // two components: a path and a triangle
        let g = Graph::new(6, &[(0, 1), (1, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
        let mut h = Matrix::zeros(6, 2);
        for i in 0..6 {
            let c = if i < 3 { 2.0 } else { -1.0 };
            let s = (g.degree(i) as f64).sqrt();
            h[(i, 0)] = c * s;
            h[(i, 1)] = 0.5 * c * s;
        }
        assert!(dirichlet_energy(&g, &h).unwrap() < 1e-24);
        h[(1, 1)] += 1e-3;
        assert!(dirichlet_energy(&g, &h).unwrap() > 0.0);
        // constant but not degree-scaled on the path is not zero energy
        let flat = Matrix::filled(6, 1, 1.0);
        assert!(dirichlet_energy(&g, &flat).unwrap() > 1e-3);
    }

    #[test]
    fn per_order_floor_and_single_order() {
        let g = Graph::new(2, &[(0, 1)]).unwrap();
        let c = LayerCache {
            cheb: vec![Matrix::zeros(2, 1)],
            x: Matrix::zeros(2, 1),
            orders: Vec::new(),
            coeffs: Vec::new(),
            y: None,
        };
        let e = per_order_energy(&g, &[c], LayerAveraging::MeanOfEnergies).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].k, 2);
        assert_eq!(e[0].log_energy, LOG_FLOOR.ln());
    }

    #[test]
    fn linear_fit_and_stats() {
        let x = [5.0, 10.0, 15.0, 20.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v + 1.0).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-12 && (f.r2 - 1.0).abs() < 1e-12);
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!((m, s), (2.0, 1.0));
        assert_eq!(median_of_means(&[1.0, 1.0, 5.0, 5.0, 100.0, 100.0], 3), 5.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]
        #[test]
        fn edge_and_trace_forms_agree(g in crate::graph::tests::arb_graph(12), seed in 0u64..1000) {
            use rand::Rng as _;
            let mut r = crate::rng::rng(seed);
            let data: Vec<f64> = (0..g.n_nodes() * 3).map(|_| r.random_range(-2.0..2.0)).collect();
            let h = Matrix::from_vec(g.n_nodes(), 3, data).unwrap();
            let a = dirichlet_energy(&g, &h).unwrap();
            let b = dirichlet_energy_trace(&g, &h).unwrap();
            prop_assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()));
            prop_assert!(a >= 0.0);
        }
    }
}
