//! Forward pass: two-body Chebyshev message, higher-order motif message and
//! the residual layer update.

use alloc::vec;
use alloc::vec::Vec;

use super::config::{Head, ModelConfig, MotifAggregation};
use super::motif::GraphContext;
use super::params::{LayerParams, Params};
use crate::matrix::{axpy, Matrix};
use crate::{Error, Result};

/// Intermediates of one layer, kept for the backward pass and for energy analysis.
#[derive(Debug, Clone)]
pub struct LayerCache {
    /// `T_0(L̃)H, …, T_K(L̃)H`; entry 0 is the layer input.
    pub cheb: Vec<Matrix>,
    /// Two-body message `X`.
    pub x: Matrix,
    /// Per-order motif sums for `k = 3..=nu`.
    pub orders: Vec<Matrix>,
    /// Per order, the center coefficients of every spectrum (`k` each).
    pub coeffs: Vec<Vec<f64>>,
    /// Higher-order message `Y`.
    pub y: Option<Matrix>,
}

impl LayerCache {
    pub fn input(&self) -> &Matrix {
        &self.cheb[0]
    }
}

#[derive(Debug, Clone)]
pub struct Forward {
    pub input: Matrix,
    /// Hidden features after the input projection.
    pub h0: Matrix,
    /// Hidden features after the last layer.
    pub hidden: Matrix,
    /// `1 × 1` for graph regression, `n × classes` logits for classification.
    pub output: Matrix,
    pub layers: Option<Vec<LayerCache>>,
}

/// `L̃ H` with `L̃ = 2𝓛/λ_max − I` on the symmetric normalized Laplacian,
/// applied through the adjacency lists.
pub fn apply_shifted_laplacian(ctx: &GraphContext, h: &Matrix) -> Matrix {
    let g = &ctx.graph;
    let scale = if ctx.lambda_max > 0.0 {
        2.0 / ctx.lambda_max
    } else {
        0.0
    };
    let mut out = Matrix::zeros(h.rows(), h.cols());
    for i in 0..g.n_nodes() {
        let row = out.row_mut(i);
        let diag = if g.degree(i) > 0 { scale - 1.0 } else { -1.0 };
        axpy(row, diag, h.row(i));
        let si = ctx.inv_sqrt_degree[i];
        for &j in g.neighbors(i) {
            axpy(row, -scale * si * ctx.inv_sqrt_degree[j], h.row(j));
        }
    }
    out
}

/// `T_0(L̃)H … T_degree(L̃)H` by the Chebyshev recurrence.
pub fn chebyshev_terms(ctx: &GraphContext, h: &Matrix, degree: usize) -> Vec<Matrix> {
    let mut terms = Vec::with_capacity(degree + 1);
    terms.push(h.clone());
    if degree >= 1 {
        terms.push(apply_shifted_laplacian(ctx, h));
    }
    for k in 2..=degree {
        let mut next = apply_shifted_laplacian(ctx, &terms[k - 1]);
        next.scale(2.0);
        for (a, b) in next.as_mut_slice().iter_mut().zip(terms[k - 2].as_slice()) {
            *a -= b;
        }
        terms.push(next);
    }
    terms
}

/// `X = Σ_{k'} θ_{2,k'} T_{k'}(L̃) H`, the spectral filter `U g(Λ) Uᵀ H`
/// evaluated without the eigendecomposition.
pub fn two_body_message(ctx: &GraphContext, h: &Matrix, theta2: &[f64]) -> Result<Matrix> {
    if theta2.is_empty() {
        return Err(Error::EmptyCoefficients);
    }
    check_rows(ctx, h)?;
    let terms = chebyshev_terms(ctx, h, theta2.len() - 1);
    Ok(combine_terms(&terms, theta2))
}

fn combine_terms(terms: &[Matrix], theta: &[f64]) -> Matrix {
    let mut x = Matrix::zeros(terms[0].rows(), terms[0].cols());
    for (t, c) in terms.iter().zip(theta) {
        axpy(x.as_mut_slice(), *c, t.as_slice());
    }
    x
}

fn check_rows(ctx: &GraphContext, h: &Matrix) -> Result<()> {
    if h.rows() != ctx.n_nodes() {
        return Err(Error::Dimension(alloc::format!(
            "{} feature rows for {} nodes",
            h.rows(),
            ctx.n_nodes()
        )));
    }
    Ok(())
}

/// Per-node scale applied to the motif sum of one order.
#[inline]
pub(crate) fn aggregation_scale(agg: MotifAggregation, count: usize) -> f64 {
    match agg {
        MotifAggregation::Sum => 1.0,
        MotifAggregation::Mean => 1.0 / count as f64,
    }
}

fn spectrum_coefficients(ctx: &GraphContext, order: usize, theta: &[f64]) -> Vec<f64> {
    let plan = &ctx.orders[order];
    let k = plan.k;
    let mut c = vec![0.0; plan.bases.len() * k];
    for (s, b) in plan.bases.iter().enumerate() {
        b.coefficients(theta, &mut c[s * k..(s + 1) * k]);
    }
    c
}

/// Motif sum of one order at every node.
fn order_sums(ctx: &GraphContext, order: usize, h: &Matrix, coeffs: &[f64], agg: MotifAggregation) -> Matrix {
    let plan = &ctx.orders[order];
    let k = plan.k;
    let mut p = Matrix::zeros(h.rows(), h.cols());
    for i in 0..ctx.n_nodes() {
        let count = plan.motif_count(i);
        if count == 0 {
            continue;
        }
        let scale = aggregation_scale(agg, count);
        let row = p.row_mut(i);
        for m in plan.offsets[i]..plan.offsets[i + 1] {
            let c = &coeffs[plan.spectrum[m] * k..(plan.spectrum[m] + 1) * k];
            for (a, &node) in plan.motif_nodes(m).iter().enumerate() {
                axpy(row, scale * c[a], h.row(node));
            }
        }
    }
    p
}

/// Elementwise product of the per-order sums present at each node.
///
/// Orders without motifs at a node contribute a factor of one; a node with
/// no motif of any order gets the zero row.
fn combine_orders(ctx: &GraphContext, orders: &[Matrix], cols: usize) -> Matrix {
    let mut y = Matrix::zeros(ctx.n_nodes(), cols);
    for i in 0..ctx.n_nodes() {
        let mut present = ctx.present_orders(i).peekable();
        if present.peek().is_none() {
            continue;
        }
        let row = y.row_mut(i);
        row.fill(1.0);
        for j in present {
            for (r, v) in row.iter_mut().zip(orders[j].row(i)) {
                *r *= v;
            }
        }
    }
    y
}

/// Higher-order message of a single node, `Y_i`.
///
/// Returns the zero row when `nu < 3` or the node has no motifs at all.
pub fn higher_order_message(
    ctx: &GraphContext,
    h: &Matrix,
    layer: &LayerParams,
    config: &ModelConfig,
    i: usize,
) -> Result<Vec<f64>> {
    check_rows(ctx, h)?;
    let mut out = vec![0.0; h.cols()];
    let mut any = false;
    for (j, plan) in ctx.orders.iter().enumerate() {
        let count = plan.motif_count(i);
        if count == 0 {
            continue;
        }
        let coeffs = spectrum_coefficients(ctx, j, &layer.theta_k[j]);
        let scale = aggregation_scale(config.aggregation, count);
        let mut sum = vec![0.0; h.cols()];
        for m in plan.offsets[i]..plan.offsets[i + 1] {
            let s = plan.spectrum[m];
            for (a, &node) in plan.motif_nodes(m).iter().enumerate() {
                axpy(&mut sum, scale * coeffs[s * plan.k + a], h.row(node));
            }
        }
        if any {
            for (o, v) in out.iter_mut().zip(&sum) {
                *o *= v;
            }
        } else {
            out = sum;
            any = true;
        }
    }
    Ok(out)
}

/// One residual update `H' = H + X W_xᵀ + Y W_yᵀ`, with its intermediates.
pub fn layer_forward_cached(
    ctx: &GraphContext,
    h: &Matrix,
    layer: &LayerParams,
    config: &ModelConfig,
) -> Result<(Matrix, LayerCache)> {
    check_rows(ctx, h)?;
    let cheb = chebyshev_terms(ctx, h, layer.theta2.len() - 1);
    let x = combine_terms(&cheb, &layer.theta2);
    let mut out = h.clone();
    out.add_assign(&x.matmul_t(&layer.w_x)?);

    let mut orders = Vec::new();
    let mut coeffs = Vec::new();
    let mut y = None;
    if let Some(w_y) = &layer.w_y {
        for j in 0..ctx.orders.len() {
            let c = spectrum_coefficients(ctx, j, &layer.theta_k[j]);
            orders.push(order_sums(ctx, j, h, &c, config.aggregation));
            coeffs.push(c);
        }
        let yy = combine_orders(ctx, &orders, h.cols());
        out.add_assign(&yy.matmul_t(w_y)?);
        y = Some(yy);
    }
    Ok((
        out,
        LayerCache {
            cheb,
            x,
            orders,
            coeffs,
            y,
        },
    ))
}

pub fn layer_forward(ctx: &GraphContext, h: &Matrix, layer: &LayerParams, config: &ModelConfig) -> Result<Matrix> {
    layer_forward_cached(ctx, h, layer, config).map(|(out, _)| out)
}

/// Hidden features after the input projection and the first `layers` layers.
pub fn hidden_after(
    ctx: &GraphContext,
    params: &Params,
    config: &ModelConfig,
    x: &Matrix,
    layers: usize,
) -> Result<Matrix> {
    let mut h = x.matmul_t(&params.input)?;
    for layer in params.layers.iter().take(layers) {
        h = layer_forward(ctx, &h, layer, config)?;
    }
    Ok(h)
}

/// Input projection, every layer, then the readout head.
pub fn model_forward(
    ctx: &GraphContext,
    params: &Params,
    config: &ModelConfig,
    x: &Matrix,
    keep_cache: bool,
) -> Result<Forward> {
    config.validate()?;
    params.check_shapes(config)?;
    check_rows(ctx, x)?;
    if x.cols() != config.input_dim {
        return Err(Error::Dimension(alloc::format!(
            "{} input features, config expects {}",
            x.cols(),
            config.input_dim
        )));
    }
    if ctx.orders.len() != config.nu.saturating_sub(2) {
        return Err(Error::Config("graph context was built for a different nu".into()));
    }
    let h0 = x.matmul_t(&params.input)?;
    let mut h = h0.clone();
    let mut caches = keep_cache.then(Vec::new);
    for layer in &params.layers {
        let (next, cache) = layer_forward_cached(ctx, &h, layer, config)?;
        if let Some(c) = caches.as_mut() {
            c.push(cache);
        }
        h = next;
    }
    let output = readout(params, config.head, &h)?;
    Ok(Forward {
        input: x.clone(),
        h0,
        hidden: h,
        output,
        layers: caches,
    })
}

fn readout(params: &Params, head: Head, h: &Matrix) -> Result<Matrix> {
    match head {
        Head::GraphRegression => {
            let pooled = pool(h);
            let y = crate::matrix::dot(params.head_w.row(0), &pooled) + params.head_b[0];
            Matrix::from_vec(1, 1, vec![y])
        }
        Head::NodeClassification { .. } => {
            let mut logits = h.matmul_t(&params.head_w)?;
            for i in 0..logits.rows() {
                for (v, b) in logits.row_mut(i).iter_mut().zip(&params.head_b) {
                    *v += b;
                }
            }
            Ok(logits)
        }
    }
}

/// Column sums.
pub fn pool(h: &Matrix) -> Vec<f64> {
    let mut pooled = vec![0.0; h.cols()];
    for i in 0..h.rows() {
        for (p, v) in pooled.iter_mut().zip(h.row(i)) {
            *p += v;
        }
    }
    pooled
}
