//! Reverse-mode gradients of the forward pass.

use alloc::vec;
use alloc::vec::Vec;

use super::config::{Head, ModelConfig};
use super::forward::{aggregation_scale, chebyshev_terms, pool, Forward, LayerCache};
use super::motif::GraphContext;
use super::params::{LayerParams, Params};
use crate::matrix::{axpy, dot, Matrix};
use crate::{Error, Result};

/// Gradients of a scalar loss with respect to every parameter.
///
/// `output_grad` is `∂loss/∂output`, shaped like `fwd.output`. The result
/// is a fresh gradient with the layout of `params`.
pub fn model_backward(
    ctx: &GraphContext,
    params: &Params,
    config: &ModelConfig,
    fwd: &Forward,
    output_grad: &Matrix,
) -> Result<Params> {
    let caches = fwd
        .layers
        .as_ref()
        .ok_or_else(|| Error::MissingCache("forward pass was run without keeping intermediates".into()))?;
    if (output_grad.rows(), output_grad.cols()) != (fwd.output.rows(), fwd.output.cols()) {
        return Err(Error::Dimension("output gradient shape differs from the output".into()));
    }
    let mut grads = params.zeros_like();
    let mut g = head_backward(params, config.head, &fwd.hidden, output_grad, &mut grads)?;
    for (t, cache) in caches.iter().enumerate().rev() {
        g = layer_backward(ctx, &params.layers[t], config, cache, &g, &mut grads.layers[t])?;
    }
    grads.input = g.t_matmul(&fwd.input)?;
    Ok(grads)
}

fn head_backward(params: &Params, head: Head, h: &Matrix, og: &Matrix, grads: &mut Params) -> Result<Matrix> {
    match head {
        Head::GraphRegression => {
            let gy = og[(0, 0)];
            let pooled = pool(h);
            for (w, p) in grads.head_w.row_mut(0).iter_mut().zip(&pooled) {
                *w = gy * p;
            }
            grads.head_b[0] = gy;
            let mut gh = Matrix::zeros(h.rows(), h.cols());
            for i in 0..h.rows() {
                axpy(gh.row_mut(i), gy, params.head_w.row(0));
            }
            Ok(gh)
        }
        Head::NodeClassification { .. } => {
            grads.head_w = og.t_matmul(h)?;
            for i in 0..og.rows() {
                for (b, v) in grads.head_b.iter_mut().zip(og.row(i)) {
                    *b += v;
                }
            }
            og.matmul(&params.head_w)
        }
    }
}

/// Backpropagates `g = ∂loss/∂H'` through one layer, returning `∂loss/∂H`.
fn layer_backward(
    ctx: &GraphContext,
    layer: &LayerParams,
    config: &ModelConfig,
    cache: &LayerCache,
    g: &Matrix,
    grads: &mut LayerParams,
) -> Result<Matrix> {
    let h = cache.input();
    let mut gh = g.clone();

    grads.w_x = g.t_matmul(&cache.x)?;
    let gx = g.matmul(&layer.w_x)?;
    for (d, t) in grads.theta2.iter_mut().zip(&cache.cheb) {
        *d = t.frob_dot(&gx);
    }
    // the Chebyshev polynomials of the symmetric L̃ are self-adjoint
    let back = chebyshev_terms(ctx, &gx, layer.theta2.len() - 1);
    for (t, c) in back.iter().zip(&layer.theta2) {
        axpy(gh.as_mut_slice(), *c, t.as_slice());
    }

    if let (Some(w_y), Some(y)) = (&layer.w_y, &cache.y) {
        grads.w_y = Some(g.t_matmul(y)?);
        let gy = g.matmul(w_y)?;
        let gp = order_grads(ctx, &cache.orders, &gy);
        for (j, plan) in ctx.orders.iter().enumerate() {
            let k = plan.k;
            let coeffs = &cache.coeffs[j];
            let mut dc = vec![0.0; coeffs.len()];
            for i in 0..ctx.n_nodes() {
                let count = plan.motif_count(i);
                if count == 0 {
                    continue;
                }
                let scale = aggregation_scale(config.aggregation, count);
                let gpi = gp[j].row(i);
                for m in plan.offsets[i]..plan.offsets[i + 1] {
                    let s = plan.spectrum[m];
                    for (a, &node) in plan.motif_nodes(m).iter().enumerate() {
                        dc[s * k + a] += scale * dot(h.row(node), gpi);
                        axpy(gh.row_mut(node), scale * coeffs[s * k + a], gpi);
                    }
                }
            }
            let dtheta = &mut grads.theta_k[j];
            for (s, basis) in plan.bases.iter().enumerate() {
                for a in 0..k {
                    let d = dc[s * k + a];
                    for (kp, dt) in dtheta.iter_mut().enumerate() {
                        *dt += basis.basis[a * k + kp] * d;
                    }
                }
            }
        }
    }
    Ok(gh)
}

/// `∂loss/∂P_j` from `∂loss/∂Y` through the elementwise product.
fn order_grads(ctx: &GraphContext, orders: &[Matrix], gy: &Matrix) -> Vec<Matrix> {
    let mut gp: Vec<Matrix> = orders.iter().map(|o| Matrix::zeros(o.rows(), o.cols())).collect();
    let cols = gy.cols();
    let mut present = Vec::new();
    for i in 0..ctx.n_nodes() {
        present.clear();
        present.extend(ctx.present_orders(i));
        for &j in &present {
            let row = gp[j].row_mut(i);
            row.copy_from_slice(gy.row(i));
            for &other in present.iter().filter(|&&o| o != j) {
                for c in 0..cols {
                    row[c] *= orders[other][(i, c)];
                }
            }
        }
    }
    gp
}
