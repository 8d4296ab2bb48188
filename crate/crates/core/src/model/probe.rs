//! Input-output sensitivity by finite differences.

use super::config::ModelConfig;
use super::forward::hidden_after;
use super::motif::GraphContext;
use super::params::Params;
use crate::matrix::Matrix;
use crate::math;
use crate::{Error, Result};

/// Default perturbation for [`jacobian_probe`].
pub const PROBE_EPS: f64 = 1e-6;

/// `max_{a,b} |∂h_u^{(r)}[a] / ∂x_v[b]|` by central differences.
///
/// `h^{(r)}` is the hidden state after the input projection and the first
/// `r` layers. Rows outside the receptive field of `v` are computed from
/// bitwise-identical inputs, so the probe is exactly zero there.
pub fn jacobian_probe(
    ctx: &GraphContext,
    params: &Params,
    config: &ModelConfig,
    x: &Matrix,
    u: usize,
    v: usize,
    r: usize,
    eps: f64,
) -> Result<f64> {
    let n = ctx.n_nodes();
    if u >= n || v >= n {
        return Err(Error::NodeOutOfRange {
            node: u.max(v),
            n_nodes: n,
        });
    }
    if r > config.layers {
        return Err(Error::Config(alloc::format!(
            "probe depth {r} exceeds the model's {} layers",
            config.layers
        )));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Invalid("probe step must be positive".into()));
    }
    let mut best: f64 = 0.0;
    let mut xp = x.clone();
    for b in 0..x.cols() {
        let orig = x[(v, b)];
        xp[(v, b)] = orig + eps;
        let plus = hidden_after(ctx, params, config, &xp, r)?;
        xp[(v, b)] = orig - eps;
        let minus = hidden_after(ctx, params, config, &xp, r)?;
        xp[(v, b)] = orig;
        for (p, m) in plus.row(u).iter().zip(minus.row(u)) {
            best = best.max(math::abs(p - m) / (2.0 * eps));
        }
    }
    Ok(best)
}
