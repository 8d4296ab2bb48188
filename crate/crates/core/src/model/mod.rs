//! The many-body layer: motif plans, forward pass, gradients and probes.

mod backward;
mod config;
mod forward;
mod motif;
mod params;
mod probe;

pub use backward::model_backward;
pub use config::{Head, ModelConfig, MotifAggregation};
pub use forward::{
    apply_shifted_laplacian, chebyshev_terms, hidden_after, higher_order_message, layer_forward,
    layer_forward_cached, model_forward, pool, two_body_message, Forward, LayerCache,
};
pub use motif::{enumerate_motifs, CenterBasis, GraphContext, MotifInstance, OrderPlan};
pub use params::{LayerParams, ModelState, Params};
pub use probe::{jacobian_probe, PROBE_EPS};
