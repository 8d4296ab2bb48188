use alloc::format;

use serde::{Deserialize, Serialize};

use crate::curvature::WeightMode;
use crate::spectral::FilterBasis;
use crate::{Error, Result};

/// Output head on top of the last hidden layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Head {
    /// Sum-pool the nodes, then one linear unit.
    GraphRegression,
    /// Per-node linear layer feeding a softmax.
    NodeClassification { n_classes: usize },
}

impl Head {
    pub fn out_dim(self) -> usize {
        match self {
            Head::GraphRegression => 1,
            Head::NodeClassification { n_classes } => n_classes,
        }
    }
}

/// How the motif messages of one order are combined at a node.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MotifAggregation {
    /// Plain sum over the enumerated motifs.
    #[default]
    Sum,
    /// Sum divided by the number of motifs of that order at the node.
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Maximum correlation order; 2 disables the higher-order message.
    pub nu: usize,
    pub layers: usize,
    pub hidden_dim: usize,
    pub input_dim: usize,
    pub head: Head,
    /// Degree of the two-body Chebyshev polynomial (coefficients `0..=degree`).
    #[serde(default = "default_cheb")]
    pub cheb_order_2body: usize,
    #[serde(default = "default_weight_mode")]
    pub weight_mode: WeightMode,
    /// Motifs kept per node and order; 0 means exhaustive.
    #[serde(default = "default_cap")]
    pub enumeration_cap: usize,
    #[serde(default)]
    pub aggregation: MotifAggregation,
    #[serde(default)]
    pub basis: FilterBasis,
    /// Multiplier on the initial scale of the higher-order mixing matrices.
    #[serde(default = "default_one")]
    pub wy_init_scale: f64,
    #[serde(default)]
    pub rng_seed: u64,
}

fn default_cheb() -> usize {
    2
}

fn default_weight_mode() -> WeightMode {
    WeightMode::ShiftedPositive
}

fn default_cap() -> usize {
    64
}

fn default_one() -> f64 {
    1.0
}

impl ModelConfig {
    /// Defaults for everything but the shape.
    pub fn new(nu: usize, layers: usize, hidden_dim: usize, input_dim: usize, head: Head) -> Self {
        Self {
            nu,
            layers,
            hidden_dim,
            input_dim,
            head,
            cheb_order_2body: default_cheb(),
            weight_mode: default_weight_mode(),
            enumeration_cap: default_cap(),
            aggregation: MotifAggregation::Sum,
            basis: FilterBasis::default(),
            wy_init_scale: 1.0,
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nu < 2 {
            return Err(Error::Config(format!("nu = {} must be at least 2", self.nu)));
        }
        if self.layers < 1 {
            return Err(Error::Config("layers must be at least 1".into()));
        }
        if self.hidden_dim < 1 {
            return Err(Error::Config("hidden_dim must be at least 1".into()));
        }
        if self.input_dim < 1 {
            return Err(Error::Config("input_dim must be at least 1".into()));
        }
        if let Head::NodeClassification { n_classes } = self.head {
            if n_classes < 1 {
                return Err(Error::Config("n_classes must be at least 1".into()));
            }
        }
        if !(self.wy_init_scale.is_finite() && self.wy_init_scale >= 0.0) {
            return Err(Error::Config("wy_init_scale must be finite and non-negative".into()));
        }
        Ok(())
    }

    pub fn higher_orders(&self) -> core::ops::RangeInclusive<usize> {
        3..=self.nu
    }

    pub fn has_higher_order(&self) -> bool {
        self.nu >= 3
    }
}
