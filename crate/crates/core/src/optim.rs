//! Adam.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;
use crate::model::Params;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_betas")]
    pub betas: (f64, f64),
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_lr() -> f64 {
    0.01
}

fn default_betas() -> (f64, f64) {
    (0.9, 0.999)
}

fn default_eps() -> f64 {
    1e-8
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: default_lr(),
            betas: default_betas(),
            eps: default_eps(),
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let (b1, b2) = self.betas;
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config("optimizer.lr must be positive".into()));
        }
        if !((0.0..1.0).contains(&b1) && (0.0..1.0).contains(&b2)) {
            return Err(Error::Config("optimizer.betas must lie in [0, 1)".into()));
        }
        if !(self.eps > 0.0) {
            return Err(Error::Config("optimizer.eps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u32,
}

impl Adam {
    pub fn new(config: AdamConfig, n_params: usize) -> Self {
        Self {
            config,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
        }
    }

    pub fn steps(&self) -> u32 {
        self.step
    }

    /// One bias-corrected update of `params` from `grads`.
    pub fn step(&mut self, params: &mut Params, grads: &Params) -> Result<()> {
        let g = grads.flatten();
        if g.len() != self.m.len() || params.len() != self.m.len() {
            return Err(Error::Dimension("optimizer state does not match the parameters".into()));
        }
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("gradient".into()));
        }
        self.step += 1;
        let (b1, b2) = self.config.betas;
        let c1 = 1.0 - math::pow(b1, self.step as f64);
        let c2 = 1.0 - math::pow(b2, self.step as f64);
        let lr = self.config.lr;
        let eps = self.config.eps;
        let (m, v) = (&mut self.m, &mut self.v);
        let mut pos = 0;
        params.for_each_mut(|_, t| {
            for p in t.iter_mut() {
                let gi = g[pos];
                m[pos] = b1 * m[pos] + (1.0 - b1) * gi;
                v[pos] = b2 * v[pos] + (1.0 - b2) * gi * gi;
                let mh = m[pos] / c1;
                let vh = v[pos] / c2;
                *p -= lr * mh / (math::sqrt(vh) + eps);
                pos += 1;
            }
        });
        Ok(())
    }
}
