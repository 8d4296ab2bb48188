use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use crate::matrix::Matrix;
use crate::{math, rng};
use crate::{Error, Result};

/// Learnable tensors of one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    /// Two-body coefficients `θ_{2,0..=K}`.
    pub theta2: Vec<f64>,
    /// `theta_k[k-3]` holds `θ_{k,1..=k}`.
    pub theta_k: Vec<Vec<f64>>,
    pub w_x: Matrix,
    /// Present only when the model has a higher-order message.
    pub w_y: Option<Matrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Input projection, `hidden × input`.
    pub input: Matrix,
    pub layers: Vec<LayerParams>,
    /// Readout weights, `out × hidden`.
    pub head_w: Matrix,
    pub head_b: Vec<f64>,
}

/// Parameters plus a gradient buffer of the same shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub params: Params,
    pub grads: Params,
}

fn uniform(r: &mut rng::Rng, len: usize, bound: f64) -> Vec<f64> {
    (0..len)
        .map(|_| if bound > 0.0 { r.random_range(-bound..bound) } else { 0.0 })
        .collect()
}

fn uniform_matrix(r: &mut rng::Rng, rows: usize, cols: usize, bound: f64) -> Matrix {
    Matrix::from_vec(rows, cols, uniform(r, rows * cols, bound)).expect("shape")
}

impl Params {
    /// Uniform initialization with bound `1/√fan_in`, seeded by `config.rng_seed`.
    pub fn init(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut r = rng::rng(rng::split(config.rng_seed, 0x1417));
        let d = config.hidden_dim;
        let inv = |fan: usize| 1.0 / math::sqrt(fan as f64);
        let input = uniform_matrix(&mut r, d, config.input_dim, inv(config.input_dim));
        let mut layers = Vec::with_capacity(config.layers);
        for _ in 0..config.layers {
            let n2 = config.cheb_order_2body + 1;
            let theta2 = uniform(&mut r, n2, inv(n2));
            let theta_k = config.higher_orders().map(|k| uniform(&mut r, k, inv(k))).collect();
            let w_x = uniform_matrix(&mut r, d, d, inv(d));
            let w_y = config
                .has_higher_order()
                .then(|| uniform_matrix(&mut r, d, d, config.wy_init_scale * inv(d)));
            layers.push(LayerParams {
                theta2,
                theta_k,
                w_x,
                w_y,
            });
        }
        let out = config.head.out_dim();
        let head_w = uniform_matrix(&mut r, out, d, inv(d));
        Ok(Self {
            input,
            layers,
            head_w,
            head_b: vec![0.0; out],
        })
    }

    /// Same shapes, all zeros.
    pub fn zeros_like(&self) -> Self {
        let mut p = self.clone();
        p.for_each_mut(|_, t| t.fill(0.0));
        p
    }

    /// Visits every tensor in a fixed order.
    pub fn for_each(&self, mut f: impl FnMut(String, &[f64])) {
        f("input".into(), self.input.as_slice());
        for (t, l) in self.layers.iter().enumerate() {
            f(format!("layer{t}.theta2"), &l.theta2);
            for (j, th) in l.theta_k.iter().enumerate() {
                f(format!("layer{t}.theta{}", j + 3), th);
            }
            f(format!("layer{t}.w_x"), l.w_x.as_slice());
            if let Some(w) = &l.w_y {
                f(format!("layer{t}.w_y"), w.as_slice());
            }
        }
        f("head_w".into(), self.head_w.as_slice());
        f("head_b".into(), &self.head_b);
    }

    pub fn for_each_mut(&mut self, mut f: impl FnMut(String, &mut [f64])) {
        f("input".into(), self.input.as_mut_slice());
        for (t, l) in self.layers.iter_mut().enumerate() {
            f(format!("layer{t}.theta2"), &mut l.theta2);
            for (j, th) in l.theta_k.iter_mut().enumerate() {
                f(format!("layer{t}.theta{}", j + 3), th);
            }
            f(format!("layer{t}.w_x"), l.w_x.as_mut_slice());
            if let Some(w) = &mut l.w_y {
                f(format!("layer{t}.w_y"), w.as_mut_slice());
            }
        }
        f("head_w".into(), self.head_w.as_mut_slice());
        f("head_b".into(), &mut self.head_b);
    }

    pub fn len(&self) -> usize {
        let mut n = 0;
        self.for_each(|_, t| n += t.len());
        n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        self.for_each(|_, t| v.extend_from_slice(t));
        v
    }

    pub fn assign_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.len() {
            return Err(Error::Dimension(format!(
                "{} values for {} parameters",
                flat.len(),
                self.len()
            )));
        }
        let mut pos = 0;
        self.for_each_mut(|_, t| {
            t.copy_from_slice(&flat[pos..pos + t.len()]);
            pos += t.len();
        });
        Ok(())
    }

    /// `self += scale · other`, shapes assumed equal.
    pub fn add_scaled(&mut self, other: &Params, scale: f64) {
        let flat = other.flatten();
        let mut pos = 0;
        self.for_each_mut(|_, t| {
            for v in t.iter_mut() {
                *v += scale * flat[pos];
                pos += 1;
            }
        });
    }

    pub fn all_finite(&self) -> bool {
        let mut ok = true;
        self.for_each(|_, t| ok &= t.iter().all(|v| v.is_finite()));
        ok
    }

    /// Largest magnitude over every tensor of layer `t`.
    pub fn layer_max_abs(&self, t: usize) -> f64 {
        let l = &self.layers[t];
        let mut m = l.w_x.max_abs();
        for v in l.theta2.iter().chain(l.theta_k.iter().flatten()) {
            m = m.max(math::abs(*v));
        }
        if let Some(w) = &l.w_y {
            m = m.max(w.max_abs());
        }
        m
    }

    /// Checks tensor shapes against `config`.
    pub fn check_shapes(&self, config: &ModelConfig) -> Result<()> {
        let d = config.hidden_dim;
        let bad = |what: &str| Err(Error::Dimension(format!("parameter shape mismatch: {what}")));
        if (self.input.rows(), self.input.cols()) != (d, config.input_dim) {
            return bad("input projection");
        }
        if self.layers.len() != config.layers {
            return bad("layer count");
        }
        for l in &self.layers {
            if l.theta2.len() != config.cheb_order_2body + 1 {
                return bad("theta2");
            }
            if l.theta_k.len() != config.nu.saturating_sub(2)
                || l.theta_k.iter().zip(config.higher_orders()).any(|(t, k)| t.len() != k)
            {
                return bad("theta_k");
            }
            if (l.w_x.rows(), l.w_x.cols()) != (d, d) {
                return bad("w_x");
            }
            match (&l.w_y, config.has_higher_order()) {
                (Some(w), true) if (w.rows(), w.cols()) == (d, d) => {}
                (None, false) => {}
                _ => return bad("w_y"),
            }
        }
        let out = config.head.out_dim();
        if (self.head_w.rows(), self.head_w.cols()) != (out, d) || self.head_b.len() != out {
            return bad("head");
        }
        Ok(())
    }
}

impl ModelState {
    pub fn init(config: &ModelConfig) -> Result<Self> {
        let params = Params::init(config)?;
        let grads = params.zeros_like();
        Ok(Self { params, grads })
    }

    pub fn zero_grads(&mut self) {
        self.grads.for_each_mut(|_, t| t.fill(0.0));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::config::Head;

    #[test]
    fn init_shapes_and_flatten_roundtrip() {
        let cfg = ModelConfig::new(4, 2, 3, 5, Head::NodeClassification { n_classes: 2 });
        let mut p = Params::init(&cfg).unwrap();
        p.check_shapes(&cfg).unwrap();
        assert_eq!(p.layers[0].theta_k.len(), 2);
        assert_eq!(p.layers[0].theta_k[1].len(), 4);
        let flat = p.flatten();
        let mut q = p.zeros_like();
        q.assign_flat(&flat).unwrap();
        assert_eq!(p, q);
        p.assign_flat(&flat[1..]).unwrap_err();
        assert_eq!(Params::init(&cfg).unwrap(), Params::init(&cfg).unwrap());
    }

    #[test]
    fn two_body_only_has_no_wy() {
        let cfg = ModelConfig::new(2, 1, 3, 3, Head::GraphRegression);
        let p = Params::init(&cfg).unwrap();
        assert!(p.layers[0].w_y.is_none() && p.layers[0].theta_k.is_empty());
    }
}
