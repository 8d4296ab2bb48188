//! Deterministic training over in-memory datasets.
//!
//! Each epoch shuffles the training graphs with a seed derived from the run
//! seed and the epoch number, accumulates gradients over `batch_size`
//! graphs per Adam step, then evaluates every graph with the updated
//! parameters. All reductions run in a fixed order.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::analysis::{dirichlet_energy, energy_bound, per_order_energy, BoundReport, LayerAveraging};
use crate::matrix::Matrix;
use crate::model::{model_backward, model_forward, GraphContext, Head, ModelConfig, Params};
use crate::optim::{Adam, AdamConfig};
use crate::{math, rng};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    /// Graphs per optimizer step.
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    /// Fraction of graphs (regression) or nodes (classification) used for training.
    #[serde(default = "default_split")]
    pub train_fraction: f64,
    #[serde(default)]
    pub optimizer: AdamConfig,
    /// Regression targets are fit in z-scored units; metrics stay in original units.
    #[serde(default = "yes")]
    pub standardize_targets: bool,
    #[serde(default)]
    pub energy_averaging: LayerAveraging,
    #[serde(default)]
    pub seed: u64,
}

fn default_epochs() -> usize {
    50
}
fn default_batch() -> usize {
    4
}
fn default_split() -> f64 {
    0.8
}
fn yes() -> bool {
    true
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: default_epochs(),
            batch_size: default_batch(),
            train_fraction: default_split(),
            optimizer: AdamConfig::default(),
            standardize_targets: true,
            energy_averaging: LayerAveraging::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config("train_fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// One graph with node features and a graph-level target.
#[derive(Debug, Clone)]
pub struct GraphSample {
    pub ctx: GraphContext,
    pub features: Matrix,
    pub target: f64,
}

/// What the model is trained on.
#[derive(Debug, Clone)]
pub enum Task {
    GraphRegression(Vec<GraphSample>),
    NodeClassification {
        ctx: GraphContext,
        features: Matrix,
        labels: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    /// Test MSE for regression, test accuracy for classification.
    pub test_metric: f64,
    /// Dirichlet energy of the last hidden layer, averaged over evaluated graphs.
    pub dirichlet_energy: f64,
    /// Energies of the order `2..=nu` components.
    pub order_energy: Vec<f64>,
    /// The evaluated graph closest to violating the energy bound.
    pub bound: BoundReport,
    /// Every evaluated graph satisfied the bound.
    pub bound_satisfied: bool,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Last finite parameters.
    pub params: Params,
    pub metrics: Vec<EpochMetrics>,
    /// Epoch with the best test metric and its parameters.
    pub best: Option<(usize, Params)>,
    /// Set when training stopped on a non-finite loss or parameter.
    pub aborted: Option<String>,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// Seeded split of `0..n` into `(train, test)`, both sorted; each side keeps
/// at least one element when `n ≥ 2`.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::rng(rng::split(seed, 0x5b11)));
    let mut n_train = math::round_to_usize(n as f64 * train_fraction);
    if n >= 2 {
        n_train = n_train.clamp(1, n - 1);
    }
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Mean and standard deviation used to z-score regression targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetScaler {
    pub mean: f64,
    pub std: f64,
}

impl TargetScaler {
    pub fn identity() -> Self {
        Self { mean: 0.0, std: 1.0 }
    }

    pub fn fit(values: &[f64]) -> Self {
        let (mean, _) = crate::analysis::mean_std(values);
        let n = values.len() as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = math::sqrt(var);
        Self {
            mean,
            std: if std > 0.0 && std.is_finite() { std } else { 1.0 },
        }
    }

    pub fn encode(&self, y: f64) -> f64 {
        (y - self.mean) / self.std
    }

    pub fn decode(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

/// Squared error and its gradient with respect to the prediction.
pub fn mse_loss(prediction: f64, target: f64) -> (f64, f64) {
    let e = prediction - target;
    (e * e, 2.0 * e)
}

/// Mean softmax cross-entropy over the nodes in `mask`, its gradient with
/// respect to the logits, and the number of correct argmax predictions.
pub fn cross_entropy(logits: &Matrix, labels: &[usize], mask: &[usize]) -> Result<(f64, Matrix, usize)> {
    let c = logits.cols();
    let mut grad = Matrix::zeros(logits.rows(), c);
    if mask.is_empty() {
        return Ok((0.0, grad, 0));
    }
    let inv = 1.0 / mask.len() as f64;
    let mut loss = 0.0;
    let mut correct = 0;
    let mut p = vec![0.0; c];
    for &i in mask {
        let y = labels[i];
        if y >= c {
            return Err(Error::Invalid(format!("label {y} outside {c} classes")));
        }
        let row = logits.row(i);
        let mut best = 0;
        for (a, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = a;
            }
        }
        if best == y {
            correct += 1;
        }
        let m = row[best];
        let mut z = 0.0;
        for (q, &v) in p.iter_mut().zip(row) {
            *q = math::exp(v - m);
            z += *q;
        }
        loss += math::ln(z) + m - row[y];
        let g = grad.row_mut(i);
        for a in 0..c {
            g[a] = inv * (p[a] / z - if a == y { 1.0 } else { 0.0 });
        }
    }
    Ok((loss * inv, grad, correct))
}

/// Dense-softmax accuracy over `mask`.
pub fn accuracy(logits: &Matrix, labels: &[usize], mask: &[usize]) -> Result<f64> {
    let (_, _, correct) = cross_entropy(logits, labels, mask)?;
    Ok(if mask.is_empty() { 0.0 } else { correct as f64 / mask.len() as f64 })
}

struct Eval {
    energy: f64,
    order_energy: Vec<f64>,
    bound: BoundReport,
    satisfied: bool,
}

fn graph_diagnostics(
    ctx: &GraphContext,
    config: &ModelConfig,
    params: &Params,
    fwd: &crate::model::Forward,
    averaging: LayerAveraging,
) -> Result<(f64, Vec<f64>, BoundReport)> {
    let energy = dirichlet_energy(&ctx.graph, &fwd.hidden)?;
    let orders = per_order_energy(
        &ctx.graph,
        fwd.layers.as_deref().unwrap_or(&[]),
        averaging,
    )?
    .into_iter()
    .map(|o| o.energy)
    .collect();
    let bound = energy_bound(ctx, config, params, fwd.h0.max_abs(), energy);
    Ok((energy, orders, bound))
}

fn worse(a: BoundReport, b: BoundReport) -> BoundReport {
    if b.ratio() > a.ratio() {
        b
    } else {
        a
    }
}

fn accumulate(eval: &mut Option<Eval>, energy: f64, orders: Vec<f64>, bound: BoundReport) {
    match eval {
        None => {
            *eval = Some(Eval {
                energy,
                order_energy: orders,
                satisfied: bound.satisfied,
                bound,
            })
        }
        Some(e) => {
            e.energy += energy;
            for (a, b) in e.order_energy.iter_mut().zip(orders) {
                *a += b;
            }
            e.satisfied &= bound.satisfied;
            e.bound = worse(e.bound, bound);
        }
    }
}

/// Trains from `init`, calling `on_epoch` after every evaluated epoch.
pub fn train(
    task: &Task,
    config: &ModelConfig,
    train_config: &TrainConfig,
    init: Params,
    mut on_epoch: impl FnMut(&EpochMetrics, &Params),
) -> Result<TrainOutcome> {
    config.validate()?;
    train_config.validate()?;
    init.check_shapes(config)?;
    match (task, config.head) {
        (Task::GraphRegression(_), Head::GraphRegression) => {}
        (Task::NodeClassification { .. }, Head::NodeClassification { .. }) => {}
        _ => return Err(Error::Config("model head does not match the task".into())),
    }
    let n_items = match task {
        Task::GraphRegression(samples) => samples.len(),
        Task::NodeClassification { labels, .. } => labels.len(),
    };
    if n_items < 2 {
        return Err(Error::Config("need at least two graphs or nodes to split".into()));
    }
    let (train_idx, test_idx) = split_indices(n_items, train_config.train_fraction, train_config.seed);
    let scaler = match task {
        Task::GraphRegression(samples) if train_config.standardize_targets => {
            let ys: Vec<f64> = train_idx.iter().map(|&i| samples[i].target).collect();
            TargetScaler::fit(&ys)
        }
        _ => TargetScaler::identity(),
    };

    let mut params = init;
    let mut opt = Adam::new(train_config.optimizer, params.len());
    let mut metrics = Vec::with_capacity(train_config.epochs);
    let mut best: Option<(usize, f64, Params)> = None;
    let mut aborted = None;
    let higher_is_better = matches!(task, Task::NodeClassification { .. });

    'epochs: for epoch in 0..train_config.epochs {
        let last_good = params.clone();
        // optimization
        match task {
            Task::GraphRegression(samples) => {
                let mut order = train_idx.clone();
                order.shuffle(&mut rng::rng(rng::split(train_config.seed, 1 + epoch as u64)));
                for batch in order.chunks(train_config.batch_size) {
                    let mut grads = params.zeros_like();
                    for &i in batch {
                        let s = &samples[i];
                        let fwd = model_forward(&s.ctx, &params, config, &s.features, true)?;
                        let (loss, dl) = mse_loss(fwd.output[(0, 0)], scaler.encode(s.target));
                        if !loss.is_finite() {
                            aborted = Some(format!("non-finite training loss at epoch {epoch}"));
                            params = last_good;
                            break 'epochs;
                        }
                        let og = Matrix::from_vec(1, 1, vec![dl / batch.len() as f64])?;
                        grads.add_scaled(&model_backward(&s.ctx, &params, config, &fwd, &og)?, 1.0);
                    }
                    if let Err(e) = opt.step(&mut params, &grads) {
                        aborted = Some(format!("optimizer step failed at epoch {epoch}: {e}"));
                        params = last_good;
                        break 'epochs;
                    }
                }
            }
            Task::NodeClassification { ctx, features, labels } => {
                let fwd = model_forward(ctx, &params, config, features, true)?;
                let (loss, og, _) = cross_entropy(&fwd.output, labels, &train_idx)?;
                if !loss.is_finite() {
                    aborted = Some(format!("non-finite training loss at epoch {epoch}"));
                    params = last_good;
                    break 'epochs;
                }
                let grads = model_backward(ctx, &params, config, &fwd, &og)?;
                if let Err(e) = opt.step(&mut params, &grads) {
                    aborted = Some(format!("optimizer step failed at epoch {epoch}: {e}"));
                    params = last_good;
                    break 'epochs;
                }
            }
        }
        if !params.all_finite() {
            aborted = Some(format!("non-finite parameters after epoch {epoch}"));
            params = last_good;
            break;
        }

        // evaluation with the updated parameters
        let (train_loss, test_metric, eval) = match task {
            Task::GraphRegression(samples) => {
                let mut eval = None;
                let mut train_sse = 0.0;
                let mut test_sse = 0.0;
                for (i, s) in samples.iter().enumerate() {
                    let is_test = test_idx.binary_search(&i).is_ok();
                    let fwd = model_forward(&s.ctx, &params, config, &s.features, is_test)?;
                    let pred = scaler.decode(fwd.output[(0, 0)]);
                    let (se, _) = mse_loss(pred, s.target);
                    if is_test {
                        test_sse += se;
                        let (e, o, b) = graph_diagnostics(&s.ctx, config, &params, &fwd, train_config.energy_averaging)?;
                        accumulate(&mut eval, e, o, b);
                    } else {
                        train_sse += se;
                    }
                }
                let mut eval = eval.expect("test split is never empty");
                let nt = test_idx.len() as f64;
                eval.energy /= nt;
                for v in &mut eval.order_energy {
                    *v /= nt;
                }
                (train_sse / train_idx.len() as f64, test_sse / nt, eval)
            }
            Task::NodeClassification { ctx, features, labels } => {
                let fwd = model_forward(ctx, &params, config, features, true)?;
                let (loss, _, _) = cross_entropy(&fwd.output, labels, &train_idx)?;
                let acc = accuracy(&fwd.output, labels, &test_idx)?;
                let mut eval = None;
                let (e, o, b) = graph_diagnostics(ctx, config, &params, &fwd, train_config.energy_averaging)?;
                accumulate(&mut eval, e, o, b);
                (loss, acc, eval.expect("one graph evaluated"))
            }
        };
        if !train_loss.is_finite() {
            aborted = Some(format!("non-finite loss after epoch {epoch}"));
            params = last_good;
            break;
        }
        let m = EpochMetrics {
            epoch,
            train_loss,
            test_metric,
            dirichlet_energy: eval.energy,
            order_energy: eval.order_energy,
            bound: eval.bound,
            bound_satisfied: eval.satisfied,
        };
        let improved = match &best {
            None => true,
            Some((_, b, _)) => {
                if higher_is_better {
                    test_metric > *b
                } else {
                    test_metric < *b
                }
            }
        };
        if improved {
            best = Some((epoch, test_metric, params.clone()));
        }
        on_epoch(&m, &params);
        metrics.push(m);
    }
    Ok(TrainOutcome {
        params,
        metrics,
        best: best.map(|(e, _, p)| (e, p)),
        aborted,
        train_indices: train_idx,
        test_indices: test_idx,
    })
}

/// Test metric of `params` on a task using the same split as training.
pub fn evaluate(task: &Task, config: &ModelConfig, params: &Params, indices: &[usize], scaler: TargetScaler) -> Result<f64> {
    match task {
        Task::GraphRegression(samples) => {
            let mut sse = 0.0;
            for &i in indices {
                let s = &samples[i];
                let fwd = model_forward(&s.ctx, params, config, &s.features, false)?;
                sse += mse_loss(scaler.decode(fwd.output[(0, 0)]), s.target).0;
            }
            Ok(sse / indices.len().max(1) as f64)
        }
        Task::NodeClassification { ctx, features, labels } => {
            let fwd = model_forward(ctx, params, config, features, false)?;
            accuracy(&fwd.output, labels, indices)
        }
    }
}

/// Target scaler that [`train`] fits for this task and configuration.
pub fn fitted_scaler(task: &Task, train_config: &TrainConfig) -> TargetScaler {
    match task {
        Task::GraphRegression(samples) if train_config.standardize_targets => {
            let n = samples.len();
            let (train_idx, _) = split_indices(n, train_config.train_fraction, train_config.seed);
            let ys: Vec<f64> = train_idx.iter().map(|&i| samples[i].target).collect();
            TargetScaler::fit(&ys)
        }
        _ => TargetScaler::identity(),
    }
}
