//! Wall-clock benchmark of training epochs against layer count.

use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use manybody_core::analysis::{linear_fit, mean_std, median_of_means, LinearFit};
use manybody_core::model::{model_backward, model_forward, GraphContext, Head, ModelConfig, MotifAggregation, Params};
use manybody_core::optim::{Adam, AdamConfig};
use manybody_core::synth::{self, DatasetSpec, Family, TargetKind};
use manybody_core::Matrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchModel {
    /// Full model at the workload's correlation order.
    ManyBody,
    /// The same network with `nu = 2`.
    Chebnet,
}

impl BenchModel {
    pub fn name(self) -> &'static str {
        match self {
            BenchModel::ManyBody => "many-body",
            BenchModel::Chebnet => "chebnet",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "many-body" | "manybody" => Ok(BenchModel::ManyBody),
            "chebnet" => Ok(BenchModel::Chebnet),
            _ => bail!("unknown model {s:?} (expected many-body or chebnet)"),
        }
    }
}

/// What one timed repetition trains on: a single epoch over `n_graphs`
/// Erdős–Rényi graphs with one Adam step per `batch_size` graphs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Workload {
    pub n_graphs: usize,
    pub n_nodes: usize,
    pub edge_prob: f64,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub nu: usize,
    /// Number of two-body Chebyshev coefficients.
    pub cheb_support: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for Workload {
    fn default() -> Self {
        Self {
            n_graphs: 4,
            n_nodes: 100,
            edge_prob: 0.1,
            input_dim: 8,
            hidden_dim: 16,
            nu: 4,
            cheb_support: 4,
            batch_size: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub model: String,
    pub layers: usize,
    /// Median of group means over the timed repetitions.
    pub mean_ms: f64,
    /// Sample standard deviation of the individual repetitions.
    pub std_ms: f64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFit {
    pub model: String,
    pub fit: LinearFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub workload: Workload,
    pub reps: usize,
    pub warmup: usize,
    pub threads: usize,
    pub fits: Vec<ModelFit>,
    /// many-body / chebnet time at the largest layer count, when both ran.
    pub ratio_at_max_layers: Option<f64>,
}

fn model_config(model: BenchModel, layers: usize, w: &Workload) -> ModelConfig {
    let nu = match model {
        BenchModel::ManyBody => w.nu,
        BenchModel::Chebnet => 2,
    };
    let mut cfg = ModelConfig::new(nu, layers, w.hidden_dim, w.input_dim, Head::GraphRegression);
    cfg.cheb_order_2body = w.cheb_support.saturating_sub(1);
    cfg.aggregation = MotifAggregation::Mean;
    cfg.rng_seed = w.seed;
    cfg
}

struct Prepared {
    config: ModelConfig,
    graphs: Vec<(GraphContext, Matrix, f64)>,
}

fn prepare(model: BenchModel, layers: usize, w: &Workload) -> Result<Prepared> {
    let config = model_config(model, layers, w);
    let mut spec = DatasetSpec::new(Family::ErdosRenyi);
    spec.count = w.n_graphs;
    spec.n_nodes = (w.n_nodes, w.n_nodes);
    spec.edge_prob = (w.edge_prob, w.edge_prob);
    spec.feature_dim = w.input_dim;
    spec.target = TargetKind::ClustEmph;
    spec.seed = w.seed;
    let graphs = synth::generate(&spec)?
        .into_iter()
        .map(|inst| {
            let ctx = GraphContext::new(inst.graph, &config)?;
            Ok((ctx, inst.features, inst.target.unwrap_or_default()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Prepared { config, graphs })
}

/// One epoch: forward, backward and an Adam step per batch.
fn epoch(p: &Prepared, params: &mut Params, opt: &mut Adam, batch_size: usize) -> Result<()> {
    for batch in p.graphs.chunks(batch_size) {
        let mut grads = params.zeros_like();
        for (ctx, x, y) in batch {
            let fwd = model_forward(ctx, params, &p.config, x, true)?;
            let dl = 2.0 * (fwd.output[(0, 0)] - y) / batch.len() as f64;
            let og = Matrix::from_vec(1, 1, vec![dl])?;
            grads.add_scaled(&model_backward(ctx, params, &p.config, &fwd, &og)?, 1.0);
        }
        opt.step(params, &grads)?;
    }
    Ok(())
}

/// Times `reps` epochs per (model, layer count) after `warmup` untimed ones.
/// Parameters are re-initialized for every configuration so each timing
/// starts from the same state.
pub fn benchmark(
    models: &[BenchModel],
    layer_counts: &[usize],
    reps: usize,
    warmup: usize,
    workload: &Workload,
    threads: usize,
    mut progress: impl FnMut(&BenchRow),
) -> Result<(Vec<BenchRow>, BenchSummary)> {
    ensure!(reps >= 2, "reps must be at least 2");
    ensure!(workload.cheb_support >= 1, "cheb_support must be at least 1");
    ensure!(workload.batch_size >= 1, "batch_size must be at least 1");
    let mut rows = Vec::new();
    for &model in models {
        for &layers in layer_counts {
            let prepared = prepare(model, layers, workload)
                .with_context(|| format!("{} with {layers} layers", model.name()))?;
            prepared.config.validate()?;
            let mut params = Params::init(&prepared.config)?;
            let mut opt = Adam::new(AdamConfig::default(), params.len());
            for _ in 0..warmup {
                epoch(&prepared, &mut params, &mut opt, workload.batch_size)?;
            }
            let mut times = Vec::with_capacity(reps);
            for _ in 0..reps {
                let start = Instant::now();
                epoch(&prepared, &mut params, &mut opt, workload.batch_size)?;
                times.push(start.elapsed().as_secs_f64() * 1e3);
            }
            let (_, std) = mean_std(&times);
            let row = BenchRow {
                model: model.name().into(),
                layers,
                mean_ms: median_of_means(&times, reps.min(5)),
                std_ms: std,
                threads,
            };
            progress(&row);
            rows.push(row);
        }
    }
    let mut fits = Vec::new();
    if layer_counts.len() >= 2 {
        for &model in models {
            let (x, y): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter(|r| r.model == model.name())
                .map(|r| (r.layers as f64, r.mean_ms))
                .unzip();
            fits.push(ModelFit {
                model: model.name().into(),
                fit: linear_fit(&x, &y)?,
            });
        }
    }
    let max_layers = layer_counts.iter().copied().max();
    let at = |m: BenchModel| {
        rows.iter()
            .find(|r| r.model == m.name() && Some(r.layers) == max_layers)
            .map(|r| r.mean_ms)
    };
    let ratio_at_max_layers = match (at(BenchModel::ManyBody), at(BenchModel::Chebnet)) {
        (Some(a), Some(b)) if b > 0.0 => Some(a / b),
        _ => None,
    };
    let summary = BenchSummary {
        workload: workload.clone(),
        reps,
        warmup,
        threads,
        fits,
        ratio_at_max_layers,
    };
    Ok((rows, summary))
}

pub fn bench_csv(rows: &[BenchRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["model", "layers", "mean_ms", "std_ms", "threads"])?;
    for r in rows {
        w.write_record([
            r.model.clone(),
            r.layers.to_string(),
            format!("{:.4}", r.mean_ms),
            format!("{:.4}", r.std_ms),
            r.threads.to_string(),
        ])?;
    }
    Ok(w.into_inner()?)
}
