//! Subcommand implementations. Each writes its artifacts under
//! `<out>/<run-id>/` and returns a summary for the caller.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use manybody_core::analysis::dirichlet_energy;
use manybody_core::curvature::balanced_forman;
use manybody_core::model::{jacobian_probe, model_forward, GraphContext, Head, ModelConfig, Params, PROBE_EPS};
use manybody_core::synth::{self, DatasetSpec, Family, Instance};
use manybody_core::train::{self, evaluate, split_indices, GraphSample, Task};
use manybody_core::graph::UNREACHABLE;
use manybody_core::Graph;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::{self, BenchModel, BenchRow, BenchSummary, Workload};
use crate::checkpoint::{Checkpoint, CHECKPOINT_FORMAT};
use crate::config::{self, DataShape, DatasetSource, Overrides, ResolvedConfig, RunConfig};
use crate::dataset;
use crate::record::{self, EpochRow, Environment, RunRecord, Seeds, RECORD_FORMAT};
use crate::util::{self, short_hash, RunLog};

/// Flags shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Global {
    pub seed: Option<u64>,
    pub threads: usize,
    pub out: Option<PathBuf>,
    /// Suppress the stderr copy of the log.
    pub quiet: bool,
}

impl Default for Global {
    fn default() -> Self {
        Self {
            seed: None,
            threads: 1,
            out: None,
            quiet: true,
        }
    }
}

impl Global {
    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(config::DEFAULT_OUT))
    }

    fn run_dir(&self, run_id: &str) -> Result<PathBuf> {
        config::validate_run_id(run_id)?;
        Ok(self.out_dir().join(run_id))
    }

    /// Runs `f` inside a rayon pool of the requested size.
    pub fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        ensure!(self.threads >= 1, "--threads must be at least 1");
        let pool = rayon::ThreadPoolBuilder::new().num_threads(self.threads).build()?;
        Ok(pool.install(f))
    }
}

// ---------------------------------------------------------------- gen

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenOutput {
    pub dir: PathBuf,
    pub manifest_sha256: String,
    pub count: usize,
}

pub fn cmd_gen(spec_path: &Path, run_id: Option<String>, global: &Global) -> Result<GenOutput> {
    let text = std::fs::read_to_string(spec_path).with_context(|| format!("reading {}", spec_path.display()))?;
    let mut spec = dataset::parse_spec(&text, spec_path)?;
    if let Some(seed) = global.seed {
        spec.seed = seed;
    }
    gen_spec(&spec, run_id, global)
}

pub fn gen_spec(spec: &DatasetSpec, run_id: Option<String>, global: &Global) -> Result<GenOutput> {
    spec.validate()?;
    let run_id = match run_id {
        Some(id) => id,
        None => format!("gen-{}", short_hash(spec)?),
    };
    let dir = global.run_dir(&run_id)?;
    let instances = global.install(|| dataset::generate(spec))??;
    let manifest_sha256 = dataset::write(&dir, spec, &instances)?;
    let mut log = RunLog::create(&dir.join("gen.log"), global.quiet)?;
    log.line(format!(
        "generated {} {:?} graphs into {} (manifest sha256 {manifest_sha256})",
        instances.len(),
        spec.family,
        dir.display()
    ))?;
    Ok(GenOutput {
        dir,
        manifest_sha256,
        count: instances.len(),
    })
}

// ---------------------------------------------------------------- data → task

pub struct LoadedData {
    pub instances: Vec<Instance>,
    pub spec: Option<DatasetSpec>,
    pub manifest_sha256: String,
}

pub fn load_source(source: &DatasetSource, global: &Global) -> Result<LoadedData> {
    match source {
        DatasetSource::Path { path } => {
            let ds = global.install(|| dataset::load(path))??;
            Ok(LoadedData {
                instances: ds.instances,
                spec: Some(ds.manifest.spec),
                manifest_sha256: ds.manifest_sha256,
            })
        }
        DatasetSource::Generate { spec } => Ok(LoadedData {
            instances: global.install(|| dataset::generate(spec))??,
            spec: Some(spec.clone()),
            manifest_sha256: util::sha256_hex(&serde_json::to_vec(spec)?),
        }),
    }
}

/// Head and input width implied by the data.
pub fn data_shape(data: &LoadedData) -> Result<DataShape> {
    let first = data.instances.first().context("dataset is empty")?;
    let input_dim = first.features.cols();
    for (i, inst) in data.instances.iter().enumerate() {
        ensure!(
            inst.features.cols() == input_dim,
            "graph {i}: feature width {} differs from {input_dim}",
            inst.features.cols()
        );
    }
    let head = if data.instances.iter().all(|i| i.target.is_some()) {
        Head::GraphRegression
    } else if let Some(labels) = &first.labels {
        ensure!(
            data.instances.len() == 1,
            "node classification expects a single-graph dataset, got {} graphs",
            data.instances.len()
        );
        let mut n_classes = labels.iter().copied().max().map_or(1, |m| m + 1);
        if let Some(spec) = &data.spec {
            if spec.family == Family::Heterophilic {
                n_classes = n_classes.max(spec.n_classes);
            }
        }
        Head::NodeClassification { n_classes }
    } else {
        bail!("dataset has neither graph targets nor node labels");
    };
    Ok(DataShape { input_dim, head })
}

/// Builds the training task; curvature and motif plans are computed in parallel.
pub fn build_task(instances: Vec<Instance>, config: &ModelConfig, global: &Global) -> Result<Task> {
    for (i, inst) in instances.iter().enumerate() {
        ensure!(
            inst.features.cols() == config.input_dim,
            "graph {i}: feature width {} does not match the model input_dim {}",
            inst.features.cols(),
            config.input_dim
        );
    }
    match config.head {
        Head::GraphRegression => {
            let samples = global.install(|| {
                instances
                    .into_par_iter()
                    .enumerate()
                    .map(|(i, inst)| {
                        let target = inst.target.with_context(|| format!("graph {i}: missing target"))?;
                        Ok(GraphSample {
                            ctx: GraphContext::new(inst.graph, config)?,
                            features: inst.features,
                            target,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })??;
            Ok(Task::GraphRegression(samples))
        }
        Head::NodeClassification { n_classes } => {
            ensure!(instances.len() == 1, "node classification expects a single graph");
            let inst = instances.into_iter().next().expect("one instance");
            let labels = inst.labels.context("graph 0: missing node labels")?;
            if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
                bail!("label {bad} out of range for {n_classes} classes");
            }
            Ok(Task::NodeClassification {
                ctx: GraphContext::new(inst.graph, config)?,
                features: inst.features,
                labels,
            })
        }
    }
}

// ---------------------------------------------------------------- train

#[derive(Debug, Clone, Default)]
pub struct TrainArgs {
    pub config: Option<PathBuf>,
    pub from_record: Option<PathBuf>,
    pub run_id: Option<String>,
    pub epochs: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub dir: PathBuf,
    pub record: RunRecord,
}

/// Resolves a train invocation to a complete configuration.
pub fn resolve_train(args: &TrainArgs, global: &Global) -> Result<(ResolvedConfig, LoadedData)> {
    match (&args.config, &args.from_record) {
        (Some(path), None) => {
            let cfg = RunConfig::load(path)?;
            let base = path.parent().unwrap_or_else(|| Path::new("."));
            let source = cfg.dataset_source(base)?;
            let data = load_source(&source, global)?;
            let shape = data_shape(&data)?;
            let flags = Overrides {
                seed: global.seed,
                out: global.out.clone(),
                run_id: args.run_id.clone(),
                epochs: args.epochs,
            };
            let resolved = cfg.resolve(source, shape, &flags)?;
            Ok((resolved, data))
        }
        (None, Some(path)) => {
            let raw = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
            let rec: RunRecord =
                serde_json::from_slice(&raw).with_context(|| format!("parsing run record {}", path.display()))?;
            if global.seed.is_some() || args.epochs.is_some() {
                bail!("--seed and --epochs cannot change a replayed run");
            }
            let mut resolved = rec.resolved;
            resolved.run_id = args.run_id.clone().unwrap_or_else(|| format!("{}-replay", resolved.run_id));
            config::validate_run_id(&resolved.run_id)?;
            if let Some(out) = &global.out {
                resolved.out = out.clone();
            }
            let data = load_source(&resolved.dataset, global)?;
            if data.manifest_sha256 != rec.dataset_manifest_sha256 {
                bail!("dataset manifest changed since the recorded run");
            }
            Ok((resolved, data))
        }
        (Some(_), Some(_)) => bail!("give either a config file or --from-record, not both"),
        (None, None) => bail!("missing config file (or --from-record)"),
    }
}

pub fn cmd_train(args: &TrainArgs, global: &Global) -> Result<TrainOutput> {
    let (resolved, data) = resolve_train(args, global)?;
    run_training(resolved, data, global)
}

pub fn run_training(resolved: ResolvedConfig, data: LoadedData, global: &Global) -> Result<TrainOutput> {
    let dir = resolved.run_dir();
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut log = RunLog::create(&dir.join("train.log"), global.quiet)?;
    log.line(format!("run {} -> {}", resolved.run_id, dir.display()))?;
    log.line(format!("config {}", serde_json::to_string(&resolved)?))?;

    let manifest_sha256 = data.manifest_sha256.clone();
    let dataset_seed = data.spec.as_ref().map(|s| s.seed);
    let model = resolved.model.clone();
    let tc = resolved.train.clone();
    let task = build_task(data.instances, &model, global)?;
    let scaler = train::fitted_scaler(&task, &tc);
    let init = Params::init(&model)?;

    let start = Instant::now();
    let mut rows: Vec<EpochRow> = Vec::new();
    let mut log_err = None;
    let outcome = train::train(&task, &model, &tc, init, |m, _| {
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        if log_err.is_none() {
            if let Err(e) = log.line(format!(
                "epoch {:>4}  train_loss {:.6e}  test_metric {:.6e}  energy {:.6e}  bound_ok {}",
                m.epoch, m.train_loss, m.test_metric, m.dirichlet_energy, m.bound_satisfied
            )) {
                log_err = Some(e);
            }
        }
        rows.push(EpochRow {
            metrics: m.clone(),
            wall_ms,
        });
    })?;
    if let Some(e) = log_err {
        return Err(e);
    }

    let checkpoint = dir.join("checkpoint.json");
    Checkpoint {
        format_version: CHECKPOINT_FORMAT,
        epoch: rows.last().map(|r| r.metrics.epoch),
        model: model.clone(),
        train: tc.clone(),
        scaler,
        params: outcome.params.clone(),
    }
    .save(&checkpoint)?;
    let best_checkpoint = match &outcome.best {
        Some((epoch, params)) => {
            let path = dir.join("checkpoint_best.json");
            Checkpoint {
                format_version: CHECKPOINT_FORMAT,
                epoch: Some(*epoch),
                model: model.clone(),
                train: tc.clone(),
                scaler,
                params: params.clone(),
            }
            .save(&path)?;
            Some(path)
        }
        None => None,
    };

    util::write_file(&dir.join("metrics.csv"), &record::metrics_csv(&rows, model.nu, true)?)?;
    util::write_file(&dir.join("energy_trace.csv"), &record::energy_trace_csv(&rows)?)?;
    util::write_file(&dir.join("bound.csv"), &record::bound_csv(&rows)?)?;
    let metrics_sha256 = record::metrics_hash(&rows, model.nu)?;

    if let Some(reason) = &outcome.aborted {
        log.line(format!("aborted: {reason}; checkpoint holds the last finite parameters"))?;
    }
    log.line(format!("metrics sha256 {metrics_sha256}"))?;

    let record = RunRecord {
        format_version: RECORD_FORMAT,
        seeds: Seeds {
            run: resolved.seed,
            model_init: model.rng_seed,
            split_and_shuffle: tc.seed,
            dataset: dataset_seed,
        },
        resolved,
        dataset_manifest_sha256: manifest_sha256,
        metrics: rows,
        metrics_sha256,
        checkpoint,
        best_checkpoint,
        best_epoch: outcome.best.as_ref().map(|(e, _)| *e),
        aborted: outcome.aborted,
        environment: Environment::capture(global.threads),
    };
    util::write_json(&dir.join("run_record.json"), &record)?;
    util::write_json(
        &dir.join("manifest.json"),
        &serde_json::json!({
            "command": "train",
            "run_id": record.resolved.run_id,
            "files": ["train.log", "metrics.csv", "energy_trace.csv", "bound.csv",
                      "checkpoint.json", "checkpoint_best.json", "run_record.json"],
            "metrics_sha256": record.metrics_sha256,
            "dataset_manifest_sha256": record.dataset_manifest_sha256,
        }),
    )?;
    Ok(TrainOutput { dir, record })
}

// ---------------------------------------------------------------- eval

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub checkpoint: PathBuf,
    pub dataset: PathBuf,
    pub nu: usize,
    /// `mse` for graph regression, `accuracy` for node classification.
    pub metric: String,
    pub train_metric: f64,
    pub test_metric: f64,
    /// Mean Dirichlet energy of the last hidden layer over all graphs.
    pub dirichlet_energy: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub warnings: Vec<String>,
}

pub fn cmd_eval(
    checkpoint: &Path,
    dataset_dir: &Path,
    nu_flag: Option<usize>,
    run_id: Option<String>,
    global: &Global,
) -> Result<EvalReport> {
    let ck = Checkpoint::load(checkpoint)?;
    let mut warnings = Vec::new();
    if let Some(nu) = nu_flag {
        if nu != ck.model.nu {
            let w = format!("warning: --nu {nu} ignored; the checkpoint was trained with nu = {}", ck.model.nu);
            eprintln!("{w}");
            warnings.push(w);
        }
    }
    let ds = global.install(|| dataset::load(dataset_dir))??;
    let data = LoadedData {
        instances: ds.instances,
        spec: Some(ds.manifest.spec),
        manifest_sha256: ds.manifest_sha256,
    };
    let shape = data_shape(&data)?;
    if shape.input_dim != ck.model.input_dim {
        bail!(
            "dimension mismatch: dataset features have width {}, checkpoint expects {}",
            shape.input_dim,
            ck.model.input_dim
        );
    }
    if std::mem::discriminant(&shape.head) != std::mem::discriminant(&ck.model.head) {
        bail!("dataset task {:?} does not match the checkpoint head {:?}", shape.head, ck.model.head);
    }
    let run_id = match run_id {
        Some(id) => id,
        None => format!("eval-{}", short_hash(&(util::sha256_hex(&serde_json::to_vec(&ck)?), &data.manifest_sha256))?),
    };
    let dir = global.run_dir(&run_id)?;
    let task = build_task(data.instances, &ck.model, global)?;
    let n = match &task {
        Task::GraphRegression(s) => s.len(),
        Task::NodeClassification { labels, .. } => labels.len(),
    };
    let (train_idx, test_idx) = split_indices(n, ck.train.train_fraction, ck.train.seed);
    let train_metric = evaluate(&task, &ck.model, &ck.params, &train_idx, ck.scaler)?;
    let test_metric = evaluate(&task, &ck.model, &ck.params, &test_idx, ck.scaler)?;
    let dirichlet = match &task {
        Task::GraphRegression(samples) => {
            let mut total = 0.0;
            for s in samples {
                let fwd = model_forward(&s.ctx, &ck.params, &ck.model, &s.features, false)?;
                total += dirichlet_energy(&s.ctx.graph, &fwd.hidden)?;
            }
            total / samples.len() as f64
        }
        Task::NodeClassification { ctx, features, .. } => {
            let fwd = model_forward(ctx, &ck.params, &ck.model, features, false)?;
            dirichlet_energy(&ctx.graph, &fwd.hidden)?
        }
    };
    let report = EvalReport {
        checkpoint: checkpoint.to_path_buf(),
        dataset: dataset_dir.to_path_buf(),
        nu: ck.model.nu,
        metric: match ck.model.head {
            Head::GraphRegression => "mse".into(),
            Head::NodeClassification { .. } => "accuracy".into(),
        },
        train_metric,
        test_metric,
        dirichlet_energy: dirichlet,
        n_train: train_idx.len(),
        n_test: test_idx.len(),
        warnings,
    };
    util::write_json(&dir.join("eval.json"), &report)?;
    let mut log = RunLog::create(&dir.join("eval.log"), global.quiet)?;
    for w in &report.warnings {
        log.line(w)?;
    }
    log.line(format!(
        "{} train {:.6e} test {:.6e} energy {:.6e}",
        report.metric, report.train_metric, report.test_metric, report.dirichlet_energy
    ))?;
    Ok(report)
}

// ---------------------------------------------------------------- bench

#[derive(Debug, Clone)]
pub struct BenchArgs {
    pub models: Vec<BenchModel>,
    pub layers: Vec<usize>,
    pub reps: usize,
    pub warmup: usize,
    pub workload: Workload,
    pub run_id: Option<String>,
}

impl Default for BenchArgs {
    fn default() -> Self {
        Self {
            models: vec![BenchModel::ManyBody, BenchModel::Chebnet],
            layers: vec![5, 10, 15, 20],
            reps: 30,
            warmup: 3,
            workload: Workload::default(),
            run_id: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchOutput {
    pub dir: PathBuf,
    pub rows: Vec<BenchRow>,
    pub summary: BenchSummary,
}

pub fn cmd_bench(args: &BenchArgs, global: &Global) -> Result<BenchOutput> {
    ensure!(!args.models.is_empty(), "no models to benchmark");
    ensure!(!args.layers.is_empty(), "no layer counts to benchmark");
    let mut workload = args.workload.clone();
    if let Some(seed) = global.seed {
        workload.seed = seed;
    }
    let run_id = match &args.run_id {
        Some(id) => id.clone(),
        None => format!("bench-{}", short_hash(&(&args.layers, args.reps, &workload))?),
    };
    let dir = global.run_dir(&run_id)?;
    let mut log = RunLog::create(&dir.join("bench.log"), global.quiet)?;
    let mut lines = Vec::new();
    let (rows, summary) = global.install(|| {
        bench::benchmark(&args.models, &args.layers, args.reps, args.warmup, &workload, global.threads, |r| {
            lines.push(format!("{:<10} layers {:>3}  mean {:>10.3} ms  std {:>8.3} ms", r.model, r.layers, r.mean_ms, r.std_ms));
        })
    })??;
    for l in lines {
        log.line(l)?;
    }
    for f in &summary.fits {
        log.line(format!(
            "{:<10} slope {:.4} ms/layer  intercept {:.4} ms  r2 {:.5}",
            f.model, f.fit.slope, f.fit.intercept, f.fit.r2
        ))?;
    }
    if let Some(r) = summary.ratio_at_max_layers {
        log.line(format!("many-body / chebnet at {} layers: {r:.3}x", args.layers.iter().max().unwrap()))?;
    }
    util::write_file(&dir.join("bench.csv"), &bench::bench_csv(&rows)?)?;
    util::write_json(&dir.join("bench_summary.json"), &summary)?;
    util::write_json(&dir.join("manifest.json"), &serde_json::json!({
        "command": "bench",
        "run_id": run_id,
        "files": ["bench.log", "bench.csv", "bench_summary.json"],
        "environment": Environment::capture(global.threads),
    }))?;
    Ok(BenchOutput { dir, rows, summary })
}

// ---------------------------------------------------------------- curvature

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureRow {
    pub edge_id: usize,
    pub u: usize,
    pub v: usize,
    pub ricci: f64,
    pub rounded: i8,
}

pub fn cmd_curvature(graph_path: &Path, run_id: Option<String>, global: &Global) -> Result<(PathBuf, Vec<CurvatureRow>)> {
    let gf = dataset::load_graph(graph_path)?;
    let g = gf.graph()?;
    let cm = balanced_forman(&g);
    let rows: Vec<CurvatureRow> = g
        .edges()
        .iter()
        .enumerate()
        .map(|(e, &(u, v))| CurvatureRow {
            edge_id: e,
            u,
            v,
            ricci: cm.values[e],
            rounded: cm.rounded[e],
        })
        .collect();
    let run_id = match run_id {
        Some(id) => id,
        None => format!("curvature-{}", short_hash(&(g.n_nodes(), g.edges()))?),
    };
    let dir = global.run_dir(&run_id)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(["edge_id", "u", "v", "ricci", "rounded"])?;
    }
    util::write_file(&dir.join("curvature.csv"), &w.into_inner()?)?;
    let mut log = RunLog::create(&dir.join("curvature.log"), global.quiet)?;
    log.line(format!("{} edges from {}", rows.len(), graph_path.display()))?;
    Ok((dir, rows))
}

// ---------------------------------------------------------------- probe

#[derive(Debug, Clone)]
pub enum ProbeGraph {
    File(PathBuf),
    Spine { length: usize, leaves: usize },
}

#[derive(Debug, Clone)]
pub struct ProbeArgs {
    pub graph: ProbeGraph,
    /// Trained model; when absent a freshly initialized one is probed.
    pub checkpoint: Option<PathBuf>,
    pub nu: usize,
    pub layers: usize,
    pub hidden_dim: usize,
    pub cheb_order_2body: usize,
    /// Width of the generated structural features when the graph has none.
    pub input_dim: usize,
    pub source: usize,
    /// Depths to probe; default `0..=layers`.
    pub depths: Option<Vec<usize>>,
    pub run_id: Option<String>,
}

impl Default for ProbeArgs {
    fn default() -> Self {
        Self {
            graph: ProbeGraph::Spine { length: 8, leaves: 2 },
            checkpoint: None,
            nu: 3,
            layers: 4,
            hidden_dim: 8,
            cheb_order_2body: 1,
            input_dim: 4,
            source: 0,
            depths: None,
            run_id: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub u: usize,
    pub v: usize,
    pub r: usize,
    /// Hop distance; `None` when `v` is unreachable from `u`.
    pub distance: Option<u32>,
    /// Hops a depth-`r` model can see: `r · max(cheb_order_2body, 1)`.
    pub reach: usize,
    pub sensitivity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub r: usize,
    pub distance: u32,
    pub pairs: usize,
    pub mean_sensitivity: f64,
    pub max_sensitivity: f64,
}

#[derive(Debug, Clone)]
pub struct ProbeOutput {
    pub dir: PathBuf,
    pub rows: Vec<ProbeRow>,
    pub profile: Vec<ProfileRow>,
    /// Rows with `distance > reach` and a nonzero sensitivity.
    pub violations: usize,
}

pub fn cmd_probe(args: &ProbeArgs, global: &Global) -> Result<ProbeOutput> {
    let seed = global.seed.unwrap_or(0);
    let (graph, file_features): (Graph, _) = match &args.graph {
        ProbeGraph::File(p) => {
            let gf = dataset::load_graph(p)?;
            (gf.graph()?, gf.feature_matrix()?)
        }
        ProbeGraph::Spine { length, leaves } => (synth::spine(*length, *leaves)?, None),
    };
    let (config, params) = match &args.checkpoint {
        Some(p) => {
            let ck = Checkpoint::load(p)?;
            (ck.model, ck.params)
        }
        None => {
            let input_dim = file_features.as_ref().map_or(args.input_dim, |f| f.cols());
            let mut cfg = ModelConfig::new(args.nu, args.layers, args.hidden_dim, input_dim, Head::GraphRegression);
            cfg.cheb_order_2body = args.cheb_order_2body;
            cfg.rng_seed = seed;
            cfg.validate()?;
            let params = Params::init(&cfg)?;
            (cfg, params)
        }
    };
    let x = match file_features {
        Some(f) => f,
        None => synth::structural_features(&graph, config.input_dim, seed)?,
    };
    ensure!(
        x.cols() == config.input_dim,
        "dimension mismatch: features have width {}, model expects {}",
        x.cols(),
        config.input_dim
    );
    let n = graph.n_nodes();
    ensure!(args.source < n, "--source {} out of range for {n} nodes", args.source);
    let depths = args.depths.clone().unwrap_or_else(|| (0..=config.layers).collect());
    if let Some(&r) = depths.iter().find(|&&r| r > config.layers) {
        bail!("depth {r} exceeds the model's {} layers", config.layers);
    }
    let run_id = match &args.run_id {
        Some(id) => id.clone(),
        None => format!("probe-{}", short_hash(&(n, graph.edges(), &config, seed, args.source, &depths))?),
    };
    let dir = global.run_dir(&run_id)?;
    let distances = graph.bfs(args.source);
    let ctx = GraphContext::new(graph, &config)?;
    let hops = config.cheb_order_2body.max(1);
    let u = args.source;
    let jobs: Vec<(usize, usize)> = depths.iter().flat_map(|&r| (0..n).map(move |v| (r, v))).collect();
    let rows = global.install(|| {
        jobs.par_iter()
            .map(|&(r, v)| {
                let s = jacobian_probe(&ctx, &params, &config, &x, u, v, r, PROBE_EPS)?;
                Ok(ProbeRow {
                    u,
                    v,
                    r,
                    distance: (distances[v] != UNREACHABLE).then_some(distances[v]),
                    reach: r * hops,
                    sensitivity: s,
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let violations = rows
        .iter()
        .filter(|r| r.distance.is_none_or(|d| d as usize > r.reach) && r.sensitivity != 0.0)
        .count();
    let profile = distance_profile(&rows);

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["u", "v", "r", "distance", "reach", "sensitivity"])?;
    for r in &rows {
        w.write_record([
            r.u.to_string(),
            r.v.to_string(),
            r.r.to_string(),
            r.distance.map_or_else(String::new, |d| d.to_string()),
            r.reach.to_string(),
            r.sensitivity.to_string(),
        ])?;
    }
    util::write_file(&dir.join("probe.csv"), &w.into_inner()?)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in &profile {
        w.serialize(p)?;
    }
    util::write_file(&dir.join("profile.csv"), &w.into_inner()?)?;
    let mut log = RunLog::create(&dir.join("probe.log"), global.quiet)?;
    log.line(format!(
        "{} probes from node {u}; {violations} nonzero beyond the receptive field",
        rows.len()
    ))?;
    Ok(ProbeOutput {
        dir,
        rows,
        profile,
        violations,
    })
}

/// Mean and max sensitivity per `(r, distance)`, unreachable pairs dropped.
pub fn distance_profile(rows: &[ProbeRow]) -> Vec<ProfileRow> {
    let mut groups: std::collections::BTreeMap<(usize, u32), Vec<f64>> = Default::default();
    for r in rows {
        if let Some(d) = r.distance {
            groups.entry((r.r, d)).or_default().push(r.sensitivity);
        }
    }
    groups
        .into_iter()
        .map(|((r, distance), s)| ProfileRow {
            r,
            distance,
            pairs: s.len(),
            mean_sensitivity: s.iter().sum::<f64>() / s.len() as f64,
            max_sensitivity: s.iter().copied().fold(0.0, f64::max),
        })
        .collect()
}
