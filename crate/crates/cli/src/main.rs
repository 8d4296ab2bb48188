use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use manybody_cli::bench::{BenchModel, Workload};
use manybody_cli::commands::{self, BenchArgs, Global, ProbeArgs, ProbeGraph, TrainArgs};
use manybody_cli::util::parse_list;

#[derive(Parser)]
#[command(name = "manybody", version, about = "Many-body message passing experiments")]
struct Cli {
    /// Run seed; overrides the seed in config and spec files.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for data loading, generation and probes.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Output root; every command writes to <out>/<run-id>/.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Do not mirror log lines to stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset from a TOML or JSON spec.
    Gen {
        spec: PathBuf,
        #[arg(long)]
        run_id: Option<String>,
    },
    /// Train a model from a run config, or replay a finished run.
    Train {
        config: Option<PathBuf>,
        /// Replay the resolved config stored in a run_record.json.
        #[arg(long, conflicts_with = "config")]
        from_record: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        run_id: Option<String>,
    },
    /// Evaluate a checkpoint on a dataset directory.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Expected correlation order; the checkpoint's value wins on mismatch.
        #[arg(long)]
        nu: Option<usize>,
        #[arg(long)]
        run_id: Option<String>,
    },
    /// Time training epochs against layer count.
    Bench(BenchCli),
    /// Balanced Forman curvature of every edge of a graph file.
    Curvature {
        graph: PathBuf,
        #[arg(long)]
        run_id: Option<String>,
    },
    /// Jacobian sensitivity of node features to a source node.
    Probe(ProbeCli),
}

#[derive(Args)]
struct BenchCli {
    #[arg(long, default_value = "many-body,chebnet")]
    models: String,
    #[arg(long, default_value = "5,10,15,20")]
    layers: String,
    #[arg(long, default_value_t = 30)]
    reps: usize,
    #[arg(long, default_value_t = 3)]
    warmup: usize,
    #[arg(long, default_value_t = 4)]
    nu: usize,
    #[arg(long, default_value_t = 16)]
    hidden: usize,
    /// Number of two-body Chebyshev coefficients.
    #[arg(long, default_value_t = 4)]
    cheb_support: usize,
    #[arg(long, default_value_t = 4)]
    graphs: usize,
    #[arg(long, default_value_t = 100)]
    nodes: usize,
    #[arg(long, default_value_t = 0.1)]
    edge_prob: f64,
    #[arg(long, default_value_t = 4)]
    batch_size: usize,
    #[arg(long)]
    run_id: Option<String>,
}

#[derive(Args)]
struct ProbeCli {
    /// Graph JSON file; defaults to a spine graph.
    #[arg(long, conflicts_with = "spine")]
    graph: Option<PathBuf>,
    /// Spine graph as LENGTH,LEAVES.
    #[arg(long, default_value = "8,2")]
    spine: String,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    nu: usize,
    #[arg(long, default_value_t = 4)]
    layers: usize,
    #[arg(long, default_value_t = 8)]
    hidden: usize,
    #[arg(long, default_value_t = 1)]
    cheb_order: usize,
    #[arg(long, default_value_t = 4)]
    input_dim: usize,
    #[arg(long, default_value_t = 0)]
    source: usize,
    /// Comma-separated depths; default 0..=layers.
    #[arg(long)]
    depths: Option<String>,
    #[arg(long)]
    run_id: Option<String>,
}

fn list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    parse_list(s).map_err(|e| anyhow::anyhow!("--{what}: {e}"))
}

fn run(cli: Cli) -> Result<ExitCode> {
    let global = Global {
        seed: cli.seed,
        threads: cli.threads,
        out: cli.out,
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Gen { spec, run_id } => {
            let out = commands::cmd_gen(&spec, run_id, &global)?;
            println!("{}", out.dir.display());
        }
        Command::Train {
            config,
            from_record,
            epochs,
            run_id,
        } => {
            let args = TrainArgs {
                config,
                from_record,
                run_id,
                epochs,
            };
            let out = commands::cmd_train(&args, &global)?;
            println!("{}", out.dir.display());
            if let Some(reason) = &out.record.aborted {
                eprintln!("error: training aborted: {reason}");
                return Ok(ExitCode::from(3));
            }
        }
        Command::Eval {
            checkpoint,
            dataset,
            nu,
            run_id,
        } => {
            let report = commands::cmd_eval(&checkpoint, &dataset, nu, run_id, &global)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Bench(b) => {
            let models = list::<String>(&b.models, "models")?
                .iter()
                .map(|m| BenchModel::parse(m))
                .collect::<Result<Vec<_>>>()?;
            let args = BenchArgs {
                models,
                layers: list(&b.layers, "layers")?,
                reps: b.reps,
                warmup: b.warmup,
                workload: Workload {
                    n_graphs: b.graphs,
                    n_nodes: b.nodes,
                    edge_prob: b.edge_prob,
                    hidden_dim: b.hidden,
                    nu: b.nu,
                    cheb_support: b.cheb_support,
                    batch_size: b.batch_size,
                    ..Workload::default()
                },
                run_id: b.run_id,
            };
            let out = commands::cmd_bench(&args, &global)?;
            println!("{}", out.dir.display());
        }
        Command::Curvature { graph, run_id } => {
            let (dir, _) = commands::cmd_curvature(&graph, run_id, &global)?;
            println!("{}", dir.display());
        }
        Command::Probe(p) => {
            let graph = match p.graph {
                Some(path) => ProbeGraph::File(path),
                None => {
                    let parts: Vec<usize> = list(&p.spine, "spine")?;
                    let [length, leaves] = parts[..] else {
                        anyhow::bail!("--spine: expected LENGTH,LEAVES");
                    };
                    ProbeGraph::Spine { length, leaves }
                }
            };
            let args = ProbeArgs {
                graph,
                checkpoint: p.checkpoint,
                nu: p.nu,
                layers: p.layers,
                hidden_dim: p.hidden,
                cheb_order_2body: p.cheb_order,
                input_dim: p.input_dim,
                source: p.source,
                depths: p.depths.as_deref().map(|d| list(d, "depths")).transpose()?,
                run_id: p.run_id,
            };
            let out = commands::cmd_probe(&args, &global)?;
            println!("{}", out.dir.display());
            if out.violations > 0 {
                eprintln!("error: {} probes are nonzero outside the receptive field", out.violations);
                return Ok(ExitCode::from(4));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
