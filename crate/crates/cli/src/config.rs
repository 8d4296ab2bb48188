//! Run configuration files and their fully resolved form.
//!
//! A config is TOML:
//!
//! ```toml
//! seed = 1
//!
//! [dataset]
//! path = "runs/gen-er"          # or an inline [dataset.generate] table
//!
//! [model]
//! nu = 3
//! layers = 4
//! hidden_dim = 16
//!
//! [train]
//! epochs = 50
//! batch_size = 4
//!
//! [optimizer]
//! lr = 0.01
//! ```
//!
//! Resolution fills every default, infers the head and input width from the
//! data and derives the model and training seeds from the run seed when they
//! are not given. Only command-line flags override file values.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use manybody_core::analysis::LayerAveraging;
use manybody_core::curvature::WeightMode;
use manybody_core::model::{Head, ModelConfig, MotifAggregation};
use manybody_core::optim::AdamConfig;
use manybody_core::spectral::FilterBasis;
use manybody_core::synth::DatasetSpec;
use manybody_core::train::TrainConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub path: Option<PathBuf>,
    pub generate: Option<DatasetSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "source")]
pub enum DatasetSource {
    Path { path: PathBuf },
    Generate { spec: DatasetSpec },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub nu: Option<usize>,
    pub layers: Option<usize>,
    pub hidden_dim: Option<usize>,
    pub input_dim: Option<usize>,
    pub head: Option<Head>,
    pub cheb_order_2body: Option<usize>,
    pub weight_mode: Option<WeightMode>,
    pub enumeration_cap: Option<usize>,
    pub aggregation: Option<MotifAggregation>,
    pub basis: Option<FilterBasis>,
    pub wy_init_scale: Option<f64>,
    pub rng_seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub train_fraction: Option<f64>,
    pub standardize_targets: Option<bool>,
    pub energy_averaging: Option<LayerAveraging>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub run_id: Option<String>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub dataset: DatasetSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub optimizer: Option<AdamConfig>,
}

/// Everything a run needs, with no optional fields left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedConfig {
    pub seed: u64,
    pub run_id: String,
    pub out: PathBuf,
    pub dataset: DatasetSource,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

pub const DEFAULT_NU: usize = 3;
pub const DEFAULT_LAYERS: usize = 4;
pub const DEFAULT_HIDDEN: usize = 16;
pub const DEFAULT_OUT: &str = "runs";

/// Flag values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub run_id: Option<String>,
    pub epochs: Option<usize>,
}

/// What the loaded data implies for the model shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataShape {
    pub input_dim: usize,
    pub head: Head,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// The dataset source, with relative paths taken from `base`.
    pub fn dataset_source(&self, base: &Path) -> Result<DatasetSource> {
        match (&self.dataset.path, &self.dataset.generate) {
            (Some(p), None) => Ok(DatasetSource::Path {
                path: if p.is_absolute() { p.clone() } else { base.join(p) },
            }),
            (None, Some(spec)) => {
                spec.validate().context("dataset.generate")?;
                Ok(DatasetSource::Generate { spec: spec.clone() })
            }
            (Some(_), Some(_)) => bail!("dataset: give either path or generate, not both"),
            (None, None) => bail!("dataset: missing path or generate table"),
        }
    }

    /// Fills every default. `shape` comes from the data the source points to.
    pub fn resolve(&self, dataset: DatasetSource, shape: DataShape, flags: &Overrides) -> Result<ResolvedConfig> {
        let seed = flags.seed.or(self.seed).unwrap_or(0);
        let m = &self.model;
        if let Some(d) = m.input_dim {
            if d != shape.input_dim {
                bail!("model.input_dim: {d} does not match the dataset feature width {}", shape.input_dim);
            }
        }
        if let Some(h) = m.head {
            if h != shape.head {
                bail!("model.head: {h:?} does not match the dataset ({:?})", shape.head);
            }
        }
        let mut model = ModelConfig::new(
            m.nu.unwrap_or(DEFAULT_NU),
            m.layers.unwrap_or(DEFAULT_LAYERS),
            m.hidden_dim.unwrap_or(DEFAULT_HIDDEN),
            shape.input_dim,
            shape.head,
        );
        if let Some(v) = m.cheb_order_2body {
            model.cheb_order_2body = v;
        }
        if let Some(v) = m.weight_mode {
            model.weight_mode = v;
        }
        if let Some(v) = m.enumeration_cap {
            model.enumeration_cap = v;
        }
        if let Some(v) = m.aggregation {
            model.aggregation = v;
        }
        if let Some(v) = m.basis {
            model.basis = v;
        }
        if let Some(v) = m.wy_init_scale {
            model.wy_init_scale = v;
        }
        model.rng_seed = m.rng_seed.unwrap_or(seed);
        model.validate().context("model")?;

        let t = &self.train;
        let defaults = TrainConfig::default();
        let train = TrainConfig {
            epochs: flags.epochs.or(t.epochs).unwrap_or(defaults.epochs),
            batch_size: t.batch_size.unwrap_or(defaults.batch_size),
            train_fraction: t.train_fraction.unwrap_or(defaults.train_fraction),
            optimizer: self.optimizer.unwrap_or_default(),
            standardize_targets: t.standardize_targets.unwrap_or(defaults.standardize_targets),
            energy_averaging: t.energy_averaging.unwrap_or_default(),
            seed: t.seed.unwrap_or(seed),
        };
        train.validate().context("train")?;

        let out = flags
            .out
            .clone()
            .or_else(|| self.out.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        let mut resolved = ResolvedConfig {
            seed,
            run_id: String::new(),
            out,
            dataset,
            model,
            train,
        };
        resolved.run_id = match flags.run_id.clone().or_else(|| self.run_id.clone()) {
            Some(id) => id,
            None => format!("train-{}", resolved.fingerprint()?),
        };
        validate_run_id(&resolved.run_id)?;
        Ok(resolved)
    }
}

impl ResolvedConfig {
    /// Hash of the settings that determine the results (run id and output
    /// location excluded).
    pub fn fingerprint(&self) -> Result<String> {
        crate::util::short_hash(&(&self.seed, &self.dataset, &self.model, &self.train))
    }

    pub fn run_dir(&self) -> PathBuf {
        self.out.join(&self.run_id)
    }
}

pub fn validate_run_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && id != "."
        && id != ".."
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if !ok {
        bail!("run id {id:?} may only contain letters, digits, '-', '_' and '.'");
    }
    Ok(())
}
