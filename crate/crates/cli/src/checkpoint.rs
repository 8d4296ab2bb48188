use std::path::Path;

use anyhow::{bail, Context, Result};
use manybody_core::model::{ModelConfig, Params};
use manybody_core::train::{TargetScaler, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::util;

pub const CHECKPOINT_FORMAT: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format_version: u32,
    /// Epoch whose parameters these are; `None` for the initial state.
    pub epoch: Option<usize>,
    pub model: ModelConfig,
    /// Training settings, kept so evaluation can rebuild the split.
    pub train: TrainConfig,
    pub scaler: TargetScaler,
    pub params: Params,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        util::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read(path).with_context(|| format!("reading checkpoint {}", path.display()))?;
        let ck: Checkpoint =
            serde_json::from_slice(&raw).with_context(|| format!("parsing checkpoint {}", path.display()))?;
        if ck.format_version != CHECKPOINT_FORMAT {
            bail!("{}: unsupported checkpoint format {}", path.display(), ck.format_version);
        }
        ck.model.validate().context("checkpoint model")?;
        ck.params
            .check_shapes(&ck.model)
            .with_context(|| format!("{}: parameters do not match the model", path.display()))?;
        if !ck.params.all_finite() {
            bail!("{}: non-finite parameters", path.display());
        }
        Ok(ck)
    }
}
