//! On-disk datasets: a directory with `manifest.json`, one JSON file per graph
//! and `targets.csv` when the instances carry graph-level targets.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use manybody_core::synth::{self, DatasetSpec, Family, Instance};
use manybody_core::{rng, Graph, Matrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::util::{self, sha256_hex};

pub const DATASET_FORMAT: u32 = 1;
const MANIFEST: &str = "manifest.json";
const TARGETS: &str = "targets.csv";

/// A single graph file. Only `n_nodes` and `edges` are required when the file
/// is read as a bare graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub n_nodes: usize,
    pub edges: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
}

impl GraphFile {
    pub fn from_instance(inst: &Instance) -> Self {
        let f = &inst.features;
        Self {
            n_nodes: inst.graph.n_nodes(),
            edges: inst.graph.edges().to_vec(),
            features: Some((0..f.rows()).map(|i| f.row(i).to_vec()).collect()),
            labels: inst.labels.clone(),
            target: inst.target,
        }
    }

    pub fn graph(&self) -> Result<Graph> {
        Ok(Graph::new(self.n_nodes, &self.edges)?)
    }

    pub fn feature_matrix(&self) -> Result<Option<Matrix>> {
        match &self.features {
            None => Ok(None),
            Some(rows) => {
                ensure!(
                    rows.len() == self.n_nodes,
                    "features: {} rows for {} nodes",
                    rows.len(),
                    self.n_nodes
                );
                let m = Matrix::from_rows(rows).context("features")?;
                m.check_finite().context("features")?;
                Ok(Some(m))
            }
        }
    }

    pub fn into_instance(self) -> Result<Instance> {
        let graph = self.graph()?;
        let features = self
            .feature_matrix()?
            .context("features: missing from dataset graph")?;
        if let Some(labels) = &self.labels {
            ensure!(labels.len() == self.n_nodes, "labels: {} entries for {} nodes", labels.len(), self.n_nodes);
        }
        Ok(Instance {
            graph,
            features,
            labels: self.labels,
            target: self.target,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub seed: u64,
    pub n_nodes: usize,
    pub n_edges: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    /// The spec with every default filled in.
    pub spec: DatasetSpec,
    pub entries: Vec<ManifestEntry>,
    pub targets_file: Option<String>,
    /// Set when the feature distribution is a placeholder rather than one
    /// taken from a reference dataset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_note: Option<String>,
}

/// Note recorded for families whose features are a stand-in.
pub fn feature_note(family: Family) -> Option<String> {
    match family {
        Family::Heterophilic => Some(
            "stand-in features: class-conditional Gaussians, x = class_sep * mu_label + eps with mu_c, eps ~ N(0, I)".into(),
        ),
        _ => None,
    }
}

pub struct Dataset {
    pub manifest: Manifest,
    pub manifest_sha256: String,
    pub instances: Vec<Instance>,
}

fn file_name(index: usize) -> String {
    format!("graph_{index:04}.json")
}

/// Parses a dataset spec from TOML or JSON, reporting the failing field.
pub fn parse_spec(text: &str, path: &Path) -> Result<DatasetSpec> {
    let spec: DatasetSpec = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?
    } else {
        toml::from_str(text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?
    };
    spec.validate().with_context(|| format!("{}", path.display()))?;
    Ok(spec)
}

/// Generates every instance of `spec` in parallel; results keep index order.
pub fn generate(spec: &DatasetSpec) -> Result<Vec<Instance>> {
    spec.validate()?;
    (0..spec.count)
        .into_par_iter()
        .map(|i| synth::generate_instance(spec, i).with_context(|| format!("instance {i}")))
        .collect()
}

/// Writes a dataset into `dir`, returning the manifest hash.
pub fn write(dir: &Path, spec: &DatasetSpec, instances: &[Instance]) -> Result<String> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut entries = Vec::with_capacity(instances.len());
    for (i, inst) in instances.iter().enumerate() {
        let name = file_name(i);
        let body = serde_json::to_vec(&GraphFile::from_instance(inst))?;
        util::write_file(&dir.join(&name), &body)?;
        entries.push(ManifestEntry {
            file: name,
            seed: rng::split(spec.seed, i as u64),
            n_nodes: inst.graph.n_nodes(),
            n_edges: inst.graph.n_edges(),
            sha256: sha256_hex(&body),
        });
    }
    let targets_file = if instances.iter().all(|i| i.target.is_some()) {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["graph_id", "file", "target"])?;
        for (i, inst) in instances.iter().enumerate() {
            w.write_record([i.to_string(), file_name(i), inst.target.unwrap_or_default().to_string()])?;
        }
        util::write_file(&dir.join(TARGETS), &w.into_inner()?)?;
        Some(TARGETS.to_string())
    } else {
        None
    };
    let manifest = Manifest {
        format_version: DATASET_FORMAT,
        spec: spec.clone(),
        entries,
        targets_file,
        feature_note: feature_note(spec.family),
    };
    let body = serde_json::to_vec_pretty(&manifest)?;
    util::write_file(&dir.join(MANIFEST), &body)?;
    Ok(sha256_hex(&body))
}

/// Loads and verifies a dataset directory.
pub fn load(dir: &Path) -> Result<Dataset> {
    let path = dir.join(MANIFEST);
    let body = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
    let manifest: Manifest =
        serde_json::from_slice(&body).with_context(|| format!("parsing {}", path.display()))?;
    if manifest.format_version != DATASET_FORMAT {
        bail!("{}: unsupported dataset format {}", path.display(), manifest.format_version);
    }
    let instances = manifest
        .entries
        .par_iter()
        .map(|e| {
            let p: PathBuf = dir.join(&e.file);
            let raw = fs::read(&p).with_context(|| format!("reading {}", p.display()))?;
            ensure!(sha256_hex(&raw) == e.sha256, "{}: content does not match the manifest", p.display());
            let gf: GraphFile =
                serde_json::from_slice(&raw).with_context(|| format!("parsing {}", p.display()))?;
            gf.into_instance().with_context(|| format!("{}", p.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        manifest,
        manifest_sha256: sha256_hex(&body),
        instances,
    })
}

/// Reads a bare graph file (features and labels optional).
pub fn load_graph(path: &Path) -> Result<GraphFile> {
    let raw = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let gf: GraphFile = serde_json::from_slice(&raw).with_context(|| format!("parsing {}", path.display()))?;
    gf.graph().with_context(|| format!("{}", path.display()))?;
    Ok(gf)
}
