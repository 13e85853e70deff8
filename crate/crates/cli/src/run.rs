//! Run configuration and the manifest every subcommand writes next to its outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use rdnn_core::model::{DEFAULT_FUSION_DIM, DEFAULT_TRANSFORM_DIM};
use rdnn_core::trainer::InputView;
use rdnn_core::{Method, NetworkConfig, TrainConfig};

pub const RUN_MANIFEST: &str = "run.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkShape {
    pub transform_dim: usize,
    pub fusion_dim: usize,
    pub transform_depth: usize,
}

impl Default for NetworkShape {
    fn default() -> Self {
        Self {
            transform_dim: DEFAULT_TRANSFORM_DIM,
            fusion_dim: DEFAULT_FUSION_DIM,
            transform_depth: 1,
        }
    }
}

impl NetworkShape {
    pub fn config(&self, input_dims: Vec<usize>, num_categories: usize) -> NetworkConfig {
        NetworkConfig {
            input_dims,
            transform_dim: self.transform_dim,
            fusion_dim: self.fusion_dim,
            num_categories,
            transform_depth: self.transform_depth,
        }
    }
}

/// Training configuration file. `method` decides `train.mode`; a `train.mode`
/// in the file is overwritten.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct RunConfig {
    pub method: Method,
    pub network: NetworkShape,
    pub train: TrainConfig,
}

impl RunConfig {
    /// Reads a config file, or the `config` section of a previous run manifest.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let value = match value.get("subcommand") {
            Some(_) => value.get("config").cloned().unwrap_or_default(),
            None => value,
        };
        serde_json::from_value(value)
            .map_err(rdnn_core::Error::from)
            .with_context(|| format!("invalid config {}", path.display()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub view: InputView,
    /// Relative to the run directory.
    pub path: String,
}

/// Everything needed to repeat a run: inputs, outputs, the effective config and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub seed: Option<u64>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub models: Vec<ModelFile>,
    pub config: serde_json::Value,
}

impl RunManifest {
    pub fn new(subcommand: &str, seed: Option<u64>, config: serde_json::Value) -> Self {
        Self {
            subcommand: subcommand.to_owned(),
            seed,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            models: Vec::new(),
            config,
        }
    }

    pub fn input(mut self, key: &str, path: &Path) -> Self {
        self.inputs
            .insert(key.to_owned(), path.display().to_string());
        self
    }

    pub fn output(mut self, key: &str, path: &Path) -> Self {
        self.outputs
            .insert(key.to_owned(), path.display().to_string());
        self
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text)
            .map_err(rdnn_core::Error::from)
            .with_context(|| format!("parsing run manifest {}", path.display()))
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// `<file>.run.json` for subcommands whose output is a single file.
pub fn sidecar_manifest(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".run.json");
    output.with_file_name(name)
}
