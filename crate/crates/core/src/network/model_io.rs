//! JSON model files.
//!
//! ```json
//! {
//!   "format-version": 1,
//!   "architecture": {"kind": "proposed", "input-dim": 5, "embed-dim": 8},
//!   "pool": "mean",
//!   "layers": [{"stage": "pre-pool", "rows": 8, "cols": 5, "weights": [...],
//!               "bias": [...], "activation": "relu"}, ...],
//!   "standardizer": {"mean": [...], "scale": [...]}
//! }
//! ```
//!
//! Floats are written in the shortest decimal form that parses back to the same
//! bits, so save followed by load is exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::layer::{Activation, Layer};
use super::net::{ArchKind, Architecture, Network};
use super::pooling::PoolKind;
use crate::data::Standardizer;
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Stage {
    PrePool,
    PostPool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct ArchitectureFile {
    kind: ArchKind,
    input_dim: usize,
    embed_dim: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerFile {
    stage: Stage,
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
    activation: Activation,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    architecture: ArchitectureFile,
    pool: PoolKind,
    layers: Vec<LayerFile>,
    standardizer: Option<Standardizer>,
}

impl Network {
    pub fn to_json(&self) -> String {
        let arch = self.architecture();
        let layer_file = |stage: fn() -> Stage, l: &Layer| LayerFile {
            stage: stage(),
            rows: l.rows,
            cols: l.cols,
            weights: l.weights.clone(),
            bias: l.bias.clone(),
            activation: l.activation,
        };
        let file = ModelFile {
            format_version: FORMAT_VERSION,
            architecture: ArchitectureFile {
                kind: arch.kind,
                input_dim: arch.input_dim,
                embed_dim: arch.embed_dim,
            },
            pool: self.pool(),
            layers: self
                .pre_layers()
                .iter()
                .map(|l| layer_file(|| Stage::PrePool, l))
                .chain(self.post_layers().iter().map(|l| layer_file(|| Stage::PostPool, l)))
                .collect(),
            standardizer: self.standardizer().cloned(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("model serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Network> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::Model(e.to_string()))?;
        if file.format_version != FORMAT_VERSION {
            return Err(Error::Model(format!(
                "unsupported format-version {} (expected {FORMAT_VERSION})",
                file.format_version
            )));
        }
        let mut pre = Vec::new();
        let mut post = Vec::new();
        for lf in file.layers {
            let layer = Layer::new(lf.rows, lf.cols, lf.weights, lf.bias, lf.activation)?;
            match lf.stage {
                Stage::PrePool if !post.is_empty() => {
                    return Err(Error::Model("pre-pool layer listed after a post-pool layer".into()))
                }
                Stage::PrePool => pre.push(layer),
                Stage::PostPool => post.push(layer),
            }
        }
        let arch = Architecture {
            kind: file.architecture.kind,
            input_dim: file.architecture.input_dim,
            embed_dim: file.architecture.embed_dim,
        };
        Network::new(arch, file.pool, pre, post)?.with_standardizer(file.standardizer)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Network> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Network::from_json(&text)
    }
}
