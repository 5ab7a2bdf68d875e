//! Run manifests: every command writes one next to its outputs with the
//! full parameter set, so a saved manifest replays to byte-identical CSVs.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::formats::PgmScaling;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerateParams {
    pub n: usize,
    pub projections: usize,
    pub rays: usize,
    pub eta: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveParams {
    pub method: String,
    pub rho: f64,
    pub t0: f64,
    pub schedule: String,
    pub control: String,
    pub seed: u64,
    pub cycles: usize,
    pub lambda: f64,
    pub tau: Option<f64>,
    pub blocks: Option<usize>,
    pub mu: f64,
    pub variant: String,
    pub constraint: String,
    pub snapshot_stride: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReferenceParams {
    pub lambdas: Vec<f64>,
    pub constraint: String,
    pub max_iters: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundcheckParams {
    pub cases: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum CommandSpec {
    Generate(GenerateParams),
    Solve(SolveParams),
    Reference(ReferenceParams),
    Boundcheck(BoundcheckParams),
}

/// Scaling metadata of an exported image.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImageMeta {
    pub file: String,
    pub scaling: PgmScaling,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    #[serde(flatten)]
    pub command: CommandSpec,
    /// Input problem bundle, for commands that consume one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub problem: Option<String>,
    /// Marked true when a run aborted on a non-finite iterate; the CSV
    /// then holds only the cycles completed before the abort.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub diverged: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub images: Vec<ImageMeta>,
    /// Best regularization weight of a reference sweep.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_relative_error: Option<f64>,
}

impl RunManifest {
    pub fn new(command: CommandSpec, problem: Option<String>) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command,
            problem,
            diverged: false,
            images: Vec::new(),
            best_lambda: None,
            best_relative_error: None,
        }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self)?;
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let path = if path.is_dir() {
            path.join(MANIFEST_FILE)
        } else {
            path.to_path_buf()
        };
        let text =
            fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }
}
