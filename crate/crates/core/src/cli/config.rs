use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::hypernets::Checkpoint;
use crate::model::DatasetManifest;
use crate::training::{Controller, TrainerConfig, Variant};
use crate::{Error, Result};

/// A manifest given inline or as a path relative to the config file.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum ManifestSource {
    Path(PathBuf),
    Inline(DatasetManifest),
}

impl ManifestSource {
    pub fn load(&self, base: &Path) -> Result<DatasetManifest> {
        match self {
            ManifestSource::Inline(m) => {
                m.validate()?;
                Ok(m.clone())
            }
            ManifestSource::Path(p) => DatasetManifest::from_json(&read_text(&base.join(p))?),
        }
    }
}

fn default_layers() -> usize {
    10
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainFile {
    pub manifest: ManifestSource,
    #[serde(default)]
    pub trainer: TrainerConfig,
    #[serde(default)]
    pub variants: Vec<Variant>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalFile {
    pub manifest: ManifestSource,
    #[serde(default)]
    pub checkpoints: Vec<PathBuf>,
    #[serde(default = "default_layers")]
    pub layers: usize,
    #[serde(default = "yes")]
    pub baselines: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Snr,
    Gamma,
    Ratio,
    Rho,
    Size,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub kind: Option<SweepKind>,
    pub grid: Vec<f64>,
    pub manifest: ManifestSource,
    #[serde(default)]
    pub checkpoints: Vec<PathBuf>,
    #[serde(default = "default_layers")]
    pub layers: usize,
    #[serde(default = "yes")]
    pub baselines: bool,
}

fn default_ratio() -> f64 {
    4.0
}

fn default_snr() -> f64 {
    15.0
}

fn default_image_layers() -> usize {
    3
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageFile {
    pub image: PathBuf,
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
    /// Measurement count; defaults to `ceil(ratio * N)`.
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    #[serde(default = "default_snr")]
    pub snr_db: f64,
    #[serde(default = "default_image_layers")]
    pub layers: usize,
    #[serde(default)]
    pub seed: u64,
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Parses a JSON config and returns it with the directory relative paths
/// resolve against.
pub fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<(T, PathBuf)> {
    let text = read_text(path)?;
    let value = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((value, base))
}

pub fn load_controller(path: &Path) -> Result<Controller> {
    if !path.exists() {
        return Err(Error::Config(format!("checkpoint {} does not exist", path.display())));
    }
    Controller::from_checkpoint(&Checkpoint::load(path)?)
}
