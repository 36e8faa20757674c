use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::weights::Parametric;
use crate::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "gecsr-checkpoint/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub variant: String,
    /// Signal length the controller was built for.
    pub n: usize,
    /// Trained depth; the recurrent controllers can run past it.
    pub layers: usize,
    #[serde(default)]
    pub hidden: usize,
    #[serde(default)]
    pub heads: usize,
    #[serde(default)]
    pub bias: bool,
    #[serde(default)]
    pub tied: bool,
    pub seed: u64,
    #[serde(default)]
    pub steps: usize,
    #[serde(default)]
    pub manifest_hash: Option<String>,
    #[serde(default)]
    pub no_progress: bool,
    #[serde(default)]
    pub config: Option<serde_json::Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedArray {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub kind: String,
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub meta: CheckpointMeta,
    pub arrays: Vec<NamedArray>,
    #[serde(default)]
    pub optimizer: Option<OptimizerState>,
}

impl Checkpoint {
    pub fn from_bundle(meta: CheckpointMeta, bundle: &dyn Parametric) -> Self {
        let arrays = bundle
            .arrays()
            .into_iter()
            .map(|(name, w)| NamedArray { name, rows: w.rows(), cols: w.cols(), data: w.data().to_vec() })
            .collect();
        Self { format: CHECKPOINT_FORMAT.into(), meta, arrays, optimizer: None }
    }

    /// Copies the stored arrays into a bundle of the same layout.
    pub fn load_into(&self, bundle: &mut dyn Parametric) -> Result<()> {
        let layout = bundle.layout();
        if layout.len() != self.arrays.len() {
            return Err(Error::Checkpoint(format!(
                "checkpoint holds {} arrays, the {} controller needs {}",
                self.arrays.len(),
                self.meta.variant,
                layout.len()
            )));
        }
        for (spec, stored) in layout.iter().zip(&self.arrays) {
            if spec.name != stored.name || spec.rows != stored.rows || spec.cols != stored.cols {
                return Err(Error::Checkpoint(format!(
                    "array {} ({}x{}) does not match expected {} ({}x{})",
                    stored.name, stored.rows, stored.cols, spec.name, spec.rows, spec.cols
                )));
            }
            if stored.data.len() != stored.rows * stored.cols {
                return Err(Error::Checkpoint(format!("array {} has {} values", stored.name, stored.data.len())));
            }
        }
        let values: Vec<f64> = self.arrays.iter().flat_map(|a| a.data.iter().copied()).collect();
        bundle.load_values(&values)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unknown checkpoint format {:?}", ck.format)));
        }
        Ok(ck)
    }

    /// Writes to a sibling temporary file, then renames over `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        crate::write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypernets::{HyperGruParams, HyperNetParams};

    fn meta(variant: &str) -> CheckpointMeta {
        CheckpointMeta {
            variant: variant.into(),
            n: 3,
            layers: 4,
            hidden: 5,
            heads: 0,
            bias: false,
            tied: true,
            seed: 1,
            steps: 0,
            manifest_hash: None,
            no_progress: false,
            config: None,
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let p = HyperGruParams::new(3, 5, true, false, 11);
        let mut ck = Checkpoint::from_bundle(meta("hypergru_attn"), &p);
        ck.optimizer = Some(OptimizerState { kind: "adam".into(), step: 3, m: vec![0.1, 1e-300], v: vec![2.5e-7, 0.0] });
        let back = Checkpoint::from_json(&ck.to_json().unwrap()).unwrap();
        assert_eq!(back, ck);
        let mut q = HyperGruParams::new(3, 5, true, false, 99);
        back.load_into(&mut q).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn layout_mismatch_rejected() {
        let p = HyperNetParams::new(3, 5, 4, 0, false, 1);
        let ck = Checkpoint::from_bundle(meta("hypernet"), &p);
        let mut wrong = HyperNetParams::new(3, 6, 4, 0, false, 1);
        assert!(matches!(ck.load_into(&mut wrong), Err(Error::Checkpoint(_))));
        let mut attn = HyperNetParams::new(3, 5, 4, 2, false, 1);
        assert!(ck.load_into(&mut attn).is_err());
        assert!(Checkpoint::from_json("{\"format\":\"other\"}").is_err());
    }
}
