use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::matrix::{binary_matrix, gaussian_class_singulars, geometric_singulars, scale_to_snr, TransformMatrix};
use super::measure::{forward_measure, Sample};
use super::prior::{sample_signal, SignalPrior};
use super::db_to_linear;
use crate::{Error, Result};

/// Singular-value family of the transform matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixClass {
    /// Spectrum of an i.i.d. complex Gaussian matrix, Haar singular vectors.
    Gaussian,
    /// Geometric spectrum; samples cycle through the listed ratios.
    Geometric(Vec<f64>),
    /// Entries uniform over `{0, c}`.
    Binary,
}

/// One class, or several classes sharing the sample count equally.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClassSpec {
    One(MatrixClass),
    Mixed(Vec<MatrixClass>),
}

impl ClassSpec {
    pub fn classes(&self) -> &[MatrixClass] {
        match self {
            ClassSpec::One(c) => std::slice::from_ref(c),
            ClassSpec::Mixed(v) => v,
        }
    }
}

/// Recipe from which a dataset is regenerated on demand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub seed: u64,
    pub count: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub matrix_class: ClassSpec,
    pub snr_db_range: [f64; 2],
    pub rho_range: [f64; 2],
}

impl DatasetManifest {
    /// The default training scenario: (400, 100), Gaussian and geometric
    /// spectra, SNR in [15, 25] dB, rho in [0.3, 0.8].
    pub fn standard(seed: u64, count: usize) -> Self {
        Self {
            seed,
            count,
            m: 400,
            n: 100,
            matrix_class: ClassSpec::Mixed(vec![MatrixClass::Gaussian, MatrixClass::Geometric(vec![1.0, 0.97])]),
            snr_db_range: [15.0, 25.0],
            rho_range: [0.3, 0.8],
        }
    }

    /// Fixed scenario: single SNR, single rho, one class.
    pub fn fixed(seed: u64, count: usize, m: usize, n: usize, class: MatrixClass, snr_db: f64, rho: f64) -> Self {
        Self {
            seed,
            count,
            m,
            n,
            matrix_class: ClassSpec::One(class),
            snr_db_range: [snr_db, snr_db],
            rho_range: [rho, rho],
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let manifest: Self = serde_json::from_str(text).map_err(|e| Error::Manifest(e.to_string()))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Manifest(msg));
        if self.m == 0 || self.n == 0 {
            return bad(format!("dimensions must be positive, got ({}, {})", self.m, self.n));
        }
        let [slo, shi] = self.snr_db_range;
        if !(slo.is_finite() && shi.is_finite()) || slo > shi {
            return bad(format!("snr_db_range [{slo}, {shi}] is not an ordered finite range"));
        }
        let [rlo, rhi] = self.rho_range;
        if rlo > rhi || !(rlo > 0.0 && rhi <= 1.0) {
            return bad(format!("rho_range [{rlo}, {rhi}] must be an ordered sub-range of (0, 1]"));
        }
        let classes = self.matrix_class.classes();
        if classes.is_empty() {
            return bad("matrix_class lists no classes".into());
        }
        for c in classes {
            if let MatrixClass::Geometric(gammas) = c {
                if gammas.is_empty() {
                    return bad("geometric class needs at least one ratio".into());
                }
                if let Some(g) = gammas.iter().find(|g| !(**g > 0.0 && **g <= 1.0)) {
                    return bad(format!("geometric ratio {g} outside (0, 1]"));
                }
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("manifest serializes");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Class and (for geometric) ratio used by sample `index`.
    pub fn class_of(&self, index: u64) -> (MatrixClass, Option<f64>) {
        let classes = self.matrix_class.classes();
        let l = classes.len() as u64;
        let class = classes[(index % l) as usize].clone();
        let gamma = match &class {
            MatrixClass::Geometric(g) => Some(g[((index / l) % g.len() as u64) as usize]),
            _ => None,
        };
        (class, gamma)
    }

    fn rng_for(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }

    /// Regenerates sample `index`; independent of every other index.
    pub fn sample(&self, index: u64) -> Result<Sample> {
        let mut rng = self.rng_for(index);
        let [slo, shi] = self.snr_db_range;
        let snr_db = if shi > slo { rng.random_range(slo..=shi) } else { slo };
        let [rlo, rhi] = self.rho_range;
        let rho = if rhi > rlo { rng.random_range(rlo..=rhi) } else { rlo };
        let snr = db_to_linear(snr_db);
        let prior = SignalPrior::new(rho)?;
        let (class, gamma) = self.class_of(index);
        let k = self.m.min(self.n);
        let matrix = match class {
            MatrixClass::Gaussian => {
                let s = gaussian_class_singulars(self.m, self.n, &mut rng);
                TransformMatrix::haar(self.m, self.n, scale_to_snr(&s, self.m, snr)?, &mut rng)?
            }
            MatrixClass::Geometric(_) => {
                let s = geometric_singulars(k, gamma.expect("geometric ratio"))?;
                TransformMatrix::haar(self.m, self.n, scale_to_snr(&s, self.m, snr)?, &mut rng)?
            }
            MatrixClass::Binary => binary_matrix(self.m, self.n, snr, &mut rng)?,
        };
        let x = sample_signal(&prior, self.n, &mut rng)?;
        let y = forward_measure(&matrix, &x, &mut rng, false)?;
        Ok(Sample { index, x, y, matrix, snr, rho })
    }
}

/// Lazily regenerates every sample of the manifest in index order.
pub fn generate_dataset(manifest: &DatasetManifest) -> Result<impl Iterator<Item = Result<Sample>> + '_> {
    manifest.validate()?;
    Ok((0..manifest.count as u64).map(move |i| manifest.sample(i)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(count: usize) -> DatasetManifest {
        DatasetManifest {
            seed: 42,
            count,
            m: 24,
            n: 8,
            matrix_class: ClassSpec::Mixed(vec![MatrixClass::Gaussian, MatrixClass::Geometric(vec![1.0, 0.97])]),
            snr_db_range: [15.0, 25.0],
            rho_range: [0.3, 0.8],
        }
    }

    #[test]
    fn json_field_names() {
        let text = r#"{"seed": 1, "count": 2, "M": 8, "N": 4,
            "matrix_class": [{"geometric": [1.0, 0.97]}, "gaussian", "binary"],
            "snr_db_range": [15.0, 25.0], "rho_range": [0.3, 0.8]}"#;
        let m = DatasetManifest::from_json(text).unwrap();
        assert_eq!(m.matrix_class.classes().len(), 3);
        let back = serde_json::to_string(&m).unwrap();
        assert!(back.contains("\"M\":8") && back.contains("\"gaussian\""));
        let single = r#"{"seed": 1, "count": 2, "M": 8, "N": 4, "matrix_class": "binary",
            "snr_db_range": [50, 50], "rho_range": [1, 1]}"#;
        assert_eq!(DatasetManifest::from_json(single).unwrap().matrix_class, ClassSpec::One(MatrixClass::Binary));
    }

    #[test]
    fn rejects_inverted_ranges() {
        let mut m = small(1);
        m.snr_db_range = [25.0, 15.0];
        assert!(matches!(m.validate(), Err(Error::Manifest(_))));
        let mut m = small(1);
        m.rho_range = [0.8, 0.3];
        assert!(m.validate().is_err());
        let mut m = small(1);
        m.rho_range = [0.0, 0.3];
        assert!(m.validate().is_err());
    }

    #[test]
    fn empty_manifest_yields_nothing() {
        assert_eq!(generate_dataset(&small(0)).unwrap().count(), 0);
    }

    #[test]
    fn classes_and_gammas_are_balanced() {
        let m = small(8);
        let classes: Vec<_> = (0..8).map(|i| m.class_of(i)).collect();
        let geometric: Vec<f64> = classes.iter().filter_map(|(_, g)| *g).collect();
        assert_eq!(geometric.len(), 4);
        assert_eq!(geometric.iter().filter(|g| **g == 1.0).count(), 2);
        assert_eq!(geometric.iter().filter(|g| **g == 0.97).count(), 2);
    }

    #[test]
    fn samples_satisfy_invariants_and_snr_contract() {
        let m = small(6);
        for s in generate_dataset(&m).unwrap() {
            let s = s.unwrap();
            assert_eq!(s.x.len(), 8);
            assert_eq!(s.y.len(), 24);
            assert!(s.y.iter().all(|v| *v >= 0.0));
            assert!((s.matrix.snr() - s.snr).abs() / s.snr < 1e-9);
            let db = crate::model::linear_to_db(s.snr);
            assert!((15.0 - 1e-9..=25.0 + 1e-9).contains(&db));
            assert!((0.3..=0.8).contains(&s.rho));
        }
    }

    #[test]
    fn regeneration_is_order_independent() {
        let m = small(5);
        let all: Vec<Sample> = generate_dataset(&m).unwrap().map(|s| s.unwrap()).collect();
        let third = m.sample(3).unwrap();
        assert_eq!(all[3].x, third.x);
        assert_eq!(all[3].y, third.y);
    }
}
