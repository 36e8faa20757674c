use rand::Rng;

use super::matrix::TransformMatrix;
use super::prior::complex_gaussian;
use crate::{CVector, Result};

/// One phase-retrieval instance `y = |A x + n|`.
#[derive(Clone, Debug)]
pub struct Sample {
    pub index: u64,
    pub x: CVector,
    pub y: Vec<f64>,
    pub matrix: TransformMatrix,
    /// Linear SNR, equal to `tr(A A^H) / M`.
    pub snr: f64,
    pub rho: f64,
}

/// Phase-less measurements with unit-variance circular complex noise.
pub fn forward_measure<R: Rng + ?Sized>(
    matrix: &TransformMatrix,
    x: &CVector,
    rng: &mut R,
    noiseless: bool,
) -> Result<Vec<f64>> {
    let z = matrix.apply(x)?;
    Ok(z.iter()
        .map(|zm| {
            if noiseless {
                zm.norm()
            } else {
                (zm + complex_gaussian(rng, 1.0)).norm()
            }
        })
        .collect())
}
