use super::message::GaussianMessage;
use crate::model::TransformMatrix;
use crate::{CVector, Complex64, Error, Result};

const POWER_STEPS: usize = 50;
const MIN_ENERGY: f64 = 1e-6;

/// Spectral initialization.
///
/// Leading eigenvector of `S = (1/M) sum_m y_m^2 a_m a_m^H` by power
/// iteration from the normalized all-ones vector, rescaled so that
/// `||A x0||^2 = max(sum y^2 - M, 1e-6)`. Returns `(msg_1z, msg_2x)` =
/// `((A x0, SNR), (x0, 1))`.
pub fn spectral_init(y: &[f64], matrix: &TransformMatrix) -> Result<(GaussianMessage, GaussianMessage)> {
    let (m, n) = (matrix.rows(), matrix.cols());
    if y.len() != m {
        return Err(Error::Shape(format!("A has {m} rows, got {} measurements", y.len())));
    }
    if y.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Numeric("measurements must be finite and non-negative".into()));
    }
    let snr = matrix.snr();
    let energy: f64 = y.iter().map(|v| v * v).sum();
    if energy == 0.0 {
        return Ok((GaussianMessage::new(CVector::zeros(m), snr), GaussianMessage::new(CVector::zeros(n), 1.0)));
    }
    let weights: Vec<f64> = y.iter().map(|v| v * v / m as f64).collect();
    let mut v = CVector::from_element(n, Complex64::new(1.0 / (n as f64).sqrt(), 0.0));
    for _ in 0..POWER_STEPS {
        let mut av = matrix.apply(&v)?;
        for (z, w) in av.iter_mut().zip(&weights) {
            *z *= *w;
        }
        let next = matrix.apply_adjoint(&av)?;
        let norm = next.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            break;
        }
        v = next.unscale(norm);
    }
    let av = matrix.apply(&v)?;
    let av_energy = av.norm_squared();
    let x0 = if av_energy > 0.0 {
        let target = (energy - m as f64).max(MIN_ENERGY);
        v.scale((target / av_energy).sqrt())
    } else {
        CVector::zeros(n)
    };
    let z0 = matrix.apply(&x0)?;
    Ok((GaussianMessage::new(z0, snr), GaussianMessage::new(x0, 1.0)))
}
