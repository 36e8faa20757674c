use crate::{CVector, Error, Result};

pub const NMSE_FLOOR_DB: f64 = -120.0;

/// Removes the global phase ambiguity: `e^{j phi} x_est` with
/// `phi = arg(x_est^H x_true)`, `arg 0 = 0`.
pub fn align_phase(x_true: &CVector, x_est: &CVector) -> Result<CVector> {
    if x_true.len() != x_est.len() {
        return Err(Error::Shape(format!("lengths {} and {}", x_true.len(), x_est.len())));
    }
    let inner = x_est.dotc(x_true);
    if inner.norm() == 0.0 {
        return Ok(x_est.clone());
    }
    let phase = inner / inner.norm();
    Ok(x_est * phase)
}

/// `10 log10(||x - x_est||^2 / ||x||^2)`, floored at -120 dB.
pub fn nmse_db(x_true: &CVector, x_est_aligned: &CVector) -> Result<f64> {
    if x_true.len() != x_est_aligned.len() {
        return Err(Error::Shape(format!("lengths {} and {}", x_true.len(), x_est_aligned.len())));
    }
    let energy = x_true.norm_squared();
    if energy == 0.0 {
        return Err(Error::UndefinedMetric("NMSE of an all-zero signal".into()));
    }
    let err: f64 = x_true.iter().zip(x_est_aligned.iter()).map(|(a, b)| (a - b).norm_sqr()).sum();
    let ratio = err / energy;
    if ratio <= 0.0 {
        return Ok(NMSE_FLOOR_DB);
    }
    Ok((10.0 * ratio.log10()).max(NMSE_FLOOR_DB))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Complex64;

    fn unit(phase: f64) -> Complex64 {
        Complex64::from_polar(1.0, phase)
    }

    fn vec(values: &[(f64, f64)]) -> CVector {
        CVector::from_iterator(values.len(), values.iter().map(|(a, b)| Complex64::new(*a, *b)))
    }

    #[test]
    fn removes_global_phase() {
        let x = vec(&[(1.0, 0.5), (-0.3, 2.0), (0.0, -1.0)]);
        let est = &x * unit(std::f64::consts::FRAC_PI_3);
        let aligned = align_phase(&x, &est).unwrap();
        assert!((aligned - &x).norm() < 1e-12);
    }

    #[test]
    fn orthogonal_estimate_is_untouched() {
        let x = vec(&[(1.0, 0.0), (0.0, 0.0)]);
        let est = vec(&[(0.0, 0.0), (0.0, 1.0)]);
        assert_eq!(align_phase(&x, &est).unwrap(), est);
    }

    #[test]
    fn nmse_values() {
        let x = vec(&[(1.0, 2.0), (3.0, -1.0)]);
        assert_eq!(nmse_db(&x, &x).unwrap(), NMSE_FLOOR_DB);
        assert!(nmse_db(&x, &CVector::zeros(2)).unwrap().abs() < 1e-12);
        assert!((nmse_db(&x, &(&x * Complex64::new(1.1, 0.0))).unwrap() + 20.0).abs() < 1e-9);
        assert!(matches!(nmse_db(&CVector::zeros(2), &x), Err(Error::UndefinedMetric(_))));
    }
}
