use rand::Rng;

use crate::{Error, Result};

fn checked(value: f64, theta: &[f64]) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Estimator { message: format!("loss evaluated to {value}"), theta: theta.to_vec() })
    }
}

/// Simultaneous-perturbation gradient estimate averaged over `pairs`
/// Rademacher directions.
pub fn spsa_gradient<F, R>(mut loss: F, theta: &[f64], pairs: usize, c: f64, rng: &mut R) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
    R: Rng + ?Sized,
{
    if pairs == 0 {
        return Err(Error::Config("SPSA needs at least one pair".into()));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Config(format!("SPSA perturbation must be positive, got {c}")));
    }
    let mut grad = vec![0.0; theta.len()];
    let mut plus = theta.to_vec();
    let mut minus = theta.to_vec();
    for _ in 0..pairs {
        let delta: Vec<f64> = (0..theta.len()).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
        for i in 0..theta.len() {
            plus[i] = theta[i] + c * delta[i];
            minus[i] = theta[i] - c * delta[i];
        }
        let lp = checked(loss(&plus)?, &plus)?;
        let lm = checked(loss(&minus)?, &minus)?;
        let scale = (lp - lm) / (2.0 * c * pairs as f64);
        grad.iter_mut().zip(&delta).for_each(|(g, d)| *g += scale * d);
    }
    Ok(grad)
}

/// Coordinate-wise central differences with step `h`.
pub fn central_difference<F>(mut loss: F, theta: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Config(format!("finite-difference step must be positive, got {h}")));
    }
    let mut probe = theta.to_vec();
    let mut grad = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        probe[i] = theta[i] + h;
        let lp = checked(loss(&probe)?, &probe)?;
        probe[i] = theta[i] - h;
        let lm = checked(loss(&probe)?, &probe)?;
        probe[i] = theta[i];
        grad.push((lp - lm) / (2.0 * h));
    }
    Ok(grad)
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na * nb)
}
