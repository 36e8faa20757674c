//! Bayesian estimation steps of the three solver modules.

use super::bessel::bessel_ratio_with_complement;
use super::message::GaussianMessage;
use crate::model::{SignalPrior, TransformMatrix};
use crate::{CVector, Complex64, Error, Result};

/// Which variable the linear reconstructor returns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    X,
    Z,
}

/// Phase reconstructor: posterior of `z` given `y = |z + n|`, prior
/// `CN(mu, v)` per component and unit-variance noise.
///
/// With `c = v/(v+1)`, `kappa = 2 y |mu| / (v+1)` and `R = I1/I0(kappa)`, the
/// noisy observation's phase is von Mises around `arg(mu)`, which gives
/// `E[z|y] = e^{j arg mu} ((1-c)|mu| + c y R)` and
/// `Var[z|y] = c + c^2 y^2 (1 - R^2)`.
pub fn module_a(prior: &GaussianMessage, y: &[f64]) -> Result<GaussianMessage> {
    if prior.len() != y.len() {
        return Err(Error::Shape(format!("prior length {} vs {} measurements", prior.len(), y.len())));
    }
    prior.check_finite("module A prior")?;
    if y.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Numeric("measurements must be finite and non-negative".into()));
    }
    let v = prior.variance;
    let c = v / (v + 1.0);
    let mut var_sum = 0.0;
    let mean = CVector::from_iterator(
        y.len(),
        prior.mean.iter().zip(y).map(|(mu, &ym)| {
            let abs_mu = mu.norm();
            let kappa = 2.0 * ym * abs_mu / (v + 1.0);
            let (r, one_minus_r) = bessel_ratio_with_complement(kappa).expect("kappa is non-negative");
            var_sum += c + c * c * ym * ym * one_minus_r * (1.0 + r);
            let magnitude = (1.0 - c) * abs_mu + c * ym * r;
            if abs_mu > 0.0 {
                mu * (magnitude / abs_mu)
            } else {
                Complex64::new(magnitude, 0.0)
            }
        }),
    );
    Ok(GaussianMessage::new(mean, var_sum / y.len() as f64))
}

/// Denoiser: posterior of `x` under the Gaussian-Bernoulli prior from the
/// pseudo-measurement `r = x + CN(0, v)`.
pub fn module_c(pseudo: &GaussianMessage, prior: &SignalPrior) -> Result<GaussianMessage> {
    pseudo.check_finite("module C input")?;
    let rho = prior.rho();
    let v = pseudo.variance;
    let slab = prior.slab_variance();
    let gain = slab / (slab + v);
    // log odds of slab vs spike, up to the shared 1/pi factor
    let base_odds = if rho < 1.0 { rho.ln() - (1.0 - rho).ln() + (v / (slab + v)).ln() } else { f64::INFINITY };
    let spike_minus_slab = 1.0 / v - 1.0 / (slab + v);
    let mut var_sum = 0.0;
    let mean = CVector::from_iterator(
        pseudo.len(),
        pseudo.mean.iter().map(|r| {
            let r2 = r.norm_sqr();
            let pi = if base_odds.is_infinite() {
                1.0
            } else {
                let log_odds = base_odds + r2 * spike_minus_slab;
                1.0 / (1.0 + (-log_odds).exp())
            };
            let shrunk = r * gain;
            var_sum += pi * gain * v + pi * (1.0 - pi) * shrunk.norm_sqr();
            shrunk * pi
        }),
    );
    Ok(GaussianMessage::new(mean, var_sum / pseudo.len().max(1) as f64))
}

/// Linear reconstructor: joint Gaussian estimate of `(x, z = A x)` from the
/// prior on `x` and the pseudo-observation of `z`, computed in the SVD basis.
pub fn module_b(
    msg_z: &GaussianMessage,
    msg_x: &GaussianMessage,
    matrix: &TransformMatrix,
    direction: Direction,
) -> Result<GaussianMessage> {
    let (m, n) = (matrix.rows(), matrix.cols());
    if msg_z.len() != m || msg_x.len() != n {
        return Err(Error::Shape(format!(
            "A is {m}x{n}, messages have lengths {} and {}",
            msg_z.len(),
            msg_x.len()
        )));
    }
    msg_z.check_finite("module B z input")?;
    msg_x.check_finite("module B x input")?;
    let (vx, vz) = (msg_x.variance, msg_z.variance);
    let sigma = matrix.singulars();
    let k = sigma.len();
    let x_modes = matrix.right().ad_mul(&msg_x.mean);
    let z_modes = matrix.left().ad_mul(&msg_z.mean);
    let gains: Vec<f64> = sigma.iter().map(|s| 1.0 / (1.0 / vx + s * s / vz)).collect();
    let coeffs = CVector::from_fn(k, |i, _| (x_modes[i] / vx + z_modes[i] * (sigma[i] / vz)) * gains[i]);
    match direction {
        Direction::X => {
            // directions outside the row space keep their prior
            let mean = &msg_x.mean + matrix.right() * (&coeffs - &x_modes);
            let var = (gains.iter().sum::<f64>() + (n - k) as f64 * vx) / n as f64;
            Ok(GaussianMessage::new(mean, var))
        }
        Direction::Z => {
            let scaled = CVector::from_fn(k, |i, _| coeffs[i] * sigma[i]);
            let mean = matrix.left() * scaled;
            let var = sigma.iter().zip(&gains).map(|(s, d)| s * s * d).sum::<f64>() / m as f64;
            Ok(GaussianMessage::new(mean, var))
        }
    }
}
