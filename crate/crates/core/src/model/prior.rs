use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{CVector, Complex64, Error, Result};

/// Gaussian-Bernoulli signal prior: each component is zero with probability
/// `1 - rho`, otherwise circularly-symmetric complex Gaussian with variance
/// `1 / rho`, so every component has unit second moment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalPrior {
    rho: f64,
}

impl SignalPrior {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::InvalidPrior(format!(
                "sparsity rate must lie in (0, 1], got {rho}"
            )));
        }
        Ok(Self { rho })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn slab_variance(&self) -> f64 {
        1.0 / self.rho
    }
}

/// Draws one CN(0, variance) value.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}

pub fn sample_signal<R: Rng + ?Sized>(prior: &SignalPrior, n: usize, rng: &mut R) -> Result<CVector> {
    if n == 0 {
        return Err(Error::Shape("signal length must be at least 1".into()));
    }
    let slab = prior.slab_variance();
    let dense = prior.rho >= 1.0;
    Ok(CVector::from_fn(n, |_, _| {
        if dense || rng.random::<f64>() < prior.rho {
            complex_gaussian(rng, slab)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))
}
