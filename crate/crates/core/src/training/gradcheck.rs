use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::controller::{Controller, ControllerSpec, Variant};
use super::loss::{sample_loss, LOSS_CLIP};
use super::spsa::{central_difference, cosine_similarity, spsa_gradient};
use crate::gecsr::run;
use crate::hypernets::Overflow;
use crate::model::{DatasetManifest, MatrixClass, Sample, SignalPrior};
use crate::{Error, Result};

const TINY_M: usize = 16;
const TINY_N: usize = 8;
const TINY_LAYERS: usize = 3;
const MAX_PARAMS: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckConfig {
    /// SPSA pairs on the end-to-end loss.
    pub pairs: usize,
    /// SPSA pairs on the quadratic surrogate.
    pub surrogate_pairs: usize,
    pub perturbation: f64,
    pub fd_step: f64,
    pub samples: usize,
    pub hidden: usize,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self { pairs: 64, surrogate_pairs: 8192, perturbation: 1e-3, fd_step: 1e-4, samples: 16, hidden: 5, seed: 0 }
    }
}

/// SPSA estimate against the central-difference reference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Comparison {
    pub cosine: f64,
    /// `||g_spsa - g_ref|| / ||g_ref||`.
    pub rel_norm_error: f64,
}

impl Comparison {
    fn of(estimate: &[f64], reference: &[f64]) -> Self {
        let diff = estimate.iter().zip(reference).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm = reference.iter().map(|b| b * b).sum::<f64>().sqrt();
        Self { cosine: cosine_similarity(estimate, reference), rel_norm_error: diff / norm }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub params: usize,
    pub surrogate: Comparison,
    pub end_to_end: Comparison,
}

fn tiny_loss(controller: &Controller, samples: &[Sample]) -> Result<f64> {
    let mut total = 0.0;
    for s in samples {
        let prior = SignalPrior::new(s.rho)?;
        let mut policy = controller.policy(Overflow::Error);
        let trace = run(s, &prior, &mut *policy, TINY_LAYERS)?;
        total += if trace.diverged {
            LOSS_CLIP
        } else {
            sample_loss(&s.x, &trace, TINY_LAYERS)?.iter().sum::<f64>().min(LOSS_CLIP)
        };
    }
    Ok(total / samples.len() as f64)
}

/// Checks the SPSA estimator on a tiny static hypernetwork driving a
/// (16, 8), three-layer solver, and on a quadratic with the same dimension.
pub fn grad_check(config: &GradCheckConfig) -> Result<GradCheckReport> {
    if !(config.perturbation > 0.0) || !(config.fd_step > 0.0) {
        return Err(Error::Config("perturbation and finite-difference step must be positive".into()));
    }
    if config.samples == 0 {
        return Err(Error::Config("gradient check needs at least one sample".into()));
    }
    let mut spec = ControllerSpec::new(Variant::HyperNet, TINY_N, TINY_LAYERS, config.seed);
    spec.hidden = config.hidden;
    let controller = Controller::new(spec)?;
    let theta = controller.values();
    if theta.len() > MAX_PARAMS {
        return Err(Error::Config(format!("gradient check is limited to {MAX_PARAMS} parameters, got {}", theta.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let curvature: Vec<f64> = (0..theta.len()).map(|_| rng.random_range(0.5..2.0)).collect();
    let center: Vec<f64> = (0..theta.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let quad = |t: &[f64]| -> Result<f64> {
        Ok(t.iter().zip(&center).zip(&curvature).map(|((t, c), h)| h * (t - c).powi(2)).sum())
    };
    let q_ref = central_difference(quad, &theta, config.fd_step)?;
    let q_est = spsa_gradient(quad, &theta, config.surrogate_pairs, config.perturbation, &mut rng)?;

    let manifest = DatasetManifest::fixed(config.seed, config.samples, TINY_M, TINY_N, MatrixClass::Gaussian, 20.0, 0.5);
    let samples = (0..config.samples as u64).map(|i| manifest.sample(i)).collect::<Result<Vec<_>>>()?;
    let loss = |t: &[f64]| tiny_loss(&controller.with_values(t)?, &samples);
    let e_ref = central_difference(loss, &theta, config.fd_step)?;
    let e_est = spsa_gradient(loss, &theta, config.pairs, config.perturbation, &mut rng)?;

    Ok(GradCheckReport { params: theta.len(), surrogate: Comparison::of(&q_est, &q_ref), end_to_end: Comparison::of(&e_est, &e_ref) })
}
