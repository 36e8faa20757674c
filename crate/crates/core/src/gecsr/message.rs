use crate::{CVector, Error, Result};

pub const V_MIN: f64 = 1e-11;
pub const V_MAX: f64 = 1e11;

/// A complex mean vector with one shared variance.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMessage {
    pub mean: CVector,
    pub variance: f64,
}

impl GaussianMessage {
    /// Builds a message with the variance clamped to `[V_MIN, V_MAX]`.
    pub fn new(mean: CVector, variance: f64) -> Self {
        Self { mean, variance: clamp_variance(variance) }
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.variance.is_finite() && self.mean.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub(crate) fn check_finite(&self, what: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::Numeric(format!("{what} is not finite")))
        }
    }
}

fn clamp_variance(v: f64) -> f64 {
    if v.is_nan() {
        v
    } else {
        v.clamp(V_MIN, V_MAX)
    }
}

/// Divides the posterior by the incoming prior.
///
/// Falls back to `(posterior mean, V_MAX)` when the resulting precision is
/// not positive or the variance would exceed `V_MAX`.
pub fn extrinsic(posterior: &GaussianMessage, prior: &GaussianMessage) -> Result<GaussianMessage> {
    posterior.check_finite("posterior")?;
    prior.check_finite("prior")?;
    if posterior.len() != prior.len() {
        return Err(Error::Shape(format!("posterior length {} vs prior {}", posterior.len(), prior.len())));
    }
    let (v_post, v_prior) = (posterior.variance, prior.variance);
    if !(v_post > 0.0 && v_prior > 0.0) {
        return Err(Error::Numeric("variances must be positive".into()));
    }
    let precision = 1.0 / v_post - 1.0 / v_prior;
    let v_ext = 1.0 / precision;
    if !(precision > 0.0) || v_ext > V_MAX {
        return Ok(GaussianMessage::new(posterior.mean.clone(), V_MAX));
    }
    let mean = (posterior.mean.unscale(v_post) - prior.mean.unscale(v_prior)).scale(v_ext);
    let out = GaussianMessage::new(mean, v_ext);
    out.check_finite("extrinsic message")?;
    Ok(out)
}

/// Product of two Gaussian messages over the same variable.
pub fn gaussian_product(a: &GaussianMessage, b: &GaussianMessage) -> GaussianMessage {
    let v = 1.0 / (1.0 / a.variance + 1.0 / b.variance);
    let mean = (a.mean.unscale(a.variance) + b.mean.unscale(b.variance)).scale(v);
    GaussianMessage { mean, variance: v }
}

/// `beta * previous + (1 - beta) * current` on mean and variance.
///
/// `beta` outside `[0, 1]` is clamped and logged.
pub fn damp(current: &GaussianMessage, previous: &GaussianMessage, beta: f64) -> GaussianMessage {
    let b = if (0.0..=1.0).contains(&beta) {
        beta
    } else {
        log::warn!("damping factor {beta} outside [0, 1], clamped");
        if beta.is_nan() { 0.0 } else { beta.clamp(0.0, 1.0) }
    };
    if b == 0.0 {
        return current.clone();
    }
    if b == 1.0 {
        return previous.clone();
    }
    let mean = previous.mean.scale(b) + current.mean.scale(1.0 - b);
    GaussianMessage::new(mean, b * previous.variance + (1.0 - b) * current.variance)
}
