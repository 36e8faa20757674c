use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::ImageFile;
use super::BASELINE_EXP;
use crate::gecsr::{align_phase, nmse_db, run_measurements, spectral_init, Schedule};
use crate::hypernets::Overflow;
use crate::model::pgm::GrayImage;
use crate::model::{db_to_linear, forward_measure, gaussian_class_singulars, scale_to_snr, SignalPrior, TransformMatrix};
use crate::training::Controller;
use crate::{CVector, Complex64, Error, Result};

/// Largest image (in pixels) the demo accepts.
pub const MAX_PIXELS: usize = 4096;
/// Pixels brighter than this fraction of full scale count as support.
const SUPPORT_LEVEL: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImageReport {
    pub variant: String,
    pub layers: usize,
    pub m: usize,
    pub n: usize,
    pub snr_db: f64,
    pub rho_estimate: f64,
    pub nmse_db: f64,
}

/// Measures the image through a random Gaussian-class transform and
/// reconstructs it; returns the aligned magnitude image.
pub fn reconstruct_image(img: &GrayImage, controller: Option<&Controller>, cfg: &ImageFile) -> Result<(GrayImage, ImageReport)> {
    let n = img.pixels.len();
    if n > MAX_PIXELS {
        return Err(Error::Config(format!("image has {n} pixels, at most {MAX_PIXELS} are supported")));
    }
    let energy: f64 = img.pixels.iter().map(|p| p * p).sum();
    if energy == 0.0 {
        return Err(Error::Format("image is entirely black; NMSE is undefined".into()));
    }
    if let Some(c) = controller {
        c.check_compatible(n)?;
    }
    let m = cfg.m.unwrap_or((cfg.ratio * n as f64).ceil() as usize);
    if m == 0 || !(cfg.snr_db.is_finite()) {
        return Err(Error::Config("image scenario needs M > 0 and a finite SNR".into()));
    }
    let scale = (n as f64 / energy).sqrt();
    let x = CVector::from_iterator(n, img.pixels.iter().map(|p| Complex64::new(p * scale, 0.0)));
    let support = img.pixels.iter().filter(|p| **p > SUPPORT_LEVEL).count();
    let rho = (support as f64 / n as f64).max(1.0 / n as f64);
    let prior = SignalPrior::new(rho)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let singulars = scale_to_snr(&gaussian_class_singulars(m, n, &mut rng), m, db_to_linear(cfg.snr_db))?;
    let matrix = TransformMatrix::haar(m, n, singulars, &mut rng)?;
    let y = forward_measure(&matrix, &x, &mut rng, false)?;

    let estimate = if cfg.layers == 0 {
        spectral_init(&y, &matrix)?.1.mean
    } else {
        let trace = match controller {
            Some(c) => run_measurements(&y, &matrix, &prior, &mut *c.policy(Overflow::Constant(0.5)), cfg.layers, Some(&x))?,
            None => run_measurements(&y, &matrix, &prior, &mut Schedule::Exponential(0.9), cfg.layers, Some(&x))?,
        };
        match trace.layers.last() {
            Some(l) => l.x_hat.clone(),
            None => trace.init_estimate,
        }
    };
    let aligned = align_phase(&x, &estimate)?;
    let nmse = nmse_db(&x, &aligned)?;
    let pixels = aligned.iter().map(|v| (v.norm() / scale).clamp(0.0, 1.0)).collect();
    let report = ImageReport {
        variant: controller.map_or(BASELINE_EXP.to_string(), |c| c.variant().to_string()),
        layers: cfg.layers,
        m,
        n,
        snr_db: cfg.snr_db,
        rho_estimate: rho,
        nmse_db: nmse,
    };
    Ok((GrayImage { width: img.width, height: img.height, pixels }, report))
}
