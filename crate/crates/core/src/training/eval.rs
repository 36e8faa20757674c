use rayon::prelude::*;

use super::controller::Controller;
use crate::gecsr::{run, DampingPolicy};
use crate::hypernets::Overflow;
use crate::model::{DatasetManifest, SignalPrior};
use crate::{Error, Result};

/// NMSE assigned to the layers a diverged run never produced.
pub const DIVERGED_FILL_DB: f64 = 0.0;

/// Damping used by static controllers past their trained depth.
pub const EXTENSION_BETA: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct SampleOutcome {
    pub index: u64,
    pub snr: f64,
    pub init_db: f64,
    pub curve_db: Vec<f64>,
    pub diverged: bool,
}

impl SampleOutcome {
    pub fn final_db(&self) -> f64 {
        *self.curve_db.last().expect("curves have at least one layer")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalCurve {
    /// `10 log10` of the mean linear NMSE, per layer.
    pub mean_db: Vec<f64>,
    /// Median of the per-sample dB values, per layer.
    pub median_db: Vec<f64>,
    pub init_median_db: f64,
    pub samples: Vec<SampleOutcome>,
}

impl EvalCurve {
    pub fn diverged(&self) -> usize {
        self.samples.iter().filter(|s| s.diverged).count()
    }

    /// Fraction of samples whose last layer is no worse than the spectral
    /// initialization.
    pub fn improved_fraction(&self) -> f64 {
        let ok = self.samples.iter().filter(|s| s.final_db() <= s.init_db).count();
        ok as f64 / self.samples.len() as f64
    }

    pub fn median_at(&self, t: usize) -> f64 {
        self.median_db[t - 1]
    }
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}

/// Runs a fresh policy from `make` on every sample of the manifest.
pub fn evaluate_policy<'a, F>(make: F, manifest: &DatasetManifest, layers: usize) -> Result<EvalCurve>
where
    F: Fn() -> Box<dyn DampingPolicy + 'a> + Sync,
{
    manifest.validate()?;
    if manifest.count == 0 {
        return Err(Error::Empty("test manifest has no samples".into()));
    }
    if layers == 0 {
        return Err(Error::Config("evaluation needs at least one layer".into()));
    }
    let samples = (0..manifest.count as u64)
        .into_par_iter()
        .map(|i| {
            let sample = manifest.sample(i)?;
            let prior = SignalPrior::new(sample.rho)?;
            let mut policy = make();
            let trace = run(&sample, &prior, &mut *policy, layers)?;
            let mut curve_db = trace.nmse_curve();
            curve_db.resize(layers, DIVERGED_FILL_DB);
            Ok(SampleOutcome { index: i, snr: sample.snr, init_db: trace.init_nmse_db, curve_db, diverged: trace.diverged })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut mean_db = Vec::with_capacity(layers);
    let mut median_db = Vec::with_capacity(layers);
    for t in 0..layers {
        let mut col: Vec<f64> = samples.iter().map(|s| s.curve_db[t]).collect();
        let lin = col.iter().map(|d| 10f64.powf(d / 10.0)).sum::<f64>() / col.len() as f64;
        mean_db.push(10.0 * lin.log10());
        median_db.push(median(&mut col));
    }
    let mut init: Vec<f64> = samples.iter().map(|s| s.init_db).collect();
    Ok(EvalCurve { mean_db, median_db, init_median_db: median(&mut init), samples })
}

/// Static controllers use [`EXTENSION_BETA`] past their trained depth.
pub fn evaluate(controller: &Controller, manifest: &DatasetManifest, layers: usize) -> Result<EvalCurve> {
    controller.check_compatible(manifest.n)?;
    evaluate_policy(|| controller.policy(Overflow::Constant(EXTENSION_BETA)), manifest, layers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gecsr::Schedule;
    use crate::model::MatrixClass;
    use crate::training::{ControllerSpec, Variant};

    #[test]
    fn medians() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn curve_lengths_and_determinism() {
        let m = DatasetManifest::fixed(3, 4, 24, 8, MatrixClass::Gaussian, 20.0, 0.5);
        let a = evaluate_policy(|| Box::new(Schedule::Exponential(0.9)), &m, 1).unwrap();
        assert_eq!(a.median_db.len(), 1);
        let c = Controller::new(ControllerSpec::new(Variant::HyperGru, 8, 3, 1)).unwrap();
        let x = evaluate(&c, &m, 6).unwrap();
        let y = evaluate(&c, &m, 6).unwrap();
        assert_eq!(x, y);
        assert_eq!(x.mean_db.len(), 6);
    }

    #[test]
    fn static_controllers_extend_with_half() {
        let m = DatasetManifest::fixed(5, 3, 24, 8, MatrixClass::Gaussian, 20.0, 0.5);
        let c = Controller::new(ControllerSpec::new(Variant::NetDirect, 8, 2, 1)).unwrap();
        let ext = evaluate(&c, &m, 5).unwrap();
        let betas = c.as_direct().unwrap().betas(crate::gecsr::Side::Z);
        let table = Schedule::Table { z: betas.clone(), x: betas, beyond: 0.5 };
        let reference = evaluate_policy(|| Box::new(table.clone()), &m, 5).unwrap();
        assert_eq!(ext, reference);
    }

    #[test]
    fn mismatched_n_and_empty_sets_rejected() {
        let m = DatasetManifest::fixed(5, 3, 24, 8, MatrixClass::Gaussian, 20.0, 0.5);
        let c = Controller::new(ControllerSpec::new(Variant::HyperNet, 9, 2, 1)).unwrap();
        assert!(matches!(evaluate(&c, &m, 2), Err(Error::Incompatible(_))));
        let empty = DatasetManifest { count: 0, ..m };
        assert!(matches!(evaluate_policy(|| Box::new(Schedule::Constant(0.5)), &empty, 2), Err(Error::Empty(_))));
    }
}
