//! The unrolled GEC-SR layer scheduler.

use std::io::Write;

use super::init::spectral_init;
use super::message::{damp, extrinsic};
use super::metrics::{align_phase, nmse_db};
use super::modules::{module_a, module_b, module_c, Direction};
use crate::model::{Sample, SignalPrior, TransformMatrix};
use crate::{CVector, Error, Result};

/// The damped output a policy is asked about: after Module A (`Z`) or after
/// Module C (`X`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Z,
    X,
}

/// What a damping policy sees when it is queried.
#[derive(Clone, Copy, Debug)]
pub struct PolicyFeatures<'a> {
    /// Singular values normalized to unit norm, length `N`.
    pub sigma_tilde: &'a [f64],
    pub sqrt_snr: f64,
    /// The queried side's damping factor at `t - 1` and `t - 2`.
    pub beta_prev: f64,
    pub beta_prev2: f64,
    /// Undamped extrinsic variance of the queried side at this layer.
    pub v_ext: f64,
}

/// Supplies the damping factor for each side of each layer.
pub trait DampingPolicy {
    fn beta(&mut self, side: Side, t: usize, features: &PolicyFeatures<'_>) -> Result<f64>;
}

impl<P: DampingPolicy + ?Sized> DampingPolicy for Box<P> {
    fn beta(&mut self, side: Side, t: usize, features: &PolicyFeatures<'_>) -> Result<f64> {
        (**self).beta(side, t, features)
    }
}

/// Hand-set damping schedules.
#[derive(Clone, Debug, PartialEq)]
pub enum Schedule {
    Constant(f64),
    /// `beta(t) = base^t`.
    Exponential(f64),
    /// Per-layer values for each side; `beyond` is used past the table.
    Table { z: Vec<f64>, x: Vec<f64>, beyond: f64 },
}

impl DampingPolicy for Schedule {
    fn beta(&mut self, side: Side, t: usize, _features: &PolicyFeatures<'_>) -> Result<f64> {
        Ok(match self {
            Schedule::Constant(b) => *b,
            Schedule::Exponential(base) => base.powi(t as i32),
            Schedule::Table { z, x, beyond } => {
                let table = if side == Side::Z { z } else { x };
                table.get(t - 1).copied().unwrap_or(*beyond)
            }
        })
    }
}

#[derive(Clone, Debug)]
pub struct LayerRecord {
    pub t: usize,
    /// Module C posterior mean at this layer.
    pub x_hat: CVector,
    /// Phase-aligned NMSE in dB; NaN when the reference signal is zero or absent.
    pub nmse_db: f64,
    pub beta_z: f64,
    pub beta_x: f64,
    pub v2z: f64,
    pub v2x: f64,
}

#[derive(Clone, Debug)]
pub struct SolverTrace {
    /// Spectral-initialization estimate of `x`.
    pub init_estimate: CVector,
    pub init_nmse_db: f64,
    pub layers: Vec<LayerRecord>,
    /// Set when a non-finite value stopped the run early.
    pub diverged: bool,
    /// Number of damping factors that had to be clamped into `[0, 1]`.
    pub beta_clamps: usize,
}

impl SolverTrace {
    pub fn final_nmse_db(&self) -> f64 {
        self.layers.last().map_or(self.init_nmse_db, |l| l.nmse_db)
    }

    pub fn nmse_curve(&self) -> Vec<f64> {
        self.layers.iter().map(|l| l.nmse_db).collect()
    }
}

fn layer_nmse(x_true: Option<&CVector>, estimate: &CVector) -> f64 {
    match x_true {
        Some(x) => align_phase(x, estimate).and_then(|a| nmse_db(x, &a)).unwrap_or(f64::NAN),
        None => f64::NAN,
    }
}

/// Runs `layers` layers on one sample; see [`run_measurements`].
pub fn run(sample: &Sample, prior: &SignalPrior, policy: &mut dyn DampingPolicy, layers: usize) -> Result<SolverTrace> {
    run_measurements(&sample.y, &sample.matrix, prior, policy, layers, Some(&sample.x))
}

/// Runs the unrolled solver.
///
/// Each layer executes A, extrinsic, damp(beta_z), B_x, extrinsic, C,
/// extrinsic, damp(beta_x), B_z, extrinsic. Damping histories start at the
/// spectral-initialization messages and the beta histories at 1.0.
pub fn run_measurements(
    y: &[f64],
    matrix: &TransformMatrix,
    prior: &SignalPrior,
    policy: &mut dyn DampingPolicy,
    layers: usize,
    x_true: Option<&CVector>,
) -> Result<SolverTrace> {
    if layers == 0 {
        return Err(Error::Config("the solver needs at least one layer".into()));
    }
    if let Some(x) = x_true {
        if x.len() != matrix.cols() {
            return Err(Error::Shape(format!("reference signal has length {}, A has {} columns", x.len(), matrix.cols())));
        }
    }
    let (mut msg_1z, mut msg_2x) = spectral_init(y, matrix)?;
    let mut trace = SolverTrace {
        init_nmse_db: layer_nmse(x_true, &msg_2x.mean),
        init_estimate: msg_2x.mean.clone(),
        layers: Vec::with_capacity(layers),
        diverged: false,
        beta_clamps: 0,
    };
    let sigma_tilde = matrix.normalized_singulars();
    let sqrt_snr = matrix.snr().sqrt();
    let mut prev_z = msg_1z.clone();
    let mut prev_x = msg_2x.clone();
    let mut hist_z = (1.0, 1.0);
    let mut hist_x = (1.0, 1.0);

    for t in 1..=layers {
        let step = (|| -> Result<LayerRecord> {
            let post_a = module_a(&msg_1z, y)?;
            let raw_2z = extrinsic(&post_a, &msg_1z)?;
            let beta_z = query(policy, Side::Z, t, &sigma_tilde, sqrt_snr, hist_z, raw_2z.variance, &mut trace.beta_clamps)?;
            let msg_2z = damp(&raw_2z, &prev_z, beta_z);
            prev_z = msg_2z.clone();
            hist_z = (beta_z, hist_z.0);

            let post_bx = module_b(&msg_2z, &msg_2x, matrix, Direction::X)?;
            let msg_1x = extrinsic(&post_bx, &msg_2x)?;
            let post_c = module_c(&msg_1x, prior)?;
            post_c.check_finite("module C posterior")?;
            let raw_2x = extrinsic(&post_c, &msg_1x)?;
            let beta_x = query(policy, Side::X, t, &sigma_tilde, sqrt_snr, hist_x, raw_2x.variance, &mut trace.beta_clamps)?;
            msg_2x = damp(&raw_2x, &prev_x, beta_x);
            prev_x = msg_2x.clone();
            hist_x = (beta_x, hist_x.0);

            let post_bz = module_b(&msg_2z, &msg_2x, matrix, Direction::Z)?;
            msg_1z = extrinsic(&post_bz, &msg_2z)?;
            Ok(LayerRecord {
                t,
                nmse_db: layer_nmse(x_true, &post_c.mean),
                x_hat: post_c.mean,
                beta_z,
                beta_x,
                v2z: raw_2z.variance,
                v2x: raw_2x.variance,
            })
        })();
        match step {
            Ok(record) => trace.layers.push(record),
            Err(Error::Numeric(msg)) => {
                log::debug!("run diverged at layer {t}: {msg}");
                trace.diverged = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(trace)
}

#[allow(clippy::too_many_arguments)]
fn query(
    policy: &mut dyn DampingPolicy,
    side: Side,
    t: usize,
    sigma_tilde: &[f64],
    sqrt_snr: f64,
    hist: (f64, f64),
    v_ext: f64,
    clamps: &mut usize,
) -> Result<f64> {
    let features = PolicyFeatures { sigma_tilde, sqrt_snr, beta_prev: hist.0, beta_prev2: hist.1, v_ext };
    let beta = policy.beta(side, t, &features)?;
    if !beta.is_finite() {
        return Err(Error::Policy(format!("policy returned non-finite beta {beta} at layer {t}")));
    }
    if !(0.0..=1.0).contains(&beta) {
        *clamps += 1;
        log::warn!("policy returned beta {beta} at layer {t}, clamped to [0, 1]");
        return Ok(beta.clamp(0.0, 1.0));
    }
    Ok(beta)
}

/// Writes the trace as CSV rows `sample_id,t,beta_z,beta_x,v2z,v2x,nmse_db`.
pub fn write_trace_csv<W: Write>(out: &mut W, sample_id: u64, trace: &SolverTrace, header: bool) -> Result<()> {
    if header {
        writeln!(out, "sample_id,t,beta_z,beta_x,v2z,v2x,nmse_db")?;
    }
    for l in &trace.layers {
        writeln!(out, "{},{},{},{},{},{},{}", sample_id, l.t, l.beta_z, l.beta_x, l.v2z, l.v2x, l.nmse_db)?;
    }
    Ok(())
}
