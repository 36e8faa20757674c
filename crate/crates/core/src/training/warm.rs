//! Starts a hypernetwork near the hand-set schedule `beta(t) = base^t` by
//! refitting its output layer, by ridge regression, to the schedule's
//! logits along solver runs driven by the schedule itself.

use nalgebra::{DMatrix, DVector};

use crate::gecsr::{run, DampingPolicy, PolicyFeatures, Side};
use crate::hypernets::{gru_input, gru_readout, hypernet_hidden, HyperGruParams, HyperNetParams, Weights};
use crate::model::{Sample, SignalPrior};
use crate::{Error, Result};

/// Ridge weight relative to the mean diagonal of the Gram matrix.
const RIDGE: f64 = 1e-6;

pub fn logit(beta: f64) -> f64 {
    (beta / (1.0 - beta)).ln()
}

fn schedule_logit(base: f64, t: usize) -> f64 {
    logit(base.powi(t as i32))
}

pub fn check_base(base: f64) -> Result<()> {
    if base > 0.0 && base < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("warm-start base must lie in (0, 1), got {base}")))
    }
}

/// Least-squares weights for `rows . w = targets` with a small ridge.
fn ridge(rows: &[Vec<f64>], targets: &[f64]) -> Result<Vec<f64>> {
    let d = rows.first().map_or(0, Vec::len);
    let x = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
    let y = DVector::from_column_slice(targets);
    let gram = x.transpose() * &x;
    let ridge = RIDGE * gram.trace() / d.max(1) as f64;
    let gram = gram + DMatrix::identity(d, d) * ridge;
    let w = gram
        .cholesky()
        .ok_or_else(|| Error::Numeric("warm-start regression is singular".into()))?
        .solve(&(x.transpose() * y));
    Ok(w.iter().copied().collect())
}

fn rms(residuals: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = residuals.fold((0.0, 0usize), |(s, n), r| (s + r * r, n + 1));
    (sum / n.max(1) as f64).sqrt()
}

fn needs_samples(samples: &[&Sample]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::Config("warm start needs at least one sample".into()));
    }
    Ok(())
}

/// Refits `w2` (and `b2`) of a static hypernetwork; returns the RMS logit
/// error left over the samples.
pub fn fit_static(p: &mut HyperNetParams, base: f64, samples: &[&Sample]) -> Result<f64> {
    check_base(base)?;
    needs_samples(samples)?;
    let with_bias = p.b2.is_some();
    let mut rows = Vec::with_capacity(samples.len());
    for s in samples {
        let mut input = s.matrix.normalized_singulars();
        input.push(s.matrix.snr().sqrt());
        let mut h = hypernet_hidden(&input, p)?;
        if with_bias {
            h.push(1.0);
        }
        rows.push(h);
    }
    // every target row is a constant across samples, so one solve for a
    // constant-one target scales to all of them
    let unit = ridge(&rows, &vec![1.0; rows.len()])?;
    let hidden = p.hidden();
    let targets: Vec<f64> = (1..=p.layers()).map(|t| schedule_logit(base, t)).collect();
    let w2: Vec<f64> = targets.iter().flat_map(|c| unit[..hidden].iter().map(move |u| c * u)).collect();
    p.w2 = Weights::from_row_major(targets.len(), hidden, w2)?;
    if with_bias {
        p.b2 = Some(Weights::from_row_major(targets.len(), 1, targets.iter().map(|c| c * unit[hidden]).collect())?);
    }
    let unit_error = rms(rows.iter().map(|r| r.iter().zip(&unit).map(|(a, b)| a * b).sum::<f64>() - 1.0));
    Ok(rms(targets.iter().copied()) * unit_error)
}

/// Runs the schedule while stepping the GRU alongside it, recording what
/// the output layer reads at each step.
struct Recorder<'a> {
    params: &'a HyperGruParams,
    base: f64,
    state: Vec<f64>,
    input: Vec<f64>,
    rows: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl DampingPolicy for Recorder<'_> {
    fn beta(&mut self, _side: Side, t: usize, f: &PolicyFeatures) -> Result<f64> {
        gru_input(f, &mut self.input);
        let (next, mut read) = gru_readout(&self.state, &self.input, self.params)?;
        self.state = next;
        if self.params.b_o.is_some() {
            read.push(1.0);
        }
        self.rows.push(read);
        self.targets.push(schedule_logit(self.base, t));
        Ok(self.base.powi(t as i32))
    }
}

/// Refits `w_o` (and `b_o`) of a GRU hypernetwork; returns the RMS logit
/// error left over the recorded steps.
pub fn fit_gru(p: &mut HyperGruParams, base: f64, samples: &[&Sample], layers: usize) -> Result<f64> {
    check_base(base)?;
    needs_samples(samples)?;
    // the raw sqrt(SNR) input spans a wide range; starting blind to it keeps
    // the fitted readout from extrapolating to unseen noise levels
    let snr_col = p.hidden() + p.n();
    for w in [&mut p.w_z, &mut p.w_r, &mut p.w_h] {
        for r in 0..w.rows() {
            w.set(r, snr_col, 0.0);
        }
    }
    let (mut rows, mut targets) = (Vec::new(), Vec::new());
    for s in samples {
        let prior = SignalPrior::new(s.rho)?;
        let mut rec = Recorder {
            params: p,
            base,
            state: vec![0.0; p.hidden()],
            input: Vec::with_capacity(p.input_dim()),
            rows: Vec::new(),
            targets: Vec::new(),
        };
        run(s, &prior, &mut rec, layers)?;
        rows.append(&mut rec.rows);
        targets.append(&mut rec.targets);
    }
    let w = ridge(&rows, &targets)?;
    let hidden = p.hidden();
    p.w_o = Weights::from_row_major(1, hidden, w[..hidden].to_vec())?;
    if p.b_o.is_some() {
        p.b_o = Some(Weights::from_row_major(1, 1, vec![w[hidden]])?);
    }
    Ok(rms(rows.iter().zip(&targets).map(|(r, t)| r.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() - t)))
}
