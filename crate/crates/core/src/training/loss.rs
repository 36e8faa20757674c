use crate::gecsr::{align_phase, SolverTrace};
use crate::{CVector, Error, Result};

/// Per-sample losses are capped here during training so one divergent
/// sample cannot dominate a batch.
pub const LOSS_CLIP: f64 = 1e6;

#[derive(Clone, Debug, PartialEq)]
pub struct LossReport {
    /// Mean over samples of the per-sample layer sums.
    pub total: f64,
    /// Mean over samples, per layer.
    pub per_layer: Vec<f64>,
    pub per_sample: Vec<f64>,
}

/// `sum_t ||x - align(x, x_hat(t))||^2` over the first `layers` layers.
pub fn sample_loss(x: &CVector, trace: &SolverTrace, layers: usize) -> Result<Vec<f64>> {
    if trace.layers.len() < layers {
        return Err(Error::TruncatedTrace { got: trace.layers.len(), want: layers });
    }
    trace.layers[..layers]
        .iter()
        .map(|rec| {
            let aligned = align_phase(x, &rec.x_hat)?;
            Ok((x - aligned).norm_squared())
        })
        .collect()
}

pub fn multi_layer_loss(batch: &[(&CVector, &SolverTrace)], layers: usize) -> Result<LossReport> {
    if batch.is_empty() {
        return Err(Error::Empty("loss over an empty batch".into()));
    }
    let mut per_layer = vec![0.0; layers];
    let mut per_sample = Vec::with_capacity(batch.len());
    for (x, trace) in batch {
        let terms = sample_loss(x, trace, layers)?;
        per_layer.iter_mut().zip(&terms).for_each(|(acc, v)| *acc += v);
        per_sample.push(terms.iter().sum());
    }
    let count = batch.len() as f64;
    per_layer.iter_mut().for_each(|v| *v /= count);
    let total = per_sample.iter().sum::<f64>() / count;
    Ok(LossReport { total, per_layer, per_sample })
}
