use serde::{Deserialize, Serialize};

use crate::hypernets::OptimizerState;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam { beta1: f64, beta2: f64, eps: f64 },
    Sgd,
}

impl Default for OptimizerKind {
    fn default() -> Self {
        OptimizerKind::Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl OptimizerKind {
    pub fn fresh_state(&self, len: usize) -> OptimizerState {
        let kind = match self {
            OptimizerKind::Adam { .. } => "adam",
            OptimizerKind::Sgd => "sgd",
        };
        OptimizerState { kind: kind.into(), step: 0, m: vec![0.0; len], v: vec![0.0; len] }
    }

    pub fn step(&self, theta: &mut [f64], grad: &[f64], state: &mut OptimizerState, lr: f64) {
        match *self {
            OptimizerKind::Adam { beta1, beta2, eps } => adam_step(theta, grad, state, lr, beta1, beta2, eps),
            OptimizerKind::Sgd => {
                state.step += 1;
                sgd_step(theta, grad, lr)
            }
        }
    }
}

/// Bias-corrected Adam update in place.
pub fn adam_step(theta: &mut [f64], grad: &[f64], state: &mut OptimizerState, lr: f64, beta1: f64, beta2: f64, eps: f64) {
    assert_eq!(theta.len(), grad.len());
    assert_eq!(state.m.len(), theta.len());
    state.step += 1;
    let k = state.step as i32;
    let c1 = 1.0 - beta1.powi(k);
    let c2 = 1.0 - beta2.powi(k);
    for i in 0..theta.len() {
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grad[i];
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grad[i] * grad[i];
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        theta[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

pub fn sgd_step(theta: &mut [f64], grad: &[f64], lr: f64) {
    theta.iter_mut().zip(grad).for_each(|(t, g)| *t -= lr * g);
}
