//! Damping-factor generators.
//!
//! A static two-layer network maps the scenario features `(sigma_tilde,
//! sqrt(SNR))` to a whole damping vector; a GRU generates one factor per
//! solver step from the scenario features, the recent damping history and
//! the current extrinsic variance. Both can be fronted (static) or followed
//! (GRU) by self-attention.

mod activations;
mod attention;
mod checkpoint;
mod gru;
mod hypernet;
mod weights;

pub use activations::{relu, sigmoid, tanh, Activation};
pub use attention::{attention_head, attention_weights, multi_attention, AttentionHead, MultiAttention};
pub use checkpoint::{Checkpoint, CheckpointMeta, NamedArray, OptimizerState, CHECKPOINT_FORMAT};
pub use gru::{gru_input, gru_readout, gru_step, variance_feature, GruPolicy, HyperGruParams};
pub use hypernet::{hypernet_forward, hypernet_hidden, HyperNetParams, Overflow, StaticPolicy};
pub use weights::{ArraySpec, ParamVector, Parametric, Weights};

/// Default hidden width of both controllers.
pub const DEFAULT_HIDDEN: usize = 32;
/// Attention heads in front of the static hypernetwork.
pub const DEFAULT_HEADS: usize = 4;
/// Half-width of the uniform initialization interval.
pub const INIT_SCALE: f64 = 0.1;
