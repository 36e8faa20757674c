//! Training and evaluation of the damping controllers.

mod controller;
mod eval;
mod gradcheck;
mod loss;
mod optim;
mod spsa;
mod trainer;
mod warm;

pub use controller::{Controller, ControllerSpec, DirectPolicy, NetParamsDirect, Variant};
pub use eval::{evaluate, evaluate_policy, EvalCurve, SampleOutcome, DIVERGED_FILL_DB};
pub use gradcheck::{grad_check, Comparison, GradCheckConfig, GradCheckReport};
pub use loss::{multi_layer_loss, sample_loss, LossReport, LOSS_CLIP};
pub use optim::{adam_step, sgd_step, OptimizerKind};
pub use spsa::{central_difference, cosine_similarity, spsa_gradient};
pub use trainer::{train, write_loss_csv, GradEstimator, LossRecord, Trainer, TrainerConfig, TrainingOutcome};
