//! The expectation-consistent solver and its building blocks.

mod bessel;
mod init;
mod message;
mod metrics;
mod modules;
mod solver;

pub use bessel::{bessel_ratio, bessel_ratio_with_complement};
pub use init::spectral_init;
pub use message::{damp, extrinsic, gaussian_product, GaussianMessage, V_MAX, V_MIN};
pub use metrics::{align_phase, nmse_db, NMSE_FLOOR_DB};
pub use modules::{module_a, module_b, module_c, Direction};
pub use solver::{
    run, run_measurements, write_trace_csv, DampingPolicy, LayerRecord, PolicyFeatures, Schedule, Side,
    SolverTrace,
};
