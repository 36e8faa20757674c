//! Signal, transform-matrix and measurement generation.

mod dataset;
mod matrix;
mod measure;
pub mod pgm;
mod prior;

pub use dataset::{generate_dataset, ClassSpec, DatasetManifest, MatrixClass};
pub use matrix::{
    binary_matrix, gaussian_class_singulars, geometric_singulars, haar_isometry,
    sample_haar_unitary, scale_to_snr, TransformMatrix,
};
pub use measure::{forward_measure, Sample};
pub use prior::{complex_gaussian, sample_signal, SignalPrior};

/// Converts a decibel value to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}
