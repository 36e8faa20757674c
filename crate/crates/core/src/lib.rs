//! Expectation-consistent phase retrieval (GEC-SR) with learned damping.
//!
//! The crate is organised around the solver pipeline:
//!
//! - [`model`] generates signals, SVD-form transform matrices and phase-less
//!   measurements, and regenerates datasets deterministically from manifests.
//! - [`gecsr`] holds the message-passing solver: the phase reconstructor,
//!   the linear reconstructor, the denoiser, extrinsic/damping operations,
//!   spectral initialization and the layer scheduler.
//! - [`hypernets`] contains the damping controllers (static two-layer
//!   hypernetwork, recurrent GRU controller, self-attention front ends).
//! - [`training`] implements the multi-layer loss, SPSA gradients, Adam and
//!   the training/evaluation loops.
//! - [`cli`] ties the above into reproducible experiments.

pub mod cli;
pub mod error;
pub mod gecsr;
pub mod hypernets;
mod io;
pub mod model;
pub mod training;

pub use error::{Error, Result};
pub use io::write_atomic;

pub use num_complex::Complex64;

/// Complex column vector used for signals and messages.
pub type CVector = nalgebra::DVector<Complex64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
