//! Closed-form performance analysis of finite-length MMSE MIMO equalizers for
//! space-division-multiplexed (SDM) optical links, plus a Monte Carlo waveform
//! simulator used to validate the predictions.
//!
//! The crate is organised along the processing chain:
//!
//! - [`channel`]: random SDM channel realizations (sections, links, target
//!   path), super-Gaussian in-line filters, the colored ASE noise covariance and
//!   its whitening transform.
//! - [`discretize`]: end-to-end response with pulse shaping and the
//!   fractionally spaced matrix tap sequence `{P_m}`.
//! - [`mmse`]: block-Toeplitz channel, MMSE tap bank, error covariance,
//!   unbiased per-mode SNR, harmonic SNR, latency search and the large-tap
//!   IIR reference.
//! - [`simulator`]: QPSK waveforms, frequency-domain channel application,
//!   AWGN, receiver front-end, supervised LMS and fixed-tap equalization.
//! - [`experiment`]: JSON scenario configs, sweeps, result tables and the
//!   speed-up benchmark behind the `sdmeq` binary.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

// Range checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod banded;
pub mod channel;
pub mod container;
pub mod discretize;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod mmse;
pub mod pulse;
pub mod rng;
pub mod simulator;

pub use error::{Error, Result};

/// Double-precision complex sample.
pub type C64 = num_complex::Complex<f64>;

/// Dense complex matrix used throughout the crate.
pub type CMatrix = nalgebra::DMatrix<C64>;

/// Linear power ratio to decibels.
pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Decibels to linear power ratio.
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
