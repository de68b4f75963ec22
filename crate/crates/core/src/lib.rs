//! Generalized energy detection (the p-norm detector) under McLeish
//! impulsive noise and Rician fast fading.
//!
//! The crate is organised bottom-up:
//!
//! * [`special`] holds the scalar kernels (Gamma family, Bessel K,
//!   Kummer's function, the Gaussian Q function and Gamma-weighted
//!   quadrature).
//! * [`noise`] and [`channel`] describe the noise and fading environments
//!   and provide exact samplers.
//! * [`detector`] computes the CLT-based false-alarm and detection
//!   probabilities, thresholds and the optimum exponent.
//! * [`montecarlo`] validates the analytics by simulation and produces
//!   sweep data; [`report`] serialises it.
//! * [`validation`] bundles the analytic-versus-simulation checks used by
//!   the `validate` command.

pub mod channel;
pub mod detector;
mod error;
pub mod montecarlo;
pub mod noise;
pub mod report;
pub mod rng;
pub mod special;
#[cfg(test)]
mod test_support;
pub mod validation;

pub use channel::RicianChannel;
pub use detector::{DetectorConfig, GaussianApprox};
pub use error::{Error, Result};
pub use montecarlo::{H1Model, SweepKind, SweepResult};
pub use noise::McLeishNoise;

/// Converts a decibel ratio into linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear power ratio into decibels.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}
