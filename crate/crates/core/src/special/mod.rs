//! Scalar special functions used throughout the detector analytics.
//!
//! Everything here is a pure function of its arguments and safe to call
//! from any number of threads.

mod bessel;
mod gamma;
mod hypergeometric;
mod normal;
mod quadrature;

pub use bessel::{bessel_k, bessel_k_scaled, bessel_k_with_status, BesselK};
pub use gamma::{
    gamma, ln_gamma, ln_gamma_ratio, ln_upper_incomplete_gamma, upper_incomplete_gamma,
};
pub use hypergeometric::kummer_1f1;
pub use normal::{gaussian_q, inverse_gaussian_q, standard_normal_pdf};
pub use quadrature::{
    gamma_expectation, gamma_expectation_with, integrate_adaptive, Refinement, QuadratureRule,
};
