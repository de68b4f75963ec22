//! McLeish noise: a circularly symmetric Gaussian scale mixture.
//!
//! A McLeish sample is `w = √G · X` with `X ~ CN(0, σ²)` and an independent
//! `G ~ Gamma(shape v, rate v)` (unit mean). The shape `v` controls the
//! impulsiveness: `v → 0⁺` is Dirac-like, `v = 1` is the complex Laplacian
//! and `v → ∞` is Gaussian.
//!
//! The density implemented here is the one implied by that mixture,
//!
//! ```text
//! f(w) = 2 v^{(v+1)/2} |w|^{v−1} / (π Γ(v) σ^{v+1}) · K_{v−1}(2√v |w| / σ),
//! ```
//!
//! which integrates to one over the complex plane and reproduces the
//! absolute moments `E|w|^n = Γ(n/2+v) Γ(n/2+1) σ^n / (Γ(v) v^{n/2})`.
//! The frequently quoted form with prefactor `|w|^{v−1} / σ` and Bessel
//! argument `√(2v/σ²)|w|` does not normalise for general `v` and is not
//! used.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::special::{
    bessel_k_scaled, gamma_expectation, ln_gamma, ln_gamma_ratio, Refinement,
};

/// Largest accepted non-Gaussianity; beyond this use [`McLeishNoise::gaussian`].
pub const MAX_NON_GAUSSIANITY: f64 = 1e8;

// Orders |v − 1| above this go through the mixture integral instead of K_{v−1}.
const MAX_CLOSED_FORM_ORDER: f64 = 50.0;

/// The noise environment: power, impulsiveness and estimation uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McLeishNoise {
    variance: f64,
    /// `None` is the Gaussian limit (`G ≡ 1`).
    non_gaussianity: Option<f64>,
    uncertainty_db: f64,
}

impl McLeishNoise {
    /// Noise with power `variance` (σ²) and non-Gaussianity `v`.
    pub fn new(variance: f64, non_gaussianity: f64) -> Result<Self> {
        check_variance(variance)?;
        if !(non_gaussianity > 0.0) || non_gaussianity > MAX_NON_GAUSSIANITY {
            return Err(Error::domain(
                "McLeishNoise",
                format!(
                    "non-Gaussianity v = {non_gaussianity} must lie in (0, {MAX_NON_GAUSSIANITY:e}]; \
                     use the Gaussian limit for larger values"
                ),
            ));
        }
        Ok(Self {
            variance,
            non_gaussianity: Some(non_gaussianity),
            uncertainty_db: 0.0,
        })
    }

    /// The `v → ∞` limit: circularly symmetric complex Gaussian noise.
    pub fn gaussian(variance: f64) -> Result<Self> {
        check_variance(variance)?;
        Ok(Self {
            variance,
            non_gaussianity: None,
            uncertainty_db: 0.0,
        })
    }

    /// Attaches a noise-power uncertainty bound `ρ` (in dB, `≥ 0`).
    pub fn with_uncertainty_db(mut self, uncertainty_db: f64) -> Result<Self> {
        if !(uncertainty_db >= 0.0) || !uncertainty_db.is_finite() {
            return Err(Error::domain(
                "McLeishNoise",
                format!("uncertainty bound {uncertainty_db} dB must be finite and >= 0"),
            ));
        }
        self.uncertainty_db = uncertainty_db;
        Ok(self)
    }

    /// The (estimated) noise power σ².
    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    /// `Some(v)`, or `None` in the Gaussian limit.
    pub fn non_gaussianity(&self) -> Option<f64> {
        self.non_gaussianity
    }

    pub fn is_gaussian_limit(&self) -> bool {
        self.non_gaussianity.is_none()
    }

    pub fn uncertainty_db(&self) -> f64 {
        self.uncertainty_db
    }

    /// Linear uncertainty factor `ρ = 10^{ρ_dB/10} ≥ 1`.
    pub fn uncertainty_linear(&self) -> f64 {
        crate::db_to_linear(self.uncertainty_db)
    }

    /// The worst-case noise: variance inflated by the uncertainty factor,
    /// uncertainty cleared.
    pub fn worst_case(&self) -> Self {
        Self {
            variance: self.variance * self.uncertainty_linear(),
            non_gaussianity: self.non_gaussianity,
            uncertainty_db: 0.0,
        }
    }

    /// A copy with a different power and the same shape.
    pub fn with_variance(&self, variance: f64) -> Result<Self> {
        check_variance(variance)?;
        Ok(Self { variance, ..*self })
    }

    /// `E[f(G)]` over the mixing variable; exactly `f(1)` in the Gaussian limit.
    pub fn mixing_expectation<F: Fn(f64) -> f64>(&self, f: F, refinement: Refinement) -> Result<f64> {
        match self.non_gaussianity {
            None => Ok(f(1.0)),
            Some(v) => crate::special::gamma_expectation_with(f, v, refinement),
        }
    }

    pub fn pdf(&self, w_abs: f64) -> Result<f64> {
        mcleish_pdf(w_abs, self)
    }

    pub fn abs_moment(&self, n: f64) -> Result<f64> {
        abs_moment_h0(n, self)
    }

    /// A reusable sampler for this noise.
    pub fn sampler(&self) -> McLeishSampler {
        McLeishSampler::new(self)
    }
}

fn check_variance(variance: f64) -> Result<()> {
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::domain(
            "McLeishNoise",
            format!("variance {variance} must be finite and > 0"),
        ));
    }
    Ok(())
}

/// Density of a McLeish sample at modulus `w_abs`, as a density over the
/// complex plane (so `2π ∫ r f(r) dr = 1`).
///
/// At the origin the density is infinite for `v ≤ 1`; `f64::INFINITY` is
/// returned in that case.
pub fn mcleish_pdf(w_abs: f64, noise: &McLeishNoise) -> Result<f64> {
    if !(w_abs >= 0.0) {
        return Err(Error::domain("mcleish_pdf", format!("|w| = {w_abs} must be >= 0")));
    }
    let s2 = noise.variance;
    if w_abs.is_infinite() {
        return Ok(0.0);
    }
    let v = match noise.non_gaussianity {
        None => return Ok((-w_abs * w_abs / s2).exp() / (std::f64::consts::PI * s2)),
        Some(v) => v,
    };
    if w_abs == 0.0 {
        return Ok(if v > 1.0 {
            v / ((v - 1.0) * std::f64::consts::PI * s2)
        } else {
            f64::INFINITY
        });
    }
    if (v - 1.0).abs() > MAX_CLOSED_FORM_ORDER {
        return mixture_pdf(w_abs, noise);
    }
    let x = 2.0 * v.sqrt() * w_abs / s2.sqrt();
    let k_scaled = bessel_k_scaled(v - 1.0, x)?;
    let ln_prefactor = std::f64::consts::LN_2 + 0.5 * (v + 1.0) * v.ln() + (v - 1.0) * w_abs.ln()
        - std::f64::consts::PI.ln()
        - ln_gamma(v)?
        - 0.5 * (v + 1.0) * s2.ln();
    Ok((ln_prefactor + k_scaled.ln() - x).exp())
}

// f(r) = E[(π G σ²)^{−1} exp(−r² / (G σ²))].
fn mixture_pdf(w_abs: f64, noise: &McLeishNoise) -> Result<f64> {
    let s2 = noise.variance;
    let r2 = w_abs * w_abs;
    let v = noise.non_gaussianity.expect("mixture_pdf needs a finite shape");
    gamma_expectation(
        |g| (-r2 / (g * s2)).exp() / (std::f64::consts::PI * g * s2),
        v,
    )
}

/// `E[|w|^n]` for McLeish noise; `n` may be fractional, `n > −2`.
pub fn abs_moment_h0(n: f64, noise: &McLeishNoise) -> Result<f64> {
    if !(n > -2.0) || !n.is_finite() {
        return Err(Error::domain("abs_moment_h0", format!("order n = {n} must be > -2")));
    }
    let half = 0.5 * n;
    let rayleigh = ln_gamma(half + 1.0)? + half * noise.variance.ln();
    let mixing = match noise.non_gaussianity {
        None => 0.0,
        Some(v) => {
            if half + v <= 0.0 {
                return Err(Error::domain(
                    "abs_moment_h0",
                    format!("E|w|^{n} diverges for v = {v} (needs n > -2v)"),
                ));
            }
            ln_gamma_ratio(v, half)?
        }
    };
    Ok((rayleigh + mixing).exp())
}

/// Draws McLeish samples from the Gamma–Gaussian decomposition.
#[derive(Debug, Clone)]
pub struct McLeishSampler {
    mixing: Option<Gamma<f64>>,
    component_sd: f64,
}

impl McLeishSampler {
    pub fn new(noise: &McLeishNoise) -> Self {
        let mixing = noise
            .non_gaussianity
            .map(|v| Gamma::new(v, 1.0 / v).expect("validated shape"));
        Self {
            mixing,
            component_sd: (0.5 * noise.variance).sqrt(),
        }
    }

    /// Draws the mixing variable `G` (always 1 in the Gaussian limit).
    #[inline]
    pub fn sample_mixing<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.mixing {
            Some(gamma) => gamma.sample(rng),
            None => 1.0,
        }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        let scale = self.sample_mixing(rng).sqrt() * self.component_sd;
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(scale * re, scale * im)
    }
}

/// `count` i.i.d. McLeish samples from a ChaCha8 stream seeded with `seed`.
pub fn sample_mcleish(noise: &McLeishNoise, count: usize, seed: u64) -> Vec<Complex64> {
    let sampler = noise.sampler();
    let mut rng = rng::seeded(seed);
    (0..count).map(|_| sampler.sample(&mut rng)).collect()
}
