//! CLT analytics of the p-norm detector `T = Σ|y[u]|^p`.
//!
//! Each sample contributes `|y|^p` with mean `μ` and variance `σ²`, so for
//! `N` independent samples `T ≈ N(Nμ, Nσ²)`. Under H0 the moments follow from
//! the McLeish moments; under H1 they come from the effective model
//! `y = √(s²σ_h² + Gσ_w²) · z0` with `z0` unit-power Rice.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{unit_rice_abs_moment, RicianChannel};
use crate::error::{Error, Result};
use crate::noise::{abs_moment_h0, McLeishNoise};
use crate::special::{gaussian_q, inverse_gaussian_q, ln_gamma_ratio, ln_upper_incomplete_gamma, Refinement};

/// Largest supported exponent.
pub const MAX_EXPONENT: f64 = 8.0;

/// Below this many samples the Gaussian approximation is flagged.
pub const CLT_WARNING_SAMPLES: usize = 64;

/// Default grid step of [`optimize_p`].
pub const DEFAULT_P_STEP: f64 = 0.05;

const EVEN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    exponent: f64,
    samples: usize,
    target_pf: f64,
}

impl DetectorConfig {
    pub fn new(exponent: f64, samples: usize, target_pf: f64) -> Result<Self> {
        check_exponent(exponent)?;
        if samples == 0 {
            return Err(Error::domain("DetectorConfig", "sample count N must be >= 1"));
        }
        if !(target_pf > 0.0 && target_pf < 1.0) {
            return Err(Error::domain(
                "DetectorConfig",
                format!("target_pf = {target_pf} must lie in (0, 1)"),
            ));
        }
        Ok(Self {
            exponent,
            samples,
            target_pf,
        })
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn target_pf(&self) -> f64 {
        self.target_pf
    }

    pub fn with_exponent(&self, exponent: f64) -> Result<Self> {
        Self::new(exponent, self.samples, self.target_pf)
    }

    pub fn with_target_pf(&self, target_pf: f64) -> Result<Self> {
        Self::new(self.exponent, self.samples, target_pf)
    }

    /// True when `N` is too small for the Gaussian approximation to be trusted.
    pub fn clt_warning(&self) -> bool {
        self.samples < CLT_WARNING_SAMPLES
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= MAX_EXPONENT) {
        return Err(Error::domain(
            "DetectorConfig",
            format!("exponent p = {p} must lie in (0, {MAX_EXPONENT}]"),
        ));
    }
    Ok(())
}

/// Mean and variance of one sample's `|y|^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianApprox {
    pub mean: f64,
    pub variance: f64,
    /// Set when the configuration has fewer than [`CLT_WARNING_SAMPLES`] samples.
    pub clt_warning: bool,
}

impl GaussianApprox {
    /// `P(T > λ)` for the `N`-sample sum.
    pub fn exceedance(&self, lambda: f64, samples: usize) -> f64 {
        gaussian_q(self.z_score(lambda, samples))
    }

    /// `(λ − Nμ) / √(Nσ²)`.
    pub fn z_score(&self, lambda: f64, samples: usize) -> f64 {
        let n = samples as f64;
        (lambda - n * self.mean) / (n * self.variance).sqrt()
    }
}

/// `Σ|y|^p`.
pub fn test_statistic(samples: &[Complex64], p: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::domain("test_statistic", "sample list is empty"));
    }
    if !(p > 0.0) {
        return Err(Error::domain("test_statistic", format!("exponent p = {p} must be > 0")));
    }
    Ok(samples.iter().map(|y| abs_pow(*y, p)).sum())
}

/// `|y|^p`, exact for `p = 2` and cheap for `p = 1`.
#[inline]
pub fn abs_pow(y: Complex64, p: f64) -> f64 {
    let r2 = y.norm_sqr();
    if p == 2.0 {
        r2
    } else if p == 1.0 {
        r2.sqrt()
    } else {
        r2.powf(0.5 * p)
    }
}

pub fn h0_approx(cfg: &DetectorConfig, noise: &McLeishNoise) -> Result<GaussianApprox> {
    let p = cfg.exponent;
    let mean = abs_moment_h0(p, noise)?;
    let second = abs_moment_h0(2.0 * p, noise)?;
    let variance = second - mean * mean;
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::numeric(
            "h0_approx",
            format!("non-positive variance {variance:e} at p = {p}"),
        ));
    }
    Ok(GaussianApprox {
        mean,
        variance,
        clt_warning: cfg.clt_warning(),
    })
}

/// The CFAR threshold `λ* = Q⁻¹(P_f) √(Nσ0²) + Nμ0` for the noise as given
/// (any uncertainty attached to `noise` is ignored here).
pub fn threshold(cfg: &DetectorConfig, noise: &McLeishNoise) -> Result<f64> {
    let h0 = h0_approx(cfg, noise)?;
    let n = cfg.samples as f64;
    Ok(inverse_gaussian_q(cfg.target_pf)? * (n * h0.variance).sqrt() + n * h0.mean)
}

pub fn false_alarm_prob(lambda: f64, cfg: &DetectorConfig, noise: &McLeishNoise) -> Result<f64> {
    Ok(h0_approx(cfg, noise)?.exceedance(lambda, cfg.samples))
}

/// `λ* · ρ^{p/2}` with `ρ = 10^{ρ_dB/10}`.
pub fn worst_case_threshold(lambda_star: f64, p: f64, rho_db: f64) -> Result<f64> {
    if !(lambda_star > 0.0) {
        return Err(Error::domain(
            "worst_case_threshold",
            format!("threshold {lambda_star} must be > 0"),
        ));
    }
    if !(rho_db >= 0.0) || !rho_db.is_finite() {
        return Err(Error::domain("worst_case_threshold", format!("rho = {rho_db} dB must be >= 0")));
    }
    Ok(lambda_star * (0.05 * p * rho_db * std::f64::consts::LN_10).exp())
}

fn is_even_order(n: f64) -> Option<u32> {
    let rounded = n.round();
    if (n - rounded).abs() <= EVEN_TOLERANCE && rounded >= 2.0 && rounded % 2.0 == 0.0 {
        Some(rounded as u32)
    } else {
        None
    }
}

fn check_h1_args(n: f64, snr: f64) -> Result<()> {
    if !(n > -2.0) || !n.is_finite() {
        return Err(Error::domain("abs_moment_h1", format!("order n = {n} must be > -2")));
    }
    if !(snr >= 0.0) || !snr.is_finite() {
        return Err(Error::domain("abs_moment_h1", format!("SNR {snr} must be finite and >= 0")));
    }
    Ok(())
}

/// `E|y|^n` under H1 with linear `snr = s²/σ_w²`.
///
/// Even integer orders use the finite binomial sum; every other order uses
/// the Gamma expectation. At `snr = 0` the H0 moment is returned.
pub fn abs_moment_h1(n: f64, snr: f64, channel: &RicianChannel, noise: &McLeishNoise) -> Result<f64> {
    abs_moment_h1_with(n, snr, channel, noise, Refinement::Auto)
}

/// [`abs_moment_h1`] with an explicit quadrature refinement policy.
pub fn abs_moment_h1_with(
    n: f64,
    snr: f64,
    channel: &RicianChannel,
    noise: &McLeishNoise,
    refinement: Refinement,
) -> Result<f64> {
    check_h1_args(n, snr)?;
    if snr == 0.0 {
        return abs_moment_h0(n, noise);
    }
    match is_even_order(n) {
        Some(even) => h1_moment_even_sum(even, snr, channel, noise),
        None => h1_moment_quadrature(n, snr, channel, noise, refinement),
    }
}

fn rice_factor(n: f64, channel: &RicianChannel) -> Result<f64> {
    unit_rice_abs_moment(n, channel.k_factor().sqrt())
}

/// H1 moment through `E_G[(s²σ_h² + Gσ_w²)^{n/2}]` evaluated by quadrature.
pub fn h1_moment_quadrature(
    n: f64,
    snr: f64,
    channel: &RicianChannel,
    noise: &McLeishNoise,
    refinement: Refinement,
) -> Result<f64> {
    check_h1_args(n, snr)?;
    let signal = snr * noise.variance() * channel.scatter_variance();
    let s2 = noise.variance();
    let half = 0.5 * n;
    let mixing = noise.mixing_expectation(|g| (signal + g * s2).powf(half), refinement)?;
    Ok(rice_factor(n, channel)? * mixing)
}

/// H1 moment for even `n = 2m` through the binomial expansion of
/// `(s²σ_h² + Gσ_w²)^m` and the Gamma moments `E[G^k]`.
pub fn h1_moment_even_sum(n: u32, snr: f64, channel: &RicianChannel, noise: &McLeishNoise) -> Result<f64> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::domain("h1_moment_even_sum", format!("order {n} must be a positive even integer")));
    }
    check_h1_args(n as f64, snr)?;
    let m = n / 2;
    let signal = snr * noise.variance() * channel.scatter_variance();
    let s2 = noise.variance();
    let mut sum = 0.0;
    let mut binomial = 1.0;
    for k in 0..=m {
        if k > 0 {
            binomial *= (m - k + 1) as f64 / k as f64;
        }
        let gamma_moment = match noise.non_gaussianity() {
            Some(v) => ln_gamma_ratio(v, k as f64)?.exp(),
            None => 1.0,
        };
        sum += binomial * signal.powi((m - k) as i32) * s2.powi(k as i32) * gamma_moment;
    }
    Ok(rice_factor(n as f64, channel)? * sum)
}

/// H1 moment for Laplacian noise (`v = 1`), where
/// `E[(a + Gb)^m] = b^m e^{a/b} Γ(m+1, a/b)` for exponential `G`.
pub fn h1_moment_laplacian(n: f64, snr: f64, channel: &RicianChannel, variance: f64) -> Result<f64> {
    check_h1_args(n, snr)?;
    if !(snr > 0.0) {
        return Err(Error::domain("h1_moment_laplacian", "needs a positive SNR"));
    }
    let a = snr * variance * channel.scatter_variance();
    let b = variance;
    let m = 0.5 * n;
    let ln_mixing = m * b.ln() + a / b + ln_upper_incomplete_gamma(m + 1.0, a / b)?;
    Ok(rice_factor(n, channel)? * ln_mixing.exp())
}

pub fn h1_approx(
    cfg: &DetectorConfig,
    snr: f64,
    channel: &RicianChannel,
    noise: &McLeishNoise,
) -> Result<GaussianApprox> {
    let p = cfg.exponent;
    let attempt = |refinement: Refinement| -> Result<(f64, f64)> {
        let mean = abs_moment_h1_with(p, snr, channel, noise, refinement)?;
        let second = abs_moment_h1_with(2.0 * p, snr, channel, noise, refinement)?;
        Ok((mean, second - mean * mean))
    };
    let (mut mean, mut variance) = attempt(Refinement::Auto)?;
    if !(variance > 0.0) || !variance.is_finite() {
        (mean, variance) = attempt(Refinement::Adaptive)?;
    }
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::numeric(
            "h1_approx",
            format!("non-positive variance {variance:e} at p = {p}, snr = {snr:e}"),
        ));
    }
    Ok(GaussianApprox {
        mean,
        variance,
        clt_warning: cfg.clt_warning(),
    })
}

pub fn detection_prob(
    lambda_star: f64,
    cfg: &DetectorConfig,
    snr: f64,
    channel: &RicianChannel,
    noise: &McLeishNoise,
) -> Result<f64> {
    Ok(h1_approx(cfg, snr, channel, noise)?.exceedance(lambda_star, cfg.samples))
}

/// Analytic operating point of a detector, including noise uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub threshold: f64,
    /// False-alarm probability when the noise sits at its worst-case power.
    pub pf: f64,
    pub pd: f64,
    /// `(λ − Nμ1)/√(Nσ1²)`; `pd = Q(z_h1)`.
    pub z_h1: f64,
    pub h0: GaussianApprox,
    pub h1: GaussianApprox,
    pub clt_warning: bool,
}

/// Threshold, Pf and Pd at linear `snr` (relative to the estimated noise power).
///
/// With an uncertainty bound `ρ` attached to `noise` the threshold is set for
/// the worst-case noise power `ρσ̂_w²` (equivalently scaled by `ρ^{p/2}`) and
/// the detection probability is evaluated in that same worst-case noise,
/// while the signal power stays at `s² = snr · σ̂_w²`.
pub fn operating_point(
    cfg: &DetectorConfig,
    snr: f64,
    channel: &RicianChannel,
    noise: &McLeishNoise,
) -> Result<OperatingPoint> {
    let worst = noise.worst_case();
    let h0 = h0_approx(cfg, &worst)?;
    let n = cfg.samples as f64;
    let lambda = inverse_gaussian_q(cfg.target_pf)? * (n * h0.variance).sqrt() + n * h0.mean;
    let h1 = h1_approx(cfg, snr / noise.uncertainty_linear(), channel, &worst)?;
    let z_h1 = h1.z_score(lambda, cfg.samples);
    Ok(OperatingPoint {
        threshold: lambda,
        pf: h0.exceedance(lambda, cfg.samples),
        pd: gaussian_q(z_h1),
        z_h1,
        h0,
        h1,
        clt_warning: cfg.clt_warning(),
    })
}

/// Result of the exponent line search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimumExponent {
    pub p: f64,
    pub pd: f64,
}

/// Searches `[p_min, p_max]` for the exponent with the largest CFAR
/// detection probability.
///
/// A grid scan with step `step` is followed by golden-section refinement
/// around the best grid point. Candidates are ranked by `z_h1` (smaller is
/// better), which orders them exactly as `Pd = Q(z_h1)` does but stays
/// informative where `Pd` rounds to 1. Ties go to the smaller `p`.
pub fn optimize_p(
    p_min: f64,
    p_max: f64,
    step: f64,
    cfg: &DetectorConfig,
    snr: f64,
    channel: &RicianChannel,
    noise: &McLeishNoise,
) -> Result<OptimumExponent> {
    check_exponent(p_min)?;
    check_exponent(p_max)?;
    if p_min > p_max {
        return Err(Error::domain("optimize_p", format!("empty range [{p_min}, {p_max}]")));
    }
    if !(step > 0.0) {
        return Err(Error::domain("optimize_p", format!("grid step {step} must be > 0")));
    }
    let objective = |p: f64| -> Result<f64> {
        Ok(operating_point(&cfg.with_exponent(p)?, snr, channel, noise)?.z_h1)
    };

    let steps = ((p_max - p_min) / step + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=steps).map(|i| p_min + i as f64 * step).collect();
    if p_max - grid[steps] > 1e-9 * p_max {
        grid.push(p_max);
    }
    let mut best = 0;
    let mut best_z = f64::INFINITY;
    for (i, &p) in grid.iter().enumerate() {
        let z = objective(p)?;
        if z < best_z {
            best = i;
            best_z = z;
        }
    }
    let mut p_star = grid[best];
    if grid.len() > 1 {
        let lo = grid[best.saturating_sub(1)];
        let hi = grid[(best + 1).min(grid.len() - 1)];
        let (p_refined, z_refined) = golden_section_min(objective, lo, hi, 1e-6)?;
        if z_refined < best_z {
            p_star = p_refined;
            best_z = z_refined;
        }
    }
    Ok(OptimumExponent {
        p: p_star,
        pd: gaussian_q(best_z),
    })
}

fn golden_section_min<F: Fn(f64) -> Result<f64>>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}
