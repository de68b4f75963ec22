//! Analytic-versus-reference checks behind the `validate` command.
//!
//! Each check covers one family of identities or simulation comparisons and
//! reports the worst deviation it saw. [`Scale::Quick`] shrinks the Monte
//! Carlo work so the whole suite finishes in well under a minute.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{unit_rice_abs_moment, RicianChannel};
use crate::detector::{
    detection_prob, h1_moment_even_sum, h1_moment_laplacian, h1_moment_quadrature, threshold,
    worst_case_threshold, DetectorConfig,
};
use crate::error::Result;
use crate::montecarlo::{estimate_pd, estimate_pf, H1Model};
use crate::noise::{abs_moment_h0, mcleish_pdf, McLeishNoise};
use crate::rng::{derive_seed, substream};
use crate::special::{integrate_adaptive, ln_gamma, Refinement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Quick,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    /// Number of individual comparisons made.
    pub comparisons: usize,
    pub detail: String,
    #[serde(serialize_with = "as_seconds")]
    pub elapsed: Duration,
}

fn as_seconds<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} [{}] {}: {} ({} comparisons, {:.1} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.comparisons,
            self.elapsed.as_secs_f64()
        )
    }
}

/// Collects comparisons and remembers the worst one.
struct Tally {
    comparisons: usize,
    failures: Vec<String>,
    worst: f64,
    worst_label: String,
}

impl Tally {
    fn new() -> Self {
        Self {
            comparisons: 0,
            failures: Vec::new(),
            worst: 0.0,
            worst_label: String::new(),
        }
    }

    /// Records `deviation / allowed`; values above 1 fail.
    fn record(&mut self, label: impl Into<String>, deviation: f64, allowed: f64) {
        self.comparisons += 1;
        let ratio = deviation / allowed;
        let label = label.into();
        if !(ratio <= 1.0) {
            self.failures.push(format!("{label}: {deviation:.3e} > {allowed:.3e}"));
        }
        if !(ratio <= self.worst) {
            self.worst = ratio;
            self.worst_label = label;
        }
    }

    fn finish(self, id: u32, name: &'static str, started: Instant) -> CheckOutcome {
        let passed = self.failures.is_empty();
        let detail = if passed {
            format!("worst deviation {:.3} of tolerance at {}", self.worst, self.worst_label)
        } else {
            let shown: Vec<&str> = self.failures.iter().take(3).map(String::as_str).collect();
            format!("{} failing, e.g. {}", self.failures.len(), shown.join("; "))
        };
        CheckOutcome {
            id,
            name,
            passed,
            comparisons: self.comparisons,
            detail,
            elapsed: started.elapsed(),
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn mcleish(v: Option<f64>) -> Result<McLeishNoise> {
    match v {
        Some(v) => McLeishNoise::new(1.0, v),
        None => McLeishNoise::gaussian(1.0),
    }
}

fn shape_label(v: Option<f64>) -> String {
    v.map_or("gaussian".to_string(), |v| format!("v={v}"))
}

/// Runs every check in order.
pub fn run_all(scale: Scale, seed: u64) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        moment_identities()?,
        moment_paths(scale, seed)?,
        cfar_calibration(scale, seed)?,
        detection_fidelity(scale, seed)?,
        threshold_scaling()?,
        density_checks()?,
    ])
}

/// `E|w|² = σ²` and unit power of the Rice variable.
pub fn moment_identities() -> Result<CheckOutcome> {
    let started = Instant::now();
    let mut tally = Tally::new();
    for &v in &[0.25, 1.0, 4.0, 64.0] {
        for &s2 in &[0.5, 1.0, 2.0] {
            let m = abs_moment_h0(2.0, &McLeishNoise::new(s2, v)?)?;
            tally.record(format!("H0 v={v} var={s2}"), rel(m, s2), 1e-12);
        }
    }
    for &alpha in &[0.0, 1.0, 3.0, 10.0] {
        tally.record(format!("Rice alpha={alpha}"), rel(unit_rice_abs_moment(2.0, alpha)?, 1.0), 1e-12);
    }
    Ok(tally.finish(1, "moment identities", started))
}

/// Even-order sum, Laplacian reduction and quadrature against each other and
/// against effective-model simulation.
pub fn moment_paths(scale: Scale, seed: u64) -> Result<CheckOutcome> {
    let started = Instant::now();
    let mut tally = Tally::new();
    let snr = 1.0;
    for &n in &[2u32, 4, 6] {
        for &v in &[0.5, 1.0, 5.0] {
            for &alpha in &[0.0, 1.0, 3.0] {
                let channel = RicianChannel::new(alpha, 0.0, 1.0)?;
                let noise = McLeishNoise::new(1.0, v)?;
                let even = h1_moment_even_sum(n, snr, &channel, &noise)?;
                let quad = h1_moment_quadrature(n as f64, snr, &channel, &noise, Refinement::Auto)?;
                tally.record(format!("even n={n} v={v} alpha={alpha}"), rel(even, quad), 1e-6);
            }
        }
    }
    let laplacian = McLeishNoise::new(1.0, 1.0)?;
    for &n in &[0.5, 1.0, 3.0] {
        for &alpha in &[0.0, 1.0, 3.0] {
            let channel = RicianChannel::new(alpha, 0.0, 1.0)?;
            let closed = h1_moment_laplacian(n, snr, &channel, 1.0)?;
            let quad = h1_moment_quadrature(n, snr, &channel, &laplacian, Refinement::Auto)?;
            tally.record(format!("laplacian n={n} alpha={alpha}"), rel(closed, quad), 1e-6);
        }
    }

    let draws = match scale {
        Scale::Quick => 200_000,
        Scale::Full => 1_000_000,
    };
    let orders = [0.5, 1.0, 2.0, 3.0, 4.0, 6.0];
    let mut case = 0u64;
    for &v in &[0.5, 1.0, 5.0] {
        for &alpha in &[0.0, 1.0, 3.0] {
            let channel = RicianChannel::new(alpha, 0.0, 1.0)?;
            let noise = McLeishNoise::new(1.0, v)?;
            let sums = effective_power_sums(&channel, &noise, snr, &orders, draws, derive_seed(seed, case));
            case += 1;
            for (k, &n) in orders.iter().enumerate() {
                // only the orders covered by one of the two closed forms
                let analytic = if n.fract() == 0.0 && n as u32 % 2 == 0 {
                    h1_moment_even_sum(n as u32, snr, &channel, &noise)?
                } else if v == 1.0 {
                    h1_moment_laplacian(n, snr, &channel, 1.0)?
                } else {
                    continue;
                };
                let mean = sums[k].0 / draws as f64;
                let var = (sums[k].1 / draws as f64 - mean * mean) * draws as f64 / (draws as f64 - 1.0);
                let se = (var / draws as f64).sqrt();
                tally.record(format!("simulation n={n} v={v} alpha={alpha}"), (mean - analytic).abs(), 4.0 * se);
            }
        }
    }
    Ok(tally.finish(2, "closed forms vs quadrature vs simulation", started))
}

// Per order: (Σ|y|^n, Σ|y|^{2n}) over effective-model draws, reduced in a
// fixed chunk order so the result does not depend on scheduling.
fn effective_power_sums(
    channel: &RicianChannel,
    noise: &McLeishNoise,
    snr: f64,
    orders: &[f64],
    draws: usize,
    seed: u64,
) -> Vec<(f64, f64)> {
    const CHUNK: usize = 16_384;
    let sampler = noise.sampler();
    let z0 = channel.unit_rice();
    let signal = snr * noise.variance() * channel.scatter_variance();
    let chunks = draws.div_ceil(CHUNK);
    let partial: Vec<Vec<(f64, f64)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c as u64);
            let mut acc = vec![(0.0, 0.0); orders.len()];
            for _ in 0..CHUNK.min(draws - c * CHUNK) {
                let g = sampler.sample_mixing(&mut rng);
                let r2 = (signal + g * noise.variance()) * z0.sample(&mut rng).norm_sqr();
                for (slot, &n) in acc.iter_mut().zip(orders) {
                    let x = r2.powf(0.5 * n);
                    slot.0 += x;
                    slot.1 += x * x;
                }
            }
            acc
        })
        .collect();
    let mut total = vec![(0.0, 0.0); orders.len()];
    for chunk in partial {
        for (t, c) in total.iter_mut().zip(chunk) {
            t.0 += c.0;
            t.1 += c.1;
        }
    }
    total
}

/// Simulated false-alarm rate at the CFAR threshold.
pub fn cfar_calibration(scale: Scale, seed: u64) -> Result<CheckOutcome> {
    let started = Instant::now();
    let mut tally = Tally::new();
    let trials = match scale {
        Scale::Quick => 10_000,
        Scale::Full => 100_000,
    };
    let mut case = 0u64;
    for &p in &[0.1, 1.0, 2.0] {
        for &v in &[Some(0.5), Some(1.0), None] {
            for &q in &[0.01, 0.1] {
                let cfg = DetectorConfig::new(p, 1024, q)?;
                let noise = mcleish(v)?;
                let lambda = threshold(&cfg, &noise)?;
                let est = estimate_pf(&cfg, &noise, lambda, trials, derive_seed(seed ^ 0x3, case))?;
                case += 1;
                let allowed = 0.01f64.max(4.0 * (q * (1.0 - q) / trials as f64).sqrt());
                tally.record(
                    format!("p={p} {} pf={q} (got {:.4})", shape_label(v), est.probability),
                    (est.probability - q).abs(),
                    allowed,
                );
            }
        }
    }
    Ok(tally.finish(3, "CFAR calibration", started))
}

/// Analytic against simulated detection probability, Rayleigh fading.
pub fn detection_fidelity(scale: Scale, seed: u64) -> Result<CheckOutcome> {
    let started = Instant::now();
    let mut tally = Tally::new();
    let trials = match scale {
        Scale::Quick => 2_000,
        Scale::Full => 10_000,
    };
    let channel = RicianChannel::rayleigh(1.0)?;
    let mut case = 0u64;
    for &snr_db in &[-10.0, -5.0, 0.0] {
        for &p in &[1.0, 2.0] {
            for &v in &[Some(1.0), None] {
                let cfg = DetectorConfig::new(p, 1024, 0.1)?;
                let noise = mcleish(v)?;
                let snr = crate::db_to_linear(snr_db);
                let lambda = threshold(&cfg, &noise)?;
                let analytic = detection_prob(lambda, &cfg, snr, &channel, &noise)?;
                let est = estimate_pd(
                    &cfg,
                    snr,
                    &channel,
                    &noise,
                    lambda,
                    trials,
                    derive_seed(seed ^ 0x4, case),
                    H1Model::Physical,
                )?;
                case += 1;
                let allowed = match scale {
                    Scale::Full => 0.02,
                    // fewer trials: allow for the larger sampling error
                    Scale::Quick => 0.02f64.max(4.0 * est.std_error),
                };
                tally.record(
                    format!("snr={snr_db}dB p={p} {} (analytic {analytic:.4}, simulated {:.4})", shape_label(v), est.probability),
                    (analytic - est.probability).abs(),
                    allowed,
                );
            }
        }
    }
    Ok(tally.finish(4, "detection probability fidelity", started))
}

/// `ρ^{p/2}` threshold scaling against recomputation in the inflated noise.
pub fn threshold_scaling() -> Result<CheckOutcome> {
    let started = Instant::now();
    let mut tally = Tally::new();
    for &p in &[0.1, 1.0, 2.0] {
        for &rho in &[0.1, 1.0, 3.0] {
            for &v in &[Some(1.0), None] {
                let cfg = DetectorConfig::new(p, 1024, 0.1)?;
                let noise = mcleish(v)?.with_uncertainty_db(rho)?;
                let scaled = worst_case_threshold(threshold(&cfg, &noise)?, p, rho)?;
                let direct = threshold(&cfg, &noise.worst_case())?;
                tally.record(format!("p={p} rho={rho}dB {}", shape_label(v)), rel(scaled, direct), 1e-12);
            }
        }
    }
    Ok(tally.finish(5, "threshold scaling identity", started))
}

/// Normalisation of the McLeish density and agreement with its mixture
/// integral.
pub fn density_checks() -> Result<CheckOutcome> {
    let started = Instant::now();
    let mut tally = Tally::new();
    for &v in &[0.5, 1.0, 2.0, 8.0] {
        let noise = McLeishNoise::new(1.0, v)?;
        let radial = |r: f64| 2.0 * std::f64::consts::PI * r * mcleish_pdf(r, &noise).unwrap_or(f64::NAN);
        let mass = half_line_integral(radial, 1e-11)?;
        tally.record(format!("normalisation v={v}"), (mass - 1.0).abs(), 1e-6);
        for i in 0..20 {
            let r = 0.02 * (400f64).powf(i as f64 / 19.0);
            let closed = mcleish_pdf(r, &noise)?;
            let oracle = mixture_density(r, v, 1.0)?;
            tally.record(format!("density v={v} r={r:.3}"), rel(closed, oracle), 1e-8);
        }
    }
    Ok(tally.finish(10, "McLeish density", started))
}

// ∫_0^∞ f by adaptive Gauss–Kronrod on [0, 1] and on [1, ∞) mapped to (0, 1).
fn half_line_integral<F: Fn(f64) -> f64>(f: F, rel_tol: f64) -> Result<f64> {
    let (head, _) = integrate_adaptive(&f, 0.0, 1.0, rel_tol, 1e-15)?;
    let (tail, _) = integrate_adaptive(
        |s| {
            let one_minus = 1.0 - s;
            f(1.0 + s / one_minus) / (one_minus * one_minus)
        },
        0.0,
        1.0,
        rel_tol,
        1e-15,
    )?;
    Ok(head + tail)
}

// f(r) = ∫ Gamma(v, rate v)(g) · (π g σ²)^{-1} exp(−r²/(g σ²)) dg
fn mixture_density(r: f64, v: f64, variance: f64) -> Result<f64> {
    let ln_norm = v * v.ln() - ln_gamma(v)?;
    let integrand = |g: f64| {
        if g <= 0.0 {
            return 0.0;
        }
        let ln = ln_norm + (v - 2.0) * g.ln() - v * g - r * r / (g * variance);
        ln.exp() / (std::f64::consts::PI * variance)
    };
    half_line_integral(integrand, 1e-12)
}
