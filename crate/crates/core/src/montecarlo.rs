//! Monte Carlo estimation of false-alarm and detection probabilities and the
//! sweeps that pair them with the analytic values.
//!
//! Trial `t` of an estimate seeded with `seed` draws from its own ChaCha8
//! stream `(seed, t)`, so an estimate does not depend on how trials are
//! scheduled across threads. Sweep point `i` uses the seed
//! `derive_seed(seed, i)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::RicianChannel;
use crate::detector::{abs_pow, operating_point, DetectorConfig};
use crate::error::{Error, Result};
use crate::noise::McLeishNoise;
use crate::rng::{derive_seed, substream, SimRng};

pub const MIN_TRIALS: usize = 100;
pub const DEFAULT_TRIALS: usize = 10_000;
pub const DEFAULT_SAMPLES: usize = 1024;

/// How H1 samples are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum H1Model {
    /// `y = h s + w` with fresh `h` and `w` per sample.
    Physical,
    /// `y = √(s²σ_h² + Gσ_w²) · z0` with fresh `G` and unit-power Rice `z0`.
    Effective,
}

impl H1Model {
    /// The effective model whenever there is a LoS component.
    pub fn default_for(channel: &RicianChannel) -> Self {
        if channel.is_rayleigh() {
            H1Model::Physical
        } else {
            H1Model::Effective
        }
    }
}

impl std::fmt::Display for H1Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            H1Model::Physical => "physical",
            H1Model::Effective => "effective",
        })
    }
}

/// An empirical probability with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub probability: f64,
    pub std_error: f64,
    pub trials: usize,
}

impl Estimate {
    fn from_count(hits: usize, trials: usize) -> Self {
        let probability = hits as f64 / trials as f64;
        Self {
            probability,
            std_error: (probability * (1.0 - probability) / trials as f64).sqrt(),
            trials,
        }
    }
}

fn check_trials(trials: usize) -> Result<()> {
    if trials < MIN_TRIALS {
        return Err(Error::domain(
            "monte_carlo",
            format!("trials = {trials} must be at least {MIN_TRIALS}"),
        ));
    }
    Ok(())
}

fn exceedance<F>(trials: usize, seed: u64, lambda: f64, statistic: F) -> Estimate
where
    F: Fn(&mut SimRng) -> f64 + Sync,
{
    let hits = (0..trials as u64)
        .into_par_iter()
        .filter(|&t| statistic(&mut substream(seed, t)) > lambda)
        .count();
    Estimate::from_count(hits, trials)
}

/// Empirical `P(T > λ)` for noise-only input.
///
/// Noise carrying an uncertainty bound is simulated at its worst-case power.
pub fn estimate_pf(
    cfg: &DetectorConfig,
    noise: &McLeishNoise,
    lambda: f64,
    trials: usize,
    seed: u64,
) -> Result<Estimate> {
    check_trials(trials)?;
    let sampler = noise.worst_case().sampler();
    let (p, n) = (cfg.exponent(), cfg.samples());
    Ok(exceedance(trials, seed, lambda, |rng| {
        (0..n).map(|_| abs_pow(sampler.sample(rng), p)).sum()
    }))
}

/// Empirical `P(T > λ)` under H1 at linear `snr`.
///
/// The signal amplitude is `s = √(snr · σ̂_w²)` with `σ̂_w²` the nominal
/// variance of `noise`; the noise itself is drawn at its worst-case power.
#[allow(clippy::too_many_arguments)]
pub fn estimate_pd(
    cfg: &DetectorConfig,
    snr: f64,
    channel: &RicianChannel,
    noise: &McLeishNoise,
    lambda: f64,
    trials: usize,
    seed: u64,
    model: H1Model,
) -> Result<Estimate> {
    check_trials(trials)?;
    if !(snr >= 0.0) || !snr.is_finite() {
        return Err(Error::domain("estimate_pd", format!("SNR {snr} must be finite and >= 0")));
    }
    let worst = noise.worst_case();
    let sampler = worst.sampler();
    let (p, n) = (cfg.exponent(), cfg.samples());
    let amplitude = (snr * noise.variance()).sqrt();
    let estimate = match model {
        H1Model::Physical => exceedance(trials, seed, lambda, |rng| {
            (0..n)
                .map(|_| {
                    let h = channel.sample(rng);
                    abs_pow(h * amplitude + sampler.sample(rng), p)
                })
                .sum()
        }),
        H1Model::Effective => {
            let z0 = channel.unit_rice();
            let signal = amplitude * amplitude * channel.scatter_variance();
            let s2 = worst.variance();
            exceedance(trials, seed, lambda, |rng| {
                (0..n)
                    .map(|_| {
                        let g = sampler.sample_mixing(rng);
                        let scale = (signal + g * s2).sqrt();
                        abs_pow(z0.sample(rng) * scale, p)
                    })
                    .sum()
            })
        }
    };
    Ok(estimate)
}

/// The swept parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Target false-alarm probability; the ordinate is Pd.
    Roc,
    /// SNR in dB.
    PdVsSnr,
    /// Detector exponent `p`, each with its own CFAR threshold.
    PdVsP,
}

impl SweepKind {
    pub fn abscissa_name(&self) -> &'static str {
        match self {
            SweepKind::Roc => "target_pf",
            SweepKind::PdVsSnr => "snr_db",
            SweepKind::PdVsP => "p",
        }
    }
}

/// Everything that determines a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub grid: Vec<f64>,
    /// Exponent, samples and target Pf; the swept field is overridden per point.
    pub detector: DetectorConfig,
    /// SNR in dB; required by `Roc` and `PdVsP`, unused by `PdVsSnr`.
    pub snr_db: Option<f64>,
    pub channel: RicianChannel,
    pub noise: McLeishNoise,
    pub trials: usize,
    pub seed: u64,
    pub model: H1Model,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub x: f64,
    pub analytic: f64,
    pub empirical: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub abscissa_name: String,
    pub rows: Vec<SweepRow>,
    /// The full specification, seed included.
    pub metadata: SweepSpec,
    /// Set when the sample count is too small for the Gaussian approximation.
    pub clt_warning: bool,
}

pub fn sweep(spec: &SweepSpec) -> Result<SweepResult> {
    if spec.grid.is_empty() {
        return Err(Error::domain("sweep", "grid is empty"));
    }
    if spec.grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("sweep", "grid contains a non-finite value"));
    }
    if spec.grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain("sweep", "grid must be sorted in ascending order"));
    }
    check_trials(spec.trials)?;
    let fixed_snr = || {
        spec.snr_db
            .filter(|s| s.is_finite())
            .ok_or_else(|| Error::domain("sweep", format!("{:?} sweep needs a finite SNR", spec.kind)))
    };

    let mut rows = Vec::with_capacity(spec.grid.len());
    for (i, &x) in spec.grid.iter().enumerate() {
        let (cfg, snr_db) = match spec.kind {
            SweepKind::Roc => (spec.detector.with_target_pf(x)?, fixed_snr()?),
            SweepKind::PdVsSnr => (spec.detector, x),
            SweepKind::PdVsP => (spec.detector.with_exponent(x)?, fixed_snr()?),
        };
        let snr = crate::db_to_linear(snr_db);
        let op = operating_point(&cfg, snr, &spec.channel, &spec.noise)?;
        let empirical = estimate_pd(
            &cfg,
            snr,
            &spec.channel,
            &spec.noise,
            op.threshold,
            spec.trials,
            derive_seed(spec.seed, i as u64),
            spec.model,
        )?;
        rows.push(SweepRow {
            x,
            analytic: op.pd,
            empirical: empirical.probability,
            std_error: empirical.std_error,
        });
    }
    Ok(SweepResult {
        abscissa_name: spec.kind.abscissa_name().to_string(),
        rows,
        metadata: spec.clone(),
        clt_warning: spec.detector.clt_warning(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::{detection_prob, threshold};

    fn laplacian() -> McLeishNoise {
        McLeishNoise::new(1.0, 1.0).unwrap()
    }

    fn rayleigh() -> RicianChannel {
        RicianChannel::rayleigh(1.0).unwrap()
    }

    #[test]
    fn pf_extremes() {
        let cfg = DetectorConfig::new(1.5, 64, 0.1).unwrap();
        assert_eq!(estimate_pf(&cfg, &laplacian(), 0.0, 200, 1).unwrap().probability, 1.0);
        assert_eq!(estimate_pf(&cfg, &laplacian(), 1e12, 200, 1).unwrap().probability, 0.0);
        assert!(estimate_pf(&cfg, &laplacian(), 1.0, 99, 1).is_err());
    }

    #[test]
    fn pf_is_calibrated() {
        let cfg = DetectorConfig::new(1.0, 1024, 0.1).unwrap();
        let noise = laplacian();
        let lambda = threshold(&cfg, &noise).unwrap();
        let est = estimate_pf(&cfg, &noise, lambda, 10_000, 3).unwrap();
        assert!((est.probability - 0.1).abs() < 3.0 * est.std_error.max(0.003), "{est:?}");
    }

    #[test]
    fn pd_saturates_at_high_snr() {
        let cfg = DetectorConfig::new(2.0, 256, 0.1).unwrap();
        let noise = laplacian();
        let lambda = threshold(&cfg, &noise).unwrap();
        let channel = RicianChannel::from_k_factor(2.0, 1.0, 0.4).unwrap();
        for model in [H1Model::Physical, H1Model::Effective] {
            let est = estimate_pd(&cfg, 1e4, &channel, &noise, lambda, 500, 4, model).unwrap();
            assert_eq!(est.probability, 1.0);
        }
    }

    #[test]
    fn models_coincide_for_rayleigh() {
        let cfg = DetectorConfig::new(1.0, 1024, 0.1).unwrap();
        let noise = McLeishNoise::new(1.0, 0.7).unwrap();
        let lambda = threshold(&cfg, &noise).unwrap();
        let snr = crate::db_to_linear(-15.0);
        let a = estimate_pd(&cfg, snr, &rayleigh(), &noise, lambda, 10_000, 5, H1Model::Physical).unwrap();
        let b = estimate_pd(&cfg, snr, &rayleigh(), &noise, lambda, 10_000, 6, H1Model::Effective).unwrap();
        let combined = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!(a.probability > 0.2 && a.probability < 0.9, "{a:?}");
        assert!((a.probability - b.probability).abs() <= 4.0 * combined, "{a:?} {b:?}");
    }

    #[test]
    fn pd_matches_analytic() {
        let cfg = DetectorConfig::new(1.0, 1024, 0.1).unwrap();
        let noise = laplacian();
        let lambda = threshold(&cfg, &noise).unwrap();
        let snr = crate::db_to_linear(-5.0);
        let analytic = detection_prob(lambda, &cfg, snr, &rayleigh(), &noise).unwrap();
        let est = estimate_pd(&cfg, snr, &rayleigh(), &noise, lambda, 10_000, 7, H1Model::Physical).unwrap();
        assert!((est.probability - analytic).abs() <= 0.02, "{analytic} vs {est:?}");
    }

    fn small_spec(kind: SweepKind, grid: Vec<f64>) -> SweepSpec {
        SweepSpec {
            kind,
            grid,
            detector: DetectorConfig::new(1.0, 128, 0.1).unwrap(),
            snr_db: Some(-5.0),
            channel: rayleigh(),
            noise: laplacian(),
            trials: 2_000,
            seed: 42,
            model: H1Model::Physical,
        }
    }

    #[test]
    fn sweep_is_schedule_independent() {
        let spec = small_spec(SweepKind::PdVsSnr, vec![-10.0, -5.0, 0.0]);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| sweep(&spec).unwrap())
        };
        let single = run(1);
        assert_eq!(single, run(4));
        assert_eq!(single, run(7));
        assert_eq!(single.rows.len(), 3);
        assert_eq!(single.abscissa_name, "snr_db");
    }

    #[test]
    fn sweep_rows_are_consistent() {
        for (kind, grid) in [
            (SweepKind::Roc, vec![0.01, 0.1, 0.5]),
            (SweepKind::PdVsSnr, vec![-3.0]),
            (SweepKind::PdVsP, vec![0.5, 1.0, 2.0]),
        ] {
            let result = sweep(&small_spec(kind, grid.clone())).unwrap();
            assert_eq!(result.rows.iter().map(|r| r.x).collect::<Vec<_>>(), grid);
            for row in &result.rows {
                assert!((0.0..=1.0).contains(&row.empirical));
                let trials = result.metadata.trials as f64;
                let se = (row.empirical * (1.0 - row.empirical) / trials).sqrt();
                assert_eq!(row.std_error, se);
                assert!((row.analytic - row.empirical).abs() <= 0.05f64.max(4.0 * se), "{kind:?} {row:?}");
            }
        }
    }

    #[test]
    fn roc_without_signal_sits_on_the_diagonal() {
        let mut spec = small_spec(SweepKind::Roc, vec![0.01, 0.05, 0.1, 0.3, 0.5, 0.9]);
        spec.snr_db = Some(-300.0);
        let result = sweep(&spec).unwrap();
        for row in &result.rows {
            assert!(row.analytic >= row.x - 1e-9, "{row:?}");
        }
        spec.snr_db = Some(-10.0);
        for row in &sweep(&spec).unwrap().rows {
            assert!(row.analytic > row.x, "{row:?}");
        }
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        assert!(sweep(&small_spec(SweepKind::PdVsSnr, vec![])).is_err());
        assert!(sweep(&small_spec(SweepKind::PdVsSnr, vec![0.0, -1.0])).is_err());
        assert!(sweep(&small_spec(SweepKind::PdVsSnr, vec![f64::NAN])).is_err());
        assert!(sweep(&small_spec(SweepKind::Roc, vec![1.5])).is_err());
        assert!(sweep(&small_spec(SweepKind::PdVsP, vec![9.0])).is_err());
        let mut spec = small_spec(SweepKind::Roc, vec![0.1]);
        spec.snr_db = None;
        assert!(sweep(&spec).is_err());
    }

    #[test]
    fn standard_errors_describe_the_scatter() {
        // χ² over 20 independent seeds, 19 degrees of freedom
        let cfg = DetectorConfig::new(1.0, 256, 0.2).unwrap();
        let noise = laplacian();
        let lambda = threshold(&cfg, &noise).unwrap();
        let trials = 2_000;
        let estimates: Vec<f64> = (0..20)
            .map(|s| estimate_pf(&cfg, &noise, lambda, trials, 1000 + s).unwrap().probability)
            .collect();
        let mean = estimates.iter().sum::<f64>() / 20.0;
        let variance = mean * (1.0 - mean) / trials as f64;
        let chi2: f64 = estimates.iter().map(|e| (e - mean).powi(2) / variance).sum();
        // two-sided 0.1% bounds
        assert!(chi2 > 5.4 && chi2 < 43.8, "chi2 = {chi2}");
    }

    #[test]
    fn worst_case_noise_is_simulated() {
        // With ρ > 0 the CFAR threshold is set for ρσ̂² and the simulation
        // draws noise at that power, so the false-alarm rate stays on target.
        let cfg = DetectorConfig::new(2.0, 512, 0.1).unwrap();
        let noise = McLeishNoise::gaussian(1.0).unwrap().with_uncertainty_db(1.0).unwrap();
        let op = operating_point(&cfg, 0.1, &rayleigh(), &noise).unwrap();
        let est = estimate_pf(&cfg, &noise, op.threshold, 10_000, 9).unwrap();
        assert!((est.probability - 0.1).abs() < 4.0 * est.std_error.max(0.003), "{est:?}");
    }
}
