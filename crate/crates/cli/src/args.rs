//! Command-line flags, the optional TOML config file and their merge into
//! validated [`Settings`].

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ged_core::report::Format;
use ged_core::{DetectorConfig, H1Model, McLeishNoise, RicianChannel};
use serde::{Deserialize, Serialize};

use crate::UsageError;

#[derive(Debug, Parser)]
#[command(name = "ged", version, about = "Generalized energy detection under McLeish noise and Rician fading")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub params: Params,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Tabulate the McLeish noise density over |w|
    Pdf,
    /// H0 (and, with --snr-db, H1) absolute moments of order --order
    Moment,
    /// CFAR threshold, nominal and worst case
    Threshold,
    /// Analytic and simulated false-alarm probability
    Pf,
    /// Analytic and simulated detection probability
    Pd,
    /// ROC: detection probability over a grid of target false-alarm rates
    Roc,
    /// Detection probability over an SNR grid (dB)
    SweepSnr,
    /// Detection probability over a grid of exponents p
    SweepP,
    /// Line search for the exponent with the best detection probability
    OptimizeP,
    /// Run the analytic-versus-reference checks
    Validate {
        /// Reduced Monte Carlo effort
        #[arg(long)]
        quick: bool,
    },
    /// Preset: Pd versus p for several v, and ROC curves (Rayleigh)
    Fig1,
    /// Preset: Pd versus SNR with and without noise uncertainty
    Fig2,
    /// Preset: Pd versus p for Rayleigh and Rician (K = 10) fading
    Fig3,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Pdf => "pdf",
            Command::Moment => "moment",
            Command::Threshold => "threshold",
            Command::Pf => "pf",
            Command::Pd => "pd",
            Command::Roc => "roc",
            Command::SweepSnr => "sweep-snr",
            Command::SweepP => "sweep-p",
            Command::OptimizeP => "optimize-p",
            Command::Validate { .. } => "validate",
            Command::Fig1 => "fig1",
            Command::Fig2 => "fig2",
            Command::Fig3 => "fig3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelArg {
    Physical,
    Effective,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatArg {
    Csv,
    Json,
}

/// Every tunable. Flags override values from `--config`.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// TOML file with any of the options below (snake_case keys)
    #[arg(long, global = true, value_name = "PATH")]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Noise power σ_w²
    #[arg(long, global = true)]
    pub variance: Option<f64>,
    /// McLeish non-Gaussianity v
    #[arg(long = "v", global = true, value_name = "V")]
    pub v: Option<f64>,
    /// Gaussian-limit noise (v → ∞)
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub gaussian: Option<bool>,
    /// Noise-power uncertainty bound ρ in dB
    #[arg(long, global = true)]
    pub rho_db: Option<f64>,

    /// Rician K-factor α²/σ_h²
    #[arg(long, global = true)]
    pub rician_k: Option<f64>,
    /// Scatter variance σ_h²
    #[arg(long, global = true)]
    pub scatter_variance: Option<f64>,
    /// LoS phase θ in radians
    #[arg(long, global = true)]
    pub los_phase: Option<f64>,

    /// Detector exponent p
    #[arg(long, global = true)]
    pub p: Option<f64>,
    /// Samples per decision N
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Target false-alarm probability
    #[arg(long, global = true)]
    pub target_pf: Option<f64>,
    /// SNR in dB
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub snr_db: Option<f64>,
    /// Threshold for pf/pd (defaults to the CFAR threshold)
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// Moment orders for `moment`
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub order: Option<Vec<f64>>,

    /// Monte Carlo trials
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Master seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// H1 generative model for simulation
    #[arg(long, global = true, value_enum)]
    pub model: Option<ModelArg>,

    /// Explicit grid, comma separated
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub grid: Option<Vec<f64>>,
    /// Grid start (with --stop and --step)
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub start: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub stop: Option<f64>,
    #[arg(long, global = true)]
    pub step: Option<f64>,

    /// Exponent search range and grid step for `optimize-p`
    #[arg(long, global = true)]
    pub p_min: Option<f64>,
    #[arg(long, global = true)]
    pub p_max: Option<f64>,
    #[arg(long, global = true)]
    pub p_step: Option<f64>,

    /// Output format
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
    /// Output file (a directory for fig1/fig2/fig3)
    #[arg(long, short = 'o', global = true)]
    pub output: Option<PathBuf>,
}

macro_rules! merge_fields {
    ($flags:expr, $file:expr, $($field:ident),*) => {
        Params {
            config: $flags.config.clone(),
            $($field: $flags.$field.clone().or($file.$field.clone()),)*
        }
    };
}

impl Params {
    /// Fills unset flags from the config file, if one was given.
    pub fn merged(&self) -> Result<Params, UsageError> {
        let Some(path) = &self.config else {
            return Ok(self.clone());
        };
        let file = load_config(path)?;
        Ok(merge_fields!(
            self, file, variance, v, gaussian, rho_db, rician_k, scatter_variance, los_phase, p, n,
            target_pf, snr_db, lambda, order, trials, seed, model, grid, start, stop, step, p_min,
            p_max, p_step, format, output
        ))
    }
}

fn load_config(path: &Path) -> Result<Params, UsageError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read config file {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| UsageError(format!("malformed config file {}: {e}", path.display())))
}

pub const DEFAULT_VARIANCE: f64 = 1.0;
pub const DEFAULT_SCATTER_VARIANCE: f64 = 1.0;
pub const DEFAULT_EXPONENT: f64 = 2.0;
pub const DEFAULT_SAMPLES: usize = 1024;
pub const DEFAULT_TARGET_PF: f64 = 0.1;
pub const DEFAULT_TRIALS: usize = 10_000;
pub const DEFAULT_SEED: u64 = 42;

/// Fully validated parameters.
#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    pub noise: McLeishNoise,
    pub channel: RicianChannel,
    pub detector: DetectorConfig,
    pub snr_db: Option<f64>,
    pub lambda: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    pub model: H1Model,
    #[serde(skip)]
    pub format: Format,
    #[serde(skip)]
    pub output: Option<PathBuf>,
    #[serde(skip)]
    pub params: Params,
}

fn field<T>(name: &str, ok: bool, value: T, requirement: &str) -> Result<T, UsageError> {
    if ok {
        Ok(value)
    } else {
        Err(UsageError(format!("invalid value for {name}: {requirement}")))
    }
}

fn positive(name: &str, x: f64) -> Result<f64, UsageError> {
    field(name, x > 0.0 && x.is_finite(), x, &format!("got {x}, expected a finite value > 0"))
}

fn non_negative(name: &str, x: f64) -> Result<f64, UsageError> {
    field(name, x >= 0.0 && x.is_finite(), x, &format!("got {x}, expected a finite value >= 0"))
}

pub fn check_exponent(name: &str, p: f64) -> Result<f64, UsageError> {
    field(name, p > 0.0 && p <= ged_core::detector::MAX_EXPONENT, p, &format!("got {p}, expected 0 < p <= 8"))
}

pub fn check_probability(name: &str, q: f64) -> Result<f64, UsageError> {
    field(name, q > 0.0 && q < 1.0, q, &format!("got {q}, expected a probability in (0, 1)"))
}

impl Settings {
    pub fn resolve(params: &Params) -> Result<Self, UsageError> {
        let p = params.merged()?;
        let variance = positive("variance", p.variance.unwrap_or(DEFAULT_VARIANCE))?;
        let gaussian = p.gaussian.unwrap_or(false);
        let noise = match (p.v, gaussian) {
            (Some(_), true) => return Err(UsageError("v and gaussian are mutually exclusive".into())),
            (Some(v), false) => {
                let v = field(
                    "v",
                    v > 0.0 && v <= ged_core::noise::MAX_NON_GAUSSIANITY,
                    v,
                    &format!("got {v}, expected 0 < v <= 1e8 (use --gaussian for the Gaussian limit)"),
                )?;
                McLeishNoise::new(variance, v)
            }
            (None, _) => McLeishNoise::gaussian(variance),
        }
        .map_err(|e| UsageError(e.to_string()))?;
        let rho = non_negative("rho_db", p.rho_db.unwrap_or(0.0))?;
        let noise = noise.with_uncertainty_db(rho).map_err(|e| UsageError(e.to_string()))?;

        let k = non_negative("rician_k", p.rician_k.unwrap_or(0.0))?;
        let scatter = positive("scatter_variance", p.scatter_variance.unwrap_or(DEFAULT_SCATTER_VARIANCE))?;
        let phase = p.los_phase.unwrap_or(0.0);
        let phase = field("los_phase", phase.is_finite(), phase, "expected a finite angle")?;
        let channel = RicianChannel::from_k_factor(k, scatter, phase).map_err(|e| UsageError(e.to_string()))?;

        let exponent = check_exponent("p", p.p.unwrap_or(DEFAULT_EXPONENT))?;
        let samples = p.n.unwrap_or(DEFAULT_SAMPLES);
        let samples = field("n", samples >= 1, samples, "expected at least one sample")?;
        let target_pf = check_probability("target_pf", p.target_pf.unwrap_or(DEFAULT_TARGET_PF))?;
        let detector =
            DetectorConfig::new(exponent, samples, target_pf).map_err(|e| UsageError(e.to_string()))?;

        if let Some(snr) = p.snr_db {
            field("snr_db", snr.is_finite(), snr, "expected a finite value in dB")?;
        }
        if let Some(lambda) = p.lambda {
            field("lambda", lambda.is_finite(), lambda, "expected a finite threshold")?;
        }
        let trials = p.trials.unwrap_or(DEFAULT_TRIALS);
        let trials = field(
            "trials",
            trials >= ged_core::montecarlo::MIN_TRIALS,
            trials,
            &format!("got {trials}, expected at least {}", ged_core::montecarlo::MIN_TRIALS),
        )?;
        let model = match p.model {
            Some(ModelArg::Physical) => H1Model::Physical,
            Some(ModelArg::Effective) => H1Model::Effective,
            None => H1Model::default_for(&channel),
        };
        let format = match p.format.unwrap_or(FormatArg::Csv) {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
        Ok(Settings {
            noise,
            channel,
            detector,
            snr_db: p.snr_db,
            lambda: p.lambda,
            trials,
            seed: p.seed.unwrap_or(DEFAULT_SEED),
            model,
            format,
            output: p.output.clone(),
            params: p,
        })
    }

    /// The SNR, which `command` cannot do without.
    pub fn require_snr_db(&self, command: &str) -> Result<f64, UsageError> {
        self.snr_db
            .ok_or_else(|| UsageError(format!("{command} needs a signal: missing snr_db (--snr-db)")))
    }

    /// The explicit grid, or `start..=stop` by `step`, or `default`.
    pub fn grid(&self, default: impl FnOnce() -> Vec<f64>) -> Result<Vec<f64>, UsageError> {
        let p = &self.params;
        let grid = match (&p.grid, p.start, p.stop, p.step) {
            (Some(_), Some(_), _, _) | (Some(_), _, Some(_), _) | (Some(_), _, _, Some(_)) => {
                return Err(UsageError("grid conflicts with start/stop/step".into()))
            }
            (Some(grid), None, None, None) => grid.clone(),
            (None, Some(start), Some(stop), Some(step)) => {
                let step = positive("step", step)?;
                field("stop", stop >= start, (), &format!("stop {stop} is below start {start}"))?;
                linspace_step(start, stop, step)
            }
            (None, None, None, None) => default(),
            _ => return Err(UsageError("start, stop and step must be given together".into())),
        };
        field("grid", !grid.is_empty(), (), "grid is empty")?;
        field("grid", grid.iter().all(|x| x.is_finite()), (), "grid has a non-finite value")?;
        field("grid", grid.windows(2).all(|w| w[0] <= w[1]), (), "grid must be sorted ascending")?;
        Ok(grid)
    }
}

/// `start, start + step, …` up to `stop` (inclusive within rounding).
pub fn linspace_step(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=count).map(|i| round_grid(start + i as f64 * step)).collect()
}

// Trims representation noise such as 0.30000000000000004.
fn round_grid(x: f64) -> f64 {
    format!("{x:.12}").parse().unwrap()
}
