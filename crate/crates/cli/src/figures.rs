//! Presets regenerating the data behind the three published figures.
//!
//! Fixed by the published setup: N = 1024 samples, 10^4 trials, unit-scale
//! noise and channels (σ_w² = σ_h² = 1), K ∈ {0, 10} and ρ ∈ {0, 0.1} dB.
//! Not stated there and therefore assumptions, all overridable by flags:
//! target Pf 0.1, and an SNR of −10 dB for the curves drawn against p or Pf.
//! `--n`, `--trials`, `--seed`, `--target-pf`, `--snr-db`, `--format` and
//! the grid flags are honoured; noise, channel and exponent sets are fixed.

use std::path::PathBuf;

use anyhow::Result;
use ged_core::montecarlo::{sweep, SweepKind};
use ged_core::report::Table;
use ged_core::{H1Model, McLeishNoise, RicianChannel};
use serde_json::Value;

use crate::args::Settings;
use crate::commands::{default_p_grid, default_roc_grid, default_snr_grid, extension, sweep_spec, write_text, OUTPUT_DIR_ENV};

const PRESET_SNR_DB: f64 = -10.0;
const UNCERTAIN_DB: f64 = 0.1;

fn output_dir(settings: &Settings) -> PathBuf {
    settings
        .output
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).filter(|d| !d.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn noise(v: Option<f64>, rho_db: f64) -> Result<McLeishNoise> {
    let base = match v {
        Some(v) => McLeishNoise::new(1.0, v)?,
        None => McLeishNoise::gaussian(1.0)?,
    };
    Ok(base.with_uncertainty_db(rho_db)?)
}

fn noise_tag(v: Option<f64>) -> String {
    match v {
        Some(1.0) => "awln".into(),
        Some(v) => format!("v{v}"),
        None => "awgn".into(),
    }
}

struct Dataset {
    name: String,
    kind: SweepKind,
    grid: Vec<f64>,
    exponent: f64,
    noise: McLeishNoise,
    channel: RicianChannel,
    snr_db: Option<f64>,
}

fn render(settings: &Settings, figure: &str, datasets: Vec<Dataset>) -> Result<()> {
    let dir = output_dir(settings);
    for data in datasets {
        let mut local = settings.clone();
        local.detector = settings.detector.with_exponent(data.exponent)?;
        local.noise = data.noise;
        local.channel = data.channel;
        local.model = H1Model::default_for(&data.channel);
        local.snr_db = data.snr_db;
        let spec = sweep_spec(&local, data.kind, data.grid)?;
        let result = sweep(&spec)?;
        let mut table = Table::from(&result);
        if let Value::Object(map) = &mut table.metadata {
            map.insert("command".into(), Value::from(figure));
            map.insert("dataset".into(), Value::from(data.name.clone()));
        }
        let path = dir.join(format!("{figure}_{}.{}", data.name, extension(settings.format)));
        write_text(&path, &table.render(settings.format))?;
    }
    Ok(())
}

/// Pd against p for v ∈ {0.2, 0.5, 1, 5, ∞}, and ROC curves for p ∈ {1, 2}
/// in Laplacian and Gaussian noise; Rayleigh fading throughout.
pub fn fig1(settings: &Settings) -> Result<()> {
    let snr_db = settings.snr_db.unwrap_or(PRESET_SNR_DB);
    let rayleigh = RicianChannel::rayleigh(1.0)?;
    let p_grid = settings.grid(default_p_grid)?;
    let mut datasets = Vec::new();
    for v in [Some(0.2), Some(0.5), Some(1.0), Some(5.0), None] {
        datasets.push(Dataset {
            name: format!("pd_vs_p_{}", noise_tag(v)),
            kind: SweepKind::PdVsP,
            grid: p_grid.clone(),
            exponent: settings.detector.exponent(),
            noise: noise(v, 0.0)?,
            channel: rayleigh,
            snr_db: Some(snr_db),
        });
    }
    for v in [Some(1.0), None] {
        for p in [1.0, 2.0] {
            datasets.push(Dataset {
                name: format!("roc_{}_p{p}", noise_tag(v)),
                kind: SweepKind::Roc,
                grid: default_roc_grid(),
                exponent: p,
                noise: noise(v, 0.0)?,
                channel: rayleigh,
                snr_db: Some(snr_db),
            });
        }
    }
    render(settings, "fig1", datasets)
}

/// Pd against SNR for p ∈ {0.1, 1, 2}, Laplacian and Gaussian noise,
/// ρ ∈ {0, 0.1} dB; Rayleigh fading.
pub fn fig2(settings: &Settings) -> Result<()> {
    let rayleigh = RicianChannel::rayleigh(1.0)?;
    let grid = settings.grid(default_snr_grid)?;
    let mut datasets = Vec::new();
    for v in [Some(1.0), None] {
        for rho in [0.0, UNCERTAIN_DB] {
            for p in [0.1, 1.0, 2.0] {
                datasets.push(Dataset {
                    name: format!("{}_rho{rho}_p{p}", noise_tag(v)),
                    kind: SweepKind::PdVsSnr,
                    grid: grid.clone(),
                    exponent: p,
                    noise: noise(v, rho)?,
                    channel: rayleigh,
                    snr_db: None,
                });
            }
        }
    }
    render(settings, "fig2", datasets)
}

/// Pd against p for K ∈ {0, 10}, Laplacian and Gaussian noise,
/// ρ ∈ {0, 0.1} dB.
pub fn fig3(settings: &Settings) -> Result<()> {
    let snr_db = settings.snr_db.unwrap_or(PRESET_SNR_DB);
    let grid = settings.grid(default_p_grid)?;
    let mut datasets = Vec::new();
    for k in [0.0, 10.0] {
        for v in [Some(1.0), None] {
            for rho in [0.0, UNCERTAIN_DB] {
                datasets.push(Dataset {
                    name: format!("k{k}_{}_rho{rho}", noise_tag(v)),
                    kind: SweepKind::PdVsP,
                    grid: grid.clone(),
                    exponent: settings.detector.exponent(),
                    noise: noise(v, rho)?,
                    channel: RicianChannel::from_k_factor(k, 1.0, 0.0)?,
                    snr_db: Some(snr_db),
                });
            }
        }
    }
    render(settings, "fig3", datasets)
}
