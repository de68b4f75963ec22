//! One function per data subcommand.

use std::path::PathBuf;

use anyhow::{Context, Result};
use ged_core::detector::{
    false_alarm_prob, operating_point, optimize_p, threshold, worst_case_threshold, DEFAULT_P_STEP,
};
use ged_core::montecarlo::{estimate_pd, estimate_pf, sweep, SweepKind, SweepSpec};
use ged_core::noise::{abs_moment_h0, mcleish_pdf};
use ged_core::report::{Format, Table};
use ged_core::validation::{run_all, Scale};
use ged_core::{db_to_linear, detector::abs_moment_h1};
use serde_json::Value;

use crate::args::{check_exponent, linspace_step, Command, Settings};
use crate::{UsageError, ValidationFailed};

pub const OUTPUT_DIR_ENV: &str = "GED_OUTPUT_DIR";

pub fn run(command: Command, settings: &Settings) -> Result<()> {
    match command {
        Command::Pdf => pdf(settings),
        Command::Moment => moment(settings),
        Command::Threshold => threshold_cmd(settings),
        Command::Pf => pf(settings),
        Command::Pd => pd(settings),
        Command::Roc => run_sweep(settings, SweepKind::Roc, "roc"),
        Command::SweepSnr => run_sweep(settings, SweepKind::PdVsSnr, "sweep-snr"),
        Command::SweepP => run_sweep(settings, SweepKind::PdVsP, "sweep-p"),
        Command::OptimizeP => optimize(settings),
        Command::Validate { quick } => validate(settings, quick),
        Command::Fig1 => crate::figures::fig1(settings),
        Command::Fig2 => crate::figures::fig2(settings),
        Command::Fig3 => crate::figures::fig3(settings),
    }
}

pub fn extension(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

/// Where a single-file command writes: `--output`, else
/// `$GED_OUTPUT_DIR/<command>.<ext>`, else standard output.
fn destination(settings: &Settings, command: &str) -> Option<PathBuf> {
    if let Some(path) = &settings.output {
        return Some(path.clone());
    }
    std::env::var_os(OUTPUT_DIR_ENV)
        .filter(|d| !d.is_empty())
        .map(|dir| PathBuf::from(dir).join(format!("{command}.{}", extension(settings.format))))
}

pub fn write_text(path: &std::path::Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn emit(settings: &Settings, command: &str, table: &Table) -> Result<()> {
    let text = table.render(settings.format);
    match destination(settings, command) {
        Some(path) => write_text(&path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// The parameter record embedded in every output.
pub fn metadata(settings: &Settings, command: &str) -> Value {
    let mut value = serde_json::to_value(settings).expect("settings always serialise");
    if let Value::Object(map) = &mut value {
        map.insert("command".into(), Value::from(command));
    }
    value
}

fn with_command(mut table: Table, command: &str) -> Table {
    if let Value::Object(map) = &mut table.metadata {
        map.insert("command".into(), Value::from(command));
    }
    table
}

fn pdf(settings: &Settings) -> Result<()> {
    let radii = settings.grid(|| linspace_step(0.0, 5.0, 0.05))?;
    if let Some(r) = radii.iter().find(|r| **r < 0.0) {
        return Err(UsageError(format!("invalid value for grid: radius {r} is negative")).into());
    }
    let mut table = Table::new(&["r", "density"], metadata(settings, "pdf"));
    for r in radii {
        table.push(vec![r, mcleish_pdf(r, &settings.noise)?]);
    }
    emit(settings, "pdf", &table)
}

fn moment(settings: &Settings) -> Result<()> {
    let orders = settings
        .params
        .order
        .clone()
        .ok_or_else(|| UsageError("moment needs --order".into()))?;
    let snr = settings.snr_db.map(db_to_linear);
    let columns: &[&str] = if snr.is_some() { &["n", "h0", "h1"] } else { &["n", "h0"] };
    let mut table = Table::new(columns, metadata(settings, "moment"));
    for n in orders {
        let mut row = vec![n, abs_moment_h0(n, &settings.noise)?];
        if let Some(snr) = snr {
            row.push(abs_moment_h1(n, snr, &settings.channel, &settings.noise)?);
        }
        table.push(row);
    }
    emit(settings, "moment", &table)
}

fn threshold_cmd(settings: &Settings) -> Result<()> {
    let cfg = &settings.detector;
    let nominal = threshold(cfg, &settings.noise)?;
    let worst = worst_case_threshold(nominal, cfg.exponent(), settings.noise.uncertainty_db())?;
    let mut table = Table::new(&["p", "target_pf", "threshold", "worst_case_threshold"], metadata(settings, "threshold"));
    table.push(vec![cfg.exponent(), cfg.target_pf(), nominal, worst]);
    emit(settings, "threshold", &table)
}

fn pf(settings: &Settings) -> Result<()> {
    let cfg = &settings.detector;
    let worst = settings.noise.worst_case();
    let lambda = match settings.lambda {
        Some(l) => l,
        None => threshold(cfg, &worst)?,
    };
    let analytic = false_alarm_prob(lambda, cfg, &worst)?;
    let est = estimate_pf(cfg, &settings.noise, lambda, settings.trials, settings.seed)?;
    let mut table = Table::new(&["lambda", "analytic", "empirical", "std_error"], metadata(settings, "pf"));
    table.push(vec![lambda, analytic, est.probability, est.std_error]);
    emit(settings, "pf", &table)
}

fn pd(settings: &Settings) -> Result<()> {
    let cfg = &settings.detector;
    let snr = db_to_linear(settings.require_snr_db("pd")?);
    let op = operating_point(cfg, snr, &settings.channel, &settings.noise)?;
    let lambda = settings.lambda.unwrap_or(op.threshold);
    let analytic = op.h1.exceedance(lambda, cfg.samples());
    let est = estimate_pd(
        cfg,
        snr,
        &settings.channel,
        &settings.noise,
        lambda,
        settings.trials,
        settings.seed,
        settings.model,
    )?;
    let mut table = Table::new(&["lambda", "analytic", "empirical", "std_error"], metadata(settings, "pd"));
    table.push(vec![lambda, analytic, est.probability, est.std_error]);
    emit(settings, "pd", &table)
}

pub fn default_roc_grid() -> Vec<f64> {
    vec![
        0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99,
    ]
}

pub fn default_snr_grid() -> Vec<f64> {
    linspace_step(-25.0, 5.0, 1.0)
}

pub fn default_p_grid() -> Vec<f64> {
    linspace_step(0.1, 4.0, 0.1)
}

pub fn sweep_spec(settings: &Settings, kind: SweepKind, grid: Vec<f64>) -> Result<SweepSpec> {
    let snr_db = match kind {
        SweepKind::PdVsSnr => None,
        SweepKind::Roc => Some(settings.require_snr_db("roc")?),
        SweepKind::PdVsP => Some(settings.require_snr_db("sweep-p")?),
    };
    match kind {
        SweepKind::Roc => {
            for &q in &grid {
                crate::args::check_probability("grid", q)?;
            }
        }
        SweepKind::PdVsP => {
            for &p in &grid {
                check_exponent("grid", p)?;
            }
        }
        SweepKind::PdVsSnr => {}
    }
    Ok(SweepSpec {
        kind,
        grid,
        detector: settings.detector,
        snr_db,
        channel: settings.channel,
        noise: settings.noise,
        trials: settings.trials,
        seed: settings.seed,
        model: settings.model,
    })
}

fn run_sweep(settings: &Settings, kind: SweepKind, command: &str) -> Result<()> {
    let grid = settings.grid(match kind {
        SweepKind::Roc => default_roc_grid,
        SweepKind::PdVsSnr => default_snr_grid,
        SweepKind::PdVsP => default_p_grid,
    })?;
    let spec = sweep_spec(settings, kind, grid)?;
    let result = sweep(&spec)?;
    if result.clt_warning {
        eprintln!("warning: N < 64, the Gaussian approximation may be inaccurate");
    }
    emit(settings, command, &with_command(Table::from(&result), command))
}

fn optimize(settings: &Settings) -> Result<()> {
    let snr = db_to_linear(settings.require_snr_db("optimize-p")?);
    let p = &settings.params;
    let p_min = check_exponent("p_min", p.p_min.unwrap_or(0.05))?;
    let p_max = check_exponent("p_max", p.p_max.unwrap_or(ged_core::detector::MAX_EXPONENT))?;
    if p_min > p_max {
        return Err(UsageError(format!("invalid value for p_max: {p_max} is below p_min {p_min}")).into());
    }
    let step = p.p_step.unwrap_or(DEFAULT_P_STEP);
    if !(step > 0.0 && step.is_finite()) {
        return Err(UsageError(format!("invalid value for p_step: got {step}, expected a value > 0")).into());
    }
    let best = optimize_p(p_min, p_max, step, &settings.detector, snr, &settings.channel, &settings.noise)?;
    let mut meta = metadata(settings, "optimize-p");
    if let Value::Object(map) = &mut meta {
        map.insert("p_min".into(), Value::from(p_min));
        map.insert("p_max".into(), Value::from(p_max));
        map.insert("p_step".into(), Value::from(step));
    }
    let mut table = Table::new(&["p_star", "pd_star"], meta);
    table.push(vec![best.p, best.pd]);
    emit(settings, "optimize-p", &table)
}

fn validate(settings: &Settings, quick: bool) -> Result<()> {
    let scale = if quick { Scale::Quick } else { Scale::Full };
    let outcomes = run_all(scale, settings.seed)?;
    for outcome in &outcomes {
        println!("{outcome}");
    }
    if let Some(path) = destination(settings, "validate") {
        let report = serde_json::json!({
            "scale": scale,
            "seed": settings.seed,
            "checks": outcomes,
        });
        write_text(&path, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if failed > 0 {
        return Err(ValidationFailed(failed).into());
    }
    println!("all {} checks passed", outcomes.len());
    Ok(())
}
