//! `vpair`: trajectories, steady states and sweeps for two radiatively
//! coupled V-type atoms. All rates are in units of γ₁.

mod commands;
mod config;
mod error;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser};
use serde_json::{json, Value};
use vpair_core::model::Preset;

use crate::config::{Command, Format, RunConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "vpair", version, about = "Entanglement dynamics of two coupled V-type atoms")]
struct Cli {
    /// What to compute; may instead come from --config
    #[arg(value_enum)]
    command: Option<Command>,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Args)]
struct Flags {
    /// Decay rate γ₁ used only to rescale the output time column
    #[arg(long, allow_hyphen_values = true)]
    gamma1: Option<f64>,
    /// Frequency ratio r = ω₂/ω₁ (default 1.2)
    #[arg(long, allow_hyphen_values = true)]
    r: Option<f64>,
    /// Cross damping Γ₁ in units of γ₁
    #[arg(long = "Gamma", allow_hyphen_values = true)]
    cross: Option<f64>,
    /// Level shift G₁ in units of γ₁
    #[arg(long = "G", allow_hyphen_values = true)]
    shift: Option<f64>,
    /// Symmetric pump Λ₁ = Λ₂
    #[arg(long = "Lambda", allow_hyphen_values = true, conflicts_with_all = ["pump1", "pump2"])]
    pump: Option<f64>,
    #[arg(long = "Lambda1", allow_hyphen_values = true)]
    pump1: Option<f64>,
    #[arg(long = "Lambda2", allow_hyphen_values = true)]
    pump2: Option<f64>,
    /// Separation preset R0.50, R0.83, R1.18 or R2.78
    #[arg(long, conflicts_with_all = ["cross", "shift"])]
    preset: Option<Preset>,
    /// Comma-separated preset keys for sweep-distance (default: all)
    #[arg(long, value_delimiter = ',')]
    presets: Option<Vec<String>>,
    /// Trajectory end time (default: 10 relaxation times)
    #[arg(long, allow_hyphen_values = true)]
    tmax: Option<f64>,
    /// Nominal integrator step
    #[arg(long, allow_hyphen_values = true)]
    dt: Option<f64>,
    /// Pump grid start:stop:step for sweep-pump
    #[arg(long)]
    grid: Option<String>,
    /// Search bracket for optimum
    #[arg(long, num_args = 2, allow_hyphen_values = true, value_names = ["LO", "HI"])]
    bracket: Option<Vec<f64>>,
    /// Output file (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Flat TOML key-value file, or a JSON document written by --format json
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Flags {
    fn to_config(&self, command: Option<Command>) -> RunConfig {
        RunConfig {
            command,
            gamma1: self.gamma1,
            r: self.r,
            cross: self.cross,
            shift: self.shift,
            pump: self.pump,
            pump1: self.pump1,
            pump2: self.pump2,
            preset: self.preset,
            presets: self.presets.clone(),
            tmax: self.tmax,
            dt: self.dt,
            grid: self.grid.clone(),
            bracket: self.bracket.as_ref().map(|b| [b[0], b[1]]),
            format: self.format,
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let base = match &cli.flags.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let merged = base.overlay(cli.flags.to_config(cli.command));
    let resolved = merged.resolve()?;
    let format = merged.format.unwrap_or_else(|| match &cli.flags.out {
        Some(p) if p.extension().is_some_and(|e| e == "json") => Format::Json,
        _ => Format::Csv,
    });

    let report = commands::run(&resolved)?;
    let mut metadata = json!({
        "command": resolved.command.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "config": resolved.canonical,
    });
    if let (Value::Object(m), Value::Object(extra)) = (&mut metadata, report.extra) {
        m.extend(extra);
    }

    match &cli.flags.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            report.table.write(format, metadata, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            report.table.write(format, metadata, stdout.lock())?;
        }
    }
    if !report.failed.is_empty() {
        return Err(CliError::ValidationFailed { failed: report.failed });
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = serde_json::to_string(&e.record()).unwrap_or_else(|_| e.to_string());
            eprintln!("{record}");
            ExitCode::from(e.exit_code())
        }
    }
}
