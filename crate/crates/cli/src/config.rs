//! Run configuration: flat key-value files, JSON output documents and
//! command-line flags all deserialize into [`RunConfig`]; later sources win.

use std::fs;
use std::path::Path;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use vpair_core::dynamics::{default_t_max, DEFAULT_DT};
use vpair_core::model::{Preset, SystemParams};
use vpair_core::sweep::GridSpec;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Trajectory,
    Steady,
    SweepPump,
    SweepDistance,
    Optimum,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Trajectory => "trajectory",
            Command::Steady => "steady",
            Command::SweepPump => "sweep-pump",
            Command::SweepDistance => "sweep-distance",
            Command::Optimum => "optimum",
            Command::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Every setting is optional so that sources can be layered.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, rename = "Gamma", skip_serializing_if = "Option::is_none")]
    pub cross: Option<f64>,
    #[serde(default, rename = "G", skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
    #[serde(default, rename = "Lambda", skip_serializing_if = "Option::is_none")]
    pub pump: Option<f64>,
    #[serde(default, rename = "Lambda1", skip_serializing_if = "Option::is_none")]
    pub pump1: Option<f64>,
    #[serde(default, rename = "Lambda2", skip_serializing_if = "Option::is_none")]
    pub pump2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub presets: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tmax: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )*
    };
}

impl RunConfig {
    /// `self` with every field set in `top` replaced.
    pub fn overlay(mut self, top: RunConfig) -> RunConfig {
        // an explicit Lambda on top supersedes per-channel values below and
        // vice versa, otherwise the merged config would be contradictory
        if top.pump.is_some() {
            self.pump1 = None;
            self.pump2 = None;
        }
        if top.pump1.is_some() || top.pump2.is_some() {
            self.pump = None;
        }
        if top.preset.is_some() {
            self.cross = None;
            self.shift = None;
        }
        if top.cross.is_some() || top.shift.is_some() {
            self.preset = None;
        }
        overlay!(self, top; command, gamma1, r, cross, shift, pump, pump1, pump2, preset, presets, tmax, dt, grid, bracket, format);
        self
    }

    /// Reads a configuration file: either a JSON document written by this
    /// tool (its `metadata.config` is used) or a flat TOML key-value file.
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io { path: path.display().to_string(), source: e })?;
        let bad = |reason: String| CliError::Config { path: path.display().to_string(), reason };
        if text.trim_start().starts_with('{') {
            let doc: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
            let config = doc
                .get("metadata")
                .and_then(|m| m.get("config"))
                .ok_or_else(|| bad("JSON document has no metadata.config object".into()))?;
            serde_json::from_value(config.clone()).map_err(|e| bad(e.to_string()))
        } else {
            toml::from_str(&text).map_err(|e| bad(e.to_string()))
        }
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let command = self.command.ok_or(CliError::NoCommand)?;
        let gamma1 = self.gamma1.unwrap_or(1.0);
        if !(gamma1 > 0.0 && gamma1.is_finite()) {
            return Err(CliError::Invalid(format!("--gamma1 must be positive, got {gamma1}")));
        }
        if self.preset.is_some() && (self.cross.is_some() || self.shift.is_some()) {
            return Err(CliError::Invalid("--preset cannot be combined with --Gamma or --G".into()));
        }
        if self.pump.is_some() && (self.pump1.is_some() || self.pump2.is_some()) {
            return Err(CliError::Invalid("--Lambda cannot be combined with --Lambda1/--Lambda2".into()));
        }
        let r = self.r.unwrap_or(DEFAULT_RATIO);
        let (pump1, pump2) = match self.pump {
            Some(l) => (l, l),
            None => (self.pump1.unwrap_or(0.0), self.pump2.unwrap_or(0.0)),
        };
        // rates are taken in units of γ₁, so the model always runs at γ₁ = 1
        let params = match self.preset {
            Some(p) => SystemParams::from_preset(p, 1.0, r)?.with_pumps(pump1, pump2)?,
            None => SystemParams::new(1.0, r, self.cross.unwrap_or(0.0), self.shift.unwrap_or(0.0), pump1, pump2)?,
        };

        let dt = self.dt.unwrap_or(DEFAULT_DT);
        let tmax = match self.tmax {
            Some(t) => t,
            None if command == Command::Trajectory => default_t_max(&params)?,
            None => 0.0,
        };
        let grid_text = self.grid.clone().unwrap_or_else(|| DEFAULT_GRID.to_string());
        let grid: GridSpec = grid_text.parse()?;
        let bracket = self.bracket.unwrap_or(DEFAULT_BRACKET);
        let presets = self
            .presets
            .clone()
            .unwrap_or_else(|| Preset::ALL.iter().map(|p| p.key().to_string()).collect());

        let mut canonical = RunConfig {
            command: Some(command),
            gamma1: Some(gamma1),
            r: Some(r),
            preset: self.preset,
            format: self.format,
            ..RunConfig::default()
        };
        if self.preset.is_none() && command != Command::SweepDistance {
            canonical.cross = Some(params.cross1());
            canonical.shift = Some(params.shift1());
        }
        match command {
            Command::Trajectory => {
                canonical.pump1 = Some(pump1);
                canonical.pump2 = Some(pump2);
                canonical.tmax = Some(tmax);
                canonical.dt = Some(dt);
            }
            Command::Steady => {
                canonical.pump1 = Some(pump1);
                canonical.pump2 = Some(pump2);
            }
            Command::SweepPump => canonical.grid = Some(grid_text),
            Command::SweepDistance => {
                canonical.pump = Some(self.pump.or(self.pump1).unwrap_or(DEFAULT_DISTANCE_PUMP));
                canonical.presets = Some(presets.clone());
            }
            Command::Optimum => canonical.bracket = Some(bracket),
            Command::Validate => {}
        }
        Ok(Resolved { command, gamma1, params, tmax, dt, grid, bracket, presets, canonical })
    }
}

pub const DEFAULT_RATIO: f64 = 1.2;
pub const DEFAULT_GRID: &str = "0.005:0.5:0.005";
pub const DEFAULT_BRACKET: [f64; 2] = [0.005, 0.5];
pub const DEFAULT_DISTANCE_PUMP: f64 = 0.08;

/// A fully specified run. `canonical` lists exactly the settings that
/// determine the output and is what gets embedded in JSON output.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub command: Command,
    /// output time unit: times are printed as t/γ₁
    pub gamma1: f64,
    pub params: SystemParams,
    pub tmax: f64,
    pub dt: f64,
    pub grid: GridSpec,
    pub bracket: [f64; 2],
    pub presets: Vec<String>,
    pub canonical: RunConfig,
}
