use serde::Serialize;
use thiserror::Error;
use vpair_core::dynamics::DynamicsError;
use vpair_core::entanglement::EntanglementError;
use vpair_core::model::ParamError;
use vpair_core::steadystate::SteadyError;
use vpair_core::sweep::SweepError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("no command given on the command line or in the config file")]
    NoCommand,
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("bad config {path}: {reason}")]
    Config { path: String, reason: String },
    #[error("cannot write output: {0}")]
    Output(String),
    #[error("validation failed: {}", failed.join(", "))]
    ValidationFailed { failed: Vec<String> },
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Entanglement(#[from] EntanglementError),
    #[error(transparent)]
    Steady(#[from] SteadyError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
}

/// Machine-readable error record written to stderr.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub error: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failed: Vec<String>,
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::NoCommand | CliError::Invalid(_) => "usage",
            CliError::Io { .. } | CliError::Config { .. } => "config",
            CliError::Output(_) => "output",
            CliError::ValidationFailed { .. } => "validation",
            CliError::Param(_) => "parameters",
            CliError::Dynamics(_) => "dynamics",
            CliError::Entanglement(_) => "entanglement",
            CliError::Steady(_) => "steady_state",
            CliError::Sweep(_) => "sweep",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.kind() {
            "usage" | "config" | "parameters" => 2,
            _ => 1,
        }
    }

    pub fn record(&self) -> ErrorRecord {
        let failed = match self {
            CliError::ValidationFailed { failed } => failed.clone(),
            _ => Vec::new(),
        };
        ErrorRecord { error: self.kind(), message: self.to_string(), failed }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}
