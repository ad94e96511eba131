use std::fmt;

use shaken_trap::config::ConfigErrors;
use shaken_trap::gpe::GpeError;

/// Failure classes, each with its own process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or arguments (exit 1).
    Config(String),
    /// The computation itself failed (exit 2).
    Numerical(String),
    /// Reading or writing files failed (exit 3).
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigErrors> for CliError {
    fn from(e: ConfigErrors) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<GpeError> for CliError {
    fn from(e: GpeError) -> Self {
        match e {
            GpeError::NoConvergence(_) | GpeError::NormDrift { .. } | GpeError::DomainEscape { .. } => {
                CliError::Numerical(e.to_string())
            }
            GpeError::GridTooCoarse { .. } => CliError::Config(format!("solver.grid_points: {e}")),
            GpeError::TimeStepTooLarge { .. } => CliError::Config(format!("solver.dt_s: {e}")),
            GpeError::InvalidGrid(_) => CliError::Config(format!("solver.grid_points: {e}")),
            GpeError::InvalidParameter(_) => CliError::Config(e.to_string()),
        }
    }
}
