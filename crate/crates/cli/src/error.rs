use std::process::ExitCode;

use thiserror::Error;

/// Failures of a CLI run, each tied to one exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad or missing setting; exit 2.
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    /// Exit 3.
    #[error("nodes invalid; need n ≥ {min_n} (got n = {n})")]
    InvalidNodes { n: usize, min_n: usize },

    /// Numerical domain violation raised by the core; exit 3.
    #[error(transparent)]
    Core(bbar_core::Error),

    /// Writing the output failed; exit 2 since the output path is a setting.
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        CliError::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::Io(_) => 2,
            CliError::InvalidNodes { .. } | CliError::Core(_) => 3,
        }
    }
}

impl From<bbar_core::Error> for CliError {
    fn from(e: bbar_core::Error) -> Self {
        match e {
            bbar_core::Error::InvalidNodes { n, min_n, .. } => CliError::InvalidNodes { n, min_n },
            bbar_core::Error::UnknownFunction(name) => CliError::config("function", format!("unknown function `{name}`")),
            other => CliError::Core(other),
        }
    }
}

/// Result of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    CheckFailed,
}

impl From<Outcome> for ExitCode {
    fn from(o: Outcome) -> Self {
        match o {
            Outcome::Pass => ExitCode::SUCCESS,
            Outcome::CheckFailed => ExitCode::from(1),
        }
    }
}
