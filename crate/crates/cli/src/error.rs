use std::io;
use std::path::PathBuf;

use qrws_core::analysis::AnalysisError;
use qrws_core::hill::FitError;
use qrws_core::sweep::SweepError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid {key}: {message}")]
    Invalid { key: String, message: String },
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn invalid(key: impl Into<String>, message: impl ToString) -> Self {
        CliError::Invalid {
            key: key.into(),
            message: message.to_string(),
        }
    }

    /// 1 for anything wrong with the request or its inputs, 2 when the
    /// computation itself fails.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 2,
            _ => 1,
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

// settings are validated before any sweep runs, so what is left is a failure
// inside the computation
impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        CliError::Numerical(e.to_string())
    }
}
