use std::path::{Path, PathBuf};

use thiserror::Error;
use vnacal_core::calfile::CalFileError;
use vnacal_core::error_model::ModelError;
use vnacal_core::pack::PackError;
use vnacal_core::solvers::SolverError;
use vnacal_core::sparams::NetworkError;
use vnacal_core::touchstone::TouchstoneError;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const PARSE: i32 = 3;
    pub const SOLVER: i32 = 4;
    /// Threshold or check criterion not met; outputs are still written.
    pub const CRITERION: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("{context}: {message}")]
    Solver { context: String, message: String },
    #[error("{0}")]
    Criterion(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => exit::IO,
            CliError::Usage(_) => exit::USAGE,
            CliError::Parse { .. } => exit::PARSE,
            CliError::Solver { .. } => exit::SOLVER,
            CliError::Criterion(_) => exit::CRITERION,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn parse(path: &Path, message: impl ToString) -> Self {
        CliError::Parse { path: path.to_path_buf(), message: message.to_string() }
    }

    pub fn solver(context: impl Into<String>, err: impl ToString) -> Self {
        CliError::Solver { context: context.into(), message: err.to_string() }
    }
}

macro_rules! parse_errors {
    ($($t:ty),*) => {$(
        impl From<(&Path, $t)> for CliError {
            fn from((path, e): (&Path, $t)) -> Self {
                CliError::parse(path, e)
            }
        }
    )*};
}
parse_errors!(TouchstoneError, CalFileError, PackError, toml::de::Error);

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        CliError::solver("solver", e)
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::solver("model", e)
    }
}

impl From<NetworkError> for CliError {
    fn from(e: NetworkError) -> Self {
        CliError::solver("network", e)
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
