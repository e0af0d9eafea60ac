//! Errors of the IO layer and their process exit codes.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = AppError> = std::result::Result<T, E>;

pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const BLACK_BOX: i32 = 2;
    pub const INFEASIBLE: i32 = 3;
    pub const INPUT: i32 = 4;
    pub const USAGE: i32 = 64;
}

#[derive(Debug, Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] socrat_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("{0}: no \"original\" record")]
    MissingOriginal(String),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }

    pub fn parse(path: &str, line: usize, message: impl Into<String>) -> Self {
        AppError::Parse { path: path.to_string(), line, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        use socrat_core::Error as E;
        match self {
            AppError::Core(E::BlackBoxFailure { .. } | E::Protocol(_) | E::ExternalPerturberUnavailable(_)) => {
                exit::BLACK_BOX
            }
            AppError::Core(E::InfeasibleBounds(_) | E::InvalidK { .. }) => exit::INFEASIBLE,
            AppError::Core(E::InvalidConfig(_)) | AppError::Usage(_) => exit::USAGE,
            AppError::Core(_) => exit::FAILURE,
            AppError::Io { .. } | AppError::Parse { .. } | AppError::MissingOriginal(_) | AppError::Json(_) => {
                exit::INPUT
            }
        }
    }
}

/// Reads a whole file, mapping failures to [`AppError::Io`].
pub fn read_file(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))
}
