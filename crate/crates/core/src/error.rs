use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SdaError>;

#[derive(Debug, Error)]
pub enum SdaError {
    /// Malformed or inconsistent input file.
    #[error("{path}: {msg}")]
    Load { path: PathBuf, msg: String },

    /// Structurally invalid data handed to an operation.
    #[error("data error: {0}")]
    Data(String),

    /// Bad configuration value or argument combination.
    #[error("config error: {0}")]
    Config(String),

    /// Numerical degeneracy (single-class labels, zero profiles, ...).
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SdaError {
    pub fn load(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        SdaError::Load {
            path: path.into(),
            msg: msg.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SdaError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 usage/config, 2 data, 3 numeric/convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            SdaError::Config(_) => 1,
            SdaError::Load { .. } | SdaError::Data(_) | SdaError::Io { .. } => 2,
            SdaError::Numeric(_) => 3,
        }
    }
}
