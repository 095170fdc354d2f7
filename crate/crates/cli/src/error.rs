use std::path::PathBuf;

use bcast_core::lti::SprCertificate;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Model(#[from] bcast_core::Error),

    #[error("plant is not strictly positive real ({}): {}", .0.verdict, .0.reason.as_deref().unwrap_or("strict conditions fail"))]
    NotSpr(Box<SprCertificate>),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 1 for usage and config problems, 2 for failures
    /// while running or analysing.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Model(_) | CliError::NotSpr(_) => 1,
            CliError::Io { .. } | CliError::Runtime(_) => 2,
        }
    }
}
