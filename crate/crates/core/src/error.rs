use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Training produced a non-finite loss. Carries the last parameters that
    /// still gave a finite loss.
    #[error("training diverged at epoch {epoch}")]
    Diverged {
        epoch: usize,
        last_finite: Box<crate::nets::MlpModel>,
    },

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("usage: {0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Stable machine-readable code printed by the CLI.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Validation(_) => "E_VALIDATION",
            Error::Domain(_) => "E_DOMAIN",
            Error::Numeric(_) => "E_NUMERIC",
            Error::Diverged { .. } => "E_DIVERGED",
            Error::Version { .. } => "E_VERSION",
            Error::Usage(_) => "E_USAGE",
            Error::Io { .. } => "E_IO",
            Error::Json(_) => "E_JSON",
        }
    }

    /// Process exit code: 2 usage, 3 input validation, 4 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Numeric(_) | Error::Diverged { .. } => 4,
            _ => 3,
        }
    }
}
