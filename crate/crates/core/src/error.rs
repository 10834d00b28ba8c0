use std::path::PathBuf;

/// Errors raised by the forecasting pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("leakage detected: {0}")]
    Leakage(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable tag, used by the CLI error line.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::Io { .. } => "E_IO",
            Error::Parse(_) => "E_PARSE",
            Error::Config(_) => "E_CONFIG",
            Error::Data(_) => "E_DATA",
            Error::Shape(_) => "E_SHAPE",
            Error::Numerical(_) => "E_NUMERIC",
            Error::Leakage(_) => "E_LEAKAGE",
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
