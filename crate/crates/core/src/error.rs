use thiserror::Error;

/// Errors raised across the toolkit.
///
/// Data-dependent failures that an audit should report rather than abort on
/// (undefined rates, SCM violations) are carried as values, not as errors.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("ingestion error at row {row}, column `{column}`: {message}")]
    Ingestion {
        row: usize,
        column: String,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("unsupported task: {0}")]
    UnsupportedTask(String),

    #[error("unsupported explanation: {0}")]
    UnsupportedExplanation(String),

    #[error("undefined metric `{metric}`: {reason}")]
    UndefinedMetric { metric: String, reason: String },

    #[error("invalid causal model: {0}")]
    Causal(String),

    #[error("unsupported counterfactual: {0}")]
    UnsupportedCounterfactual(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub(crate) fn arg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
