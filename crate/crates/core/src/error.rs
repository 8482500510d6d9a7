use std::path::PathBuf;

/// Every failure the pipeline can report.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("{path}: line {line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },

    #[error("dataset is empty after {0}")]
    EmptyDataset(&'static str),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("no knee: {0}")]
    NoKnee(String),

    #[error("silhouette undefined: {0}")]
    UndefinedScore(String),

    #[error("tuning failed: {0}")]
    TuningFailure(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("class imbalance cannot be corrected: {0}")]
    Imbalance(String),

    #[error("degenerate statistics: {0}")]
    DegenerateStatistics(String),

    #[error("missing input {path}: {hint}")]
    MissingInput { path: PathBuf, hint: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse failure classes, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::Parameter(_) => ErrorClass::Config,
            Error::Numerical(_)
            | Error::NoKnee(_)
            | Error::UndefinedScore(_)
            | Error::TuningFailure(_)
            | Error::DegenerateStatistics(_) => ErrorClass::Numerical,
            _ => ErrorClass::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl std::fmt::Display, line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.to_string(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
