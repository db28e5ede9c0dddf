use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = DtiError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum DtiError {
    #[error("parse error in {source_name}{}: {message}", row_suffix(*.row))]
    Parse {
        source_name: String,
        row: Option<usize>,
        message: String,
    },

    #[error("chemistry error for {smiles:?}: {message}")]
    Chemistry { smiles: String, message: String },

    #[error("integrity error for {entity}: {message}")]
    Integrity { entity: String, message: String },

    #[error("index {index} out of range for size {size} ({what})")]
    Bounds {
        what: &'static str,
        index: usize,
        size: usize,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("training failure: {0}")]
    Training(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(String),

    #[error(transparent)]
    Tensor(#[from] candle_core::Error),
}

fn row_suffix(row: Option<usize>) -> String {
    row.map(|r| format!(" (row {r})")).unwrap_or_default()
}

impl DtiError {
    pub fn parse(source_name: impl Into<String>, row: Option<usize>, message: impl Into<String>) -> Self {
        DtiError::Parse {
            source_name: source_name.into(),
            row,
            message: message.into(),
        }
    }

    pub fn integrity(entity: impl Into<String>, message: impl Into<String>) -> Self {
        DtiError::Integrity {
            entity: entity.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DtiError::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable category, used by the CLI diagnostics line.
    pub fn kind(&self) -> &'static str {
        match self {
            DtiError::Parse { .. } => "parse",
            DtiError::Chemistry { .. } => "chemistry",
            DtiError::Integrity { .. } => "integrity",
            DtiError::Bounds { .. } => "bounds",
            DtiError::Dimension(_) => "dimension",
            DtiError::Invalid(_) => "invalid",
            DtiError::Config(_) => "config",
            DtiError::Training(_) => "training",
            DtiError::UndefinedMetric(_) => "metric",
            DtiError::Io { .. } => "io",
            DtiError::Serde(_) => "serde",
            DtiError::Tensor(_) => "tensor",
        }
    }

    /// Process exit code: 2 usage, 3 data integrity, 4 training failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            DtiError::Config(_) | DtiError::Invalid(_) => 2,
            DtiError::Parse { .. }
            | DtiError::Chemistry { .. }
            | DtiError::Integrity { .. }
            | DtiError::Io { .. }
            | DtiError::Serde(_) => 3,
            DtiError::Training(_)
            | DtiError::UndefinedMetric(_)
            | DtiError::Bounds { .. }
            | DtiError::Dimension(_)
            | DtiError::Tensor(_) => 4,
        }
    }
}

impl From<serde_json::Error> for DtiError {
    fn from(e: serde_json::Error) -> Self {
        DtiError::Serde(e.to_string())
    }
}

impl From<bincode::Error> for DtiError {
    fn from(e: bincode::Error) -> Self {
        DtiError::Serde(e.to_string())
    }
}
