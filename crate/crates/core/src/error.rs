use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("schema error in {path}: {message} (column `{column}`)")]
    Schema {
        path: String,
        column: String,
        message: String,
    },

    #[error("parse error in {path} at row {row}, column `{column}`: {message}")]
    Parse {
        path: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error("data error in {path}: {message}")]
    Data { path: String, message: String },

    #[error("empty run: {0} has a header but no samples")]
    EmptyRun(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("checkpoint error in field `{field}`: {message}")]
    Checkpoint { field: String, message: String },

    #[error("training diverged at epoch {epoch} (last finite loss {last_finite_loss})")]
    Training { epoch: usize, last_finite_loss: f64 },

    #[error("split error: {0}")]
    Split(String),

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag for the error family.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Contract(_) => "contract",
            Error::Schema { .. } => "schema",
            Error::Parse { .. } => "parse",
            Error::Data { .. } => "data",
            Error::EmptyRun(_) => "empty_run",
            Error::Manifest(_) => "manifest",
            Error::Checkpoint { .. } => "checkpoint",
            Error::Training { .. } => "training",
            Error::Split(_) => "split",
            Error::Eval(_) => "eval",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
