use std::path::PathBuf;

use crate::models::ModelKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: line {line}: expected 3 tab-separated fields, found {found}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        found: usize,
    },
    #[error("{0}: file contains no triples")]
    EmptyFile(PathBuf),
    #[error("{what} id {id} out of range (size {size})")]
    IdOutOfRange {
        what: &'static str,
        id: usize,
        size: usize,
    },
    #[error("{kind} requires an even dimension, got {dim}")]
    OddDimension { kind: ModelKind, dim: usize },
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("empty evaluation")]
    EmptyEvaluation,
    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Diverged { epoch: usize },
    #[error("checkpoint holds {found}, expected {expected}")]
    KindMismatch {
        expected: ModelKind,
        found: ModelKind,
    },
    #[error("unsupported checkpoint version {found} (this build reads version {supported})")]
    VersionMismatch { found: u32, supported: u32 },
    #[error("every grid cell failed")]
    NoViableCell,
    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
