//! Dataset manifests, the TTSF feature-table format, factor configuration
//! and score reports.

mod config;
mod manifest;
mod report;
mod table;

use std::path::{Path, PathBuf};

pub use config::{Factor, FactorConfig, FeatureSource, FeatureSpec};
pub use manifest::{DatasetManifest, DatasetRole, UtteranceEntry};
pub use report::{FactorScore, FeatureScore, ScoreReport};
pub use table::{FeatureMode, FeatureTable};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("duplicate utterance id `{0}`")]
    DuplicateId(String),
    #[error("line {line}: audio file {path} does not exist")]
    MissingFile { line: usize, path: PathBuf },
    #[error("not a TTSF file (bad magic)")]
    BadMagic,
    #[error("unsupported TTSF version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated data: header declares {expected} values, file holds {found}")]
    TruncatedData { expected: u64, found: u64 },
    #[error("non-finite value at flat index {index}")]
    NonfiniteValue { index: usize },
    #[error("invalid feature table: {0}")]
    InvalidTable(String),
    #[error("unknown feature source `{0}`")]
    UnknownSource(String),
    #[error("feature id `{0}` used more than once")]
    DuplicateFeatureId(String),
    #[error("factor `{0}` has no features")]
    EmptyFactor(String),
    #[error("invalid factor config: {0}")]
    InvalidConfig(String),
    #[error("invalid score report: {0}")]
    InvalidReport(String),
}

impl DataError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        DataError::Io { path: path.to_owned(), source }
    }
}
