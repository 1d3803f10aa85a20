use std::fmt;

use distscore::analysis::AnalysisError;
use distscore::features::FeatureError;
use distscore::pairing::PairingError;
use distscore::{DataError, ScoreError, W2Error};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const IO: i32 = 3;
    pub const MISSING_FEATURE: i32 = 4;
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: exit::USAGE, message: message.into() }
    }

    pub fn io(path: &std::path::Path, e: impl fmt::Display) -> Self {
        Self { code: exit::IO, message: format!("{}: {e}", path.display()) }
    }

    fn other(e: impl fmt::Display) -> Self {
        Self { code: exit::FAILURE, message: e.to_string() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn data_code(e: &DataError) -> i32 {
    match e {
        DataError::Io { .. } | DataError::MissingFile { .. } => exit::IO,
        _ => exit::FAILURE,
    }
}

fn feature_code(e: &FeatureError) -> i32 {
    match e {
        FeatureError::Io { .. } => exit::IO,
        FeatureError::InvalidArgument(_) => exit::USAGE,
        _ => exit::FAILURE,
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        Self { code: data_code(&e), message: e.to_string() }
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        Self { code: feature_code(&e), message: e.to_string() }
    }
}

impl From<ScoreError> for CliError {
    fn from(e: ScoreError) -> Self {
        let code = match &e {
            ScoreError::MissingFeature { .. } => exit::MISSING_FEATURE,
            ScoreError::Data(d) => data_code(d),
            ScoreError::Feature(f) | ScoreError::Utterance { source: f, .. } => feature_code(f),
            _ => exit::FAILURE,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<W2Error> for CliError {
    fn from(e: W2Error) -> Self {
        Self::other(e)
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        Self::other(e)
    }
}

impl From<PairingError> for CliError {
    fn from(e: PairingError) -> Self {
        match e {
            PairingError::Data(d) => d.into(),
            PairingError::InsufficientSpeakers { .. } => Self::usage(e.to_string()),
            e => Self::other(e),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::other(e)
    }
}
