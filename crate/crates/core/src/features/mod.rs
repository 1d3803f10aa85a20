//! Built-in audio features and noise-reference corpora.

mod f0;
mod noise;
mod rate;
mod wav;

use std::path::PathBuf;

pub use f0::{extract_f0, F0Config};
pub use noise::{generate_noise_corpus, write_noise_corpus, NoiseCorpus, NoiseKind};
pub use rate::{
    dedup_token_rate, extract_syllable_rate, read_token_file, SyllableConfig, TokenSequence,
};
pub use wav::{read_wav, write_wav};

pub const MIN_SAMPLE_RATE: u32 = 8_000;
pub const MAX_SAMPLE_RATE: u32 = 192_000;

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported audio encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("corrupt WAV header: {0}")]
    CorruptHeader(String),
    #[error("no voiced frames")]
    NoVoicedFrames,
    #[error("token sequence is empty")]
    EmptyTokens,
    #[error("clip too short: {duration_s:.3} s (need {min_s} s)")]
    ClipTooShort { duration_s: f64, min_s: f64 },
    #[error("token file line {line}: {reason}")]
    MalformedTokens { line: usize, reason: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Mono audio in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self, FeatureError> {
        if !(MIN_SAMPLE_RATE..=MAX_SAMPLE_RATE).contains(&sample_rate) {
            return Err(FeatureError::UnsupportedEncoding(format!(
                "sample rate {sample_rate} Hz outside {MIN_SAMPLE_RATE}..={MAX_SAMPLE_RATE}"
            )));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub(crate) fn ms_to_samples(&self, ms: f64) -> usize {
        (self.sample_rate as f64 * ms / 1000.0).round() as usize
    }
}
