//! Distributional scoring of synthetic speech.
//!
//! Each feature of a synthetic corpus is compared, by 2-Wasserstein
//! distance, with a real reference corpus and with a set of noise corpora.
//! The resulting per-feature scores in `[0, 100]` are averaged into factor
//! scores and an overall score.

pub mod analysis;
pub mod data;
pub mod features;
pub mod pairing;
pub mod scoring;
pub mod wasserstein;

pub use data::{
    DataError, DatasetManifest, DatasetRole, Factor, FactorConfig, FactorScore, FeatureMode, FeatureScore,
    FeatureSource, FeatureSpec, FeatureTable, ScoreReport, UtteranceEntry,
};
pub use scoring::{ttsds2_score, NoiseReferenceSet, PreparedFeatures, ScoreError};
pub use wasserstein::{w2_auto, FeatureDistribution, GaussianSummary, W2Error};
