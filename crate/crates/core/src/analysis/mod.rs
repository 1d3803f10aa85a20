//! Correlation of scores with subjective ratings, and the factor-weighting
//! ablation.

mod correlation;
mod ratings;
mod regression;

pub use correlation::{
    average_ranks, pearson, spearman, spearman_permutation, PermutationResult, MIN_CORRELATION_LEN,
};
pub use ratings::{rank_table, CorrelationCell, RatingsTable, ALL_DOMAINS, OVERALL_COLUMN, SIGNIFICANCE};
pub use regression::{
    fit_weights_ols, loocv_domains, DomainData, LoocvFold, WeightFit, WeightVector, MIN_REGRESSION_ROWS,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("zero rank variance")]
    Degenerate,
    #[error("non-finite input")]
    NonFinite,
    #[error("rows have differing lengths")]
    RaggedRows,
    #[error("normal equations are singular")]
    Singular,
    #[error("need at least 2 domains, got {0}")]
    TooFewDomains(usize),
    #[error("no system ids in common for domain `{0}`")]
    IdMismatch(String),
    #[error("system `{0}` appears twice")]
    DuplicateSystem(String),
    #[error("missing value for system `{system}`, metric `{metric}`")]
    MissingCell { system: String, metric: String },
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("csv: {0}")]
    Csv(String),
}
