//! Noise-anchored feature scores and their aggregation.
//!
//! A feature scores `100 · W_noise / (W_real + W_noise)`, where `W_real` is
//! the W2 distance from the synthetic distribution to the real reference
//! and `W_noise` the smallest distance to any noise corpus. Factor scores
//! are means of their feature scores; the overall score is the unweighted
//! mean of the factor scores.

mod cache;
mod dataset;
mod selfcheck;

use std::collections::BTreeMap;

use rayon::prelude::*;

pub use cache::{SummaryCache, CACHE_ENV};
pub use dataset::{DatasetFeatures, ExtractorSettings, FeatureColumn, EMPTY_NOISE_VALUE};
pub use selfcheck::{split_half_selfcheck, SelfCheckFeature, SelfCheckReport, PASS_THRESHOLD, SMALL_SAMPLE};

use crate::data::{DataError, DatasetRole, FactorConfig, FactorScore, FeatureScore, ScoreReport};
use crate::features::FeatureError;
use crate::wasserstein::{FeatureDistribution, W2Error};

#[derive(Debug, thiserror::Error)]
pub enum ScoreError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Distance(#[from] W2Error),
    #[error("utterance `{utterance}`: {source}")]
    Utterance {
        utterance: String,
        #[source]
        source: FeatureError,
    },
    #[error("feature `{feature}` is not available for {role:?} dataset `{dataset}`")]
    MissingFeature { feature: String, dataset: String, role: DatasetRole },
    #[error("feature `{feature}` produced no data for dataset `{dataset}`")]
    NoFeatureData { feature: String, dataset: String },
    #[error("feature `{feature}` has mismatched modes across datasets")]
    ModeMismatch { feature: String },
    #[error("need at least 2 utterances, got {0}")]
    TooFewUtterances(usize),
    #[error("cannot average an empty list of scores")]
    EmptyList,
    #[error("noise reference set is empty")]
    NoNoise,
    #[error("duplicate noise dataset `{0}`")]
    DuplicateNoise(String),
    #[error("summary cache: {0}")]
    Cache(String),
}

/// Distributions ready for scoring, one per feature of a dataset.
#[derive(Debug, Clone)]
pub struct PreparedFeatures {
    pub dataset_id: String,
    pub role: DatasetRole,
    dists: BTreeMap<String, FeatureDistribution>,
}

impl PreparedFeatures {
    pub fn prepare(features: &DatasetFeatures, cache: &SummaryCache) -> Result<Self, ScoreError> {
        let cols: Vec<_> = features.columns().collect();
        let dists = cols
            .par_iter()
            .map(|c| Ok((c.table.feature_id().to_owned(), cache.prepare(&c.table)?)))
            .collect::<Result<BTreeMap<_, _>, ScoreError>>()?;
        Ok(Self { dataset_id: features.dataset_id.clone(), role: features.role, dists })
    }

    pub fn get(&self, feature_id: &str) -> Result<&FeatureDistribution, ScoreError> {
        self.dists.get(feature_id).ok_or_else(|| ScoreError::MissingFeature {
            feature: feature_id.to_owned(),
            dataset: self.dataset_id.clone(),
            role: self.role,
        })
    }
}

/// The distractor corpora, ordered by id.
#[derive(Debug, Clone)]
pub struct NoiseReferenceSet {
    entries: Vec<PreparedFeatures>,
}

impl NoiseReferenceSet {
    pub fn new(mut entries: Vec<PreparedFeatures>) -> Result<Self, ScoreError> {
        if entries.is_empty() {
            return Err(ScoreError::NoNoise);
        }
        entries.sort_by(|a, b| a.dataset_id.cmp(&b.dataset_id));
        if let Some(w) = entries.windows(2).find(|w| w[0].dataset_id == w[1].dataset_id) {
            return Err(ScoreError::DuplicateNoise(w[0].dataset_id.clone()));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[PreparedFeatures] {
        &self.entries
    }
}

/// One feature's distances and score.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureOutcome {
    pub score: f64,
    pub w2_real: f64,
    pub w2_noise_min: f64,
    pub noise_id: String,
}

/// `100 · W_noise / (W_real + W_noise)`; 100 when both distances vanish.
pub fn normalized_score(w2_real: f64, w2_noise: f64) -> f64 {
    let total = w2_real + w2_noise;
    if total == 0.0 {
        return 100.0;
    }
    (100.0 * (w2_noise / total)).clamp(0.0, 100.0)
}

/// Scores one feature. Ties for the nearest noise corpus go to the
/// lexicographically smallest id.
pub fn feature_score(
    feature_id: &str,
    synthetic: &PreparedFeatures,
    real: &PreparedFeatures,
    noise: &NoiseReferenceSet,
) -> Result<FeatureOutcome, ScoreError> {
    let syn = synthetic.get(feature_id)?;
    let w2_real = distance(feature_id, syn, real.get(feature_id)?)?;
    let mut best: Option<(f64, &str)> = None;
    for entry in noise.entries() {
        let d = distance(feature_id, syn, entry.get(feature_id)?)?;
        if best.is_none_or(|(b, _)| d < b) {
            best = Some((d, &entry.dataset_id));
        }
    }
    let (w2_noise_min, noise_id) = best.ok_or(ScoreError::NoNoise)?;
    Ok(FeatureOutcome {
        score: normalized_score(w2_real, w2_noise_min),
        w2_real,
        w2_noise_min,
        noise_id: noise_id.to_owned(),
    })
}

fn distance(feature_id: &str, a: &FeatureDistribution, b: &FeatureDistribution) -> Result<f64, ScoreError> {
    match a.w2(b) {
        Err(W2Error::ModeMismatch(..)) => Err(ScoreError::ModeMismatch { feature: feature_id.to_owned() }),
        other => Ok(other?),
    }
}

/// Arithmetic mean, summed in ascending order so the result does not depend
/// on the order the scores are listed in.
pub fn factor_score(scores: &[f64]) -> Result<f64, ScoreError> {
    if scores.is_empty() {
        return Err(ScoreError::EmptyList);
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
    Ok(mean.clamp(0.0, 100.0))
}

/// Full report for one synthetic dataset. Features are scored in parallel on
/// the current rayon pool; results are assembled in config order.
pub fn ttsds2_score(
    config: &FactorConfig,
    synthetic: &PreparedFeatures,
    real: &PreparedFeatures,
    noise: &NoiseReferenceSet,
) -> Result<ScoreReport, ScoreError> {
    let tasks: Vec<(&str, &str)> = config
        .factors()
        .iter()
        .flat_map(|f| f.features.iter().map(move |s| (f.name.as_str(), s.id.as_str())))
        .collect();
    let outcomes = tasks
        .par_iter()
        .map(|&(_, id)| feature_score(id, synthetic, real, noise))
        .collect::<Result<Vec<_>, _>>()?;

    let per_feature: Vec<FeatureScore> = tasks
        .iter()
        .zip(outcomes)
        .map(|(&(factor, id), o)| FeatureScore {
            feature_id: id.to_owned(),
            factor: factor.to_owned(),
            w2_real: o.w2_real,
            w2_noise_min: o.w2_noise_min,
            noise_id_argmin: o.noise_id,
            score: o.score,
        })
        .collect();

    let mut per_factor = Vec::with_capacity(config.factors().len());
    for factor in config.factors() {
        let scores: Vec<f64> = per_feature
            .iter()
            .filter(|f| f.factor == factor.name)
            .map(|f| f.score)
            .collect();
        per_factor.push(FactorScore { name: factor.name.clone(), score: factor_score(&scores)? });
    }
    let overall = factor_score(&per_factor.iter().map(|f| f.score).collect::<Vec<_>>())?;
    Ok(ScoreReport { dataset_id: synthetic.dataset_id.clone(), per_feature, per_factor, overall })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Factor, FeatureSource, FeatureSpec, FeatureTable};
    use proptest::prelude::*;

    fn prepared(id: &str, role: DatasetRole, tables: Vec<FeatureTable>) -> PreparedFeatures {
        PreparedFeatures::prepare(&DatasetFeatures::from_tables(id, role, tables), &SummaryCache::disabled())
            .unwrap()
    }

    fn scalar(id: &str, v: &[f64]) -> FeatureTable {
        FeatureTable::scalar(id, v).unwrap()
    }

    #[test]
    fn eq1_limits() {
        assert_eq!(normalized_score(0.0, 3.0), 100.0);
        assert_eq!(normalized_score(2.5, 2.5), 50.0);
        assert_eq!(normalized_score(1e-300, 1e-300), 50.0);
        assert_eq!(normalized_score(3.0, 0.0), 0.0);
        assert_eq!(normalized_score(0.0, 0.0), 100.0);
    }

    #[test]
    fn factor_mean() {
        assert_eq!(factor_score(&[100.0, 50.0]).unwrap(), 75.0);
        assert_eq!(factor_score(&[42.125]).unwrap(), 42.125);
        assert!(matches!(factor_score(&[]), Err(ScoreError::EmptyList)));
    }

    #[test]
    fn argmin_tie_break_is_lexicographic() {
        let syn = prepared("syn", DatasetRole::Synthetic, vec![scalar("f", &[1.0])]);
        let real = prepared("real", DatasetRole::Real, vec![scalar("f", &[1.0])]);
        let noise = NoiseReferenceSet::new(vec![
            prepared("zeta", DatasetRole::Noise, vec![scalar("f", &[0.0])]),
            prepared("alpha", DatasetRole::Noise, vec![scalar("f", &[2.0])]),
        ])
        .unwrap();
        let o = feature_score("f", &syn, &real, &noise).unwrap();
        assert_eq!(o.noise_id, "alpha");
        assert_eq!(o.w2_noise_min, 1.0);
        assert_eq!(o.score, 100.0);
    }

    #[test]
    fn synthetic_equal_to_noise_scores_zero() {
        let syn = prepared("syn", DatasetRole::Synthetic, vec![scalar("f", &[0.0, 0.5])]);
        let real = prepared("real", DatasetRole::Real, vec![scalar("f", &[3.0, 4.0])]);
        let noise = NoiseReferenceSet::new(vec![prepared("n", DatasetRole::Noise, vec![scalar("f", &[0.5, 0.0])])])
            .unwrap();
        assert_eq!(feature_score("f", &syn, &real, &noise).unwrap().score, 0.0);
    }

    #[test]
    fn missing_and_mismatched_features() {
        let syn = prepared("syn", DatasetRole::Synthetic, vec![scalar("f", &[0.0])]);
        let real = prepared("real", DatasetRole::Real, vec![scalar("g", &[0.0])]);
        let noise = NoiseReferenceSet::new(vec![prepared("n", DatasetRole::Noise, vec![scalar("f", &[1.0])])])
            .unwrap();
        assert!(matches!(
            feature_score("f", &syn, &real, &noise),
            Err(ScoreError::MissingFeature { role: DatasetRole::Real, .. })
        ));

        let vec_real = prepared(
            "real",
            DatasetRole::Real,
            vec![FeatureTable::from_rows("f", &[[0.0], [1.0]]).unwrap()],
        );
        assert!(matches!(feature_score("f", &syn, &vec_real, &noise), Err(ScoreError::ModeMismatch { .. })));
        assert!(matches!(NoiseReferenceSet::new(vec![]), Err(ScoreError::NoNoise)));
    }

    #[test]
    fn report_aggregates_means() {
        let config = FactorConfig::new(vec![
            Factor { name: "A".into(), features: vec![
                FeatureSpec::builtin("a1", FeatureSource::BuiltinF0),
                FeatureSpec::builtin("a2", FeatureSource::BuiltinSyllableRate),
            ] },
            Factor { name: "B".into(), features: vec![FeatureSpec::external("b1", crate::data::FeatureMode::Scalar)] },
        ])
        .unwrap();
        let syn = prepared("syn", DatasetRole::Synthetic, vec![
            scalar("a1", &[1.0]), scalar("a2", &[2.0]), scalar("b1", &[0.0]),
        ]);
        let real = prepared("real", DatasetRole::Real, vec![
            scalar("a1", &[1.0]), scalar("a2", &[3.0]), scalar("b1", &[3.0]),
        ]);
        let noise = NoiseReferenceSet::new(vec![prepared("n", DatasetRole::Noise, vec![
            scalar("a1", &[0.0]), scalar("a2", &[1.0]), scalar("b1", &[1.0]),
        ])])
        .unwrap();
        let r = ttsds2_score(&config, &syn, &real, &noise).unwrap();
        let scores: Vec<f64> = r.per_feature.iter().map(|f| f.score).collect();
        assert_eq!(scores, vec![100.0, 50.0, 25.0]);
        assert_eq!(r.per_factor[0].score, 75.0);
        assert_eq!(r.per_factor[1].score, 25.0);
        assert_eq!(r.overall, 50.0);
    }

    proptest! {
        #[test]
        fn score_decreases_in_w2_real(noise in 1e-6f64..1e3, a in 0.0f64..1e3, delta in 1e-3f64..1e3) {
            let lo = normalized_score(a, noise);
            let hi = normalized_score(a + delta, noise);
            prop_assert!(hi < lo);
            prop_assert!((0.0..=100.0).contains(&lo) && (0.0..=100.0).contains(&hi));
        }
    }
}
