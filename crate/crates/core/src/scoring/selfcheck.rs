//! Split-half robustness check: one random half of a real corpus scored
//! against the other half as reference.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{feature_score, DatasetFeatures, FeatureColumn, NoiseReferenceSet, PreparedFeatures, ScoreError, SummaryCache};
use crate::data::{DatasetRole, FactorConfig, FeatureTable};

/// A feature passes when its split-half score reaches this.
pub const PASS_THRESHOLD: f64 = 95.0;
/// Below this many utterances the report carries a small-sample warning.
pub const SMALL_SAMPLE: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfCheckFeature {
    pub feature_id: String,
    pub factor: String,
    pub w2_real: f64,
    pub w2_noise_min: f64,
    pub noise_id_argmin: String,
    pub score: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfCheckReport {
    pub dataset_id: String,
    pub seed: u64,
    pub n_utterances: usize,
    /// Manifest indices of the half scored as synthetic.
    pub half_a: Vec<usize>,
    /// Manifest indices of the half used as reference.
    pub half_b: Vec<usize>,
    pub features: Vec<SelfCheckFeature>,
    pub warnings: Vec<String>,
}

impl SelfCheckReport {
    pub fn all_pass(&self) -> bool {
        self.features.iter().all(|f| f.pass)
    }
}

pub fn split_half_selfcheck(
    config: &FactorConfig,
    dataset: &DatasetFeatures,
    noise: &NoiseReferenceSet,
    seed: u64,
    cache: &SummaryCache,
) -> Result<SelfCheckReport, ScoreError> {
    let n = dataset.n_utterances;
    if n < 2 {
        return Err(ScoreError::TooFewUtterances(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let (a, b) = order.split_at(n / 2);
    let (mut half_a, mut half_b) = (a.to_vec(), b.to_vec());
    half_a.sort_unstable();
    half_b.sort_unstable();

    let mut warnings = Vec::new();
    if n < SMALL_SAMPLE {
        warnings.push(format!("small sample: {n} utterances (halves of {} and {})", half_a.len(), half_b.len()));
    }

    let mut feats_a = DatasetFeatures::new(format!("{}:A", dataset.dataset_id), DatasetRole::Synthetic, half_a.len());
    let mut feats_b = DatasetFeatures::new(format!("{}:B", dataset.dataset_id), DatasetRole::Real, half_b.len());
    for spec in config.features() {
        let column = dataset.column(&spec.id).ok_or_else(|| ScoreError::MissingFeature {
            feature: spec.id.clone(),
            dataset: dataset.dataset_id.clone(),
            role: dataset.role,
        })?;
        let (ta, tb) = match &column.segments {
            Some(segments) => (gather(column, segments, &half_a)?, gather(column, segments, &half_b)?),
            None => {
                warnings.push(format!(
                    "feature `{}`: rows are not aligned to utterances; split at row level",
                    spec.id
                ));
                split_rows(&column.table, seed)?
            }
        };
        let (Some(ta), Some(tb)) = (ta, tb) else {
            return Err(ScoreError::NoFeatureData { feature: spec.id.clone(), dataset: dataset.dataset_id.clone() });
        };
        feats_a.insert(FeatureColumn::pooled(ta));
        feats_b.insert(FeatureColumn::pooled(tb));
    }

    let prep_a = PreparedFeatures::prepare(&feats_a, cache)?;
    let prep_b = PreparedFeatures::prepare(&feats_b, cache)?;
    let mut features = Vec::new();
    for factor in config.factors() {
        for spec in &factor.features {
            let o = feature_score(&spec.id, &prep_a, &prep_b, noise)?;
            features.push(SelfCheckFeature {
                feature_id: spec.id.clone(),
                factor: factor.name.clone(),
                w2_real: o.w2_real,
                w2_noise_min: o.w2_noise_min,
                noise_id_argmin: o.noise_id,
                pass: o.score >= PASS_THRESHOLD,
                score: o.score,
            });
        }
    }
    Ok(SelfCheckReport { dataset_id: dataset.dataset_id.clone(), seed, n_utterances: n, half_a, half_b, features, warnings })
}

fn gather(column: &FeatureColumn, segments: &[(usize, usize)], utts: &[usize]) -> Result<Option<FeatureTable>, ScoreError> {
    let rows: Vec<usize> = utts.iter().flat_map(|&u| segments[u].0..segments[u].1).collect();
    if rows.is_empty() {
        return Ok(None);
    }
    Ok(Some(column.table.select_rows(&rows)?))
}

fn split_rows(table: &FeatureTable, seed: u64) -> Result<(Option<FeatureTable>, Option<FeatureTable>), ScoreError> {
    let n = table.rows();
    if n < 2 {
        return Ok((None, None));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let (a, b) = order.split_at(n / 2);
    let (mut a, mut b) = (a.to_vec(), b.to_vec());
    a.sort_unstable();
    b.sort_unstable();
    Ok((Some(table.select_rows(&a)?), Some(table.select_rows(&b)?)))
}
