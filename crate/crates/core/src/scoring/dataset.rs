//! Resolving every configured feature for one dataset.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::ScoreError;
use crate::data::{DatasetManifest, DatasetRole, FactorConfig, FeatureSource, FeatureSpec, FeatureTable};
use crate::features::{
    dedup_token_rate, extract_f0, extract_syllable_rate, read_token_file, read_wav, F0Config,
    FeatureError, SyllableConfig,
};

/// Value substituted for an empty feature distribution of a noise dataset.
pub const EMPTY_NOISE_VALUE: f64 = 0.0;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ExtractorSettings {
    pub f0: F0Config,
    pub syllable: SyllableConfig,
}

/// One feature's pooled rows, optionally with the row range owned by each
/// utterance of the manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureColumn {
    pub table: FeatureTable,
    pub segments: Option<Vec<(usize, usize)>>,
}

impl FeatureColumn {
    pub fn pooled(table: FeatureTable) -> Self {
        Self { table, segments: None }
    }

    /// Stacks per-utterance tables, remembering the boundaries.
    pub fn from_utterances(parts: &[FeatureTable]) -> Result<Self, ScoreError> {
        let table = FeatureTable::concat(parts)?;
        let mut segments = Vec::with_capacity(parts.len());
        let mut start = 0;
        for p in parts {
            segments.push((start, start + p.rows()));
            start += p.rows();
        }
        Ok(Self { table, segments: Some(segments) })
    }
}

/// Feature tables for one dataset, keyed by feature id.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFeatures {
    pub dataset_id: String,
    pub role: DatasetRole,
    pub n_utterances: usize,
    columns: BTreeMap<String, FeatureColumn>,
    /// Utterances contributing no rows, per feature.
    pub skipped: BTreeMap<String, usize>,
}

impl DatasetFeatures {
    pub fn new(dataset_id: impl Into<String>, role: DatasetRole, n_utterances: usize) -> Self {
        Self {
            dataset_id: dataset_id.into(),
            role,
            n_utterances,
            columns: BTreeMap::new(),
            skipped: BTreeMap::new(),
        }
    }

    /// Convenience for already pooled tables without utterance boundaries.
    pub fn from_tables(
        dataset_id: impl Into<String>,
        role: DatasetRole,
        tables: impl IntoIterator<Item = FeatureTable>,
    ) -> Self {
        let mut out = Self::new(dataset_id, role, 0);
        for t in tables {
            out.insert(FeatureColumn::pooled(t));
        }
        out
    }

    pub fn insert(&mut self, column: FeatureColumn) {
        self.columns.insert(column.table.feature_id().to_owned(), column);
    }

    pub fn column(&self, feature_id: &str) -> Option<&FeatureColumn> {
        self.columns.get(feature_id)
    }

    pub fn table(&self, feature_id: &str) -> Option<&FeatureTable> {
        self.columns.get(feature_id).map(|c| &c.table)
    }

    pub fn columns(&self) -> impl Iterator<Item = &FeatureColumn> {
        self.columns.values()
    }

    /// Extracts built-in features from audio and loads external ones from
    /// `<features_dir>/<dataset_id>/<feature_id>.ttsf` (tokens for the
    /// deduplicated rate come from `<feature_id>.tokens` in the same place).
    pub fn resolve(
        config: &FactorConfig,
        manifest: &DatasetManifest,
        features_dir: Option<&Path>,
        settings: &ExtractorSettings,
    ) -> Result<Self, ScoreError> {
        let mut out = Self::new(manifest.id.clone(), manifest.role, manifest.len());
        let specs: Vec<&FeatureSpec> = config.features().collect();

        let audio_specs: Vec<&FeatureSpec> = specs
            .iter()
            .copied()
            .filter(|s| matches!(s.source, FeatureSource::BuiltinF0 | FeatureSource::BuiltinSyllableRate))
            .collect();
        if !audio_specs.is_empty() {
            let per_utt = extract_audio_features(manifest, &audio_specs, settings)?;
            for (k, spec) in audio_specs.iter().enumerate() {
                let values: Vec<Vec<f64>> = per_utt.iter().map(|u| u[k].clone()).collect();
                out.push_scalar_column(&spec.id, &values)?;
            }
        }

        for spec in specs {
            match spec.source {
                FeatureSource::BuiltinF0 | FeatureSource::BuiltinSyllableRate => {}
                FeatureSource::BuiltinDedupRate => {
                    let path = feature_path(features_dir, manifest, &spec.id, "tokens")
                        .ok_or_else(|| missing(spec, manifest))?;
                    let seqs = read_token_file(&path)?;
                    let by_id: HashMap<&str, _> =
                        seqs.iter().map(|s| (s.utterance_id.as_str(), s)).collect();
                    let mut values = Vec::with_capacity(manifest.len());
                    for e in manifest.entries() {
                        values.push(match by_id.get(e.id.as_str()) {
                            Some(seq) => vec![dedup_token_rate(seq)?],
                            None => Vec::new(),
                        });
                    }
                    out.push_scalar_column(&spec.id, &values)?;
                }
                FeatureSource::ExternalFile => {
                    let path = feature_path(features_dir, manifest, &spec.id, "ttsf")
                        .ok_or_else(|| missing(spec, manifest))?;
                    let table = FeatureTable::read(&path)?;
                    if table.mode() != spec.mode {
                        return Err(ScoreError::ModeMismatch { feature: spec.id.clone() });
                    }
                    if table.feature_id() != spec.id {
                        return Err(ScoreError::Data(crate::data::DataError::InvalidTable(format!(
                            "{} holds feature `{}`, expected `{}`",
                            path.display(),
                            table.feature_id(),
                            spec.id
                        ))));
                    }
                    let segments = (table.rows() == manifest.len())
                        .then(|| (0..table.rows()).map(|i| (i, i + 1)).collect());
                    out.insert(FeatureColumn { table, segments });
                }
            }
        }
        Ok(out)
    }

    /// Pools per-utterance scalar values. Utterances without values are
    /// counted as skipped; an entirely empty feature is an error unless the
    /// dataset is a noise reference.
    pub fn push_scalar_column(&mut self, feature_id: &str, per_utt: &[Vec<f64>]) -> Result<(), ScoreError> {
        let skipped = per_utt.iter().filter(|v| v.is_empty()).count();
        self.skipped.insert(feature_id.to_owned(), skipped);
        let total: usize = per_utt.iter().map(Vec::len).sum();
        if total == 0 {
            if self.role != DatasetRole::Noise {
                return Err(ScoreError::NoFeatureData {
                    feature: feature_id.to_owned(),
                    dataset: self.dataset_id.clone(),
                });
            }
            let table = FeatureTable::scalar(feature_id, &[EMPTY_NOISE_VALUE])?;
            self.insert(FeatureColumn::pooled(table));
            return Ok(());
        }
        let mut flat = Vec::with_capacity(total);
        let mut segments = Vec::with_capacity(per_utt.len());
        for v in per_utt {
            let start = flat.len();
            flat.extend_from_slice(v);
            segments.push((start, flat.len()));
        }
        let table = FeatureTable::scalar(feature_id, &flat)?;
        self.insert(FeatureColumn { table, segments: Some(segments) });
        Ok(())
    }
}

fn missing(spec: &FeatureSpec, manifest: &DatasetManifest) -> ScoreError {
    ScoreError::MissingFeature {
        feature: spec.id.clone(),
        dataset: manifest.id.clone(),
        role: manifest.role,
    }
}

fn feature_path(dir: Option<&Path>, manifest: &DatasetManifest, id: &str, ext: &str) -> Option<PathBuf> {
    let path = dir?.join(&manifest.id).join(format!("{id}.{ext}"));
    path.is_file().then_some(path)
}

/// Per utterance, per spec: the values each audio feature produced.
fn extract_audio_features(
    manifest: &DatasetManifest,
    specs: &[&FeatureSpec],
    settings: &ExtractorSettings,
) -> Result<Vec<Vec<Vec<f64>>>, ScoreError> {
    manifest
        .entries()
        .par_iter()
        .map(|entry| {
            let clip = read_wav(&entry.audio_path).map_err(|source| ScoreError::Utterance {
                utterance: entry.id.clone(),
                source,
            })?;
            specs
                .iter()
                .map(|spec| {
                    let res = match spec.source {
                        FeatureSource::BuiltinF0 => extract_f0(&clip, &settings.f0),
                        FeatureSource::BuiltinSyllableRate => {
                            extract_syllable_rate(&clip, &settings.syllable).map(|r| vec![r])
                        }
                        _ => unreachable!("only audio features are extracted here"),
                    };
                    match res {
                        Ok(v) => Ok(v),
                        Err(FeatureError::NoVoicedFrames | FeatureError::ClipTooShort { .. }) => Ok(Vec::new()),
                        Err(source) => Err(ScoreError::Utterance { utterance: entry.id.clone(), source }),
                    }
                })
                .collect()
        })
        .collect()
}
