//! Factor configuration: which features make up each perceptual factor.
//!
//! ```json
//! {
//!   "factors": [
//!     {"name": "Prosody", "features": [
//!       {"id": "f0", "source": "builtin_f0"},
//!       {"id": "mpm:mean", "source": "external_file", "mode": "vector"}
//!     ]}
//!   ]
//! }
//! ```
//!
//! Built-in sources are always scalar. External features default to vector.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DataError, FeatureMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSource {
    BuiltinF0,
    BuiltinDedupRate,
    BuiltinSyllableRate,
    ExternalFile,
}

impl FeatureSource {
    pub fn is_builtin(self) -> bool {
        self != FeatureSource::ExternalFile
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "builtin_f0" => FeatureSource::BuiltinF0,
            "builtin_dedup_rate" => FeatureSource::BuiltinDedupRate,
            "builtin_syllable_rate" => FeatureSource::BuiltinSyllableRate,
            "external_file" => FeatureSource::ExternalFile,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub id: String,
    pub source: FeatureSource,
    pub mode: FeatureMode,
}

impl FeatureSpec {
    pub fn builtin(id: &str, source: FeatureSource) -> Self {
        Self { id: id.to_owned(), source, mode: FeatureMode::Scalar }
    }

    pub fn external(id: &str, mode: FeatureMode) -> Self {
        Self { id: id.to_owned(), source: FeatureSource::ExternalFile, mode }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factor {
    pub name: String,
    pub features: Vec<FeatureSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorConfig {
    factors: Vec<Factor>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    factors: Vec<RawFactor>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFactor {
    name: String,
    features: Vec<RawFeature>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFeature {
    id: String,
    source: String,
    #[serde(default)]
    mode: Option<FeatureMode>,
}

impl FactorConfig {
    pub fn new(factors: Vec<Factor>) -> Result<Self, DataError> {
        if factors.is_empty() {
            return Err(DataError::InvalidConfig("at least one factor is required".into()));
        }
        let mut names = HashSet::new();
        let mut ids = HashSet::new();
        for f in &factors {
            if !names.insert(f.name.as_str()) {
                return Err(DataError::InvalidConfig(format!("factor `{}` listed twice", f.name)));
            }
            if f.features.is_empty() {
                return Err(DataError::EmptyFactor(f.name.clone()));
            }
            for spec in &f.features {
                if !ids.insert(spec.id.as_str()) {
                    return Err(DataError::DuplicateFeatureId(spec.id.clone()));
                }
                if spec.source.is_builtin() && spec.mode != FeatureMode::Scalar {
                    return Err(DataError::InvalidConfig(format!(
                        "built-in feature `{}` is scalar",
                        spec.id
                    )));
                }
            }
        }
        Ok(Self { factors })
    }

    /// The four-factor layout: self-supervised activations, speaker
    /// embeddings, prosody, and ASR activations.
    pub fn default_factors() -> Self {
        use FeatureMode::Vector;
        let f = |name: &str, features: Vec<FeatureSpec>| Factor { name: name.into(), features };
        Self::new(vec![
            f("Generic", vec![
                FeatureSpec::external("wavlm:mean", Vector),
                FeatureSpec::external("hubert:mean", Vector),
                FeatureSpec::external("wav2vec2:mean", Vector),
            ]),
            f("Speaker", vec![
                FeatureSpec::external("dvector:mean", Vector),
                FeatureSpec::external("wespeaker:mean", Vector),
            ]),
            f("Prosody", vec![
                FeatureSpec::builtin("f0", FeatureSource::BuiltinF0),
                FeatureSpec::builtin("hubert_rate", FeatureSource::BuiltinDedupRate),
                FeatureSpec::builtin("syllable_rate", FeatureSource::BuiltinSyllableRate),
                FeatureSpec::external("prosody_mpm:mean", Vector),
            ]),
            f("Intelligibility", vec![
                FeatureSpec::external("wav2vec2_asr:mean", Vector),
                FeatureSpec::external("whisper_asr:mean", Vector),
            ]),
        ])
        .expect("default config is valid")
    }

    /// Audio-only features that need no external extractor output.
    pub fn builtin_only() -> Self {
        Self::new(vec![Factor {
            name: "Prosody".into(),
            features: vec![
                FeatureSpec::builtin("f0", FeatureSource::BuiltinF0),
                FeatureSpec::builtin("syllable_rate", FeatureSource::BuiltinSyllableRate),
            ],
        }])
        .expect("builtin config is valid")
    }

    pub fn parse(text: &str) -> Result<Self, DataError> {
        let raw: RawConfig =
            serde_json::from_str(text).map_err(|e| DataError::InvalidConfig(e.to_string()))?;
        let mut factors = Vec::with_capacity(raw.factors.len());
        for rf in raw.factors {
            let mut features = Vec::with_capacity(rf.features.len());
            for feat in rf.features {
                let source = FeatureSource::parse(&feat.source)
                    .ok_or_else(|| DataError::UnknownSource(feat.source.clone()))?;
                let mode = feat.mode.unwrap_or(if source.is_builtin() {
                    FeatureMode::Scalar
                } else {
                    FeatureMode::Vector
                });
                features.push(FeatureSpec { id: feat.id, source, mode });
            }
            factors.push(Factor { name: rf.name, features });
        }
        Self::new(factors)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DataError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn features(&self) -> impl Iterator<Item = &FeatureSpec> {
        self.factors.iter().flat_map(|f| f.features.iter())
    }

    pub fn feature(&self, id: &str) -> Option<&FeatureSpec> {
        self.features().find(|f| f.id == id)
    }
}
