//! Optional on-disk cache of fitted Gaussian summaries, keyed by the SHA-256
//! of the feature table's TTSF bytes.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::ScoreError;
use crate::data::{FeatureMode, FeatureTable};
use crate::wasserstein::{EmpiricalScalar, FeatureDistribution, GaussianRecord, GaussianSummary};

pub const CACHE_ENV: &str = "DISTSCORE_CACHE";

#[derive(Debug, Clone, Default)]
pub struct SummaryCache {
    dir: Option<PathBuf>,
}

impl SummaryCache {
    pub fn disabled() -> Self {
        Self { dir: None }
    }

    pub fn at(dir: impl Into<PathBuf>) -> Self {
        Self { dir: Some(dir.into()) }
    }

    /// Uses `$DISTSCORE_CACHE` when set and non-empty.
    pub fn from_env() -> Self {
        match std::env::var_os(CACHE_ENV) {
            Some(v) if !v.is_empty() => Self::at(v),
            _ => Self::disabled(),
        }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn prepare(&self, table: &FeatureTable) -> Result<FeatureDistribution, ScoreError> {
        match table.mode() {
            FeatureMode::Scalar => Ok(FeatureDistribution::Scalar(EmpiricalScalar::new(table.values_f64())?)),
            FeatureMode::Vector => Ok(FeatureDistribution::Gaussian(self.gaussian(table)?)),
        }
    }

    fn gaussian(&self, table: &FeatureTable) -> Result<GaussianSummary, ScoreError> {
        let Some(dir) = &self.dir else {
            return Ok(GaussianSummary::fit_table(table)?);
        };
        let key: String = Sha256::digest(table.to_bytes()).iter().map(|b| format!("{b:02x}")).collect();
        let path = dir.join(format!("{key}.json"));
        if let Ok(text) = fs::read_to_string(&path) {
            if let Ok(rec) = serde_json::from_str::<GaussianRecord>(&text) {
                return Ok(GaussianSummary::from_record(&rec)?);
            }
        }
        let summary = GaussianSummary::fit_table(table)?;
        let cache_err = |e: std::io::Error| ScoreError::Cache(format!("{}: {e}", path.display()));
        fs::create_dir_all(dir).map_err(cache_err)?;
        let json = serde_json::to_string(&summary.to_record()).expect("record serializes");
        // Write-then-rename so concurrent readers never see a partial file.
        let tmp = path.with_extension(format!("json.{}.tmp", std::process::id()));
        fs::write(&tmp, json).map_err(cache_err)?;
        fs::rename(&tmp, &path).map_err(cache_err)?;
        Ok(summary)
    }
}
