//! Systems × metrics tables and the rank-correlation grid.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{spearman_permutation, AnalysisError, DomainData, MIN_CORRELATION_LEN};
use crate::data::ScoreReport;

/// Label used for the single group when a table has no domain column.
pub const ALL_DOMAINS: &str = "all";
pub const OVERALL_COLUMN: &str = "TTSDS2";

/// One row per system (per domain when a domain column is present); cells
/// may be missing.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingsTable {
    pub systems: Vec<String>,
    pub domains: Option<Vec<String>>,
    pub metrics: Vec<String>,
    values: Vec<Vec<Option<f64>>>,
}

impl RatingsTable {
    pub fn new(
        systems: Vec<String>,
        domains: Option<Vec<String>>,
        metrics: Vec<String>,
        values: Vec<Vec<Option<f64>>>,
    ) -> Result<Self, AnalysisError> {
        if values.len() != systems.len()
            || domains.as_ref().is_some_and(|d| d.len() != systems.len())
            || values.iter().any(|r| r.len() != metrics.len())
        {
            return Err(AnalysisError::RaggedRows);
        }
        let t = Self { systems, domains, metrics, values };
        let mut seen = HashMap::new();
        for i in 0..t.systems.len() {
            if seen.insert(t.key(i), i).is_some() {
                return Err(AnalysisError::DuplicateSystem(t.systems[i].clone()));
            }
        }
        Ok(t)
    }

    /// Reads CSV: header row of metric names, first column the system id,
    /// and an optional second column headed `domain`. Empty cells are missing.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, AnalysisError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers().map_err(|e| AnalysisError::Csv(e.to_string()))?.clone();
        if header.len() < 2 {
            return Err(AnalysisError::Csv("need a system column and at least one metric".into()));
        }
        let has_domain = header.get(1).is_some_and(|h| h.eq_ignore_ascii_case("domain"));
        let first_metric = if has_domain { 2 } else { 1 };
        let metrics: Vec<String> = header.iter().skip(first_metric).map(str::to_owned).collect();

        let (mut systems, mut domains, mut values) = (Vec::new(), Vec::new(), Vec::new());
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| AnalysisError::Csv(e.to_string()))?;
            systems.push(rec[0].to_owned());
            if has_domain {
                domains.push(rec[1].to_owned());
            }
            let row = rec
                .iter()
                .skip(first_metric)
                .map(|cell| {
                    if cell.is_empty() {
                        Ok(None)
                    } else {
                        cell.parse::<f64>().map(Some).map_err(|e| {
                            AnalysisError::Csv(format!("row {}: `{cell}`: {e}", i + 2))
                        })
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            values.push(row);
        }
        Self::new(systems, has_domain.then_some(domains), metrics, values)
    }

    pub fn read_path(path: impl AsRef<Path>) -> Result<Self, AnalysisError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)
            .map_err(|e| AnalysisError::Csv(format!("{}: {e}", path.display())))?;
        Self::read_csv(file)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["system".to_owned()];
        if self.domains.is_some() {
            header.push("domain".into());
        }
        header.extend(self.metrics.iter().cloned());
        w.write_record(&header).expect("in-memory csv");
        for i in 0..self.systems.len() {
            let mut rec = vec![self.systems[i].clone()];
            if let Some(d) = &self.domains {
                rec.push(d[i].clone());
            }
            rec.extend(self.values[i].iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
            w.write_record(&rec).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    /// Overall and per-factor scores of each report, one row per dataset.
    pub fn from_reports(reports: &[ScoreReport]) -> Result<Self, AnalysisError> {
        let mut metrics = vec![OVERALL_COLUMN.to_owned()];
        for r in reports {
            for f in &r.per_factor {
                if !metrics.contains(&f.name) {
                    metrics.push(f.name.clone());
                }
            }
        }
        let values = reports
            .iter()
            .map(|r| {
                metrics
                    .iter()
                    .map(|m| {
                        if m == OVERALL_COLUMN {
                            Some(r.overall)
                        } else {
                            r.per_factor.iter().find(|f| &f.name == m).map(|f| f.score)
                        }
                    })
                    .collect()
            })
            .collect();
        Self::new(reports.iter().map(|r| r.dataset_id.clone()).collect(), None, metrics, values)
    }

    pub fn len(&self) -> usize {
        self.systems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.systems.is_empty()
    }

    pub fn metric_index(&self, name: &str) -> Result<usize, AnalysisError> {
        self.metrics
            .iter()
            .position(|m| m == name)
            .ok_or_else(|| AnalysisError::UnknownMetric(name.to_owned()))
    }

    pub fn value(&self, row: usize, col: usize) -> Option<f64> {
        self.values[row][col]
    }

    fn domain(&self, row: usize) -> &str {
        self.domains.as_ref().map_or(ALL_DOMAINS, |d| d[row].as_str())
    }

    fn key(&self, row: usize) -> (String, String) {
        (self.domain(row).to_owned(), self.systems[row].clone())
    }

    /// Domain names in order of first appearance.
    pub fn domain_names(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for i in 0..self.len() {
            if !out.iter().any(|d| d == self.domain(i)) {
                out.push(self.domain(i).to_owned());
            }
        }
        out
    }

    /// Splits into per-domain regression inputs.
    pub fn domain_data(&self, factor_cols: &[&str], target_col: &str) -> Result<Vec<DomainData>, AnalysisError> {
        let idx: Vec<usize> = factor_cols.iter().map(|c| self.metric_index(c)).collect::<Result<_, _>>()?;
        let t = self.metric_index(target_col)?;
        self.domain_names()
            .into_iter()
            .map(|name| {
                let (mut factors, mut target) = (Vec::new(), Vec::new());
                for row in (0..self.len()).filter(|&r| self.domain(r) == name) {
                    let cell = |c: usize| {
                        self.value(row, c).ok_or_else(|| AnalysisError::MissingCell {
                            system: self.systems[row].clone(),
                            metric: self.metrics[c].clone(),
                        })
                    };
                    factors.push(idx.iter().map(|&c| cell(c)).collect::<Result<Vec<_>, _>>()?);
                    target.push(cell(t)?);
                }
                Ok(DomainData { name, factors, target })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCell {
    pub domain: String,
    pub score_metric: String,
    pub rating_metric: String,
    pub n: usize,
    pub rho: f64,
    pub p_value: f64,
    /// `p < 0.05`.
    pub significant: bool,
}

pub const SIGNIFICANCE: f64 = 0.05;

/// Spearman ρ and permutation p-value for every (score metric, rating
/// metric) pair within each rating domain. Rows are matched on system id,
/// and also on domain when the score table has a domain column.
pub fn rank_table(
    scores: &RatingsTable,
    ratings: &RatingsTable,
    n_permutations: usize,
    seed: u64,
) -> Result<Vec<CorrelationCell>, AnalysisError> {
    let score_index: HashMap<(String, String), usize> = (0..scores.len())
        .map(|i| {
            let domain = if scores.domains.is_some() { scores.domain(i) } else { ALL_DOMAINS };
            ((domain.to_owned(), scores.systems[i].clone()), i)
        })
        .collect();

    let mut cells = Vec::new();
    for domain in ratings.domain_names() {
        let pairs: Vec<(usize, usize)> = (0..ratings.len())
            .filter(|&r| ratings.domain(r) == domain)
            .filter_map(|r| {
                let d = if scores.domains.is_some() { domain.as_str() } else { ALL_DOMAINS };
                score_index.get(&(d.to_owned(), ratings.systems[r].clone())).map(|&s| (s, r))
            })
            .collect();
        if pairs.is_empty() {
            return Err(AnalysisError::IdMismatch(domain));
        }
        if pairs.len() < MIN_CORRELATION_LEN {
            return Err(AnalysisError::TooFewRows { needed: MIN_CORRELATION_LEN, got: pairs.len() });
        }
        for (sc, score_metric) in scores.metrics.iter().enumerate() {
            for (rc, rating_metric) in ratings.metrics.iter().enumerate() {
                let mut x = Vec::with_capacity(pairs.len());
                let mut y = Vec::with_capacity(pairs.len());
                for &(s, r) in &pairs {
                    let missing = |t: &RatingsTable, row: usize, col: usize| AnalysisError::MissingCell {
                        system: t.systems[row].clone(),
                        metric: t.metrics[col].clone(),
                    };
                    x.push(scores.value(s, sc).ok_or_else(|| missing(scores, s, sc))?);
                    y.push(ratings.value(r, rc).ok_or_else(|| missing(ratings, r, rc))?);
                }
                let res = spearman_permutation(&x, &y, n_permutations, seed)?;
                cells.push(CorrelationCell {
                    domain: domain.clone(),
                    score_metric: score_metric.clone(),
                    rating_metric: rating_metric.clone(),
                    n: pairs.len(),
                    rho: res.rho,
                    p_value: res.p_value,
                    significant: res.p_value < SIGNIFICANCE,
                });
            }
        }
    }
    Ok(cells)
}
