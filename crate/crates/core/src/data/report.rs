use std::io::Write;

use serde::{Deserialize, Serialize};

use super::DataError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub feature_id: String,
    pub factor: String,
    pub w2_real: f64,
    pub w2_noise_min: f64,
    pub noise_id_argmin: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorScore {
    pub name: String,
    pub score: f64,
}

/// Per-feature distances and scores, factor means and the overall score for
/// one synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub dataset_id: String,
    pub per_feature: Vec<FeatureScore>,
    pub per_factor: Vec<FactorScore>,
    pub overall: f64,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    level: &'a str,
    name: &'a str,
    w2_real: Option<f64>,
    w2_noise: Option<f64>,
    score: f64,
}

impl ScoreReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DataError> {
        serde_json::from_str(text).map_err(|e| DataError::InvalidReport(e.to_string()))
    }

    /// CSV with columns `level,name,w2_real,w2_noise,score`; distance cells
    /// are empty on factor and overall rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), DataError> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| DataError::InvalidReport(e.to_string());
        for f in &self.per_feature {
            w.serialize(CsvRow {
                level: "feature",
                name: &f.feature_id,
                w2_real: Some(f.w2_real),
                w2_noise: Some(f.w2_noise_min),
                score: f.score,
            })
            .map_err(csv_err)?;
        }
        for f in &self.per_factor {
            w.serialize(CsvRow { level: "factor", name: &f.name, w2_real: None, w2_noise: None, score: f.score })
                .map_err(csv_err)?;
        }
        w.serialize(CsvRow {
            level: "overall",
            name: &self.dataset_id,
            w2_real: None,
            w2_noise: None,
            score: self.overall,
        })
        .map_err(csv_err)?;
        w.flush().map_err(|e| DataError::InvalidReport(e.to_string()))
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory csv");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> ScoreReport {
        ScoreReport {
            dataset_id: "sys".into(),
            per_feature: vec![FeatureScore {
                feature_id: "f0".into(),
                factor: "Prosody".into(),
                w2_real: 0.1 + 0.2,
                w2_noise_min: 140.25,
                noise_id_argmin: "zeros".into(),
                score: 99.78655,
            }],
            per_factor: vec![FactorScore { name: "Prosody".into(), score: 99.78655 }],
            overall: 99.78655,
        }
    }

    #[test]
    fn csv_columns() {
        let csv = report().to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "level,name,w2_real,w2_noise,score");
        assert_eq!(lines[1], "feature,f0,0.30000000000000004,140.25,99.78655");
        assert_eq!(lines[2], "factor,Prosody,,,99.78655");
        assert_eq!(lines[3], "overall,sys,,,99.78655");
    }

    #[test]
    fn json_parses_back_exactly() {
        let r = report();
        assert_eq!(ScoreReport::from_json(&r.to_json()).unwrap(), r);
    }
}
