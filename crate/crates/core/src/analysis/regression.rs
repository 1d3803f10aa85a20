//! Least-squares factor weights and leave-one-domain-out evaluation.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{spearman, AnalysisError};

pub const MIN_REGRESSION_ROWS: usize = 5;

/// Ridge relative to the mean column variance, always applied.
const RIDGE: f64 = 1e-12;
/// Ridge used instead when the centered design is (near) rank deficient.
const FALLBACK_RIDGE: f64 = 1e-8;
/// Eigenvalue ratio of the centered Gram matrix below which columns count
/// as collinear.
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl WeightVector {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(row).map(|(w, x)| w * x).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightFit {
    pub weights: WeightVector,
    /// Columns were collinear; the fallback ridge was applied.
    pub rank_deficient: bool,
}

/// Ordinary least squares with an intercept. The intercept is not
/// penalized: columns are centered and the ridge acts on the slopes only.
pub fn fit_weights_ols(rows: &[Vec<f64>], target: &[f64]) -> Result<WeightFit, AnalysisError> {
    let n = rows.len();
    if n != target.len() {
        return Err(AnalysisError::LengthMismatch(n, target.len()));
    }
    if n < MIN_REGRESSION_ROWS {
        return Err(AnalysisError::TooFewRows { needed: MIN_REGRESSION_ROWS, got: n });
    }
    let k = rows[0].len();
    if k == 0 || rows.iter().any(|r| r.len() != k) {
        return Err(AnalysisError::RaggedRows);
    }
    if rows.iter().flatten().chain(target).any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFinite);
    }

    let x = DMatrix::from_fn(n, k, |i, j| rows[i][j]);
    let y = DVector::from_column_slice(target);
    let x_mean: DVector<f64> = DVector::from_fn(k, |j, _| x.column(j).mean());
    let y_mean = y.mean();
    let mut xc = x.clone();
    for j in 0..k {
        xc.column_mut(j).add_scalar_mut(-x_mean[j]);
    }
    let yc = y.add_scalar(-y_mean);

    let gram = xc.transpose() * &xc;
    let scale = (gram.trace() / k as f64).max(f64::MIN_POSITIVE);
    let eig = SymmetricEigen::new(gram.clone()).eigenvalues;
    let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let rank_deficient = hi <= 0.0 || lo <= RANK_TOL * hi;
    let lambda = if rank_deficient { FALLBACK_RIDGE } else { RIDGE } * scale;

    let mut lhs = gram;
    for j in 0..k {
        lhs[(j, j)] += lambda;
    }
    let rhs = xc.transpose() * yc;
    let w = lhs
        .cholesky()
        .ok_or(AnalysisError::Singular)?
        .solve(&rhs);
    let intercept = y_mean - w.dot(&x_mean);
    Ok(WeightFit {
        weights: WeightVector { weights: w.iter().copied().collect(), intercept },
        rank_deficient,
    })
}

/// Factor scores and the subjective target for one domain.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainData {
    pub name: String,
    pub factors: Vec<Vec<f64>>,
    pub target: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoocvFold {
    pub held_out: String,
    /// Spearman of the unweighted factor mean against the target.
    pub baseline_rho: f64,
    /// Spearman of the regression prediction against the target.
    pub learned_rho: f64,
    pub weights: WeightVector,
    pub rank_deficient: bool,
}

/// For every domain: fit weights on all other domains pooled (one shared
/// intercept), predict the held-out domain, and compare rank correlations.
pub fn loocv_domains(domains: &[DomainData]) -> Result<Vec<LoocvFold>, AnalysisError> {
    if domains.len() < 2 {
        return Err(AnalysisError::TooFewDomains(domains.len()));
    }
    domains
        .iter()
        .enumerate()
        .map(|(held, test)| {
            let (mut rows, mut target) = (Vec::new(), Vec::new());
            for (i, d) in domains.iter().enumerate() {
                if i != held {
                    rows.extend(d.factors.iter().cloned());
                    target.extend_from_slice(&d.target);
                }
            }
            let fit = fit_weights_ols(&rows, &target)?;
            let predicted: Vec<f64> = test.factors.iter().map(|r| fit.weights.predict(r)).collect();
            let mean: Vec<f64> = test
                .factors
                .iter()
                .map(|r| r.iter().sum::<f64>() / r.len() as f64)
                .collect();
            Ok(LoocvFold {
                held_out: test.name.clone(),
                baseline_rho: spearman(&mean, &test.target)?,
                learned_rho: spearman(&predicted, &test.target)?,
                weights: fit.weights,
                rank_deficient: fit.rank_deficient,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_rows(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|_| (0..4).map(|_| rng.random_range(60.0..100.0)).collect()).collect()
    }

    #[test]
    fn recovers_single_factor_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows = random_rows(&mut rng, 20);
        let y: Vec<f64> = rows.iter().map(|r| 0.5 * r[1] + 0.1).collect();
        let fit = fit_weights_ols(&rows, &y).unwrap();
        assert!(!fit.rank_deficient);
        for (w, e) in fit.weights.weights.iter().zip([0.0, 0.5, 0.0, 0.0]) {
            assert!((w - e).abs() < 1e-8, "{w} vs {e}");
        }
        assert!((fit.weights.intercept - 0.1).abs() < 1e-8);
    }

    #[test]
    fn recovers_simple_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rows = random_rows(&mut rng, 12);
        let y: Vec<f64> = rows.iter().map(|r| r.iter().sum::<f64>() / 4.0).collect();
        let fit = fit_weights_ols(&rows, &y).unwrap();
        for w in &fit.weights.weights {
            assert!((w - 0.25).abs() < 1e-8);
        }
    }

    #[test]
    fn residuals_orthogonal_to_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows = random_rows(&mut rng, 30);
        let y: Vec<f64> = rows.iter().map(|r| r[0] * 0.03 - r[2] * 0.01 + rng.random_range(-1.0..1.0)).collect();
        let fit = fit_weights_ols(&rows, &y).unwrap();
        let resid: Vec<f64> = rows.iter().zip(&y).map(|(r, t)| t - fit.weights.predict(r)).collect();
        assert!(resid.iter().sum::<f64>().abs() < 1e-8);
        for j in 0..4 {
            let dot: f64 = rows.iter().zip(&resid).map(|(r, e)| r[j] * e).sum();
            assert!(dot.abs() < 1e-8, "column {j}: {dot}");
        }
    }

    #[test]
    fn collinear_columns_flagged() {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, 2.0 * i as f64, 1.0, (i * i) as f64]).collect();
        let y: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let fit = fit_weights_ols(&rows, &y).unwrap();
        assert!(fit.rank_deficient);
        assert!(fit.weights.weights.iter().all(|w| w.is_finite()));
    }

    #[test]
    fn too_few_rows() {
        let rows = vec![vec![1.0; 4]; 3];
        assert!(matches!(fit_weights_ols(&rows, &[1.0, 2.0, 3.0]), Err(AnalysisError::TooFewRows { .. })));
    }

    fn domain(name: &str, rng: &mut ChaCha8Rng, n: usize, law: impl Fn(&[f64]) -> f64) -> DomainData {
        let factors = random_rows(rng, n);
        let target = factors.iter().map(|r| law(r)).collect();
        DomainData { name: name.into(), factors, target }
    }

    #[test]
    fn loocv_global_law_recovered_in_every_fold() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let law = |r: &[f64]| 0.02 * r[0] + 0.05 * r[1] - 0.01 * r[2] + 0.03 * r[3] + 0.4;
        let domains: Vec<_> = ["Clean", "Noisy", "Wild", "Kids"]
            .iter()
            .map(|n| domain(n, &mut rng, 20, law))
            .collect();
        let folds = loocv_domains(&domains).unwrap();
        assert_eq!(folds.len(), 4);
        for f in &folds {
            assert!((f.learned_rho - 1.0).abs() < 1e-12, "{}: {}", f.held_out, f.learned_rho);
            for (w, w0) in f.weights.weights.iter().zip(&folds[0].weights.weights) {
                assert!((w - w0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn loocv_needs_two_domains() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = domain("only", &mut rng, 10, |r| r[0]);
        assert!(matches!(loocv_domains(&[d]), Err(AnalysisError::TooFewDomains(1))));
    }
}
