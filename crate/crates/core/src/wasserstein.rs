//! 2-Wasserstein distances between feature distributions.
//!
//! Scalar features use the exact distance between empirical distributions:
//! both quantile functions are step functions, so the squared distance is a
//! finite sum over the merged breakpoints `{i/n_a} ∪ {j/n_b}`. Vector
//! features are summarized as Gaussians and compared with the Fréchet form
//!
//! ```text
//! W2² = |μa − μb|² + tr(Σa + Σb − 2 (Σb^½ Σa Σb^½)^½)
//! ```
//!
//! All arithmetic is f64.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::data::{FeatureMode, FeatureTable};

/// Relative ridge added to fitted covariances.
pub const RIDGE_SCALE: f64 = 1e-10;

const SYMMETRY_TOL: f64 = 1e-10;
const EIGEN_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum W2Error {
    #[error("need at least 2 samples to fit a covariance, got {0}")]
    TooFewSamples(usize),
    #[error("input contains a non-finite value")]
    NonfiniteInput,
    #[error("symmetric eigensolver did not converge")]
    EigenFailure,
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    AsymmetricInput(f64),
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("empirical sample is empty")]
    EmptySample,
    #[error("feature mode mismatch: {0:?} vs {1:?}")]
    ModeMismatch(FeatureMode, FeatureMode),
    #[error("feature id mismatch: `{0}` vs `{1}`")]
    FeatureMismatch(String, String),
}

/// A sorted one-dimensional sample; its quantile function is the step
/// function `z ↦ values[⌈z·n⌉ − 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalScalar {
    values: Vec<f64>,
}

impl EmpiricalScalar {
    pub fn new(mut values: Vec<f64>) -> Result<Self, W2Error> {
        if values.is_empty() {
            return Err(W2Error::EmptySample);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(W2Error::NonfiniteInput);
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Exact W2 between two empirical scalar distributions.
pub fn w2_empirical_1d(a: &EmpiricalScalar, b: &EmpiricalScalar) -> f64 {
    let (xa, xb) = (&a.values, &b.values);
    let (na, nb) = (xa.len() as u128, xb.len() as u128);
    // Breakpoint i/na sits at i·nb over the common denominator na·nb.
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev = 0u128;
    let mut acc = 0.0f64;
    while i < xa.len() && j < xb.len() {
        let next_a = (i as u128 + 1) * nb;
        let next_b = (j as u128 + 1) * na;
        let next = next_a.min(next_b);
        let diff = xa[i] - xb[j];
        acc += diff * diff * (next - prev) as f64;
        prev = next;
        if next_a == next {
            i += 1;
        }
        if next_b == next {
            j += 1;
        }
    }
    (acc / (na * nb) as f64).max(0.0).sqrt()
}

/// Mean, covariance and sample count of a vector feature.
#[derive(Debug, Clone)]
pub struct GaussianSummary {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    n_samples: usize,
    sqrt_cov: OnceLock<Result<DMatrix<f64>, W2Error>>,
}

impl PartialEq for GaussianSummary {
    fn eq(&self, other: &Self) -> bool {
        self.mean == other.mean && self.cov == other.cov && self.n_samples == other.n_samples
    }
}

/// Serialized form used by the on-disk summary cache.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianRecord {
    pub dims: usize,
    pub n_samples: usize,
    pub mean: Vec<f64>,
    /// Row-major.
    pub cov: Vec<f64>,
}

impl GaussianSummary {
    /// Builds a summary from parts. The covariance must already be symmetric.
    pub fn from_parts(
        mean: DVector<f64>,
        cov: DMatrix<f64>,
        n_samples: usize,
    ) -> Result<Self, W2Error> {
        let d = mean.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(W2Error::DimMismatch(d, cov.nrows()));
        }
        if n_samples < 2 {
            return Err(W2Error::TooFewSamples(n_samples));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(W2Error::NonfiniteInput);
        }
        check_symmetric(&cov)?;
        Ok(Self { mean, cov, n_samples, sqrt_cov: OnceLock::new() })
    }

    /// Unbiased sample mean and covariance of row-major `data`, plus a ridge
    /// `ε·I` with `ε = 1e-10 · max(tr(Σ)/d, 1)`.
    pub fn fit(data: &[f64], dims: usize) -> Result<Self, W2Error> {
        if dims == 0 {
            return Err(W2Error::DimMismatch(0, 0));
        }
        let n = data.len() / dims;
        if n < 2 {
            return Err(W2Error::TooFewSamples(n));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(W2Error::NonfiniteInput);
        }
        let mut mean = DVector::zeros(dims);
        for row in data.chunks_exact(dims) {
            for (m, &v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean /= n as f64;

        let mut cov = DMatrix::zeros(dims, dims);
        let mut centered = vec![0.0; dims];
        for row in data.chunks_exact(dims) {
            for (c, (&v, m)) in centered.iter_mut().zip(row.iter().zip(mean.iter())) {
                *c = v - m;
            }
            for r in 0..dims {
                let cr = centered[r];
                for c in r..dims {
                    cov[(r, c)] += cr * centered[c];
                }
            }
        }
        let denom = (n - 1) as f64;
        for r in 0..dims {
            for c in r..dims {
                let v = cov[(r, c)] / denom;
                cov[(r, c)] = v;
                cov[(c, r)] = v;
            }
        }
        let tr: f64 = cov.trace();
        let eps = RIDGE_SCALE * (tr / dims as f64).max(1.0);
        for k in 0..dims {
            cov[(k, k)] += eps;
        }
        Self::from_parts(mean, cov, n)
    }

    pub fn fit_table(table: &FeatureTable) -> Result<Self, W2Error> {
        Self::fit(&table.values_f64(), table.dims())
    }

    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    /// `Σ^½`, computed once per summary.
    pub fn sqrt_cov(&self) -> Result<&DMatrix<f64>, W2Error> {
        self.sqrt_cov
            .get_or_init(|| sqrtm_psd(&self.cov))
            .as_ref()
            .map_err(Clone::clone)
    }

    pub fn to_record(&self) -> GaussianRecord {
        GaussianRecord {
            dims: self.dims(),
            n_samples: self.n_samples,
            mean: self.mean.iter().copied().collect(),
            cov: self.cov.transpose().iter().copied().collect(),
        }
    }

    pub fn from_record(rec: &GaussianRecord) -> Result<Self, W2Error> {
        let d = rec.dims;
        if rec.mean.len() != d || rec.cov.len() != d * d {
            return Err(W2Error::DimMismatch(d, rec.mean.len()));
        }
        Self::from_parts(
            DVector::from_column_slice(&rec.mean),
            DMatrix::from_row_slice(d, d, &rec.cov),
            rec.n_samples,
        )
    }
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<(), W2Error> {
    if m.nrows() != m.ncols() {
        return Err(W2Error::DimMismatch(m.nrows(), m.ncols()));
    }
    let scale = m.amax().max(1.0);
    let mut worst = 0.0f64;
    for r in 0..m.nrows() {
        for c in r + 1..m.ncols() {
            worst = worst.max((m[(r, c)] - m[(c, r)]).abs());
        }
    }
    if worst > SYMMETRY_TOL * scale {
        Err(W2Error::AsymmetricInput(worst))
    } else {
        Ok(())
    }
}

fn symmetrized(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Principal square root of a symmetric positive semidefinite matrix via
/// the symmetric eigendecomposition `V·diag(√λ⁺)·Vᵀ`. Negative eigenvalues
/// from round-off are clamped to zero.
pub fn sqrtm_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>, W2Error> {
    check_symmetric(m)?;
    if m.iter().any(|v| !v.is_finite()) {
        return Err(W2Error::NonfiniteInput);
    }
    let eig = SymmetricEigen::try_new(symmetrized(m), f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or(W2Error::EigenFailure)?;
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    let scaled = v * DMatrix::from_diagonal(&roots);
    Ok(symmetrized(&(scaled * v.transpose())))
}

/// Fréchet (Gaussian) 2-Wasserstein distance.
pub fn w2_gaussian(a: &GaussianSummary, b: &GaussianSummary) -> Result<f64, W2Error> {
    if a.dims() != b.dims() {
        return Err(W2Error::DimMismatch(a.dims(), b.dims()));
    }
    if a == b {
        return Ok(0.0);
    }
    let mean_term = (&a.mean - &b.mean).norm_squared();
    let root_b = b.sqrt_cov()?;
    let inner = symmetrized(&(root_b * &a.cov * root_b));
    let cross = sqrtm_psd(&inner)?.trace();
    let sq = mean_term + a.cov.trace() + b.cov.trace() - 2.0 * cross;
    Ok(sq.max(0.0).sqrt())
}

/// A feature distribution ready for distance computation.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureDistribution {
    Scalar(EmpiricalScalar),
    Gaussian(GaussianSummary),
}

impl FeatureDistribution {
    pub fn from_table(table: &FeatureTable) -> Result<Self, W2Error> {
        match table.mode() {
            FeatureMode::Scalar => Ok(Self::Scalar(EmpiricalScalar::new(table.values_f64())?)),
            FeatureMode::Vector => Ok(Self::Gaussian(GaussianSummary::fit_table(table)?)),
        }
    }

    pub fn mode(&self) -> FeatureMode {
        match self {
            Self::Scalar(_) => FeatureMode::Scalar,
            Self::Gaussian(_) => FeatureMode::Vector,
        }
    }

    pub fn w2(&self, other: &Self) -> Result<f64, W2Error> {
        match (self, other) {
            (Self::Scalar(a), Self::Scalar(b)) => Ok(w2_empirical_1d(a, b)),
            (Self::Gaussian(a), Self::Gaussian(b)) => w2_gaussian(a, b),
            _ => Err(W2Error::ModeMismatch(self.mode(), other.mode())),
        }
    }
}

/// Dispatches on the table mode: exact empirical W2 for scalar features,
/// Gaussian W2 for vector features.
pub fn w2_auto(a: &FeatureTable, b: &FeatureTable) -> Result<f64, W2Error> {
    if a.mode() != b.mode() {
        return Err(W2Error::ModeMismatch(a.mode(), b.mode()));
    }
    if a.feature_id() != b.feature_id() {
        return Err(W2Error::FeatureMismatch(a.feature_id().into(), b.feature_id().into()));
    }
    FeatureDistribution::from_table(a)?.w2(&FeatureDistribution::from_table(b)?)
}
