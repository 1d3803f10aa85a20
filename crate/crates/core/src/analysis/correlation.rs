use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::AnalysisError;

pub const MIN_CORRELATION_LEN: usize = 3;

fn check_pair(x: &[f64], y: &[f64]) -> Result<(), AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < MIN_CORRELATION_LEN {
        return Err(AnalysisError::TooFewRows { needed: MIN_CORRELATION_LEN, got: x.len() });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFinite);
    }
    Ok(())
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && x[order[j]] == x[order[i]] {
            j += 1;
        }
        // Positions i..j hold equal values: ranks i+1..=j, mean (i+1+j)/2.
        let rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

fn product_moment(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AnalysisError::Degenerate);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    check_pair(x, y)?;
    product_moment(x, y)
}

/// Spearman rank correlation: Pearson correlation of average-tied ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    check_pair(x, y)?;
    product_moment(&average_ranks(x), &average_ranks(y))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermutationResult {
    pub rho: f64,
    pub p_value: f64,
}

/// Spearman ρ with a two-sided permutation p-value,
/// `(1 + #{|ρ_perm| ≥ |ρ|}) / (1 + n_permutations)`. Permutation `i` draws
/// from ChaCha stream `i` of `seed`, so the result is independent of
/// scheduling.
pub fn spearman_permutation(
    x: &[f64],
    y: &[f64],
    n_permutations: usize,
    seed: u64,
) -> Result<PermutationResult, AnalysisError> {
    check_pair(x, y)?;
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let rho = product_moment(&rx, &ry)?;
    let bar = rho.abs() - 1e-12;
    let hits: usize = (0..n_permutations as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let mut perm = ry.clone();
            perm.shuffle(&mut rng);
            usize::from(product_moment(&rx, &perm).map(|r| r.abs() >= bar).unwrap_or(false))
        })
        .sum();
    Ok(PermutationResult { rho, p_value: (hits + 1) as f64 / (n_permutations + 1) as f64 })
}
