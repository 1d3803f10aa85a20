use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use distscore::wasserstein::{w2_empirical_1d, w2_gaussian, EmpiricalScalar};
use distscore::GaussianSummary;

fn empirical(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut group = c.benchmark_group("w2_empirical_1d");
    for n in [1_000, 10_000, 100_000] {
        let a = EmpiricalScalar::new((0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let b = EmpiricalScalar::new((0..n + 7).map(|_| rng.random_range(-1.0..2.0)).collect()).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &(a, b), |bench, (a, b)| {
            bench.iter(|| w2_empirical_1d(a, b))
        });
    }
    group.finish();
}

fn summary(rng: &mut ChaCha8Rng, d: usize) -> GaussianSummary {
    let x = DMatrix::from_fn(d, 2 * d, |_, _| rng.random_range(-1.0..1.0));
    let cov = &x * x.transpose() / (2 * d) as f64;
    let cov = (&cov + cov.transpose()) * 0.5;
    GaussianSummary::from_parts(DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0)), cov, 2 * d).unwrap()
}

fn gaussian(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut group = c.benchmark_group("w2_gaussian");
    group.sample_size(20);
    for d in [64, 256] {
        let a = summary(&mut rng, d);
        let b = summary(&mut rng, d);
        // The reference square root is cached after the first call, as in scoring.
        group.bench_with_input(BenchmarkId::from_parameter(d), &(a, b), |bench, (a, b)| {
            bench.iter(|| w2_gaussian(a, b).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, empirical, gaussian);
criterion_main!(benches);
