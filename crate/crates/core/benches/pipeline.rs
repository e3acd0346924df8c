//! Parallel vs single-threaded cost of the hot paths.
//!
//! With the `parallel` feature each benchmark runs on the global rayon pool
//! and on a one-thread pool. Build with `--no-default-features` for the
//! plain sequential code path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pdm_core::dataset::Dataset;
use pdm_core::lstm::{loss_and_gradient, Example, LstmDims, LstmModel};
use pdm_core::svm::{svm_train, KernelSpec, SvmConfig};
use pdm_core::synth::{generate_dataset, DatasetConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn data_config() -> DatasetConfig {
    DatasetConfig::default()
}

#[cfg(feature = "parallel")]
fn modes() -> Vec<(&'static str, Option<rayon::ThreadPool>)> {
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    vec![("rayon", None), ("one-thread", Some(one))]
}

#[cfg(not(feature = "parallel"))]
fn modes() -> Vec<(&'static str, Option<()>)> {
    vec![("sequential", None)]
}

#[cfg(feature = "parallel")]
fn run<T: Send>(pool: &Option<rayon::ThreadPool>, f: impl FnOnce() -> T + Send) -> T {
    match pool {
        Some(p) => p.install(f),
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run<T>(_: &Option<()>, f: impl FnOnce() -> T) -> T {
    f()
}

fn generation(c: &mut Criterion) {
    let cfg = data_config();
    let mut g = c.benchmark_group("generate_8_runs");
    g.sample_size(10);
    for (name, pool) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run(&pool, || generate_dataset(8, &cfg, 1).unwrap()))
        });
    }
    g.finish();
}

fn features(c: &mut Criterion) {
    let cfg = data_config();
    let gen = generate_dataset(8, &cfg, 1).unwrap();
    let machines: Vec<_> = gen.runs.iter().map(|r| r.series.clone()).collect();
    let mut g = c.benchmark_group("feature_extraction");
    g.sample_size(20);
    for (name, pool) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run(&pool, || Dataset::build(&machines, &cfg.windowing, &gen.truth, cfg.horizon_ms()).unwrap()))
        });
    }
    g.finish();
}

fn svm(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let data: Vec<(Vec<f64>, i8)> = (0..400)
        .map(|i| {
            let y = if i % 2 == 0 { 1 } else { -1 };
            let x = (0..12).map(|_| rng.random_range(-1.0..1.0) + 0.3 * f64::from(y)).collect();
            (x, y)
        })
        .collect();
    let cfg = SvmConfig::default();
    let mut g = c.benchmark_group("svm_train_400");
    g.sample_size(10);
    for (name, pool) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run(&pool, || svm_train(&data, &cfg, KernelSpec::Rbf { gamma: 1.0 / 12.0 }).unwrap()))
        });
    }
    g.finish();
}

fn lstm_gradient(c: &mut Criterion) {
    let dims = LstmDims {
        input_dim: 12,
        hidden_dim: 8,
    };
    let model = LstmModel::init(dims, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let data: Vec<Example> = (0..800)
        .map(|_| {
            let seq = (0..8).map(|_| (0..12).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            (seq, rng.random_range(0.0..1.0))
        })
        .collect();
    let mut g = c.benchmark_group("lstm_gradient_800x8");
    g.sample_size(20);
    for (name, pool) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run(&pool, || loss_and_gradient(&model, &data).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, generation, features, svm, lstm_gradient);
criterion_main!(benches);
