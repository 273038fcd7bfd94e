use blind_centrality::eval::{run_benchmark_with, Execution, ExperimentConfig};
use blind_centrality::proxsolve::decompose;
use blind_centrality::seed::{rng_for, Purpose};
use blind_centrality::SolverConfig;
use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

fn bench_config() -> ExperimentConfig {
    ExperimentConfig {
        k_grid: vec![20, 60],
        m: 1_000,
        trials: 4,
        ..ExperimentConfig::fig1a()
    }
}

fn trials(c: &mut Criterion) {
    let cfg = bench_config();
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter(|| run_benchmark_with(&cfg, Execution::Sequential).unwrap())
    });
    group.bench_function("parallel", |b| {
        b.iter(|| run_benchmark_with(&cfg, Execution::Parallel).unwrap())
    });
    group.finish();
}

fn solver(c: &mut Criterion) {
    let mut rng = rng_for(7, Purpose::Generic);
    let m = DMatrix::from_fn(100, 50, |_, _| StandardNormal.sample(&mut rng));
    let cfg = SolverConfig::default_for_k(50);
    c.bench_function("decompose_100x50", |b| b.iter(|| decompose(&m, &cfg).unwrap()));
}

criterion_group!(benches, trials, solver);
criterion_main!(benches);
