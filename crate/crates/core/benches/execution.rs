use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use glsfield::certify::EntropyModel;
use glsfield::entropy::{Metric, MetricMeasureSpace};
use glsfield::exec::Execution;
use glsfield::mc::{confidence_region, ParametricIntegralProblem, RegionOptions};
use glsfield::numeric::linear_grid;
use glsfield::process::{empirical_mixed_norm, Kernel, ProcessModel};
use glsfield::psi::PsiFunction;
use glsfield::ri::{RiKind, RiSpace};
use glsfield::rng::stream_rng;
use rand::Rng;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn mixed_norm(c: &mut Criterion) {
    let coords: Vec<f64> = (1..=64).map(|i| i as f64 / 64.0).collect();
    let model = ProcessModel::gaussian_kernel(&coords, Kernel::Brownian, 1.0).unwrap();
    let space = RiSpace::new(RiKind::Lp(2.0), vec![1.0 / 64.0; 64]).unwrap();
    let psi = PsiFunction::power(2.0).unwrap();
    let mut group = c.benchmark_group("mixed_norm");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| empirical_mixed_norm(&model, &space, &psi, 20_000, 1, exec).unwrap())
        });
    }
    group.finish();
}

fn empirical_entropy(c: &mut Criterion) {
    let mut rng = stream_rng(3, 0);
    let n = 48;
    let coords: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
    let space = MetricMeasureSpace::from_points(coords, vec![1.0 / n as f64; n], Metric::Euclidean).unwrap();
    let mut group = c.benchmark_group("empirical_entropy");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| EntropyModel::empirical_split(&space, &space, exec).unwrap())
        });
    }
    group.finish();
}

fn confidence(c: &mut Criterion) {
    let problem = ParametricIntegralProblem::cos_tx(linear_grid(0.0, 2.0 * std::f64::consts::PI, 33)).unwrap();
    let space = RiSpace::new(RiKind::Lp(2.0), vec![1.0 / 33.0; 33]).unwrap();
    let mut group = c.benchmark_group("confidence_region");
    group.sample_size(10);
    for (name, exec) in MODES {
        let opts = RegionOptions { limit_replicas: 20_000, exec, ..RegionOptions::default() };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| confidence_region(&problem, 10_000, &space, 0.05, 7, None, &opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, mixed_norm, empirical_entropy, confidence);
criterion_main!(benches);
