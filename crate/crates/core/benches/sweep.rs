use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hidim_core::classifiers::ClassifierSpec;
use hidim_core::exec::Execution;
use hidim_core::paramsets::{sample_sphere_uniform, SphereTheta};
use hidim_core::rng::rng_for;
use hidim_core::sweep::{estimate_error, run_sweep, EstimateConfig, Family, NRule, SweepPlan};

fn modes() -> Vec<(&'static str, Execution)> {
    let mut m = vec![("sequential", Execution::Sequential)];
    if Execution::parallel_available() {
        m.push(("parallel", Execution::Parallel));
    }
    m
}

fn bench_estimate(c: &mut Criterion) {
    let mut group = c.benchmark_group("estimate_error");
    group.sample_size(10);
    let d = 1024;
    let h = sample_sphere_uniform(d, &mut rng_for(1, &[])).unwrap();
    let theta = SphereTheta::new(h, 4.0).unwrap().to_model();
    for (name, exec) in modes() {
        let mut cfg = EstimateConfig::new(512, 256, 2);
        cfg.exec = exec;
        group.bench_with_input(BenchmarkId::new(name, d), &cfg, |b, cfg| {
            b.iter(|| black_box(estimate_error(&ClassifierSpec::MatchedFilter, &theta, 6, cfg).unwrap()))
        });
    }
    group.finish();
}

fn bench_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_sweep");
    group.sample_size(10);
    let mut plan = SweepPlan::new(
        vec![64, 256, 1024],
        NRule::Power { gamma: 0.25 },
        Family::Sphere { alpha: 4.0 },
        vec![ClassifierSpec::MatchedFilter, ClassifierSpec::PluginKnown, ClassifierSpec::CoinFlip],
        3,
    );
    plan.replicates_per_theta = 64;
    for (name, exec) in modes() {
        group.bench_function(name, |b| b.iter(|| black_box(run_sweep(&plan, exec).unwrap())));
    }
    group.finish();
}

criterion_group!(benches, bench_estimate, bench_sweep);
criterion_main!(benches);
