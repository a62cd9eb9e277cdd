use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use claycalc::dae::{eval, forward_difference, simulate, JacobianEngine, JacobianMode, SolverConfig};
use claycalc_bench::feed_step;

fn residual(c: &mut Criterion) {
    let mut g = c.benchmark_group("residual");
    for nz in [5, 10, 20] {
        let (plant, z) = feed_step(nz);
        g.bench_with_input(BenchmarkId::from_parameter(nz), &z, |b, z| b.iter(|| eval(&plant, black_box(z))));
    }
    g.finish();
}

fn jacobian(c: &mut Criterion) {
    let mut g = c.benchmark_group("jacobian");
    for nz in [5, 10, 20] {
        let (plant, z) = feed_step(nz);
        let engine = JacobianEngine::new(&plant, &z, JacobianMode::Analytic);
        g.bench_with_input(BenchmarkId::new("colored_ad", nz), &z, |b, z| {
            b.iter(|| engine.analytic(&plant, black_box(z)))
        });
        g.bench_with_input(BenchmarkId::new("forward_difference", nz), &z, |b, z| {
            b.iter(|| forward_difference(&plant, black_box(z)))
        });
    }
    g.finish();
}

fn feed_step_run(c: &mut Criterion) {
    let mut g = c.benchmark_group("feed_step_120s");
    g.sample_size(10);
    let (plant, z0) = feed_step(10);
    for mode in [JacobianMode::Analytic, JacobianMode::FiniteDifference] {
        let cfg = SolverConfig { jacobian: mode, ..SolverConfig::default() };
        g.bench_function(format!("{mode}"), |b| {
            b.iter(|| {
                let mut p = plant.clone();
                simulate(&mut p, z0.clone(), 0.0, 120.0, &[120.0], &cfg).unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, residual, jacobian, feed_step_run);
criterion_main!(benches);
