//! Sequential versus data-parallel execution of the hot loops.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use risloc::bcrlb::{CellModel, FisherQ, PosteriorGrid};
use risloc::exec::Execution;
use risloc::experiments::presets::preset;
use risloc::policy::{batch_gradient, evaluate, test_keys, FeatureMode, LossMode, PolicyConfig, PolicyParams};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn bench_gradient(c: &mut Criterion) {
    let s = preset("siso-1ris").unwrap();
    let p = PolicyParams::new(PolicyConfig::desk(FeatureMode::Pilot), &s, 1).unwrap();
    let keys = test_keys(1, 100);
    let mut g = c.benchmark_group("batch_gradient");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(batch_gradient(&p, &s, &keys, 6, &LossMode::Final, 25, exec).unwrap()))
        });
    }
    g.finish();
}

fn bench_evaluate(c: &mut Criterion) {
    let s = preset("siso-1ris").unwrap();
    let p = PolicyParams::new(PolicyConfig::desk(FeatureMode::Pilot), &s, 1).unwrap();
    let keys = test_keys(2, 200);
    let mut g = c.benchmark_group("evaluate");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(evaluate(&p, &s, &keys, 6, 25, exec).unwrap()))
        });
    }
    g.finish();
}

fn bench_fisher(c: &mut Criterion) {
    let s = preset("siso-1ris").unwrap();
    let model = CellModel::new(&s, 60, 140, Execution::Parallel).unwrap();
    let grid = PosteriorGrid::uniform(&model);
    let mut g = c.benchmark_group("fisher_accumulate");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(FisherQ::accumulate(&grid, &model, exec).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, bench_gradient, bench_evaluate, bench_fisher);
criterion_main!(benches);
