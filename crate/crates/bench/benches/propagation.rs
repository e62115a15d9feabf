use std::hint::black_box;

use adiabound::{
    build_full, ground_state, propagate, propagate_reduced, GroverInstance, PropagatorConfig, Schedule,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn reduced_vs_full(c: &mut Criterion) {
    let mut group = c.benchmark_group("grover_linear_tf10");
    let cfg = PropagatorConfig::default().unchecked().with_samples(20);
    let schedule = Schedule::linear(10.0).unwrap();
    for n in [16u64, 256, 1024] {
        let g = GroverInstance::new(n, 1).unwrap();
        group.bench_with_input(BenchmarkId::new("reduced", n), &g, |b, g| {
            b.iter(|| propagate_reduced(black_box(g), &schedule, &cfg).unwrap())
        });
        let ih = build_full(&g).unwrap();
        group.bench_with_input(BenchmarkId::new("full_structured", n), &ih, |b, ih| {
            b.iter(|| propagate(black_box(ih), &schedule, &cfg).unwrap())
        });
    }
    let g = GroverInstance::new(16, 1).unwrap();
    let dense = build_full(&g).unwrap().densified();
    group.bench_function("full_dense/16", |b| b.iter(|| propagate(black_box(&dense), &schedule, &cfg).unwrap()));
    group.finish();
}

fn ground_states(c: &mut Criterion) {
    let mut group = c.benchmark_group("ground_state");
    for n in [8u64, 64] {
        let ih = build_full(&GroverInstance::new(n, 1).unwrap()).unwrap();
        let structured = ih.evaluate(0.4).unwrap();
        let dense = ih.densified().evaluate(0.4).unwrap();
        group.bench_with_input(BenchmarkId::new("structured", n), &structured, |b, h| {
            b.iter(|| ground_state(black_box(h)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("dense", n), &dense, |b, h| {
            b.iter(|| ground_state(black_box(h)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, reduced_vs_full, ground_states);
criterion_main!(benches);
