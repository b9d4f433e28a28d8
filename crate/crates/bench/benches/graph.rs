use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use disco_bench::dense_mask;
use disco_core::cag::build_cag;
use disco_core::topology::{enumerate_odd_cycles, heuristic_conflict_set};
use std::hint::black_box;

fn graph_construction(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_cag");
    for side in [64, 256, 512] {
        let mask = dense_mask(side, 7);
        group.bench_with_input(BenchmarkId::from_parameter(side), &mask, |b, m| {
            b.iter(|| build_cag(black_box(m)).unwrap())
        });
    }
    group.finish();
}

fn graph_analysis(c: &mut Criterion) {
    let g = build_cag(&dense_mask(256, 7)).unwrap();
    c.bench_function("heuristic_conflict_set/256", |b| {
        b.iter(|| heuristic_conflict_set(black_box(&g)))
    });
    let mut group = c.benchmark_group("enumerate_odd_cycles/256");
    for cap in [5, 7, 11] {
        group.bench_with_input(BenchmarkId::from_parameter(cap), &cap, |b, &cap| {
            b.iter(|| enumerate_odd_cycles(black_box(&g), cap).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, graph_construction, graph_analysis);
criterion_main!(benches);
