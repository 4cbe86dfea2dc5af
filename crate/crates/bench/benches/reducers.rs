use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use dga_bench::{codes, table};
use dga_core::dtree::{tree_reduce, DtConfig};
use dga_core::granular::{granulate, incremental_rank_reduce};
use dga_core::pca::{fit_pca, ComponentPolicy};
use dga_core::roughset::{reduct_search, InformationSystem};

fn reducers(c: &mut Criterion) {
    let mut group = c.benchmark_group("reducers");
    for rows in [500, 2000] {
        let raw = table(rows).to_samples();
        let cat = codes(rows);
        group.bench_with_input(BenchmarkId::new("pca", rows), &raw, |b, raw| {
            b.iter(|| fit_pca(black_box(raw), ComponentPolicy::FixedCount(3)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("rough_set", rows), &cat, |b, cat| {
            b.iter(|| reduct_search(&InformationSystem::new(black_box(cat))).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("granular", rows), &cat, |b, cat| {
            b.iter(|| incremental_rank_reduce(black_box(cat), 500, 64).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("decision_tree", rows), &cat, |b, cat| {
            b.iter(|| tree_reduce(black_box(cat), &DtConfig::default(), 3).unwrap())
        });
    }
    group.finish();
}

fn granules(c: &mut Criterion) {
    let cat = codes(2000);
    c.bench_function("granulate_2000", |b| b.iter(|| granulate(black_box(&cat)).unwrap()));
}

criterion_group!(benches, reducers, granules);
criterion_main!(benches);
