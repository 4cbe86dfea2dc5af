use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use dga_bench::{boxes, columns, points};
use dga_core::svm::{train_smo, SvmConfig};
use dga_core::{bpnn, rnn, MlpConfig};

fn config() -> MlpConfig {
    MlpConfig {
        epochs: 50,
        ..MlpConfig::default()
    }
}

fn classifiers(c: &mut Criterion) {
    let mut group = c.benchmark_group("classifiers");
    group.sample_size(10);
    let data = points(600);
    let cfg = config();
    for width in [3, 10] {
        let cols: Vec<usize> = (0..width).collect();
        let narrow = columns(600, &cols);
        group.bench_with_input(BenchmarkId::new("bpnn_50_epochs", width), &narrow, |b, d| {
            b.iter(|| bpnn::train(black_box(d), &cfg).unwrap())
        });
    }
    group.bench_function("svm_rbf", |b| b.iter(|| train_smo(black_box(&data), &SvmConfig::default()).unwrap()));
    let rough = boxes(600, 0.1);
    group.bench_function("rnn_50_epochs", |b| {
        b.iter(|| rnn::train(black_box(&rough), &cfg, &rnn::RnnOptions::default()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, classifiers);
criterion_main!(benches);
