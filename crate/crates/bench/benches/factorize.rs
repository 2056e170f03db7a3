use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sefa_core::factorizer::{factorize, factorize_layers};
use sefa_core::linalg::{gram, top_k_eigenpairs};
use sefa_core::{rng, LayerWeights, Matrix};

fn gaussian(rows: usize, cols: usize, index: u64) -> Matrix {
    let mut stream = rng::stream(0, index);
    Matrix::new(rows, cols, rng::standard_normal(&mut stream, rows * cols)).unwrap()
}

fn bench_gram(c: &mut Criterion) {
    let mut group = c.benchmark_group("gram");
    for (m, d) in [(1024, 128), (512, 512), (9216, 512)] {
        let a = gaussian(m, d, 1);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{m}x{d}")), &a, |b, a| {
            b.iter(|| gram(black_box(a)))
        });
    }
    group.finish();
}

fn bench_eigen(c: &mut Criterion) {
    let mut group = c.benchmark_group("eigen");
    for d in [64, 256, 512] {
        let s = gram(&gaussian(2 * d, d, 2));
        group.bench_with_input(BenchmarkId::from_parameter(d), &s, |b, s| {
            b.iter(|| top_k_eigenpairs(black_box(s), 50.min(d)).unwrap())
        });
    }
    group.finish();
}

fn bench_factorize(c: &mut Criterion) {
    let mut group = c.benchmark_group("factorize");
    group.sample_size(10);
    let a = gaussian(512, 512, 3);
    group.bench_function("single_512", |b| b.iter(|| factorize(black_box(&a), 50).unwrap()));
    let layers: Vec<LayerWeights> = (0..18)
        .map(|l| LayerWeights {
            name: format!("layer{l}"),
            a: gaussian(512, 512, 10 + l),
            bias: None,
        })
        .collect();
    group.bench_function("stylegan_18x512", |b| {
        b.iter(|| factorize_layers(black_box(&layers), 50).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_gram, bench_eigen, bench_factorize);
criterion_main!(benches);
