use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

use ttg_bench::paper_scale;
use ttg_core::generator::{sample_pair, sample_request, GeneratorConfig};

fn generate(c: &mut Criterion) {
    let config = GeneratorConfig::default();
    c.bench_function("sample_request", |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        b.iter(|| black_box(sample_request(&mut rng, &config).unwrap()))
    });
    let mut i = 0;
    c.bench_function("sample_pair/default", |b| {
        b.iter(|| {
            i += 1;
            black_box(sample_pair(&config, i).unwrap())
        })
    });
    let big = paper_scale(2);
    c.bench_function("sample_pair/paper_scale", |b| {
        b.iter(|| {
            i += 1;
            black_box(sample_pair(&big, i).unwrap())
        })
    });
}

criterion_group!(benches, generate);
criterion_main!(benches);
