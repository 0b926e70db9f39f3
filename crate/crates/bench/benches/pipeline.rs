use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ssh_bench::experiments::tuned_params;
use ssh_core::index::SshHasher;
use ssh_core::shingle::shingle_bits;
use ssh_core::sketch::sketch_values;
use ssh_core::wmh::signature;
use ssh_core::{
    build_index, dtw_distance, exact_search, generate_random_walk, make_filter, query_index,
    random_walk_dataset, z_normalize, SshParams, WarpingParams,
};

fn bench_dtw(c: &mut Criterion) {
    let mut group = c.benchmark_group("dtw");
    for t in [128usize, 512, 1024] {
        let x = z_normalize(&generate_random_walk(t, 1).unwrap()).unwrap();
        let y = z_normalize(&generate_random_walk(t, 2).unwrap()).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(t), &t, |b, _| {
            b.iter(|| dtw_distance(black_box(&x), black_box(&y), WarpingParams::default(), None))
        });
    }
    group.finish();
}

fn bench_hashing(c: &mut Criterion) {
    let x = z_normalize(&generate_random_walk(512, 3).unwrap()).unwrap();
    let p = SshParams::random_walk();
    let filter = make_filter(p.window, p.seed).unwrap();
    c.bench_function("sketch_512", |b| {
        b.iter(|| sketch_values(black_box(x.values()), &filter, p.delta))
    });
    let sketch = sketch_values(x.values(), &filter, p.delta).unwrap();
    c.bench_function("shingle_512", |b| {
        b.iter(|| shingle_bits(black_box(sketch.bits()), p.shingle))
    });
    let set = shingle_bits(sketch.bits(), p.shingle).unwrap();
    c.bench_function("wmh_20_tables", |b| {
        b.iter(|| signature(black_box(&set), 20, 9))
    });
    let hasher = SshHasher::new(tuned_params(512)).unwrap();
    c.bench_function("tuned_keys_512", |b| {
        b.iter(|| hasher.keys(black_box(x.values())))
    });
}

fn bench_search(c: &mut Criterion) {
    let mut group = c.benchmark_group("search_20k_512");
    group.sample_size(10);
    let data = random_walk_dataset(20_000 + 511, 4, 512)
        .unwrap()
        .z_normalized();
    let index = build_index(&data, tuned_params(512)).unwrap();
    let q = data.get(1234);
    group.bench_function("ssh", |b| b.iter(|| query_index(&index, black_box(&q), 10)));
    group.bench_function("exact", |b| {
        b.iter(|| exact_search(&data, black_box(&q), 10, WarpingParams::default()))
    });
    group.finish();
}

criterion_group!(benches, bench_dtw, bench_hashing, bench_search);
criterion_main!(benches);
