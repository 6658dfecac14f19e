use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion, Throughput};

use sth_bench::random_codes;
use sth_core::hashcodes::{ball, ball_size, build_index, hamming, BitCode};

fn bench_hamming(c: &mut Criterion) {
    let (codes, _) = random_codes(4096, 64, 1);
    let query = codes.code(0);
    let mut group = c.benchmark_group("hamming");
    group.throughput(Throughput::Elements(codes.n() as u64));
    group.bench_function("scan_4096x64bit", |b| {
        b.iter(|| {
            let mut acc = 0u64;
            for i in 0..codes.n() {
                acc += u64::from(hamming(&query, &codes.code(i)).unwrap());
            }
            black_box(acc)
        })
    });
    group.finish();
}

fn bench_ball(c: &mut Criterion) {
    let mut group = c.benchmark_group("ball");
    for (l, r) in [(16usize, 2usize), (32, 2), (64, 2)] {
        let center = BitCode::new(0x5a5a_5a5a_5a5a_5a5a, l).unwrap();
        group.throughput(Throughput::Elements(ball_size(l, r).unwrap() as u64));
        group.bench_function(format!("enumerate_l{l}_r{r}"), |b| {
            b.iter(|| {
                let mut acc = 0u64;
                for code in ball(center, r).unwrap() {
                    acc ^= code.word();
                }
                black_box(acc)
            })
        });
    }
    group.finish();
}

fn bench_query(c: &mut Criterion) {
    let mut group = c.benchmark_group("index_query");
    // Small ball vs large collection: bucket probing.
    let (codes, ids) = random_codes(100_000, 32, 2);
    let index = build_index(&codes, &ids).unwrap();
    let center = codes.code(17);
    group.bench_function("probe_n100k_l32_r2", |b| {
        b.iter(|| black_box(index.query(&center, 2).unwrap()))
    });
    // Large ball vs small collection: linear scan of the buckets.
    let (codes, ids) = random_codes(2_000, 16, 3);
    let index = build_index(&codes, &ids).unwrap();
    let center = codes.code(5);
    group.bench_function("scan_n2k_l16_r6", |b| {
        b.iter(|| black_box(index.query(&center, 6).unwrap()))
    });
    group.finish();
}

fn bench_build_index(c: &mut Criterion) {
    let (codes, ids) = random_codes(50_000, 32, 4);
    c.bench_function("build_index_n50k", |b| {
        b.iter(|| black_box(build_index(&codes, &ids).unwrap()))
    });
}

criterion_group!(benches, bench_hamming, bench_ball, bench_query, bench_build_index);
criterion_main!(benches);
