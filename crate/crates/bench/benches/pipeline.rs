use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use sth_bench::weighted_corpus;
use sth_core::{
    build_knn_graph, median_binarize, solve_lapeig, train_all, TrainConfig,
};

fn bench_graph(c: &mut Criterion) {
    let corpus = weighted_corpus(600, 10);
    c.bench_function("knn_graph_n600_k25", |b| {
        b.iter(|| black_box(build_knn_graph(&corpus, 25).unwrap()))
    });
}

fn bench_eigensolver(c: &mut Criterion) {
    let corpus = weighted_corpus(600, 11);
    let graph = build_knn_graph(&corpus, 25).unwrap();
    c.bench_function("lapeig_n600_l16_dense", |b| {
        b.iter(|| black_box(solve_lapeig(&graph, 16).unwrap()))
    });
}

fn bench_svm(c: &mut Criterion) {
    let corpus = weighted_corpus(600, 12);
    let graph = build_knn_graph(&corpus, 25).unwrap();
    let emb = solve_lapeig(&graph, 16).unwrap();
    let (codes, _) = median_binarize(&emb).unwrap();
    let cfg = TrainConfig::default();
    c.bench_function("svm_train_n600_l16", |b| {
        b.iter(|| black_box(train_all(&corpus, &codes, &cfg).unwrap()))
    });
}

fn bench_predict(c: &mut Criterion) {
    let corpus = weighted_corpus(600, 13);
    let graph = build_knn_graph(&corpus, 25).unwrap();
    let emb = solve_lapeig(&graph, 16).unwrap();
    let (codes, _) = median_binarize(&emb).unwrap();
    let (model, _) = train_all(&corpus, &codes, &TrainConfig::default()).unwrap();
    let query = corpus.doc(42);
    c.bench_function("predict_code_l16", |b| {
        b.iter(|| black_box(model.predict_code(query).unwrap()))
    });
}

criterion_group!(benches, bench_graph, bench_eigensolver, bench_svm, bench_predict);
criterion_main!(benches);
