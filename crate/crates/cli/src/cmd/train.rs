//! `sth train` — graph construction, spectral embedding, binarization and
//! hash-function training, with per-stage diagnostics.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::Context;
use clap::Args;
use serde::Serialize;

use sth_core::hashcodes::save_codes;
use sth_core::hashfn::save_model;
use sth_core::spectral::save_embedding;
use sth_core::{
    build_knn_graph, load_sparse, median_binarize, solve_lapeig, train_all,
    weighted_hamming_objective, TrainConfig,
};

use super::{usage, CmdResult};
use crate::config::{
    pick, FileConfig, DEFAULT_BITS, DEFAULT_K, DEFAULT_SEED, DEFAULT_SVM_C, DEFAULT_SVM_EPOCHS,
    DEFAULT_SVM_TOLERANCE,
};

#[derive(Args)]
pub struct TrainArgs {
    /// Training corpus (sparse-vector file)
    #[arg(long, value_name = "FILE")]
    pub train: PathBuf,

    /// Output directory for embedding.txt, codes.bin, model.bin and
    /// diagnostics.json
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,

    /// Graph neighbourhood size [default: 25]
    #[arg(long, value_name = "K")]
    pub k: Option<usize>,

    /// Code length in bits, 1..=64 [default: 16]
    #[arg(long, value_name = "L")]
    pub bits: Option<usize>,

    /// SVM cost C [default: 1]
    #[arg(long, value_name = "C")]
    pub svm_c: Option<f64>,

    /// SVM stopping tolerance [default: 1e-3]
    #[arg(long, value_name = "TOL")]
    pub svm_tolerance: Option<f64>,

    /// SVM epoch cap [default: 1000]
    #[arg(long, value_name = "N")]
    pub svm_epochs: Option<usize>,

    /// Master RNG seed [default: 42]
    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,
}

#[derive(Serialize)]
struct StageTimings {
    load_ms: u128,
    graph_ms: u128,
    eigen_ms: u128,
    binarize_ms: u128,
    svm_ms: u128,
}

#[derive(Serialize)]
struct Diagnostics {
    n_documents: usize,
    vocab_size: u32,
    k: usize,
    bits: usize,
    seed: u64,
    svm: TrainConfig,
    stages: StageTimings,
    isolated_nodes: usize,
    eigenvalues: Vec<f64>,
    solver_iterations: usize,
    solver_max_residual: f64,
    solver_dense_path: bool,
    component_indicators: usize,
    bit_on_counts: Vec<usize>,
    code_objective: f64,
    per_bit: Vec<sth_core::BitTrainStats>,
    mean_bit_accuracy: f64,
}

pub fn run(args: TrainArgs, file_config: &FileConfig) -> CmdResult {
    let k = pick(args.k, file_config.k, DEFAULT_K);
    let bits = pick(args.bits, file_config.bits, DEFAULT_BITS);
    let seed = pick(args.seed, file_config.seed, DEFAULT_SEED);
    if bits == 0 || bits > 64 {
        return Err(usage(format!("--bits must lie in 1..=64, got {bits}")));
    }
    if k == 0 {
        return Err(usage("--k must be >= 1"));
    }
    let svm = TrainConfig {
        c: pick(args.svm_c, file_config.svm_c, DEFAULT_SVM_C),
        tolerance: pick(args.svm_tolerance, file_config.svm_tolerance, DEFAULT_SVM_TOLERANCE),
        max_epochs: pick(args.svm_epochs, file_config.svm_epochs, DEFAULT_SVM_EPOCHS),
        seed,
    };
    if svm.c <= 0.0 || svm.tolerance <= 0.0 || svm.max_epochs == 0 {
        return Err(usage("--svm-c and --svm-tolerance must be > 0, --svm-epochs >= 1"));
    }

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))
        .map_err(super::CliError::Runtime)?;

    let t = Instant::now();
    let train = load_sparse(&args.train).context("stage load").map_err(super::CliError::Runtime)?;
    let load_ms = t.elapsed().as_millis();
    println!("load: {} documents, vocab {} ({load_ms} ms)", train.n(), train.vocab_size());

    let t = Instant::now();
    let graph = build_knn_graph(&train, k)
        .context("stage graph")
        .map_err(super::CliError::Runtime)?;
    let graph_ms = t.elapsed().as_millis();
    let isolated = graph.isolated_nodes().len();
    println!(
        "graph: {} edges, {} isolated node(s) ({graph_ms} ms)",
        graph.edge_count(),
        isolated
    );

    let t = Instant::now();
    let embedding = solve_lapeig(&graph, bits)
        .context("stage eigen")
        .map_err(super::CliError::Runtime)?;
    let eigen_ms = t.elapsed().as_millis();
    let stats = *embedding.stats();
    println!(
        "eigen: {} dims, max residual {:.2e}, {} path ({eigen_ms} ms)",
        embedding.dims(),
        stats.max_residual,
        if stats.dense { "dense" } else { "lanczos" }
    );

    let t = Instant::now();
    let (codes, thresholds) = median_binarize(&embedding)
        .context("stage binarize")
        .map_err(super::CliError::Runtime)?;
    let binarize_ms = t.elapsed().as_millis();
    let objective = weighted_hamming_objective(&codes, &graph)
        .context("stage binarize")
        .map_err(super::CliError::Runtime)?;
    println!("binarize: objective {objective:.3} ({binarize_ms} ms)");

    let t = Instant::now();
    let (model, train_stats) = train_all(&train, &codes, &svm)
        .context("stage svm")
        .map_err(super::CliError::Runtime)?;
    let svm_ms = t.elapsed().as_millis();
    println!(
        "svm: mean per-bit accuracy {:.4} ({svm_ms} ms)",
        train_stats.mean_accuracy()
    );

    let embedding_path = args.out_dir.join("embedding.txt");
    let codes_path = args.out_dir.join("codes.bin");
    let model_path = args.out_dir.join("model.bin");
    save_embedding(&embedding_path, &embedding, &thresholds)?;
    save_codes(&codes_path, &codes, &train.doc_ids())?;
    save_model(&model_path, &model, &train_stats)?;

    let diagnostics = Diagnostics {
        n_documents: train.n(),
        vocab_size: train.vocab_size(),
        k,
        bits,
        seed,
        svm,
        stages: StageTimings {
            load_ms,
            graph_ms,
            eigen_ms,
            binarize_ms,
            svm_ms,
        },
        isolated_nodes: isolated,
        eigenvalues: embedding.eigenvalues().to_vec(),
        solver_iterations: stats.iterations,
        solver_max_residual: stats.max_residual,
        solver_dense_path: stats.dense,
        component_indicators: stats.component_indicators,
        bit_on_counts: codes.on_counts(),
        code_objective: objective,
        per_bit: train_stats.per_bit.clone(),
        mean_bit_accuracy: train_stats.mean_accuracy(),
    };
    let diag_path = args.out_dir.join("diagnostics.json");
    let json = serde_json::to_string_pretty(&diagnostics)
        .context("serializing diagnostics")
        .map_err(super::CliError::Runtime)?;
    std::fs::write(&diag_path, json)
        .with_context(|| format!("writing {}", diag_path.display()))
        .map_err(super::CliError::Runtime)?;

    println!(
        "wrote {}, {}, {}, {}",
        embedding_path.display(),
        codes_path.display(),
        model_path.display(),
        diag_path.display()
    );
    Ok(())
}
