//! `sth eval` — the retrieval sweep: P/R/F1 over code lengths and radii,
//! for the learned hash functions and/or the sign-LSH baseline.

use std::path::PathBuf;

use clap::Args;

use sth_core::eval::SweepOptions;
use sth_core::hashcodes::load_codes;
use sth_core::hashfn::load_model;
use sth_core::{
    ground_truth_knn, ground_truth_topic, load_sparse, lsh_train, sweep, CodeMatrix, EvalReport,
};

use super::{usage, CmdResult};
use crate::config::{pick, FileConfig, DEFAULT_K, DEFAULT_LENGTHS, DEFAULT_RADII, DEFAULT_SEED};

#[derive(Args)]
pub struct EvalArgs {
    /// Training corpus (the indexed collection)
    #[arg(long, value_name = "FILE")]
    pub train: PathBuf,

    /// Test corpus (the queries)
    #[arg(long, value_name = "FILE")]
    pub test: PathBuf,

    /// Method to evaluate: sth | lsh [default: sth]
    #[arg(long, value_name = "NAME")]
    pub method: Option<String>,

    /// Comma-separated methods for a side-by-side report (e.g. sth,lsh);
    /// overrides --method
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub compare: Option<Vec<String>>,

    /// Codes file from `sth train` (required for method sth)
    #[arg(long, value_name = "FILE")]
    pub codes: Option<PathBuf>,

    /// Model file from `sth train` (required for method sth)
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,

    /// Ground truth: knn | topic [default: knn]
    #[arg(long, value_name = "KIND")]
    pub truth: Option<String>,

    /// Neighbourhood size for knn ground truth [default: 25]
    #[arg(long, value_name = "K")]
    pub k: Option<usize>,

    /// Comma-separated code lengths [default: 4,8,16,32,64, capped at the
    /// trained length]
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub lengths: Option<Vec<usize>>,

    /// Comma-separated Hamming radii [default: 0,1,2,3]
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub radii: Option<Vec<usize>>,

    /// Master RNG seed (drives the LSH projections) [default: 42]
    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,

    /// Output TSV report
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,

    /// Also write raw per-query scores
    #[arg(long, value_name = "FILE")]
    pub per_query: Option<PathBuf>,

    /// Also write precision-recall curve points (one per code length)
    #[arg(long, value_name = "FILE")]
    pub plot_data: Option<PathBuf>,

    /// Radius for --plot-data [default: 1]
    #[arg(long, value_name = "R", default_value_t = 1)]
    pub plot_radius: usize,
}

pub fn run(args: EvalArgs, file_config: &FileConfig) -> CmdResult {
    let methods: Vec<String> = match (&args.compare, &args.method) {
        (Some(list), _) => list.clone(),
        (None, Some(m)) => vec![m.clone()],
        (None, None) => vec!["sth".to_string()],
    };
    for m in &methods {
        if m != "sth" && m != "lsh" {
            return Err(usage(format!("unknown method {m:?} (expected sth or lsh)")));
        }
    }
    let truth_kind = args.truth.as_deref().unwrap_or("knn");
    let seed = pick(args.seed, file_config.seed, DEFAULT_SEED);
    let k = pick(args.k, file_config.k, DEFAULT_K);
    let radii = pick(args.radii.clone(), file_config.radii.clone(), DEFAULT_RADII.to_vec());

    let train = load_sparse(&args.train)?;
    let test = load_sparse(&args.test)?;

    // Trained artifacts, if the sth method is requested.
    let sth_artifacts = if methods.iter().any(|m| m == "sth") {
        let codes_path = args
            .codes
            .as_ref()
            .ok_or_else(|| usage("method sth requires --codes"))?;
        let model_path = args
            .model
            .as_ref()
            .ok_or_else(|| usage("method sth requires --model"))?;
        let (codes, doc_ids) = load_codes(codes_path)?;
        let model = load_model(model_path)?;
        if doc_ids != train.doc_ids() {
            return Err(super::CliError::Runtime(anyhow::anyhow!(
                "codes file doc ids do not match the training corpus; \
                 re-run training on this corpus"
            )));
        }
        Some((codes, doc_ids, model))
    } else {
        None
    };

    let cap = sth_artifacts
        .as_ref()
        .map(|(codes, _, _)| codes.code_len())
        .unwrap_or(64);
    let lengths: Vec<usize> = match pick(args.lengths.clone(), file_config.lengths.clone(), Vec::new()) {
        v if v.is_empty() => DEFAULT_LENGTHS.iter().copied().filter(|&l| l <= cap).collect(),
        v => v,
    };
    if lengths.is_empty() {
        return Err(usage("no usable code lengths"));
    }
    if let Some(&bad) = lengths.iter().find(|&&l| l == 0 || l > cap) {
        return Err(usage(format!(
            "code length {bad} outside 1..={cap} (the trained length caps the sweep)"
        )));
    }
    let min_len = *lengths.iter().min().expect("nonempty");
    if let Some(&bad) = radii.iter().find(|&&r| r > min_len) {
        return Err(usage(format!(
            "radius {bad} exceeds the smallest evaluated code length {min_len}"
        )));
    }

    let truth = match truth_kind {
        "knn" => {
            if k == 0 || k >= train.n() {
                return Err(usage(format!(
                    "--k must satisfy 1 <= k < {} (training size)",
                    train.n()
                )));
            }
            ground_truth_knn(&train, &test, k)?
        }
        "topic" => ground_truth_topic(&train, &test)?,
        other => return Err(usage(format!("unknown truth {other:?} (expected knn or topic)"))),
    };

    let opts = SweepOptions {
        collect_per_query: args.per_query.is_some(),
    };
    let mut report: Option<EvalReport> = None;
    for method in &methods {
        let part = match method.as_str() {
            "sth" => {
                let (codes, doc_ids, model) = sth_artifacts.as_ref().expect("validated above");
                sweep(codes, doc_ids, model, &test, &truth, &lengths, &radii, "sth", &opts)?
            }
            "lsh" => {
                let bits = *lengths.iter().max().expect("nonempty");
                let lsh = lsh_train(train.vocab_size() as usize, bits, seed)?;
                let mut codes = CodeMatrix::new(bits)?;
                for doc in train.docs() {
                    codes.push(lsh.code(doc)?)?;
                }
                let doc_ids = train.doc_ids();
                sweep(&codes, &doc_ids, &lsh, &test, &truth, &lengths, &radii, "lsh", &opts)?
            }
            _ => unreachable!(),
        };
        match &mut report {
            Some(r) => r.merge(part),
            None => report = Some(part),
        }
    }
    let report = report.expect("at least one method");

    report.write_tsv(&args.out)?;
    println!("wrote report to {}", args.out.display());
    if let Some(pq) = &args.per_query {
        report.write_per_query_tsv(pq)?;
        println!("wrote per-query scores to {}", pq.display());
    }
    if let Some(pd) = &args.plot_data {
        report.write_plot_data(pd, args.plot_radius)?;
        println!("wrote plot data to {}", pd.display());
    }
    for row in report.rows() {
        println!(
            "{}\tl={}\tr={}\tP={:.4}\tR={:.4}\tF1={:.4}\t({} queries, {} empty)",
            row.method,
            row.code_length,
            row.radius,
            row.mean_precision,
            row.mean_recall,
            row.mean_f1,
            row.n_queries,
            row.n_empty
        );
    }
    Ok(())
}
