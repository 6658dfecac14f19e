//! `sth prep` — corpus ingestion, weighting and splitting.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;

use sth_core::corpus::CorpusBuilder;
use sth_core::{load_sparse, save_sparse, split, tfidf_weight, tokenize_basic, Corpus, Vocabulary};

use super::{usage, CmdResult};
use crate::config::{pick, FileConfig, DEFAULT_SEED};

#[derive(Args)]
pub struct PrepArgs {
    /// Input: a sparse-vector file, or a directory of raw text documents
    /// (one document per file, subdirectory name = topic label)
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,

    /// Output sparse-vector file
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,

    /// Apply tf-idf weighting to term counts (directory input defaults to on;
    /// pass for file input whose weights are raw counts)
    #[arg(long)]
    pub tfidf: bool,

    /// Skip tf-idf weighting for directory input
    #[arg(long, conflicts_with = "tfidf")]
    pub no_tfidf: bool,

    /// Stopword list, one word per line (directory input only)
    #[arg(long, value_name = "FILE")]
    pub stopwords: Option<PathBuf>,

    /// Reuse an existing vocabulary; out-of-vocabulary terms are dropped
    #[arg(long, value_name = "FILE")]
    pub vocab: Option<PathBuf>,

    /// Also write <out stem>.train / <out stem>.test splits with this
    /// train fraction in (0,1)
    #[arg(long, value_name = "FRACTION")]
    pub split: Option<f64>,

    /// RNG seed for the split [default: 42]
    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,
}

pub fn run(args: PrepArgs, file_config: &FileConfig) -> CmdResult {
    if let Some(f) = args.split {
        if !(f > 0.0 && f < 1.0) {
            return Err(usage(format!("--split must lie in (0,1), got {f}")));
        }
    }
    let corpus = if args.input.is_dir() {
        ingest_directory(&args)?
    } else {
        let corpus = load_sparse(&args.input)?;
        if args.tfidf {
            let (weighted, dropped) = tfidf_weight(&corpus);
            if !dropped.is_empty() {
                eprintln!("dropped {} all-zero document(s) after weighting", dropped.len());
            }
            weighted
        } else {
            corpus
        }
    };

    save_sparse(&corpus, &args.out)?;
    println!(
        "wrote {} documents (vocab {}) to {}",
        corpus.n(),
        corpus.vocab_size(),
        args.out.display()
    );

    if let Some(fraction) = args.split {
        let seed = pick(args.seed, file_config.seed, DEFAULT_SEED);
        let (train, test) = split(&corpus, fraction, seed)?;
        let train_path = sibling(&args.out, "train");
        let test_path = sibling(&args.out, "test");
        save_sparse(&train, &train_path)?;
        save_sparse(&test, &test_path)?;
        println!(
            "split {}/{} (seed {seed}) to {} and {}",
            train.n(),
            test.n(),
            train_path.display(),
            test_path.display()
        );
    }
    Ok(())
}

/// `corpus.sv` -> `corpus.train.sv`; extensionless paths get `.train`.
fn sibling(out: &Path, part: &str) -> PathBuf {
    match (out.file_stem(), out.extension()) {
        (Some(stem), Some(ext)) => out.with_file_name(format!(
            "{}.{part}.{}",
            stem.to_string_lossy(),
            ext.to_string_lossy()
        )),
        _ => out.with_file_name(format!(
            "{}.{part}",
            out.file_name().map(|s| s.to_string_lossy()).unwrap_or_default()
        )),
    }
}

fn ingest_directory(args: &PrepArgs) -> Result<Corpus, super::CliError> {
    let stopwords: HashSet<String> = match &args.stopwords {
        Some(path) => fs::read_to_string(path)
            .with_context(|| format!("reading stopwords {}", path.display()))
            .map_err(super::CliError::Runtime)?
            .lines()
            .map(|l| l.trim().to_lowercase())
            .filter(|l| !l.is_empty())
            .collect(),
        None => HashSet::new(),
    };

    let mut builder = match &args.vocab {
        Some(path) => CorpusBuilder::with_vocabulary(Vocabulary::load(path)?),
        None => CorpusBuilder::new(),
    };

    // Deterministic order: sorted label directories, sorted files within,
    // unlabelled top-level files last.
    let mut label_dirs: Vec<PathBuf> = Vec::new();
    let mut loose_files: Vec<PathBuf> = Vec::new();
    for entry in fs::read_dir(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))
        .map_err(super::CliError::Runtime)?
    {
        let entry = entry.context("directory entry").map_err(super::CliError::Runtime)?;
        let path = entry.path();
        if path.is_dir() {
            label_dirs.push(path);
        } else {
            loose_files.push(path);
        }
    }
    label_dirs.sort();
    loose_files.sort();

    let mut label_names: Vec<String> = Vec::new();
    let mut n_docs = 0usize;
    for (label_id, dir) in label_dirs.iter().enumerate() {
        let name = dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        label_names.push(name);
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .with_context(|| format!("reading {}", dir.display()))
            .map_err(super::CliError::Runtime)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        for file in files {
            let text = fs::read_to_string(&file)
                .with_context(|| format!("reading {}", file.display()))
                .map_err(super::CliError::Runtime)?;
            let counts = tokenize_basic(&text, &stopwords);
            builder.add_document(&counts, Some(label_id as u32));
            n_docs += 1;
        }
    }
    for file in loose_files {
        let text = fs::read_to_string(&file)
            .with_context(|| format!("reading {}", file.display()))
            .map_err(super::CliError::Runtime)?;
        let counts = tokenize_basic(&text, &stopwords);
        builder.add_document(&counts, None);
        n_docs += 1;
    }
    if n_docs == 0 {
        return Err(super::CliError::Runtime(anyhow::anyhow!(
            "no documents found under {}",
            args.input.display()
        )));
    }

    let (counts_corpus, vocab) = builder.finish();
    if args.vocab.is_none() {
        let vocab_path = args.out.with_extension("vocab");
        vocab.save(&vocab_path)?;
        println!("wrote vocabulary ({} terms) to {}", vocab.len(), vocab_path.display());
    }
    if !label_names.is_empty() {
        let labels_path = args.out.with_extension("labels");
        let body: String = label_names
            .iter()
            .enumerate()
            .map(|(id, name)| format!("{id}\t{name}\n"))
            .collect();
        fs::write(&labels_path, body)
            .with_context(|| format!("writing {}", labels_path.display()))
            .map_err(super::CliError::Runtime)?;
    }

    if args.no_tfidf {
        Ok(counts_corpus)
    } else {
        let (weighted, dropped) = tfidf_weight(&counts_corpus);
        if !dropped.is_empty() {
            eprintln!("dropped {} all-zero document(s) after weighting", dropped.len());
        }
        Ok(weighted)
    }
}
