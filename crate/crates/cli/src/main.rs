//! `sth` — self-taught hashing pipeline driver.
//!
//! Subcommands: `prep`, `train`, `index`, `query`, `eval`. Exit codes are
//! 0 (success), 1 (usage error) and 2 (runtime error). Configuration comes
//! from flags, with an optional TOML config file supplying defaults that
//! explicit flags override. All randomness flows from one `--seed` through
//! named substreams (split, SVM permutation, LSH).

mod cmd;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cmd::CliError;
use config::FileConfig;

#[derive(Parser)]
#[command(
    name = "sth",
    version,
    about = "Self-taught hashing: compact binary codes for fast similarity search",
    propagate_version = true
)]
struct Cli {
    /// TOML config file with default values; explicit flags override it
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Cap worker parallelism [default: all cores]
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Vectorize raw text or validate/re-weight a sparse corpus; optional split
    Prep(cmd::prep::PrepArgs),
    /// Learn codes and hash functions: graph -> embedding -> binarize -> SVM
    Train(cmd::train::TrainArgs),
    /// Build the code -> documents index from a codes file
    Index(cmd::index::IndexArgs),
    /// Code query documents and retrieve their Hamming ball
    Query(cmd::query::QueryArgs),
    /// Precision/recall/F1 sweep over code lengths and radii
    Eval(cmd::eval::EvalArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file_config = match &cli.config {
        Some(path) => FileConfig::load(path).map_err(CliError::Runtime)?,
        None => FileConfig::default(),
    };
    if let Some(threads) = cli.threads.or(file_config.threads) {
        if threads == 0 {
            return Err(CliError::Usage("--threads must be >= 1".into()));
        }
        // Ignore the error if a global pool already exists (e.g. in tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match cli.command {
        Command::Prep(args) => cmd::prep::run(args, &file_config),
        Command::Train(args) => cmd::train::run(args, &file_config),
        Command::Index(args) => cmd::index::run(args),
        Command::Query(args) => cmd::query::run(args),
        Command::Eval(args) => cmd::eval::run(args, &file_config),
    }
}
