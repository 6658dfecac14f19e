//! `sth index` — build and persist the code -> documents index.

use std::path::PathBuf;

use clap::Args;

use sth_core::build_index;
use sth_core::hashcodes::load_codes;

use super::CmdResult;

#[derive(Args)]
pub struct IndexArgs {
    /// Codes file produced by `sth train`
    #[arg(long, value_name = "FILE")]
    pub codes: PathBuf,

    /// Output index file
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

pub fn run(args: IndexArgs) -> CmdResult {
    let (codes, doc_ids) = load_codes(&args.codes)?;
    let index = build_index(&codes, &doc_ids)?;
    index.save(&args.out)?;
    println!(
        "indexed {} documents into {} buckets ({} bits) at {}",
        index.n(),
        index.n_buckets(),
        index.code_len(),
        args.out.display()
    );
    Ok(())
}
