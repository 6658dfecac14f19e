//! `sth query` — code one or more query documents and print their Hamming
//! ball, one `doc_id<TAB>distance` line per hit.

use std::path::PathBuf;

use clap::Args;

use sth_core::hashfn::load_model;
use sth_core::{load_sparse, CodeIndex};

use super::{usage, CmdResult};

#[derive(Args)]
pub struct QueryArgs {
    /// Index file from `sth index`
    #[arg(long, value_name = "FILE")]
    pub index: PathBuf,

    /// Hash model from `sth train`
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,

    /// Query document(s), sparse-vector file
    #[arg(long, value_name = "FILE")]
    pub doc: PathBuf,

    /// Hamming ball radius [default: 1]
    #[arg(long, value_name = "R", default_value_t = 1)]
    pub radius: usize,
}

pub fn run(args: QueryArgs) -> CmdResult {
    let index = CodeIndex::load(&args.index)?;
    let model = load_model(&args.model)?;
    if model.code_len() < index.code_len() {
        return Err(usage(format!(
            "model has {} bits but the index needs {}",
            model.code_len(),
            index.code_len()
        )));
    }
    if args.radius > index.code_len() {
        return Err(usage(format!(
            "--radius {} exceeds the index code length {}",
            args.radius,
            index.code_len()
        )));
    }
    let queries = load_sparse(&args.doc)?;
    let multiple = queries.n() > 1;
    let mut out = String::new();
    for doc in queries.docs() {
        let code = model.predict_code(doc)?.truncate(index.code_len())?;
        let hits = index.query_with_distances(&code, args.radius)?;
        if multiple {
            out.push_str(&format!("# query {}\n", doc.doc_id));
        }
        for (id, distance) in hits {
            out.push_str(&format!("{id}\t{distance}\n"));
        }
    }
    super::write_stdout(&out)
}
