//! Retrieval evaluation: precision/recall/F1 under two ground-truth
//! methodologies, swept over code lengths and Hamming radii.
//!
//! Scores are **macro-averaged**: precision, recall and F1 are computed per
//! query and arithmetically averaged over all evaluated queries (including
//! F1, i.e. mean-of-F1 rather than F1-of-means); a query with an empty
//! retrieval contributes (0, 0, 0). Every report header restates this.
//!
//! A sweep truncates one full-length training run to each requested code
//! length: by eigenvalue ordering the first l' embedding columns are exactly
//! the l'-dimensional solution, and per-bit SVMs (or LSH rows) are likewise
//! reusable, so nothing is retrained.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::{Corpus, DocId};
use crate::error::{Error, Result};
use crate::hashcodes::{build_index, CodeMatrix, Encoder};
use crate::knn_graph::knn_of_query;

/// Which relevance methodology produced a [`GroundTruth`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruthKind {
    /// The k most cosine-similar training documents.
    Knn { k: usize },
    /// Training documents sharing the query's topic label.
    SameTopic,
}

impl TruthKind {
    pub fn describe(&self) -> String {
        match self {
            TruthKind::Knn { k } => format!("knn k={k}"),
            TruthKind::SameTopic => "same-topic".to_string(),
        }
    }
}

/// Per-query relevant sets, aligned with the query corpus; `None` marks a
/// query excluded from evaluation (zero norm, or label absent from training).
#[derive(Debug, Clone)]
pub struct GroundTruth {
    kind: TruthKind,
    relevant: Vec<Option<HashSet<DocId>>>,
    n_skipped: usize,
}

impl GroundTruth {
    pub fn kind(&self) -> TruthKind {
        self.kind
    }

    pub fn relevant(&self, query_index: usize) -> Option<&HashSet<DocId>> {
        self.relevant[query_index].as_ref()
    }

    pub fn n_queries(&self) -> usize {
        self.relevant.len()
    }

    pub fn n_skipped(&self) -> usize {
        self.n_skipped
    }
}

/// Exact cosine top-k over the training set for every query (brute force),
/// with the same tie rule as graph construction. Zero-norm queries are
/// excluded with a warning.
pub fn ground_truth_knn(train: &Corpus, queries: &Corpus, k: usize) -> Result<GroundTruth> {
    if train.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if k == 0 || k >= train.n() {
        return Err(Error::InvalidK { k, n: train.n() });
    }
    let sets: Vec<Option<HashSet<DocId>>> = queries
        .docs()
        .par_iter()
        .map(|q| {
            if q.norm() == 0.0 {
                return Ok(None);
            }
            let top = knn_of_query(train, q, k)?;
            Ok(Some(
                top.into_iter()
                    .map(|(j, _)| train.doc(j).doc_id)
                    .collect(),
            ))
        })
        .collect::<Result<_>>()?;
    let n_skipped = sets.iter().filter(|s| s.is_none()).count();
    if n_skipped > 0 {
        log::warn!("{n_skipped} zero-norm query document(s) excluded from the ground truth");
    }
    Ok(GroundTruth {
        kind: TruthKind::Knn { k },
        relevant: sets,
        n_skipped,
    })
}

/// Training documents sharing the query's label. Errors on any unlabelled
/// document; queries whose label is absent from training are skipped (and
/// counted).
pub fn ground_truth_topic(train: &Corpus, queries: &Corpus) -> Result<GroundTruth> {
    let mut by_label: std::collections::HashMap<u32, HashSet<DocId>> =
        std::collections::HashMap::new();
    for doc in train.docs() {
        let label = doc.label.ok_or(Error::Unlabelled { doc_id: doc.doc_id })?;
        by_label.entry(label).or_default().insert(doc.doc_id);
    }
    let mut sets = Vec::with_capacity(queries.n());
    let mut n_skipped = 0;
    for q in queries.docs() {
        let label = q.label.ok_or(Error::Unlabelled { doc_id: q.doc_id })?;
        match by_label.get(&label) {
            Some(s) => sets.push(Some(s.clone())),
            None => {
                n_skipped += 1;
                sets.push(None);
            }
        }
    }
    if n_skipped > 0 {
        log::warn!("{n_skipped} query label(s) absent from the training set; queries skipped");
    }
    Ok(GroundTruth {
        kind: TruthKind::SameTopic,
        relevant: sets,
        n_skipped,
    })
}

/// Precision, recall and F1 of one retrieval. Empty retrieved or relevant
/// sets contribute 0 to the respective score; F1 is 0 when P + R = 0.
pub fn prf(retrieved: &HashSet<DocId>, relevant: &HashSet<DocId>) -> (f64, f64, f64) {
    let inter = retrieved.intersection(relevant).count() as f64;
    let p = if retrieved.is_empty() {
        0.0
    } else {
        inter / retrieved.len() as f64
    };
    let r = if relevant.is_empty() {
        0.0
    } else {
        inter / relevant.len() as f64
    };
    let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f1)
}

/// One aggregated result line: a (method, code length, radius) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub method: String,
    pub code_length: usize,
    pub radius: usize,
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_f1: f64,
    pub n_queries: usize,
    pub n_empty: usize,
}

/// Raw per-query scores, kept when requested for external significance tests.
#[derive(Debug, Clone)]
pub struct PerQueryRow {
    pub method: String,
    pub code_length: usize,
    pub radius: usize,
    pub query_id: DocId,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub n_retrieved: usize,
    pub n_relevant: usize,
}

#[derive(Debug, Clone, Default)]
pub struct EvalReport {
    pub truth_desc: String,
    rows: Vec<EvalRow>,
    per_query: Vec<PerQueryRow>,
}

/// Options for [`sweep`].
#[derive(Debug, Clone, Copy, Default)]
pub struct SweepOptions {
    pub collect_per_query: bool,
}

/// Evaluates one encoder over a grid of code lengths and radii.
///
/// For each length l' the training codes are truncated to their first l'
/// bits and re-indexed; each query is encoded once at full length and
/// truncated per cell. Per-query evaluation is parallel; aggregation is
/// sequential in query order.
#[allow(clippy::too_many_arguments)]
pub fn sweep(
    train_codes: &CodeMatrix,
    train_doc_ids: &[DocId],
    encoder: &(dyn Encoder + Sync),
    queries: &Corpus,
    truth: &GroundTruth,
    lengths: &[usize],
    radii: &[usize],
    method: &str,
    opts: &SweepOptions,
) -> Result<EvalReport> {
    if truth.n_queries() != queries.n() {
        return Err(Error::SizeMismatch {
            what: "ground truth vs queries",
            left: truth.n_queries(),
            right: queries.n(),
        });
    }
    if encoder.code_len() < train_codes.code_len() {
        return Err(Error::CodeLengthMismatch {
            a: encoder.code_len(),
            b: train_codes.code_len(),
        });
    }
    for &l in lengths {
        if l == 0 || l > train_codes.code_len() {
            return Err(Error::CodeLengthMismatch {
                a: train_codes.code_len(),
                b: l,
            });
        }
        for &r in radii {
            if r > l {
                return Err(Error::RadiusTooLarge { radius: r, len: l });
            }
        }
    }

    // Encode every evaluated query once at full length.
    let full_codes: Vec<Option<crate::hashcodes::BitCode>> = queries
        .docs()
        .par_iter()
        .enumerate()
        .map(|(qi, q)| match truth.relevant(qi) {
            Some(_) => encoder.encode(q).map(Some),
            None => Ok(None),
        })
        .collect::<Result<_>>()?;

    let mut report = EvalReport {
        truth_desc: truth.kind().describe(),
        rows: Vec::new(),
        per_query: Vec::new(),
    };

    for &length in lengths {
        let truncated = train_codes.truncate(length)?;
        let index = build_index(&truncated, train_doc_ids)?;
        let query_codes: Vec<Option<crate::hashcodes::BitCode>> = full_codes
            .iter()
            .map(|c| c.map(|code| code.truncate(length)).transpose())
            .collect::<Result<_>>()?;
        for &radius in radii {
            type QueryScore = (f64, f64, f64, usize, usize);
            let scored: Vec<Option<QueryScore>> = query_codes
                .par_iter()
                .enumerate()
                .map(|(qi, code)| {
                    let (Some(code), Some(relevant)) = (code, truth.relevant(qi)) else {
                        return Ok(None);
                    };
                    let retrieved: HashSet<DocId> =
                        index.query(code, radius)?.into_iter().collect();
                    let (p, r, f1) = prf(&retrieved, relevant);
                    Ok(Some((p, r, f1, retrieved.len(), relevant.len())))
                })
                .collect::<Result<_>>()?;

            let mut sums = (0.0, 0.0, 0.0);
            let mut n_queries = 0usize;
            let mut n_empty = 0usize;
            for (qi, s) in scored.iter().enumerate() {
                let Some((p, r, f1, n_retrieved, n_relevant)) = *s else {
                    continue;
                };
                n_queries += 1;
                if n_retrieved == 0 {
                    n_empty += 1;
                }
                sums.0 += p;
                sums.1 += r;
                sums.2 += f1;
                if opts.collect_per_query {
                    report.per_query.push(PerQueryRow {
                        method: method.to_string(),
                        code_length: length,
                        radius,
                        query_id: queries.doc(qi).doc_id,
                        precision: p,
                        recall: r,
                        f1,
                        n_retrieved,
                        n_relevant,
                    });
                }
            }
            let denom = n_queries.max(1) as f64;
            report.rows.push(EvalRow {
                method: method.to_string(),
                code_length: length,
                radius,
                mean_precision: sums.0 / denom,
                mean_recall: sums.1 / denom,
                mean_f1: sums.2 / denom,
                n_queries,
                n_empty,
            });
        }
    }
    Ok(report)
}

impl EvalReport {
    pub fn rows(&self) -> &[EvalRow] {
        &self.rows
    }

    pub fn per_query(&self) -> &[PerQueryRow] {
        &self.per_query
    }

    pub fn row(&self, method: &str, code_length: usize, radius: usize) -> Option<&EvalRow> {
        self.rows.iter().find(|r| {
            r.method == method && r.code_length == code_length && r.radius == radius
        })
    }

    /// Appends another report's rows (side-by-side method comparison).
    pub fn merge(&mut self, other: EvalReport) {
        self.rows.extend(other.rows);
        self.per_query.extend(other.per_query);
    }

    fn header(&self) -> String {
        format!(
            "# aggregation: macro-averaged (per-query precision/recall/F1, arithmetic mean over evaluated queries; empty retrieval scores 0)\n# truth: {}\n",
            self.truth_desc
        )
    }

    /// Aggregate TSV:
    /// `method code_length radius mean_precision mean_recall mean_f1 n_queries n_empty`.
    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = self.header();
        out.push_str(
            "method\tcode_length\tradius\tmean_precision\tmean_recall\tmean_f1\tn_queries\tn_empty\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}\n",
                r.method,
                r.code_length,
                r.radius,
                r.mean_precision,
                r.mean_recall,
                r.mean_f1,
                r.n_queries,
                r.n_empty
            ));
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Raw per-query TSV for external significance testing.
    pub fn write_per_query_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = self.header();
        out.push_str(
            "method\tcode_length\tradius\tquery_id\tprecision\trecall\tf1\tn_retrieved\tn_relevant\n",
        );
        for r in &self.per_query {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}\n",
                r.method,
                r.code_length,
                r.radius,
                r.query_id,
                r.precision,
                r.recall,
                r.f1,
                r.n_retrieved,
                r.n_relevant
            ));
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Precision-recall curve points at a fixed radius: one point per
    /// (method, code length), suitable for plotting.
    pub fn write_plot_data(&self, path: impl AsRef<Path>, radius: usize) -> Result<()> {
        let path = path.as_ref();
        let mut out = self.header();
        out.push_str(&format!("# precision-recall curve points at radius {radius}; one point per code length\n"));
        out.push_str("method\tcode_length\tmean_recall\tmean_precision\n");
        let mut rows: Vec<&EvalRow> = self.rows.iter().filter(|r| r.radius == radius).collect();
        rows.sort_by(|a, b| (&a.method, a.code_length).cmp(&(&b.method, b.code_length)));
        for r in rows {
            out.push_str(&format!(
                "{}\t{}\t{:.6}\t{:.6}\n",
                r.method, r.code_length, r.mean_recall, r.mean_precision
            ));
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}
