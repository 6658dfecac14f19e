//! Sparse document vectors, TF-IDF weighting, tokenization, train/test splits
//! and the on-disk sparse-vector format.
//!
//! Documents are m-dimensional sparse vectors. On disk they use the
//! conventional one-document-per-line format
//!
//! ```text
//! <label> <idx>:<weight> <idx>:<weight> ...
//! ```
//!
//! with 1-based ascending term indices, whitespace separation and `#` starting
//! a comment that runs to end of line. The label is a nonnegative integer, or
//! `?` for unlabelled documents. In memory term indices are 0-based.
//!
//! TF-IDF uses `tf * ln(n / df)` with no smoothing; terms present in every
//! document get weight 0 and are dropped. Vectors are not length-normalized:
//! cosine similarity is scale-free, and downstream hash-function training
//! consumes the weighted vectors as-is.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seeds;

/// Document identifier, stable across splits and persisted artifacts.
pub type DocId = u64;

/// Topic label identifier.
pub type Label = u32;

/// Whether a corpus plays the training or the query role in an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorpusRole {
    #[default]
    Train,
    Test,
}

/// One document as a sparse vector: sorted `(term_index, weight)` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDocVector {
    pub doc_id: DocId,
    entries: Vec<(u32, f64)>,
    pub label: Option<Label>,
}

impl SparseDocVector {
    /// Builds a vector, validating that term indices are strictly increasing
    /// and all weights finite. Pipeline corpora carry nonnegative weights
    /// (enforced by the loader and the weighting step); the type itself admits
    /// any finite value so that derived vectors such as negated copies remain
    /// representable.
    pub fn new(doc_id: DocId, entries: Vec<(u32, f64)>, label: Option<Label>) -> Result<Self> {
        let mut prev: Option<u32> = None;
        for &(term, weight) in &entries {
            if !weight.is_finite() {
                return Err(Error::NonFinite { doc_id, term });
            }
            if let Some(p) = prev {
                if term <= p {
                    return Err(Error::Parse {
                        path: String::new(),
                        line: 0,
                        msg: format!(
                            "document {doc_id}: term indices not strictly increasing ({p} then {term})"
                        ),
                    });
                }
            }
            prev = Some(term);
        }
        Ok(SparseDocVector {
            doc_id,
            entries,
            label,
        })
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Highest term index plus one; 0 for an empty vector.
    pub fn dim_bound(&self) -> u32 {
        self.entries.last().map_or(0, |&(t, _)| t + 1)
    }

    pub fn norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(_, w)| w * w)
            .sum::<f64>()
            .sqrt()
    }

    /// Sparse dot product over intersecting indices.
    pub fn dot(&self, other: &SparseDocVector) -> f64 {
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.entries, &other.entries);
        let mut acc = 0.0;
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }
}

/// An ordered collection of sparse documents over a fixed vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    docs: Vec<SparseDocVector>,
    vocab_size: u32,
    role: CorpusRole,
}

impl Corpus {
    /// Builds a corpus, validating that every term index fits the vocabulary
    /// and doc ids are unique.
    pub fn new(docs: Vec<SparseDocVector>, vocab_size: u32, role: CorpusRole) -> Result<Self> {
        let mut seen = HashSet::with_capacity(docs.len());
        for doc in &docs {
            if !seen.insert(doc.doc_id) {
                return Err(Error::DuplicateDocId(doc.doc_id));
            }
            if let Some(&(term, _)) = doc.entries.last() {
                if term >= vocab_size {
                    return Err(Error::TermIndexOutOfRange {
                        term,
                        vocab: vocab_size,
                    });
                }
            }
        }
        Ok(Corpus {
            docs,
            vocab_size,
            role,
        })
    }

    pub fn empty() -> Self {
        Corpus {
            docs: Vec::new(),
            vocab_size: 0,
            role: CorpusRole::Train,
        }
    }

    pub fn n(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn vocab_size(&self) -> u32 {
        self.vocab_size
    }

    pub fn role(&self) -> CorpusRole {
        self.role
    }

    pub fn with_role(mut self, role: CorpusRole) -> Self {
        self.role = role;
        self
    }

    pub fn docs(&self) -> &[SparseDocVector] {
        &self.docs
    }

    pub fn doc(&self, index: usize) -> &SparseDocVector {
        &self.docs[index]
    }

    pub fn doc_ids(&self) -> Vec<DocId> {
        self.docs.iter().map(|d| d.doc_id).collect()
    }

    pub fn norms(&self) -> Vec<f64> {
        self.docs.iter().map(|d| d.norm()).collect()
    }
}

/// Loads a corpus from the sparse-vector text format.
///
/// Parse is order-preserving; doc ids are assigned positionally (0, 1, ...).
/// The vocabulary size is inferred from the largest term index, or taken from
/// a `# vocab_size: m` comment when that declares more.
pub fn load_sparse(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    let mut vocab: u32 = 0;
    for (line_no, raw) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let line = match raw.find('#') {
            Some(pos) => {
                if let Some(decl) = raw[pos..].strip_prefix("# vocab_size:") {
                    if let Ok(m) = decl.trim().parse::<u32>() {
                        vocab = vocab.max(m);
                    }
                }
                &raw[..pos]
            }
            None => raw,
        };
        let mut tokens = line.split_whitespace();
        let Some(first) = tokens.next() else {
            continue;
        };
        let label = if first == "?" {
            None
        } else {
            Some(first.parse::<Label>().map_err(|_| {
                Error::parse(path, line_no, format!("bad label {first:?}"))
            })?)
        };
        let mut entries = Vec::new();
        let mut prev: Option<u32> = None;
        for tok in tokens {
            let (idx_s, w_s) = tok.split_once(':').ok_or_else(|| {
                Error::parse(path, line_no, format!("expected idx:weight, got {tok:?}"))
            })?;
            let idx_1based: u32 = idx_s.parse().map_err(|_| {
                Error::parse(path, line_no, format!("bad term index {idx_s:?}"))
            })?;
            if idx_1based == 0 {
                return Err(Error::parse(path, line_no, "term indices are 1-based"));
            }
            let weight: f64 = w_s.parse().map_err(|_| {
                Error::parse(path, line_no, format!("bad weight {w_s:?}"))
            })?;
            if !weight.is_finite() {
                return Err(Error::parse(path, line_no, format!("non-finite weight {w_s}")));
            }
            if weight < 0.0 {
                return Err(Error::parse(path, line_no, format!("negative weight {weight}")));
            }
            let idx = idx_1based - 1;
            if let Some(p) = prev {
                if idx == p {
                    return Err(Error::parse(
                        path,
                        line_no,
                        format!("duplicate term index {idx_1based}"),
                    ));
                }
                if idx < p {
                    return Err(Error::parse(
                        path,
                        line_no,
                        format!("term indices must ascend, got {idx_1based} after {}", p + 1),
                    ));
                }
            }
            prev = Some(idx);
            vocab = vocab.max(idx + 1);
            entries.push((idx, weight));
        }
        let doc_id = docs.len() as DocId;
        docs.push(SparseDocVector {
            doc_id,
            entries,
            label,
        });
    }
    Corpus::new(docs, vocab, CorpusRole::Train)
}

/// Writes a corpus in the sparse-vector text format (1-based indices).
pub fn save_sparse(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    out.push_str(&format!("# vocab_size: {}\n", corpus.vocab_size));
    for doc in &corpus.docs {
        match doc.label {
            Some(l) => out.push_str(&l.to_string()),
            None => out.push('?'),
        }
        for &(idx, w) in &doc.entries {
            out.push_str(&format!(" {}:{}", idx + 1, w));
        }
        out.push('\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Re-weights a corpus of raw term counts by `tf * ln(n / df)`.
///
/// Terms occurring in every document weight to zero and are dropped. Documents
/// left with no positive entry are excluded from the returned corpus; their
/// ids are returned (and logged) so callers can account for them.
pub fn tfidf_weight(raw: &Corpus) -> (Corpus, Vec<DocId>) {
    let n = raw.n();
    if n == 0 {
        return (raw.clone(), Vec::new());
    }
    let mut df = vec![0u32; raw.vocab_size as usize];
    for doc in &raw.docs {
        for &(term, count) in &doc.entries {
            if count > 0.0 {
                df[term as usize] += 1;
            }
        }
    }
    let nf = n as f64;
    let idf: Vec<f64> = df
        .iter()
        .map(|&d| if d == 0 { 0.0 } else { (nf / f64::from(d)).ln() })
        .collect();
    let mut docs = Vec::with_capacity(n);
    let mut dropped = Vec::new();
    for doc in &raw.docs {
        let entries: Vec<(u32, f64)> = doc
            .entries
            .iter()
            .filter_map(|&(term, count)| {
                let w = count * idf[term as usize];
                (w > 0.0).then_some((term, w))
            })
            .collect();
        if entries.is_empty() {
            dropped.push(doc.doc_id);
        } else {
            docs.push(SparseDocVector {
                doc_id: doc.doc_id,
                entries,
                label: doc.label,
            });
        }
    }
    if !dropped.is_empty() {
        log::warn!(
            "tf-idf weighting zeroed out {} document(s); excluded: {:?}",
            dropped.len(),
            dropped
        );
    }
    let corpus = Corpus {
        docs,
        vocab_size: raw.vocab_size,
        role: raw.role,
    };
    (corpus, dropped)
}

/// Lowercases, splits on non-alphanumeric characters, removes stopwords and
/// counts the surviving tokens. Stopwords are matched after lowercasing.
pub fn tokenize_basic(text: &str, stopwords: &HashSet<String>) -> HashMap<String, u32> {
    let mut counts = HashMap::new();
    for token in text.split(|c: char| !c.is_alphanumeric()) {
        if token.is_empty() {
            continue;
        }
        let token = token.to_lowercase();
        if stopwords.contains(&token) {
            continue;
        }
        *counts.entry(token).or_insert(0) += 1;
    }
    counts
}

/// Splits a corpus into disjoint train/test parts.
///
/// Deterministic for a fixed seed (substream "split"); the train part holds
/// `round(fraction * n)` documents and both parts keep the original document
/// order.
pub fn split(corpus: &Corpus, fraction: f64, seed: u64) -> Result<(Corpus, Corpus)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidFraction(fraction));
    }
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let n = corpus.n();
    let train_size = ((fraction * n as f64).round() as usize).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeds::substream(seed, "split"));
    let mut chosen = vec![false; n];
    for &i in order.iter().take(train_size) {
        chosen[i] = true;
    }
    let mut train_docs = Vec::with_capacity(train_size);
    let mut test_docs = Vec::with_capacity(n - train_size);
    for (i, doc) in corpus.docs.iter().enumerate() {
        if chosen[i] {
            train_docs.push(doc.clone());
        } else {
            test_docs.push(doc.clone());
        }
    }
    let train = Corpus {
        docs: train_docs,
        vocab_size: corpus.vocab_size,
        role: CorpusRole::Train,
    };
    let test = Corpus {
        docs: test_docs,
        vocab_size: corpus.vocab_size,
        role: CorpusRole::Test,
    };
    Ok((train, test))
}

/// Term string ↔ index mapping built during raw-text ingestion.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn term(&self, idx: u32) -> Option<&str> {
        self.terms.get(idx as usize).map(String::as_str)
    }

    fn get_or_insert(&mut self, term: &str) -> u32 {
        if let Some(&i) = self.index.get(term) {
            return i;
        }
        let i = self.terms.len() as u32;
        self.terms.push(term.to_owned());
        self.index.insert(term.to_owned(), i);
        i
    }

    /// One term per line; the line number is the 0-based index.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for t in &self.terms {
            out.push_str(t);
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut v = Vocabulary::new();
        for line in text.lines() {
            let term = line.trim();
            if !term.is_empty() {
                v.get_or_insert(term);
            }
        }
        Ok(v)
    }
}

/// Assembles a counts corpus from tokenized documents, maintaining the
/// vocabulary. With a frozen vocabulary, unseen terms are dropped.
#[derive(Debug)]
pub struct CorpusBuilder {
    vocab: Vocabulary,
    frozen: bool,
    docs: Vec<SparseDocVector>,
}

impl CorpusBuilder {
    pub fn new() -> Self {
        CorpusBuilder {
            vocab: Vocabulary::new(),
            frozen: false,
            docs: Vec::new(),
        }
    }

    /// Reuses an existing vocabulary; terms outside it are dropped.
    pub fn with_vocabulary(vocab: Vocabulary) -> Self {
        CorpusBuilder {
            vocab,
            frozen: true,
            docs: Vec::new(),
        }
    }

    pub fn add_document(&mut self, counts: &HashMap<String, u32>, label: Option<Label>) -> DocId {
        let mut entries: Vec<(u32, f64)> = Vec::with_capacity(counts.len());
        // Sort terms so index assignment is independent of hash-map order.
        let mut terms: Vec<(&str, u32)> = counts.iter().map(|(t, &c)| (t.as_str(), c)).collect();
        terms.sort_unstable();
        for (term, count) in terms {
            let idx = if self.frozen {
                match self.vocab.get(term) {
                    Some(i) => i,
                    None => continue,
                }
            } else {
                self.vocab.get_or_insert(term)
            };
            entries.push((idx, f64::from(count)));
        }
        entries.sort_unstable_by_key(|&(i, _)| i);
        let doc_id = self.docs.len() as DocId;
        self.docs.push(SparseDocVector {
            doc_id,
            entries,
            label,
        });
        doc_id
    }

    pub fn finish(self) -> (Corpus, Vocabulary) {
        let vocab_size = self.vocab.len() as u32;
        let corpus = Corpus {
            docs: self.docs,
            vocab_size,
            role: CorpusRole::Train,
        };
        (corpus, self.vocab)
    }
}

impl Default for CorpusBuilder {
    fn default() -> Self {
        Self::new()
    }
}
