//! Sparse cosine k-nearest-neighbour similarity graph.
//!
//! `W_ij` is the cosine similarity of documents i and j whenever i is among
//! the k nearest neighbours of j *or* vice versa (OR-symmetrized), and 0
//! otherwise. A document is never its own neighbour. The degree vector
//! `D_ii = Σ_j W_ij` is kept alongside.
//!
//! Construction is the brute-force all-pairs scan, O(n²s) for average
//! document size s: rows are computed in parallel, then a single-threaded
//! symmetrization pass merges the neighbour lists. Ties in the k-th
//! neighbour similarity break by ascending document index so builds are
//! reproducible.

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::{Corpus, SparseDocVector};
use crate::error::{Error, Result};

/// Symmetric similarity graph with per-row adjacency lists and degrees.
#[derive(Debug, Clone)]
pub struct SimilarityGraph {
    rows: Vec<Vec<(u32, f64)>>,
    degrees: Vec<f64>,
    k: usize,
}

impl SimilarityGraph {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Neighbours of node `i` as `(node, weight)` sorted by node.
    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.rows[i]
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// Number of stored (undirected) edges.
    pub fn edge_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Nodes whose similarity row is entirely zero.
    pub fn isolated_nodes(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.rows[i].is_empty()).collect()
    }

    /// Builds a graph directly from symmetric edges; used by tests and the
    /// loader. Edges are given once with i < j.
    pub fn from_edges(n: usize, k: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for &(i, j, w) in edges {
            if i >= j || j >= n {
                return Err(Error::SizeMismatch {
                    what: "edge endpoints",
                    left: i,
                    right: j,
                });
            }
            if w == 0.0 {
                continue;
            }
            rows[i].push((j as u32, w));
            rows[j].push((i as u32, w));
        }
        Ok(Self::finish(rows, k))
    }

    fn finish(mut rows: Vec<Vec<(u32, f64)>>, k: usize) -> Self {
        for row in &mut rows {
            row.sort_unstable_by_key(|&(j, _)| j);
        }
        let degrees = rows
            .iter()
            .map(|row| row.iter().map(|&(_, w)| w).sum())
            .collect();
        SimilarityGraph { rows, degrees, k }
    }

    /// Writes the graph as `n k` header plus `i j w` lines (0-based, i < j).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = format!("{} {}\n", self.n(), self.k);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                if (j as usize) > i {
                    out.push_str(&format!("{} {} {}\n", i, j, w));
                }
            }
        }
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::format(path, "missing header"))?;
        let mut parts = header.split_whitespace();
        let n: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(path, "bad n in header"))?;
        let k: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(path, "bad k in header"))?;
        let mut edges = Vec::new();
        for (line_no, line) in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut p = line.split_whitespace();
            let missing = || Error::parse(path, line_no + 1, "expected `i j w`");
            let i: usize = p
                .next()
                .ok_or_else(missing)?
                .parse()
                .map_err(|_| Error::parse(path, line_no + 1, "bad i"))?;
            let j: usize = p
                .next()
                .ok_or_else(missing)?
                .parse()
                .map_err(|_| Error::parse(path, line_no + 1, "bad j"))?;
            let w: f64 = p
                .next()
                .ok_or_else(missing)?
                .parse()
                .map_err(|_| Error::parse(path, line_no + 1, "bad weight"))?;
            if i >= j || j >= n {
                return Err(Error::parse(path, line_no + 1, "edge must have i < j < n"));
            }
            edges.push((i, j, w));
        }
        Self::from_edges(n, k, &edges)
    }
}

/// Cosine similarity of two sparse vectors. Errors on a zero-norm input.
pub fn cosine(a: &SparseDocVector, b: &SparseDocVector) -> Result<f64> {
    let na = a.norm();
    if na == 0.0 {
        return Err(Error::ZeroNorm { doc_id: a.doc_id });
    }
    let nb = b.norm();
    if nb == 0.0 {
        return Err(Error::ZeroNorm { doc_id: b.doc_id });
    }
    Ok(a.dot(b) / (na * nb))
}

/// Top-k candidates by similarity, descending; ties break by ascending index.
fn top_k(mut cands: Vec<(usize, f64)>, k: usize) -> Vec<(usize, f64)> {
    let cmp = |a: &(usize, f64), b: &(usize, f64)| {
        b.1.partial_cmp(&a.1)
            .expect("similarities are finite")
            .then(a.0.cmp(&b.0))
    };
    if cands.len() > k {
        cands.select_nth_unstable_by(k - 1, cmp);
        cands.truncate(k);
    }
    cands.sort_unstable_by(cmp);
    cands
}

/// Similarities of document `i` against every other document, via a dense
/// scatter of document `i`'s entries.
fn similarities_to_all(corpus: &Corpus, norms: &[f64], buf: &mut [f64], i: usize) -> Vec<f64> {
    let docs = corpus.docs();
    for &(t, w) in docs[i].entries() {
        buf[t as usize] = w;
    }
    let mut sims = Vec::with_capacity(docs.len());
    for (j, doc) in docs.iter().enumerate() {
        if j == i {
            sims.push(0.0);
            continue;
        }
        let mut dot = 0.0;
        for &(t, w) in doc.entries() {
            dot += buf[t as usize] * w;
        }
        sims.push(dot / (norms[i] * norms[j]));
    }
    for &(t, _) in docs[i].entries() {
        buf[t as usize] = 0.0;
    }
    sims
}

fn validate_norms(corpus: &Corpus) -> Result<Vec<f64>> {
    let norms = corpus.norms();
    for (i, &n) in norms.iter().enumerate() {
        if n == 0.0 {
            return Err(Error::ZeroNorm {
                doc_id: corpus.doc(i).doc_id,
            });
        }
    }
    Ok(norms)
}

/// Builds the OR-symmetrized cosine k-NN graph.
///
/// Every node's k nearest neighbours (self excluded) are computed by
/// brute-force scan; `W_ij` is set to the pair's cosine whenever either node
/// selected the other. Exact-zero similarities inside a top-k list add no
/// stored entry, so fully orthogonal neighbourhoods surface as isolated nodes
/// (flagged via a warning and [`SimilarityGraph::isolated_nodes`]).
pub fn build_knn_graph(corpus: &Corpus, k: usize) -> Result<SimilarityGraph> {
    let n = corpus.n();
    if k == 0 || k >= n {
        return Err(Error::InvalidK { k, n });
    }
    let norms = validate_norms(corpus)?;
    let m = corpus.vocab_size() as usize;

    let neighbour_lists: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map_init(
            || vec![0.0f64; m],
            |buf, i| {
                let sims = similarities_to_all(corpus, &norms, buf, i);
                let cands: Vec<(usize, f64)> = sims
                    .into_iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .collect();
                top_k(cands, k)
            },
        )
        .collect();

    let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    let mut seen = std::collections::HashSet::new();
    for (i, list) in neighbour_lists.iter().enumerate() {
        for &(j, w) in list {
            if w == 0.0 {
                continue;
            }
            let key = (i.min(j), i.max(j));
            if seen.insert(key) {
                rows[i].push((j as u32, w));
                rows[j].push((i as u32, w));
            }
        }
    }
    let graph = SimilarityGraph::finish(rows, k);
    let isolated = graph.isolated_nodes();
    if !isolated.is_empty() {
        log::warn!(
            "{} node(s) have an all-zero similarity row: {:?}",
            isolated.len(),
            isolated
        );
    }
    Ok(graph)
}

/// Exact top-k cosine neighbours of one document within its corpus, self
/// excluded, descending similarity with ties broken by ascending index.
pub fn knn_of(corpus: &Corpus, query_index: usize, k: usize) -> Result<Vec<(usize, f64)>> {
    let n = corpus.n();
    if query_index >= n {
        return Err(Error::DocIndexOutOfRange {
            index: query_index,
            n,
        });
    }
    if k == 0 || k >= n {
        return Err(Error::InvalidK { k, n });
    }
    let norms = validate_norms(corpus)?;
    let mut buf = vec![0.0f64; corpus.vocab_size() as usize];
    let sims = similarities_to_all(corpus, &norms, &mut buf, query_index);
    let cands: Vec<(usize, f64)> = sims
        .into_iter()
        .enumerate()
        .filter(|&(j, _)| j != query_index)
        .collect();
    Ok(top_k(cands, k))
}

/// Top-k cosine neighbours of an external query vector over a corpus.
/// Used for ground-truth construction; same tie rule as [`knn_of`].
pub fn knn_of_query(
    corpus: &Corpus,
    query: &SparseDocVector,
    k: usize,
) -> Result<Vec<(usize, f64)>> {
    let n = corpus.n();
    if k == 0 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    let qn = query.norm();
    if qn == 0.0 {
        return Err(Error::ZeroNorm {
            doc_id: query.doc_id,
        });
    }
    let cands: Vec<(usize, f64)> = corpus
        .docs()
        .iter()
        .enumerate()
        .map(|(j, doc)| {
            let nj = doc.norm();
            let s = if nj == 0.0 {
                f64::NEG_INFINITY
            } else {
                query.dot(doc) / (qn * nj)
            };
            (j, s)
        })
        .collect();
    Ok(top_k(cands, k))
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)] // dense-matrix oracles read best with indices
mod tests {
    use super::*;
    use crate::corpus::{CorpusRole, DocId};

    fn doc(id: DocId, entries: &[(u32, f64)]) -> SparseDocVector {
        SparseDocVector::new(id, entries.to_vec(), None).unwrap()
    }

    fn corpus(docs: Vec<SparseDocVector>) -> Corpus {
        let m = docs.iter().map(|d| d.dim_bound()).max().unwrap_or(0);
        Corpus::new(docs, m, CorpusRole::Train).unwrap()
    }

    #[test]
    fn cosine_examples() {
        let a = doc(0, &[(0, 1.0), (1, 2.0)]);
        let b = doc(1, &[(1, 2.0), (2, 1.0)]);
        let c = doc(2, &[(3, 5.0)]);
        assert!((cosine(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&a, &c).unwrap(), 0.0);
        assert!((cosine(&a, &b).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn cosine_rejects_zero_norm() {
        let a = doc(0, &[(0, 1.0)]);
        let z = doc(9, &[]);
        assert!(matches!(
            cosine(&a, &z),
            Err(Error::ZeroNorm { doc_id: 9 })
        ));
    }

    /// Full n×n cosine matrix with the OR rule applied literally.
    fn brute_force_graph(c: &Corpus, k: usize) -> Vec<Vec<f64>> {
        let n = c.n();
        let mut sim = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    sim[i][j] = cosine(c.doc(i), c.doc(j)).unwrap();
                }
            }
        }
        // N_k per node: top-k by (sim desc, index asc), self excluded.
        let mut nk: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            let mut cands: Vec<(usize, f64)> =
                (0..n).filter(|&j| j != i).map(|j| (j, sim[i][j])).collect();
            cands.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            nk.push(cands.into_iter().take(k).map(|(j, _)| j).collect());
        }
        let mut w = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j && (nk[i].contains(&j) || nk[j].contains(&i)) {
                    w[i][j] = sim[i][j];
                }
            }
        }
        w
    }

    fn dense_of(g: &SimilarityGraph) -> Vec<Vec<f64>> {
        let n = g.n();
        let mut w = vec![vec![0.0; n]; n];
        for i in 0..n {
            for &(j, v) in g.row(i) {
                w[i][j as usize] = v;
            }
        }
        w
    }

    #[test]
    fn three_mutually_similar_docs_match_oracle() {
        let c = corpus(vec![
            doc(0, &[(0, 1.0), (1, 0.2)]),
            doc(1, &[(0, 1.0), (1, 0.3)]),
            doc(2, &[(0, 1.0), (2, 0.4)]),
        ]);
        let g = build_knn_graph(&c, 1).unwrap();
        let expect = brute_force_graph(&c, 1);
        let got = dense_of(&g);
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (got[i][j] - expect[i][j]).abs() < 1e-12,
                    "W[{i}][{j}] = {} vs {}",
                    got[i][j],
                    expect[i][j]
                );
            }
        }
    }

    #[test]
    fn orthogonal_docs_give_zero_graph() {
        let c = corpus((0..4).map(|i| doc(i, &[(i as u32, 1.0)])).collect());
        let g = build_knn_graph(&c, 2).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert!(g.degrees().iter().all(|&d| d == 0.0));
        assert_eq!(g.isolated_nodes(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn duplicate_docs_are_mutual_neighbours() {
        let c = corpus(vec![
            doc(0, &[(0, 2.0)]),
            doc(1, &[(0, 4.0)]),
            doc(2, &[(5, 1.0)]),
        ]);
        let g = build_knn_graph(&c, 1).unwrap();
        let w01 = g.row(0).iter().find(|&&(j, _)| j == 1).map(|&(_, w)| w);
        assert_eq!(w01, Some(1.0));
    }

    #[test]
    fn random_small_corpora_match_brute_force() {
        use rand::Rng;
        let mut rng = crate::seeds::substream(11, "knn-test");
        for trial in 0..8 {
            let n = 10 + trial * 7;
            let m = 25u32;
            let docs: Vec<SparseDocVector> = (0..n)
                .map(|i| {
                    let nnz = rng.random_range(2..6);
                    let mut terms: Vec<u32> = (0..m).collect();
                    // partial Fisher-Yates for distinct term picks
                    for t in 0..nnz {
                        let r = rng.random_range(t..m as usize);
                        terms.swap(t, r);
                    }
                    let mut entries: Vec<(u32, f64)> = terms[..nnz]
                        .iter()
                        .map(|&t| (t, rng.random_range(0.1..2.0)))
                        .collect();
                    entries.sort_unstable_by_key(|&(t, _)| t);
                    SparseDocVector::new(i as DocId, entries, None).unwrap()
                })
                .collect();
            let c = corpus(docs);
            let k = rng.random_range(1..5);
            let g = build_knn_graph(&c, k).unwrap();
            let got = dense_of(&g);
            let expect = brute_force_graph(&c, k);
            for i in 0..n {
                for j in 0..n {
                    assert!(
                        (got[i][j] - expect[i][j]).abs() < 1e-12,
                        "n={n} k={k} W[{i}][{j}]"
                    );
                }
            }
            // Structural invariants: symmetry, zero diagonal, degrees as
            // exact row sums, total sparsity <= 2kn (a single row can exceed
            // 2k when many nodes select the same hub).
            let mut total_entries = 0;
            for i in 0..n {
                total_entries += g.row(i).len();
                assert!((got[i][i]).abs() == 0.0);
                let sum: f64 = g.row(i).iter().map(|&(_, w)| w).sum();
                assert_eq!(sum, g.degrees()[i]);
                for &(j, w) in g.row(i) {
                    let back = g.row(j as usize).iter().find(|&&(jj, _)| jj as usize == i);
                    assert_eq!(back.map(|&(_, w2)| w2), Some(w));
                }
            }
            assert!(total_entries <= 2 * k * n);
            assert!(g.edge_count() <= k * n);
        }
    }

    #[test]
    fn build_rejects_bad_k_and_zero_norm() {
        let c = corpus(vec![doc(0, &[(0, 1.0)]), doc(1, &[(1, 1.0)])]);
        assert!(matches!(
            build_knn_graph(&c, 2),
            Err(Error::InvalidK { k: 2, n: 2 })
        ));
        let z = corpus(vec![doc(0, &[(0, 1.0)]), doc(7, &[]), doc(2, &[(1, 1.0)])]);
        assert!(matches!(
            build_knn_graph(&z, 1),
            Err(Error::ZeroNorm { doc_id: 7 })
        ));
    }

    #[test]
    fn knn_of_two_docs() {
        let c = corpus(vec![doc(0, &[(0, 1.0)]), doc(1, &[(0, 2.0), (1, 1.0)])]);
        let nn = knn_of(&c, 0, 1).unwrap();
        assert_eq!(nn.len(), 1);
        assert_eq!(nn[0].0, 1);
    }

    #[test]
    fn knn_of_tie_rule_prefers_low_index() {
        // All pairwise similarities equal -> the k lowest-indexed others win.
        let c = corpus((0..5).map(|i| doc(i, &[(0, (i + 1) as f64)])).collect());
        let nn = knn_of(&c, 3, 2).unwrap();
        let idx: Vec<usize> = nn.iter().map(|&(j, _)| j).collect();
        assert_eq!(idx, vec![0, 1]);
    }

    #[test]
    fn knn_of_matches_exhaustive_sort() {
        use rand::Rng;
        let mut rng = crate::seeds::substream(3, "knn-of");
        let docs: Vec<SparseDocVector> = (0..20)
            .map(|i| {
                let entries: Vec<(u32, f64)> = (0..6)
                    .map(|t| (t, rng.random_range(0.01..1.0)))
                    .collect();
                SparseDocVector::new(i, entries, None).unwrap()
            })
            .collect();
        let c = corpus(docs);
        let got = knn_of(&c, 7, 5).unwrap();
        let mut all: Vec<(usize, f64)> = (0..20)
            .filter(|&j| j != 7)
            .map(|j| (j, cosine(c.doc(7), c.doc(j)).unwrap()))
            .collect();
        all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        assert_eq!(got.len(), 5);
        for (g, e) in got.iter().zip(all.iter()) {
            assert_eq!(g.0, e.0);
            assert!((g.1 - e.1).abs() < 1e-15);
        }
    }

    #[test]
    fn knn_of_rejects_out_of_range() {
        let c = corpus(vec![doc(0, &[(0, 1.0)]), doc(1, &[(0, 1.0)])]);
        assert!(matches!(
            knn_of(&c, 2, 1),
            Err(Error::DocIndexOutOfRange { index: 2, n: 2 })
        ));
    }

    #[test]
    fn graph_save_load_round_trip() {
        let c = corpus(vec![
            doc(0, &[(0, 1.0), (1, 0.5)]),
            doc(1, &[(0, 1.0)]),
            doc(2, &[(1, 1.0), (2, 0.25)]),
        ]);
        let g = build_knn_graph(&c, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("graph.txt");
        g.save(&p).unwrap();
        let back = SimilarityGraph::load(&p).unwrap();
        assert_eq!(back.n(), g.n());
        assert_eq!(back.k(), g.k());
        for i in 0..g.n() {
            assert_eq!(back.row(i), g.row(i));
            assert_eq!(back.degrees()[i], g.degrees()[i]);
        }
    }
}
