//! Self-taught hashing for fast similarity search over sparse document corpora.
//!
//! The pipeline learns compact binary codes in two stages:
//!
//! 1. **unsupervised** — build a cosine k-nearest-neighbour graph
//!    ([`knn_graph`]), embed the documents with the smallest non-trivial
//!    generalized eigenvectors of `L v = λ D v` ([`spectral`]), and binarize
//!    every embedding dimension at its median so each bit splits the corpus in
//!    half;
//! 2. **supervised** — treat each bit of the learned codes as a binary label
//!    and train one linear SVM per bit ([`hashfn`]), so documents never seen
//!    during embedding can be coded with `l` sparse dot products.
//!
//! Retrieval is a Hamming-ball lookup over a code → documents index
//! ([`hashcodes`]). [`eval`] scores retrieval with macro-averaged
//! precision/recall/F1 against exact-cosine-neighbour or same-topic ground
//! truth, and [`baselines`] provides a data-oblivious sign-LSH reference point
//! that plugs into the same harness.

pub mod baselines;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod hashcodes;
pub mod hashfn;
pub mod knn_graph;
pub mod seeds;
pub mod spectral;
pub mod synth;

pub use baselines::{lsh_train, LshModel};
pub use corpus::{
    load_sparse, save_sparse, split, tfidf_weight, tokenize_basic, Corpus, CorpusRole, DocId,
    Label, SparseDocVector, Vocabulary,
};
pub use error::{Error, Result};
pub use eval::{
    ground_truth_knn, ground_truth_topic, prf, sweep, EvalReport, EvalRow, GroundTruth, TruthKind,
};
pub use hashcodes::{
    ball, ball_size, build_index, hamming, BitCode, CodeIndex, CodeMatrix, Encoder,
};
pub use hashfn::{train_all, train_bit, BitTrainStats, HashModel, LinearModel, TrainConfig, TrainStats};
pub use knn_graph::{build_knn_graph, cosine, knn_of, SimilarityGraph};
pub use spectral::{
    laplacian, median_binarize, solve_lapeig, solve_lapeig_with, weighted_hamming_objective,
    BinarizationThresholds, EigenStrategy, Embedding, SolverStats,
};
