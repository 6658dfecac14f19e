//! Shared fixtures for the criterion benches.

use rand::Rng;

use sth_core::hashcodes::{BitCode, CodeMatrix};
use sth_core::seeds::substream;
use sth_core::synth::{generate_counts, SynthConfig};
use sth_core::{tfidf_weight, Corpus, DocId};

/// Random code matrix with sequential doc ids.
pub fn random_codes(n: usize, bits: usize, seed: u64) -> (CodeMatrix, Vec<DocId>) {
    let mut rng = substream(seed, "bench-codes");
    let mut codes = CodeMatrix::new(bits).expect("bits in 1..=64");
    for _ in 0..n {
        codes
            .push(BitCode::new(rng.random::<u64>(), bits).expect("bits in 1..=64"))
            .expect("length matches");
    }
    (codes, (0..n as u64).collect())
}

/// TF-IDF weighted synthetic topic corpus of roughly `n` documents.
pub fn weighted_corpus(n: usize, seed: u64) -> Corpus {
    let topics = 8;
    let cfg = SynthConfig {
        topics,
        docs_per_topic: n.div_ceil(topics),
        shared_vocab: 1200,
        topic_vocab: 100,
        doc_len: (60, 140),
        topic_mass: 0.5,
        seed,
    };
    let (weighted, _) = tfidf_weight(&generate_counts(&cfg));
    weighted
}
