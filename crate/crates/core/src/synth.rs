//! Deterministic synthetic labelled text corpora.
//!
//! Documents are sampled from per-topic unigram models: a Zipf-weighted
//! shared vocabulary plus a uniform topic-specific pool mixed in with
//! probability `topic_mass`. The same sampler can emit raw text (for
//! exercising tokenization and ingestion end to end) or count vectors
//! directly. Everything is reproducible from the seed.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, CorpusRole, DocId, SparseDocVector};
use crate::seeds;

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub topics: usize,
    pub docs_per_topic: usize,
    /// Background vocabulary size, shared by all topics (Zipf weights).
    pub shared_vocab: usize,
    /// Topic-specific vocabulary size per topic (uniform weights).
    pub topic_vocab: usize,
    /// Inclusive document length range in tokens.
    pub doc_len: (usize, usize),
    /// Probability that a token is drawn from the topic pool.
    pub topic_mass: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            topics: 8,
            docs_per_topic: 150,
            shared_vocab: 1500,
            topic_vocab: 120,
            doc_len: (60, 160),
            topic_mass: 0.5,
            seed: 7,
        }
    }
}

impl SynthConfig {
    pub fn n_docs(&self) -> usize {
        self.topics * self.docs_per_topic
    }

    pub fn vocab_size(&self) -> usize {
        self.shared_vocab + self.topics * self.topic_vocab
    }
}

struct Sampler {
    cfg: SynthConfig,
    shared_cdf: Vec<f64>,
}

impl Sampler {
    fn new(cfg: SynthConfig) -> Self {
        let mut acc = 0.0;
        let shared_cdf = (0..cfg.shared_vocab)
            .map(|r| {
                acc += 1.0 / (r + 1) as f64;
                acc
            })
            .collect();
        Sampler { cfg, shared_cdf }
    }

    /// Global term index of one sampled token for `topic`.
    fn token(&self, topic: usize, rng: &mut ChaCha8Rng) -> usize {
        if rng.random::<f64>() < self.cfg.topic_mass {
            self.cfg.shared_vocab
                + topic * self.cfg.topic_vocab
                + rng.random_range(0..self.cfg.topic_vocab)
        } else {
            let total = *self.shared_cdf.last().expect("nonempty shared vocab");
            let u = rng.random::<f64>() * total;
            self.shared_cdf.partition_point(|&c| c < u)
        }
    }

    fn doc_len(&self, rng: &mut ChaCha8Rng) -> usize {
        let (lo, hi) = self.cfg.doc_len;
        rng.random_range(lo..=hi)
    }

    /// Interleaved topic assignment, then shuffled.
    fn doc_topics(&self, rng: &mut ChaCha8Rng) -> Vec<usize> {
        use rand::seq::SliceRandom;
        let mut topics: Vec<usize> = (0..self.cfg.n_docs())
            .map(|i| i % self.cfg.topics)
            .collect();
        topics.shuffle(rng);
        topics
    }
}

fn word_for(cfg: &SynthConfig, term: usize) -> String {
    if term < cfg.shared_vocab {
        format!("w{term}")
    } else {
        let t = (term - cfg.shared_vocab) / cfg.topic_vocab;
        let j = (term - cfg.shared_vocab) % cfg.topic_vocab;
        format!("t{t}x{j}")
    }
}

/// Raw documents as `(topic_name, text)` pairs, whitespace-tokenizable.
pub fn generate_raw(cfg: &SynthConfig) -> Vec<(String, String)> {
    let sampler = Sampler::new(cfg.clone());
    let mut rng = seeds::substream(cfg.seed, "synth");
    let topics = sampler.doc_topics(&mut rng);
    topics
        .into_iter()
        .map(|topic| {
            let len = sampler.doc_len(&mut rng);
            let mut text = String::new();
            for i in 0..len {
                if i > 0 {
                    if i % 13 == 0 {
                        text.push_str(". ");
                    } else {
                        text.push(' ');
                    }
                }
                text.push_str(&word_for(&sampler.cfg, sampler.token(topic, &mut rng)));
            }
            (format!("topic{topic}"), text)
        })
        .collect()
}

/// Count-vector corpus straight from the sampler (no string round trip),
/// labelled by topic index.
pub fn generate_counts(cfg: &SynthConfig) -> Corpus {
    let sampler = Sampler::new(cfg.clone());
    let mut rng = seeds::substream(cfg.seed, "synth");
    let topics = sampler.doc_topics(&mut rng);
    let vocab = cfg.vocab_size() as u32;
    let docs: Vec<SparseDocVector> = topics
        .into_iter()
        .enumerate()
        .map(|(doc_id, topic)| {
            let len = sampler.doc_len(&mut rng);
            let mut counts: std::collections::BTreeMap<u32, f64> = std::collections::BTreeMap::new();
            for _ in 0..len {
                *counts
                    .entry(sampler.token(topic, &mut rng) as u32)
                    .or_insert(0.0) += 1.0;
            }
            SparseDocVector::new(
                doc_id as DocId,
                counts.into_iter().collect(),
                Some(topic as u32),
            )
            .expect("sampled entries are sorted and finite")
        })
        .collect();
    Corpus::new(docs, vocab, CorpusRole::Train).expect("fresh ids are unique")
}
