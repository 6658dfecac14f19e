//! Deterministic RNG substreams.
//!
//! Every random choice in the pipeline (corpus splits, SVM coordinate
//! permutations, LSH projections, synthetic data) flows from a single `u64`
//! seed through a *named* substream, so adding or reordering one consumer can
//! never shift another consumer's stream. ChaCha8 is used throughout: it is
//! portable, seekable, and its output is stable for a pinned dependency.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// FNV-1a over the label bytes; maps substream names to ChaCha stream ids.
fn fnv1a(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Returns the RNG for substream `label` of `seed`.
pub fn substream(seed: u64, label: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(label));
    rng
}
