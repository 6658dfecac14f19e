//! Data-oblivious sign-LSH baseline.
//!
//! Bit p of a code is the sign of a random Gaussian projection `r_p · x`
//! (on iff positive, matching the hash-function sign rule). The model is
//! fully determined by `(seed, l, m)`: projections come from a ChaCha8
//! substream through an explicit Box–Muller transform, so persisting the
//! seed and dimensions regenerates the matrix bit-exactly.

use std::fs;
use std::path::Path;

use rand::Rng;

use crate::corpus::SparseDocVector;
use crate::error::{Error, Result};
use crate::hashcodes::{BitCode, Encoder};
use crate::seeds;

/// Box–Muller over 53-bit uniforms; emits pairs, caching the second deviate.
struct NormalSource<R: Rng> {
    rng: R,
    cached: Option<f64>,
}

impl<R: Rng> NormalSource<R> {
    fn new(rng: R) -> Self {
        NormalSource { rng, cached: None }
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.cached.take() {
            return z;
        }
        let u1: f64 = 1.0 - self.rng.random::<f64>(); // (0, 1]
        let u2: f64 = self.rng.random();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.cached = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// Random hyperplane model: l projection rows over an m-term vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct LshModel {
    seed: u64,
    rows: Vec<Vec<f64>>,
    vocab_size: usize,
}

/// Draws the projection matrix; independent of any corpus by construction.
pub fn lsh_train(vocab_size: usize, bits: usize, seed: u64) -> Result<LshModel> {
    if vocab_size == 0 || bits == 0 {
        return Err(Error::Config(format!(
            "lsh needs vocab_size >= 1 and bits >= 1 (got m={vocab_size}, l={bits})"
        )));
    }
    let mut source = NormalSource::new(seeds::substream(seed, "lsh"));
    let rows = (0..bits)
        .map(|_| (0..vocab_size).map(|_| source.next()).collect())
        .collect();
    Ok(LshModel {
        seed,
        rows,
        vocab_size,
    })
}

impl LshModel {
    pub fn bits(&self) -> usize {
        self.rows.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn row(&self, p: usize) -> &[f64] {
        &self.rows[p]
    }

    /// Per-projection signs (`r_p · x > 0`); usable beyond the 64-bit code
    /// cap, e.g. for collision-rate measurements at large l.
    pub fn signs(&self, doc: &SparseDocVector) -> Result<Vec<bool>> {
        if let Some(&(term, _)) = doc.entries().last() {
            if term as usize >= self.vocab_size {
                return Err(Error::TermIndexOutOfRange {
                    term,
                    vocab: self.vocab_size as u32,
                });
            }
        }
        Ok(self
            .rows
            .iter()
            .map(|row| {
                let dot: f64 = doc
                    .entries()
                    .iter()
                    .map(|&(t, v)| row[t as usize] * v)
                    .sum();
                dot > 0.0
            })
            .collect())
    }

    /// Packs the projection signs into a code (requires l <= 64).
    pub fn code(&self, doc: &SparseDocVector) -> Result<BitCode> {
        if self.bits() > 64 {
            return Err(Error::CodeLength(self.bits()));
        }
        BitCode::from_bits(&self.signs(doc)?)
    }

    /// Persists seed + dimensions only; loading regenerates the matrix.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let out = format!("sth-lsh 1\n{} {} {}\n", self.seed, self.bits(), self.vocab_size);
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<LshModel> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines();
        match lines.next() {
            Some("sth-lsh 1") => {}
            other => return Err(Error::format(path, format!("unknown header {other:?}"))),
        }
        let body = lines
            .next()
            .ok_or_else(|| Error::format(path, "missing dimensions"))?;
        let mut parts = body.split_whitespace();
        let mut take = |name: &str| -> Result<u64> {
            parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::format(path, format!("bad {name}")))
        };
        let seed = take("seed")?;
        let bits = take("bits")? as usize;
        let vocab = take("vocab_size")? as usize;
        lsh_train(vocab, bits, seed)
    }
}

impl Encoder for LshModel {
    fn code_len(&self) -> usize {
        self.bits()
    }

    fn encode(&self, doc: &SparseDocVector) -> Result<BitCode> {
        self.code(doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: u64, entries: &[(u32, f64)]) -> SparseDocVector {
        SparseDocVector::new(id, entries.to_vec(), None).unwrap()
    }

    #[test]
    fn same_seed_same_model() {
        let a = lsh_train(100, 8, 3).unwrap();
        let b = lsh_train(100, 8, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_seeds_differ() {
        let a = lsh_train(50, 4, 1).unwrap();
        let b = lsh_train(50, 4, 2).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn shape() {
        let m = lsh_train(1000, 64, 9).unwrap();
        assert_eq!(m.bits(), 64);
        assert_eq!(m.row(0).len(), 1000);
        assert_eq!(m.row(63).len(), 1000);
    }

    #[test]
    fn positive_scaling_leaves_code_unchanged() {
        let m = lsh_train(10, 16, 5).unwrap();
        let x = doc(0, &[(1, 0.5), (4, 1.5)]);
        let x2 = doc(1, &[(1, 1.0), (4, 3.0)]);
        assert_eq!(m.code(&x).unwrap(), m.code(&x2).unwrap());
    }

    #[test]
    fn negation_complements_code() {
        let m = lsh_train(10, 16, 5).unwrap();
        let x = doc(0, &[(2, 0.7), (8, 0.9)]);
        let neg = SparseDocVector::new(1, vec![(2, -0.7), (8, -0.9)], None).unwrap();
        let cx = m.code(&x).unwrap();
        let cn = m.code(&neg).unwrap();
        assert_eq!(cn, cx.complement());
    }

    #[test]
    fn rejects_out_of_vocabulary() {
        let m = lsh_train(4, 4, 1).unwrap();
        let x = doc(0, &[(9, 1.0)]);
        assert!(matches!(
            m.code(&x),
            Err(Error::TermIndexOutOfRange { term: 9, .. })
        ));
    }

    #[test]
    fn collision_rate_approaches_angle_over_pi() {
        // Unit vectors at angle θ disagree on a random-hyperplane bit with
        // probability θ/π; at l = 10^4 the sample fraction sits within ~4σ.
        let l = 10_000;
        let m = lsh_train(2, l, 11).unwrap();
        for &theta in &[0.25f64, 0.8, 1.4] {
            let x = doc(0, &[(0, 1.0)]);
            let y = SparseDocVector::new(
                1,
                vec![(0, theta.cos()), (1, theta.sin())],
                None,
            )
            .unwrap();
            let sx = m.signs(&x).unwrap();
            let sy = m.signs(&y).unwrap();
            let differing = sx.iter().zip(&sy).filter(|(a, b)| a != b).count();
            let frac = differing as f64 / l as f64;
            let expect = theta / std::f64::consts::PI;
            let sigma = (expect * (1.0 - expect) / l as f64).sqrt();
            assert!(
                (frac - expect).abs() < 4.0 * sigma + 1e-3,
                "theta {theta}: {frac} vs {expect}"
            );
        }
    }

    #[test]
    fn save_load_regenerates_bit_exactly() {
        let m = lsh_train(30, 12, 77).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("lsh.txt");
        m.save(&p).unwrap();
        let back = LshModel::load(&p).unwrap();
        assert_eq!(back, m);
    }
}
