//! Per-bit linear SVM hash functions.
//!
//! Each bit of the self-taught codes is treated as a binary label and one
//! linear SVM (no bias term, decision `sgn(wᵀx)` with `sgn(0) = −1`) is
//! trained per bit by minimising
//!
//! ```text
//! (1/2) wᵀw + (C/n) Σ ξ_i    s.t.  y_i wᵀ x_i ≥ 1 − ξ_i,  ξ_i ≥ 0
//! ```
//!
//! via dual coordinate descent with a random permutation per epoch and the
//! usual shrinking heuristic; the stopping rule bounds the spread of the
//! projected gradient extremes. Every bit consumes an identical permutation
//! stream derived from the config seed, so identical label columns produce
//! identical weight vectors and per-bit training parallelism cannot perturb
//! results.

use std::fs;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, SparseDocVector};
use crate::error::{Error, Result};
use crate::hashcodes::{BitCode, CodeMatrix, Encoder};
use crate::seeds;

/// SVM training configuration. `C` follows the regularised objective above;
/// `tolerance` bounds the projected-gradient spread at termination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub c: f64,
    pub tolerance: f64,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: 1.0,
            tolerance: 1e-3,
            max_epochs: 1000,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.c) || !positive(self.tolerance) || self.max_epochs == 0 {
            return Err(Error::Config(format!(
                "need c > 0, tolerance > 0, max_epochs > 0 (got c={}, tolerance={}, max_epochs={})",
                self.c, self.tolerance, self.max_epochs
            )));
        }
        Ok(())
    }
}

/// Dense weight vector for one bit's decision function `sgn(wᵀx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub bit_index: usize,
    weights: Vec<f64>,
}

impl LinearModel {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn decision(&self, doc: &SparseDocVector) -> f64 {
        doc.entries()
            .iter()
            .map(|&(t, v)| self.weights[t as usize] * v)
            .sum()
    }

    /// Predicted bit: on iff `wᵀx > 0`.
    pub fn predict(&self, doc: &SparseDocVector) -> bool {
        self.decision(doc) > 0.0
    }
}

/// l per-bit linear models over a shared vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct HashModel {
    models: Vec<LinearModel>,
    vocab_size: usize,
    config: TrainConfig,
}

impl HashModel {
    pub fn code_len(&self) -> usize {
        self.models.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn model(&self, p: usize) -> &LinearModel {
        &self.models[p]
    }

    /// Codes an unseen document with l sparse dot products.
    pub fn predict_code(&self, doc: &SparseDocVector) -> Result<BitCode> {
        if let Some(&(term, _)) = doc.entries().last() {
            if term as usize >= self.vocab_size {
                return Err(Error::TermIndexOutOfRange {
                    term,
                    vocab: self.vocab_size as u32,
                });
            }
        }
        let mut bits = 0u64;
        for (p, m) in self.models.iter().enumerate() {
            if m.predict(doc) {
                bits |= 1u64 << p;
            }
        }
        BitCode::new(bits, self.models.len())
    }
}

impl Encoder for HashModel {
    fn code_len(&self) -> usize {
        self.code_len()
    }

    fn encode(&self, doc: &SparseDocVector) -> Result<BitCode> {
        self.predict_code(doc)
    }
}

/// Per-bit training diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BitTrainStats {
    pub bit_index: usize,
    pub epochs: usize,
    pub converged: bool,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub relative_gap: f64,
    pub train_accuracy: f64,
    pub single_class: bool,
    pub alpha_min: f64,
    pub alpha_max: f64,
}

/// Diagnostics for a whole model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainStats {
    pub per_bit: Vec<BitTrainStats>,
}

impl TrainStats {
    pub fn mean_accuracy(&self) -> f64 {
        if self.per_bit.is_empty() {
            return 0.0;
        }
        self.per_bit.iter().map(|b| b.train_accuracy).sum::<f64>() / self.per_bit.len() as f64
    }
}

/// Trains one bit's SVM on ±1 labels. Single-class label vectors train
/// anyway (the model then predicts that class everywhere) with a warning.
pub fn train_bit(
    train: &Corpus,
    labels: &[i8],
    cfg: &TrainConfig,
) -> Result<(LinearModel, BitTrainStats)> {
    train_bit_indexed(train, labels, cfg, 0)
}

fn train_bit_indexed(
    train: &Corpus,
    labels: &[i8],
    cfg: &TrainConfig,
    bit_index: usize,
) -> Result<(LinearModel, BitTrainStats)> {
    cfg.validate()?;
    let n = train.n();
    if labels.len() != n {
        return Err(Error::SizeMismatch {
            what: "labels vs documents",
            left: labels.len(),
            right: n,
        });
    }
    let single_class = {
        let pos = labels.iter().filter(|&&y| y > 0).count();
        pos == 0 || pos == n
    };
    if single_class && n > 0 {
        log::warn!("bit {bit_index}: single-class labels; every prediction will match that class");
    }

    let upper = cfg.c / n.max(1) as f64;
    let docs = train.docs();
    let sq_norms: Vec<f64> = docs.iter().map(|d| d.entries().iter().map(|&(_, v)| v * v).sum()).collect();
    let y: Vec<f64> = labels.iter().map(|&v| if v > 0 { 1.0 } else { -1.0 }).collect();

    let mut w = vec![0.0f64; train.vocab_size() as usize];
    let mut alpha = vec![0.0f64; n];
    // Zero documents contribute a constant to the loss and nothing to w.
    let mut active: Vec<usize> = (0..n).filter(|&i| sq_norms[i] > 0.0).collect();
    let total_active = active.len();

    let mut rng = seeds::substream(cfg.seed, "svm-permutation");
    let mut pg_max_old = f64::INFINITY;
    let mut pg_min_old = f64::NEG_INFINITY;
    let mut epochs = 0;
    let mut converged = false;

    'outer: while epochs < cfg.max_epochs {
        epochs += 1;
        active.shuffle(&mut rng);
        let mut pg_max = f64::NEG_INFINITY;
        let mut pg_min = f64::INFINITY;

        let mut pos = 0;
        while pos < active.len() {
            let i = active[pos];
            let yi = y[i];
            let g = yi * docs[i].entries().iter().map(|&(t, v)| w[t as usize] * v).sum::<f64>() - 1.0;

            let pg = if alpha[i] == 0.0 {
                if g > pg_max_old {
                    active.swap_remove(pos);
                    continue;
                }
                g.min(0.0)
            } else if alpha[i] == upper {
                if g < pg_min_old {
                    active.swap_remove(pos);
                    continue;
                }
                g.max(0.0)
            } else {
                g
            };

            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);

            if pg.abs() > 1e-12 {
                let old = alpha[i];
                alpha[i] = (old - g / sq_norms[i]).clamp(0.0, upper);
                let delta = (alpha[i] - old) * yi;
                if delta != 0.0 {
                    for &(t, v) in docs[i].entries() {
                        w[t as usize] += delta * v;
                    }
                }
            }
            pos += 1;
        }

        let spread = if pg_max == f64::NEG_INFINITY {
            0.0 // nothing left active this epoch
        } else {
            pg_max - pg_min
        };
        if spread <= cfg.tolerance {
            if active.len() == total_active {
                converged = true;
                break 'outer;
            }
            // Converged on the shrunken set: restore and take a full pass.
            active = (0..n).filter(|&i| sq_norms[i] > 0.0).collect();
            pg_max_old = f64::INFINITY;
            pg_min_old = f64::NEG_INFINITY;
            continue;
        }
        pg_max_old = if pg_max <= 0.0 { f64::INFINITY } else { pg_max };
        pg_min_old = if pg_min >= 0.0 { f64::NEG_INFINITY } else { pg_min };
    }

    if !converged {
        log::warn!(
            "bit {bit_index}: dual coordinate descent hit max_epochs = {} before \
             reaching tolerance {}",
            cfg.max_epochs,
            cfg.tolerance
        );
    }

    // Diagnostics straight off the definitions.
    let norm_w_sq: f64 = w.iter().map(|x| x * x).sum();
    let mut hinge = 0.0;
    let mut correct = 0usize;
    for (i, doc) in docs.iter().enumerate() {
        let margin: f64 = doc.entries().iter().map(|&(t, v)| w[t as usize] * v).sum();
        hinge += (1.0 - y[i] * margin).max(0.0);
        let predicted = margin > 0.0;
        if predicted == (labels[i] > 0) {
            correct += 1;
        }
    }
    let primal = 0.5 * norm_w_sq + upper * hinge;
    let dual = alpha.iter().sum::<f64>() - 0.5 * norm_w_sq;
    let gap = (primal - dual) / primal.abs().max(1.0);
    let (alpha_min, alpha_max) = alpha
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| {
            (lo.min(a), hi.max(a))
        });

    let stats = BitTrainStats {
        bit_index,
        epochs,
        converged,
        primal_objective: primal,
        dual_objective: dual,
        relative_gap: gap,
        train_accuracy: if n == 0 { 1.0 } else { correct as f64 / n as f64 },
        single_class,
        alpha_min: if n == 0 { 0.0 } else { alpha_min },
        alpha_max: if n == 0 { 0.0 } else { alpha_max },
    };
    Ok((LinearModel { bit_index, weights: w }, stats))
}

/// Trains one SVM per bit of the self-taught codes; bits train independently
/// and in parallel, deterministically for a fixed seed.
pub fn train_all(
    train: &Corpus,
    codes: &CodeMatrix,
    cfg: &TrainConfig,
) -> Result<(HashModel, TrainStats)> {
    cfg.validate()?;
    if codes.n() != train.n() {
        return Err(Error::SizeMismatch {
            what: "codes vs documents",
            left: codes.n(),
            right: train.n(),
        });
    }
    let l = codes.code_len();
    let results: Result<Vec<(LinearModel, BitTrainStats)>> = (0..l)
        .into_par_iter()
        .map(|p| {
            let labels: Vec<i8> = (0..codes.n())
                .map(|i| if codes.bit(i, p) { 1 } else { -1 })
                .collect();
            train_bit_indexed(train, &labels, cfg, p)
        })
        .collect();
    let results = results?;
    let mut models = Vec::with_capacity(l);
    let mut per_bit = Vec::with_capacity(l);
    for (m, s) in results {
        models.push(m);
        per_bit.push(s);
    }
    Ok((
        HashModel {
            models,
            vocab_size: train.vocab_size() as usize,
            config: *cfg,
        },
        TrainStats { per_bit },
    ))
}

const MODEL_MAGIC: &[u8; 4] = b"STHM";
const MODEL_VERSION: u32 = 1;

/// Writes the model (binary: magic, version, l, m, C, then l dense weight
/// vectors as little-endian f64) plus a `<path>.json` sidecar with the
/// training diagnostics.
pub fn save_model(
    path: impl AsRef<Path>,
    model: &HashModel,
    stats: &TrainStats,
) -> Result<()> {
    let path = path.as_ref();
    let l = model.code_len();
    let m = model.vocab_size;
    let mut buf = Vec::with_capacity(24 + l * m * 8);
    buf.extend_from_slice(MODEL_MAGIC);
    buf.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    buf.extend_from_slice(&(l as u32).to_le_bytes());
    buf.extend_from_slice(&(m as u64).to_le_bytes());
    buf.extend_from_slice(&model.config.c.to_le_bytes());
    for lm in &model.models {
        for w in &lm.weights {
            buf.extend_from_slice(&w.to_le_bytes());
        }
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))?;

    let sidecar = path.with_extension(match path.extension() {
        Some(ext) => format!("{}.json", ext.to_string_lossy()),
        None => "json".to_string(),
    });
    let json = serde_json::to_string_pretty(stats)
        .map_err(|e| Error::format(&sidecar, e.to_string()))?;
    fs::write(&sidecar, json).map_err(|e| Error::io(&sidecar, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<HashModel> {
    let path = path.as_ref();
    let mut f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut header = [0u8; 28];
    f.read_exact(&mut header).map_err(|e| Error::io(path, e))?;
    if &header[0..4] != MODEL_MAGIC {
        return Err(Error::format(path, "bad magic"));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != MODEL_VERSION {
        return Err(Error::format(path, format!("unsupported version {version}")));
    }
    let l = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let m = u64::from_le_bytes(header[12..20].try_into().unwrap()) as usize;
    let c = f64::from_le_bytes(header[20..28].try_into().unwrap());
    let mut body = Vec::new();
    f.read_to_end(&mut body).map_err(|e| Error::io(path, e))?;
    if body.len() != l * m * 8 {
        return Err(Error::format(
            path,
            format!("expected {} weight bytes, found {}", l * m * 8, body.len()),
        ));
    }
    let mut models = Vec::with_capacity(l);
    for p in 0..l {
        let weights: Vec<f64> = body[p * m * 8..(p + 1) * m * 8]
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        models.push(LinearModel {
            bit_index: p,
            weights,
        });
    }
    Ok(HashModel {
        models,
        vocab_size: m,
        config: TrainConfig {
            c,
            ..TrainConfig::default()
        },
    })
}
