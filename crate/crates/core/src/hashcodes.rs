//! Packed binary codes, Hamming distance, Hamming-ball enumeration and the
//! code → documents index.
//!
//! Codes hold up to 64 bits in one machine word (matching experiment code
//! lengths of 4..64 bits; multi-word codes are an extension point). Bit `p`
//! of a code corresponds to embedding dimension `p` (ascending eigenvalue)
//! and is stored at word bit `p`, bit 0 least significant. A stored 1 means
//! the bit is "on" (+1 in the ±1 view), 0 means "off" (−1).

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::Path;

use crate::corpus::{DocId, SparseDocVector};
use crate::error::{Error, Result};

/// A binary code of 1..=64 bits packed into a `u64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitCode {
    bits: u64,
    len: u8,
}

impl BitCode {
    /// Packs `bits` into a code of `len` bits; bits beyond `len` are cleared.
    pub fn new(bits: u64, len: usize) -> Result<Self> {
        if len == 0 || len > 64 {
            return Err(Error::CodeLength(len));
        }
        Ok(BitCode {
            bits: bits & mask(len),
            len: len as u8,
        })
    }

    pub fn zero(len: usize) -> Result<Self> {
        Self::new(0, len)
    }

    /// Builds a code from per-bit on/off flags, bit 0 first.
    pub fn from_bits(flags: &[bool]) -> Result<Self> {
        let mut bits = 0u64;
        for (p, &on) in flags.iter().enumerate() {
            if on {
                bits |= 1u64 << p;
            }
        }
        Self::new(bits, flags.len())
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn word(&self) -> u64 {
        self.bits
    }

    pub fn bit(&self, p: usize) -> bool {
        debug_assert!(p < self.len());
        (self.bits >> p) & 1 == 1
    }

    /// First `len` bits of this code.
    pub fn truncate(&self, len: usize) -> Result<Self> {
        if len > self.len() {
            return Err(Error::CodeLengthMismatch {
                a: self.len(),
                b: len,
            });
        }
        Self::new(self.bits, len)
    }

    pub fn complement(&self) -> Self {
        BitCode {
            bits: !self.bits & mask(self.len()),
            len: self.len,
        }
    }
}

fn mask(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

/// Hamming distance: population count of the XOR. Errors on length mismatch.
pub fn hamming(a: &BitCode, b: &BitCode) -> Result<u32> {
    if a.len != b.len {
        return Err(Error::CodeLengthMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    Ok((a.bits ^ b.bits).count_ones())
}

/// Exact binomial coefficient in 128-bit arithmetic (valid for n ≤ 64).
fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Number of codes within Hamming distance `radius` of any center:
/// `Σ_{i=0..radius} C(l, i)`, exactly.
pub fn ball_size(len: usize, radius: usize) -> Result<u128> {
    if len == 0 || len > 64 {
        return Err(Error::CodeLength(len));
    }
    if radius > len {
        return Err(Error::RadiusTooLarge { radius, len });
    }
    Ok((0..=radius).map(|i| binomial(len, i)).sum())
}

/// Iterator over every code within `radius` of `center`, each exactly once,
/// in ascending distance order (shell by shell).
pub fn ball(center: BitCode, radius: usize) -> Result<Ball> {
    if radius > center.len() {
        return Err(Error::RadiusTooLarge {
            radius,
            len: center.len(),
        });
    }
    Ok(Ball {
        center,
        radius: radius as u32,
        shell: 0,
        mask: 0,
        remaining: 1, // the distance-0 shell
    })
}

pub struct Ball {
    center: BitCode,
    radius: u32,
    shell: u32,
    mask: u64,
    remaining: u128,
}

impl Iterator for Ball {
    type Item = BitCode;

    fn next(&mut self) -> Option<BitCode> {
        while self.remaining == 0 {
            self.shell += 1;
            if self.shell > self.radius {
                return None;
            }
            self.mask = mask(self.shell as usize);
            self.remaining = binomial(self.center.len(), self.shell as usize);
        }
        let out = BitCode {
            bits: self.center.bits ^ self.mask,
            len: self.center.len,
        };
        self.remaining -= 1;
        if self.remaining > 0 {
            self.mask = next_combination(self.mask);
        }
        Some(out)
    }
}

/// Gosper's hack: next submask with the same popcount, ascending value.
fn next_combination(v: u64) -> u64 {
    let c = v & v.wrapping_neg();
    let r = v + c;
    (((r ^ v) >> 2) / c) | r
}

/// Row-per-document code matrix with a fixed code length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeMatrix {
    words: Vec<u64>,
    len: usize,
}

impl CodeMatrix {
    pub fn new(len: usize) -> Result<Self> {
        if len == 0 || len > 64 {
            return Err(Error::CodeLength(len));
        }
        Ok(CodeMatrix {
            words: Vec::new(),
            len,
        })
    }

    pub fn push(&mut self, code: BitCode) -> Result<()> {
        if code.len() != self.len {
            return Err(Error::CodeLengthMismatch {
                a: self.len,
                b: code.len(),
            });
        }
        self.words.push(code.word());
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Code length l in bits.
    pub fn code_len(&self) -> usize {
        self.len
    }

    pub fn code(&self, i: usize) -> BitCode {
        BitCode {
            bits: self.words[i],
            len: self.len as u8,
        }
    }

    pub fn bit(&self, i: usize, p: usize) -> bool {
        self.code(i).bit(p)
    }

    /// Keeps the first `len` bits of every code.
    pub fn truncate(&self, len: usize) -> Result<CodeMatrix> {
        if len == 0 || len > self.len {
            return Err(Error::CodeLengthMismatch { a: self.len, b: len });
        }
        let m = mask(len);
        Ok(CodeMatrix {
            words: self.words.iter().map(|w| w & m).collect(),
            len,
        })
    }

    /// Per-bit count of set bits, for balance diagnostics.
    pub fn on_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.len];
        for &w in &self.words {
            for (p, c) in counts.iter_mut().enumerate() {
                if (w >> p) & 1 == 1 {
                    *c += 1;
                }
            }
        }
        counts
    }
}

/// Anything that can assign a code to an unseen document (SVM hash models,
/// LSH baselines). Full-length codes are produced; sweeps truncate.
pub trait Encoder {
    fn code_len(&self) -> usize;
    fn encode(&self, doc: &SparseDocVector) -> Result<BitCode>;
}

/// Immutable code → doc ids hash index over a corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeIndex {
    len: usize,
    n: usize,
    buckets: BTreeMap<u64, Vec<DocId>>,
}

/// Indexes documents by their code. Doc ids must be unique; insertion order
/// within a bucket is corpus order.
pub fn build_index(codes: &CodeMatrix, doc_ids: &[DocId]) -> Result<CodeIndex> {
    if codes.n() != doc_ids.len() {
        return Err(Error::SizeMismatch {
            what: "codes vs doc ids",
            left: codes.n(),
            right: doc_ids.len(),
        });
    }
    let mut sorted = doc_ids.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        let dup = sorted
            .windows(2)
            .find(|w| w[0] == w[1])
            .map(|w| w[0])
            .unwrap();
        return Err(Error::DuplicateDocId(dup));
    }
    let mut buckets: BTreeMap<u64, Vec<DocId>> = BTreeMap::new();
    for (i, &id) in doc_ids.iter().enumerate() {
        buckets.entry(codes.code(i).word()).or_default().push(id);
    }
    Ok(CodeIndex {
        len: codes.code_len(),
        n: doc_ids.len(),
        buckets,
    })
}

const INDEX_MAGIC: &[u8; 4] = b"STHI";
const INDEX_VERSION: u32 = 1;

impl CodeIndex {
    pub fn code_len(&self) -> usize {
        self.len
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_buckets(&self) -> usize {
        self.buckets.len()
    }

    pub fn bucket(&self, code: &BitCode) -> &[DocId] {
        self.buckets
            .get(&code.word())
            .map_or(&[], |v| v.as_slice())
    }

    /// All doc ids within Hamming distance `radius` of `center`, sorted by
    /// (distance, doc id).
    ///
    /// When the ball is smaller than the collection the buckets of every code
    /// in the ball are probed; otherwise the buckets are scanned linearly.
    /// Both strategies return the identical result.
    pub fn query_with_distances(
        &self,
        center: &BitCode,
        radius: usize,
    ) -> Result<Vec<(DocId, u32)>> {
        if center.len() != self.len {
            return Err(Error::CodeLengthMismatch {
                a: self.len,
                b: center.len(),
            });
        }
        if radius > self.len {
            return Err(Error::RadiusTooLarge {
                radius,
                len: self.len,
            });
        }
        let mut hits: Vec<(DocId, u32)> = Vec::new();
        if ball_size(self.len, radius)? < self.n as u128 {
            for code in ball(*center, radius)? {
                if let Some(ids) = self.buckets.get(&code.word()) {
                    let d = (code.word() ^ center.word()).count_ones();
                    hits.extend(ids.iter().map(|&id| (id, d)));
                }
            }
        } else {
            for (&code, ids) in &self.buckets {
                let d = (code ^ center.word()).count_ones();
                if d as usize <= radius {
                    hits.extend(ids.iter().map(|&id| (id, d)));
                }
            }
        }
        hits.sort_unstable_by_key(|&(id, d)| (d, id));
        Ok(hits)
    }

    /// Doc ids within `radius` of `center`, sorted by (distance, doc id).
    pub fn query(&self, center: &BitCode, radius: usize) -> Result<Vec<DocId>> {
        Ok(self
            .query_with_distances(center, radius)?
            .into_iter()
            .map(|(id, _)| id)
            .collect())
    }

    /// Binary format: magic `STHI`, version u32, l u32, n u64, then
    /// `(code u64, doc_id u64)` pairs sorted by (code, doc id), all
    /// little-endian.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::with_capacity(20 + self.n * 16);
        buf.extend_from_slice(INDEX_MAGIC);
        buf.extend_from_slice(&INDEX_VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.len as u32).to_le_bytes());
        buf.extend_from_slice(&(self.n as u64).to_le_bytes());
        for (&code, ids) in &self.buckets {
            for &id in ids {
                buf.extend_from_slice(&code.to_le_bytes());
                buf.extend_from_slice(&id.to_le_bytes());
            }
        }
        fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<CodeIndex> {
        let path = path.as_ref();
        let mut f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut header = [0u8; 20];
        f.read_exact(&mut header)
            .map_err(|e| Error::io(path, e))?;
        if &header[0..4] != INDEX_MAGIC {
            return Err(Error::format(path, "bad magic"));
        }
        let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
        if version != INDEX_VERSION {
            return Err(Error::format(path, format!("unsupported version {version}")));
        }
        let len = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        if len == 0 || len > 64 {
            return Err(Error::format(path, format!("bad code length {len}")));
        }
        let n = u64::from_le_bytes(header[12..20].try_into().unwrap()) as usize;
        let mut body = Vec::new();
        f.read_to_end(&mut body).map_err(|e| Error::io(path, e))?;
        if body.len() != n * 16 {
            return Err(Error::format(
                path,
                format!("expected {} pair bytes, found {}", n * 16, body.len()),
            ));
        }
        let mut buckets: BTreeMap<u64, Vec<DocId>> = BTreeMap::new();
        for pair in body.chunks_exact(16) {
            let code = u64::from_le_bytes(pair[0..8].try_into().unwrap());
            let id = u64::from_le_bytes(pair[8..16].try_into().unwrap());
            if code & !mask(len) != 0 {
                return Err(Error::format(path, "code wider than declared length"));
            }
            buckets.entry(code).or_default().push(id);
        }
        Ok(CodeIndex { len, n, buckets })
    }
}

/// Persists `(code, doc_id)` rows; same binary layout as the index file but
/// in corpus order under magic `STHC`, so codes files round-trip exactly.
pub fn save_codes(path: impl AsRef<Path>, codes: &CodeMatrix, doc_ids: &[DocId]) -> Result<()> {
    let path = path.as_ref();
    if codes.n() != doc_ids.len() {
        return Err(Error::SizeMismatch {
            what: "codes vs doc ids",
            left: codes.n(),
            right: doc_ids.len(),
        });
    }
    let mut buf = Vec::with_capacity(20 + codes.n() * 16);
    buf.extend_from_slice(b"STHC");
    buf.extend_from_slice(&INDEX_VERSION.to_le_bytes());
    buf.extend_from_slice(&(codes.code_len() as u32).to_le_bytes());
    buf.extend_from_slice(&(codes.n() as u64).to_le_bytes());
    for (i, &id) in doc_ids.iter().enumerate() {
        buf.extend_from_slice(&codes.code(i).word().to_le_bytes());
        buf.extend_from_slice(&id.to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_codes(path: impl AsRef<Path>) -> Result<(CodeMatrix, Vec<DocId>)> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    if data.len() < 20 || &data[0..4] != b"STHC" {
        return Err(Error::format(path, "bad magic"));
    }
    let version = u32::from_le_bytes(data[4..8].try_into().unwrap());
    if version != INDEX_VERSION {
        return Err(Error::format(path, format!("unsupported version {version}")));
    }
    let len = u32::from_le_bytes(data[8..12].try_into().unwrap()) as usize;
    let n = u64::from_le_bytes(data[12..20].try_into().unwrap()) as usize;
    let body = &data[20..];
    if body.len() != n * 16 {
        return Err(Error::format(path, "truncated codes file"));
    }
    let mut matrix = CodeMatrix::new(len)?;
    let mut ids = Vec::with_capacity(n);
    for pair in body.chunks_exact(16) {
        let code = u64::from_le_bytes(pair[0..8].try_into().unwrap());
        matrix.push(BitCode::new(code, len)?)?;
        ids.push(u64::from_le_bytes(pair[8..16].try_into().unwrap()));
    }
    Ok((matrix, ids))
}
