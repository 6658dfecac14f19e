//! Optional TOML config file and the flag/file/default resolution rule.

use std::path::Path;

use anyhow::Context;
use serde::Deserialize;

/// Experiment-grid defaults; every field is overridable by a flag.
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_K: usize = 25;
pub const DEFAULT_BITS: usize = 16;
pub const DEFAULT_RADII: [usize; 4] = [0, 1, 2, 3];
pub const DEFAULT_LENGTHS: [usize; 5] = [4, 8, 16, 32, 64];
pub const DEFAULT_SVM_C: f64 = 1.0;
pub const DEFAULT_SVM_TOLERANCE: f64 = 1e-3;
pub const DEFAULT_SVM_EPOCHS: usize = 1000;

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub k: Option<usize>,
    pub bits: Option<usize>,
    pub radii: Option<Vec<usize>>,
    pub lengths: Option<Vec<usize>>,
    pub svm_c: Option<f64>,
    pub svm_tolerance: Option<f64>,
    pub svm_epochs: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Flag beats file beats default.
pub fn pick<T: Clone>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
