//! Labeled-embedding data model: validation, file formats, synthetic
//! mixtures, corruption injection, and batch partitioning.

mod corrupt;
mod io;
mod partition;
mod synth;

pub use corrupt::{inject_feature_noise, inject_label_noise};
pub use io::{load_dataset, save_dataset, Format};
pub use partition::partition_batches;
pub use synth::{synth_gaussian_mixture, synth_gaussian_mixture_pair};

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Strategy;
use crate::error::{Error, Result};
use crate::Real;

/// Feature matrix with integer labels and stable per-point ids.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Array2<Real>,
    labels: Vec<u32>,
    ids: Vec<u64>,
    v: usize,
}

impl LabeledDataset {
    /// Validates shape agreement, label range, feature finiteness, and id
    /// uniqueness.
    pub fn new(features: Array2<Real>, labels: Vec<u32>, ids: Vec<u64>, v: usize) -> Result<Self> {
        let n = features.nrows();
        let d = features.ncols();
        if n == 0 || d == 0 || v == 0 {
            return Err(Error::InvalidConfig(
                "datasets need at least one row, one dimension, and one class".into(),
            ));
        }
        if labels.len() != n || ids.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{n} rows vs {} labels and {} ids",
                labels.len(),
                ids.len()
            )));
        }
        for (row, &label) in labels.iter().enumerate() {
            if label as usize >= v {
                return Err(Error::LabelOutOfRange { row, label, v });
            }
        }
        for ((row, col), &x) in features.indexed_iter() {
            if !x.is_finite() {
                return Err(Error::NonFiniteFeature { row, col });
            }
        }
        let mut seen = std::collections::HashSet::with_capacity(n);
        for &id in &ids {
            if !seen.insert(id) {
                return Err(Error::DuplicateId(id));
            }
        }
        Ok(Self {
            features,
            labels,
            ids,
            v,
        })
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    /// Number of classes the label space covers.
    pub fn v(&self) -> usize {
        self.v
    }

    pub fn features(&self) -> ArrayView2<'_, Real> {
        self.features.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, Real> {
        self.features.row(i)
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    /// Copy with one row's label replaced (validated).
    pub fn with_labels(&self, labels: Vec<u32>) -> Result<Self> {
        Self::new(self.features.clone(), labels, self.ids.clone(), self.v)
    }

    /// SHA-256 over dimensions, features, labels, and ids; stable across
    /// platforms (little-endian bit patterns).
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for dim in [self.n() as u64, self.d() as u64, self.v as u64] {
            h.update(dim.to_le_bytes());
        }
        for &x in self.features.iter() {
            h.update(x.to_bits().to_le_bytes());
        }
        for &l in &self.labels {
            h.update(l.to_le_bytes());
        }
        for &id in &self.ids {
            h.update(id.to_le_bytes());
        }
        hex_string(&h.finalize())
    }
}

fn hex_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        use std::fmt::Write;
        write!(s, "{b:02x}").expect("writing to a String cannot fail");
    }
    s
}

/// What a corruption injector did to a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionKind {
    LabelNoise,
    FeatureNoise,
}

/// Which points an injector touched.
#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionMask {
    pub flags: Vec<bool>,
    pub kind: CorruptionKind,
    pub fraction: Real,
    pub seed: u64,
}

impl CorruptionMask {
    pub fn corrupted(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn to_json(&self) -> Result<String> {
        let packed = pack_bits(&self.flags);
        let file = MaskFile {
            kind: self.kind,
            fraction: self.fraction,
            seed: self.seed,
            n: self.flags.len(),
            flags: base64_encode(&packed),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: MaskFile = serde_json::from_str(s)?;
        let packed = base64_decode(&file.flags)?;
        let flags = unpack_bits(&packed, file.n)?;
        Ok(Self {
            flags,
            kind: file.kind,
            fraction: file.fraction,
            seed: file.seed,
        })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct MaskFile {
    kind: CorruptionKind,
    fraction: Real,
    seed: u64,
    n: usize,
    /// Base64 bitset, LSB-first within each byte.
    flags: String,
}

fn pack_bits(flags: &[bool]) -> Vec<u8> {
    let mut out = vec![0u8; flags.len().div_ceil(8)];
    for (i, &f) in flags.iter().enumerate() {
        if f {
            out[i / 8] |= 1 << (i % 8);
        }
    }
    out
}

fn unpack_bits(packed: &[u8], n: usize) -> Result<Vec<bool>> {
    if packed.len() != n.div_ceil(8) {
        return Err(Error::MalformedHeader(format!(
            "mask bitset holds {} bytes for {n} flags",
            packed.len()
        )));
    }
    Ok((0..n).map(|i| packed[i / 8] & (1 << (i % 8)) != 0).collect())
}

fn base64_encode(bytes: &[u8]) -> String {
    use base64::Engine as _;
    base64::engine::general_purpose::STANDARD.encode(bytes)
}

fn base64_decode(s: &str) -> Result<Vec<u8>> {
    use base64::Engine as _;
    base64::engine::general_purpose::STANDARD
        .decode(s)
        .map_err(|e| Error::MalformedHeader(format!("mask bitset: {e}")))
}

/// Disjoint index batches covering a dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchPartition {
    pub batches: Vec<Vec<usize>>,
    pub batch_size: usize,
    pub strategy: Strategy,
    pub seed: u64,
}

impl BatchPartition {
    pub fn k(&self) -> usize {
        self.batches.len()
    }

    /// Single batch holding `[0, n)`; the degenerate partition.
    pub fn whole(n: usize) -> Self {
        Self {
            batches: vec![(0..n).collect()],
            batch_size: n,
            strategy: Strategy::Random,
            seed: 0,
        }
    }
}

/// `round(fraction * n)` with ties to even; how many points a fraction selects.
pub fn selection_count(fraction: Real, n: usize) -> usize {
    (fraction * n as Real).round_ties_even() as usize
}
