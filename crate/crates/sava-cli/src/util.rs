//! Shared plumbing: exit codes, file hashing, format sniffing.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use sava_core::dataset::{inject_feature_noise, inject_label_noise, CorruptionMask, Format, LabeledDataset};
use sava_core::{Error, Result};

/// Documented exit-code table: 2 config/input, 3 resource guard, 4 numerical.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::MemoryBudgetExceeded { .. } | Error::OracleTooLarge { .. } => 3,
        Error::NonFiniteIntermediate(_)
        | Error::ZeroPlanEntry { .. }
        | Error::DegenerateSize(_) => 4,
        _ => 2,
    }
}

/// `.csv` files are text, everything else is the binary format.
pub fn format_for(path: &Path) -> Format {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
        _ => Format::Binary,
    }
}

pub fn sha256_hex(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let mut h = Sha256::new();
    h.update(&bytes);
    let digest = h.finalize();
    let mut s = String::with_capacity(digest.len() * 2);
    for b in digest {
        write!(s, "{b:02x}").expect("writing to a String cannot fail");
    }
    Ok(s)
}

/// The one corruption kind a run may apply.
pub struct NoisePlan {
    pub label_noise: Option<f64>,
    pub feature_noise: Option<f64>,
    pub noise_sigma: Option<f64>,
}

impl NoisePlan {
    /// Applies the requested corruption, if any. `default_sigma` backs the
    /// feature-noise scale when none was given.
    pub fn apply(
        &self,
        ds: &LabeledDataset,
        seed: u64,
        default_sigma: f64,
    ) -> Result<Option<(LabeledDataset, CorruptionMask)>> {
        match (self.label_noise, self.feature_noise) {
            (Some(_), Some(_)) => Err(Error::InvalidConfig(
                "one corruption kind per run: give either label noise or feature noise".into(),
            )),
            (Some(f), None) => Ok(Some(inject_label_noise(ds, f, seed)?)),
            (None, Some(f)) => {
                let sigma = self.noise_sigma.unwrap_or(default_sigma);
                Ok(Some(inject_feature_noise(ds, f, sigma, seed)?))
            }
            (None, None) => {
                if self.noise_sigma.is_some() {
                    return Err(Error::InvalidConfig(
                        "--noise-sigma needs --feature-noise".into(),
                    ));
                }
                Ok(None)
            }
        }
    }
}

/// Comma-separated matrix rows, one line per row, no header.
pub fn matrix_csv(m: &ndarray::ArrayView2<'_, f64>) -> String {
    let mut out = String::new();
    for row in m.outer_iter() {
        let cells: Vec<String> = row.iter().map(|x| format!("{x}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Minimal CSV quoting for free-text cells (error messages).
pub fn csv_cell(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}
