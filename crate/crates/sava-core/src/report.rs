//! Valuation run artifacts: a JSON report embedding the resolved
//! configuration and input hashes, plus a CSV ranking view.

use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::CorruptionMask;
use crate::error::{Error, Result};
use crate::eval::rank_by_value;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lava,
    Sava,
    BatchwiseLava,
    Random,
}

/// Everything needed to reproduce and audit one valuation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValuationReport {
    pub method: Method,
    /// Stable point ids, parallel to `values`.
    pub ids: Vec<u64>,
    /// Per-point calibrated transport gradients; higher means moving mass
    /// onto the point pushes training further from validation, so the top
    /// of the ranking is where corruption concentrates.
    pub values: Vec<Real>,
    /// Non-fatal events (solver budget exhaustion, filled label pairs, ...).
    pub warnings: Vec<String>,
    pub wall_time_s: f64,
    /// High-water mark of simultaneously live cost-matrix entries.
    pub peak_cost_matrix_entries: usize,
    /// The fully resolved run configuration, verbatim.
    pub config: serde_json::Value,
    pub train_hash: String,
    pub val_hash: String,
}

impl ValuationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let report: Self = serde_json::from_str(s)?;
        if report.ids.len() != report.values.len() {
            return Err(Error::DimensionMismatch(format!(
                "report has {} ids but {} values",
                report.ids.len(),
                report.values.len()
            )));
        }
        Ok(report)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        atomic_write(path, self.to_json()?.as_bytes())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Rows sorted most-valuable first: `id,value,rank` with rank starting
    /// at 1, plus a `corrupt_flag` column when ground truth is supplied.
    pub fn write_csv(&self, path: &Path, mask: Option<&CorruptionMask>) -> Result<()> {
        if let Some(m) = mask {
            if m.flags.len() != self.ids.len() {
                return Err(Error::DimensionMismatch(format!(
                    "mask covers {} points, report covers {}",
                    m.flags.len(),
                    self.ids.len()
                )));
            }
        }
        let order = rank_by_value(&self.values, &self.ids)?;
        let mut w = csv::Writer::from_writer(Vec::new());
        let header: &[&str] = if mask.is_some() {
            &["id", "value", "rank", "corrupt_flag"]
        } else {
            &["id", "value", "rank"]
        };
        w.write_record(header).map_err(|e| Error::Csv(e.to_string()))?;
        for (rank, &i) in order.iter().enumerate() {
            let mut record = vec![
                self.ids[i].to_string(),
                format!("{}", self.values[i]),
                (rank + 1).to_string(),
            ];
            if let Some(m) = mask {
                record.push(if m.flags[i] { "1" } else { "0" }.to_string());
            }
            w.write_record(&record).map_err(|e| Error::Csv(e.to_string()))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Csv(e.to_string()))?;
        atomic_write(path, &bytes)
    }
}

/// Writes to a sibling temp file then renames into place, so readers never
/// observe a half-written artifact.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    if let Some(dir) = dir {
        // Best effort: persist the rename itself.
        if let Ok(d) = std::fs::File::open(dir) {
            let _ = d.sync_all();
        }
    }
    Ok(())
}
