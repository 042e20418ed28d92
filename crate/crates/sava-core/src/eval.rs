//! Detection-rate scoring, ranking, pruning, and the random baseline.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{selection_count, CorruptionMask};
use crate::error::{Error, Result};
use crate::report::atomic_write;
use crate::Real;

/// How well a ranking concentrates corrupted points near its top.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectionResult {
    pub prefix_fraction: Real,
    /// Fraction of all corrupted points found in the top prefix.
    pub detection_rate: Real,
    pub prefix_size: usize,
    pub method: String,
    /// `(inspected_fraction, recovered_fraction)` at 100 evenly spaced
    /// prefix sizes; nondecreasing and ending at (1.0, 1.0).
    pub curve: Vec<(Real, Real)>,
}

impl DetectionResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        atomic_write(path, self.to_json()?.as_bytes())
    }

    /// Plot-ready two-column CSV of the recovery curve.
    pub fn write_curve_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("inspected_fraction,recovered_fraction\n");
        for (x, y) in &self.curve {
            out.push_str(&format!("{x},{y}\n"));
        }
        atomic_write(path, out.as_bytes())
    }
}

/// Indices sorted by value descending, ties broken by ascending id, so the
/// front of the permutation is the most suspicious point.
pub fn rank_by_value(values: &[Real], ids: &[u64]) -> Result<Vec<usize>> {
    if values.len() != ids.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} values vs {} ids",
            values.len(),
            ids.len()
        )));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFiniteIntermediate("value ranking"));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .expect("NaN filtered above")
            .then_with(|| ids[a].cmp(&ids[b]))
    });
    Ok(order)
}

/// Scores a ranking against ground truth: what fraction of the corrupted
/// points sit inside the top `prefix_fraction` of the order.
pub fn detection_rate(
    order: &[usize],
    mask: &CorruptionMask,
    prefix_fraction: Real,
    method: &str,
) -> Result<DetectionResult> {
    let n = mask.flags.len();
    if order.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "ranking covers {} points, mask covers {n}",
            order.len()
        )));
    }
    if !(prefix_fraction > 0.0 && prefix_fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "prefix fraction {prefix_fraction} must be in (0, 1]"
        )));
    }
    let total = mask.corrupted();
    if total == 0 {
        return Err(Error::NoCorruptions);
    }

    // hits[k] = corrupted points among the first k of the ranking.
    let mut hits = Vec::with_capacity(n + 1);
    hits.push(0usize);
    for &i in order {
        hits.push(hits.last().unwrap() + usize::from(mask.flags[i]));
    }

    let prefix_size = selection_count(prefix_fraction, n);
    let rate = hits[prefix_size] as Real / total as Real;
    let curve = (1..=100)
        .map(|k| {
            let f = k as Real / 100.0;
            let size = selection_count(f, n);
            (f, hits[size] as Real / total as Real)
        })
        .collect();

    Ok(DetectionResult {
        prefix_fraction,
        detection_rate: rate,
        prefix_size,
        method: method.to_string(),
        curve,
    })
}

/// Drops the top `prune_fraction` of the ranking (the most suspicious
/// points) and returns the surviving ids in their original order.
pub fn prune_list(values: &[Real], ids: &[u64], prune_fraction: Real) -> Result<Vec<u64>> {
    if !(0.0..1.0).contains(&prune_fraction) {
        return Err(Error::InvalidConfig(format!(
            "prune fraction {prune_fraction} must be in [0, 1)"
        )));
    }
    let order = rank_by_value(values, ids)?;
    let cut = selection_count(prune_fraction, ids.len());
    let mut dropped = vec![false; ids.len()];
    for &i in &order[..cut] {
        dropped[i] = true;
    }
    Ok(ids
        .iter()
        .zip(&dropped)
        .filter(|(_, &d)| !d)
        .map(|(&id, _)| id)
        .collect())
}

/// Fraction of the kept points that are uncorrupted.
pub fn pruned_purity(kept: &[u64], ids: &[u64], mask: &CorruptionMask) -> Result<Real> {
    if kept.is_empty() {
        return Err(Error::InvalidConfig("empty survivor list".into()));
    }
    if ids.len() != mask.flags.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} ids vs mask of {}",
            ids.len(),
            mask.flags.len()
        )));
    }
    let by_id: HashMap<u64, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let mut clean = 0usize;
    for id in kept {
        let &i = by_id
            .get(id)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown id {id} in survivor list")))?;
        clean += usize::from(!mask.flags[i]);
    }
    Ok(clean as Real / kept.len() as Real)
}

/// Seeded shuffle baseline: a random permutation of `0..n` used as values,
/// so the induced ranking is a uniform random order.
pub fn random_values(n: usize, seed: u64) -> Vec<Real> {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ranks: Vec<usize> = (0..n).collect();
    ranks.shuffle(&mut rng);
    ranks.into_iter().map(|r| r as Real).collect()
}
