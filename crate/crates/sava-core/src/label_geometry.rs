//! Label-aware ground cost: per-label conditional supports, the
//! label-to-label transport distance matrix, and batch cost assembly.

use std::path::Path;

use ndarray::{Array2, ArrayView1};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::budget::{AllocGuard, PeakTracker};
use crate::config::SolverConfig;
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::ot::{sinkhorn, CostMatrix, SinkhornOptions};
use crate::report::atomic_write;
use crate::Real;

/// Per-label index lists into one dataset.
#[derive(Debug, Clone)]
pub struct LabelConditionals {
    groups: Vec<Vec<usize>>,
    source_hash: String,
}

impl LabelConditionals {
    pub fn group(&self, label: u32) -> Result<&[usize]> {
        self.groups
            .get(label as usize)
            .map(Vec::as_slice)
            .ok_or(Error::UnknownLabel(label))
    }

    pub fn v(&self) -> usize {
        self.groups.len()
    }

    pub fn source_hash(&self) -> &str {
        &self.source_hash
    }
}

/// Groups row indices by label; label `y`'s list is exactly the rows
/// carrying `y`, in dataset order.
pub fn build_conditionals(ds: &LabeledDataset) -> LabelConditionals {
    let mut groups = vec![Vec::new(); ds.v()];
    for (i, &label) in ds.labels().iter().enumerate() {
        groups[label as usize].push(i);
    }
    LabelConditionals {
        groups,
        source_hash: ds.content_hash(),
    }
}

/// Provenance of a label-distance matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltOn {
    /// Conditionals taken over the whole train/val datasets (default:
    /// batch-order independent and immune to labels missing from a batch).
    FullDatasets,
    /// Conditionals restricted to the first batch pair.
    FirstBatch,
}

/// Transport distance between every train label and every validation label,
/// computed once and shared across all batch pairs.
#[derive(Debug, Clone)]
pub struct LabelDistanceMatrix {
    values: Array2<Real>,
    epsilon_used: Real,
    built_on: BuiltOn,
    /// Label pairs where one side had no support; their entries were set to
    /// twice the largest computed distance.
    filled_pairs: Vec<(u32, u32)>,
    /// Label pairs whose solver stopped on the iteration budget.
    unconverged_pairs: Vec<(u32, u32)>,
}

impl LabelDistanceMatrix {
    pub fn from_values(values: Array2<Real>, epsilon_used: Real, built_on: BuiltOn) -> Self {
        Self {
            values,
            epsilon_used,
            built_on,
            filled_pairs: Vec::new(),
            unconverged_pairs: Vec::new(),
        }
    }

    pub fn get(&self, y_t: u32, y_v: u32) -> Result<Real> {
        if (y_t as usize) >= self.values.nrows() {
            return Err(Error::UnknownLabel(y_t));
        }
        if (y_v as usize) >= self.values.ncols() {
            return Err(Error::UnknownLabel(y_v));
        }
        Ok(self.values[(y_t as usize, y_v as usize)])
    }

    pub fn values(&self) -> &Array2<Real> {
        &self.values
    }

    pub fn epsilon_used(&self) -> Real {
        self.epsilon_used
    }

    pub fn built_on(&self) -> BuiltOn {
        self.built_on
    }

    pub fn filled_pairs(&self) -> &[(u32, u32)] {
        &self.filled_pairs
    }

    pub fn unconverged_pairs(&self) -> &[(u32, u32)] {
        &self.unconverged_pairs
    }

    pub fn to_json(&self, c: Real) -> Result<String> {
        let file = LabelMatrixFile {
            v_t: self.values.nrows(),
            v_v: self.values.ncols(),
            epsilon_used: self.epsilon_used,
            built_on: self.built_on,
            c,
            values: self
                .values
                .outer_iter()
                .map(|row| row.to_vec())
                .collect(),
            filled_pairs: self.filled_pairs.clone(),
            unconverged_pairs: self.unconverged_pairs.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    /// Returns the matrix and the cost weight `c` it was saved with.
    pub fn from_json(s: &str) -> Result<(Self, Real)> {
        let file: LabelMatrixFile = serde_json::from_str(s)?;
        if file.values.len() != file.v_t || file.values.iter().any(|r| r.len() != file.v_v) {
            return Err(Error::DimensionMismatch(
                "label matrix payload does not match its declared shape".into(),
            ));
        }
        let mut values = Array2::zeros((file.v_t, file.v_v));
        for (i, row) in file.values.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                if !x.is_finite() || x < 0.0 {
                    return Err(Error::MalformedHeader(format!(
                        "label distance ({i},{j}) = {x} is not a finite nonnegative value"
                    )));
                }
                values[(i, j)] = x;
            }
        }
        Ok((
            Self {
                values,
                epsilon_used: file.epsilon_used,
                built_on: file.built_on,
                filled_pairs: file.filled_pairs,
                unconverged_pairs: file.unconverged_pairs,
            },
            file.c,
        ))
    }

    pub fn save(&self, path: &Path, c: Real) -> Result<()> {
        atomic_write(path, self.to_json(c)?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<(Self, Real)> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct LabelMatrixFile {
    v_t: usize,
    v_v: usize,
    epsilon_used: Real,
    built_on: BuiltOn,
    c: Real,
    values: Vec<Vec<Real>>,
    #[serde(default)]
    filled_pairs: Vec<(u32, u32)>,
    #[serde(default)]
    unconverged_pairs: Vec<(u32, u32)>,
}

/// Label-to-label distances over whole-dataset conditionals.
pub fn label_distance_matrix(
    train: &LabeledDataset,
    val: &LabeledDataset,
    solver: &SolverConfig,
    subsample_cap: usize,
    seed: u64,
    tracker: &PeakTracker,
) -> Result<LabelDistanceMatrix> {
    build_label_matrix(
        train,
        val,
        solver,
        subsample_cap,
        seed,
        tracker,
        None,
        None,
        BuiltOn::FullDatasets,
    )
}

/// Label-to-label distances restricted to one batch pair's rows.
#[allow(clippy::too_many_arguments)]
pub fn label_distance_matrix_within(
    train: &LabeledDataset,
    val: &LabeledDataset,
    solver: &SolverConfig,
    subsample_cap: usize,
    seed: u64,
    tracker: &PeakTracker,
    train_rows: &[usize],
    val_rows: &[usize],
) -> Result<LabelDistanceMatrix> {
    build_label_matrix(
        train,
        val,
        solver,
        subsample_cap,
        seed,
        tracker,
        Some(train_rows),
        Some(val_rows),
        BuiltOn::FirstBatch,
    )
}

#[allow(clippy::too_many_arguments)]
fn build_label_matrix(
    train: &LabeledDataset,
    val: &LabeledDataset,
    solver: &SolverConfig,
    subsample_cap: usize,
    seed: u64,
    tracker: &PeakTracker,
    train_rows: Option<&[usize]>,
    val_rows: Option<&[usize]>,
    built_on: BuiltOn,
) -> Result<LabelDistanceMatrix> {
    if train.d() != val.d() {
        return Err(Error::DimensionMismatch(format!(
            "train has {} feature dims, validation has {}",
            train.d(),
            val.d()
        )));
    }
    if subsample_cap == 0 {
        return Err(Error::InvalidConfig(
            "per-label subsample cap must be >= 1".into(),
        ));
    }
    solver.validate()?;

    let supports_t = label_supports(train, train_rows, subsample_cap, seed, 0);
    let supports_v = label_supports(val, val_rows, subsample_cap, seed, 1);
    let (v_t, v_v) = (supports_t.len(), supports_v.len());

    // First pass: the global mean pairwise distance fixes one shared
    // regularization strength for every label pair.
    let mut dist_sum = 0.0;
    let mut dist_count = 0usize;
    for st in supports_t.iter().filter(|s| !s.is_empty()) {
        for sv in supports_v.iter().filter(|s| !s.is_empty()) {
            let _guard = tracker.alloc(st.len() * sv.len());
            let cost = euclidean_cost(train, val, st, sv)?;
            dist_sum += cost.values().iter().sum::<Real>();
            dist_count += st.len() * sv.len();
        }
    }
    if dist_count == 0 {
        return Err(Error::InvalidConfig(
            "no label has support on both sides".into(),
        ));
    }
    let epsilon = solver.epsilon_for(dist_sum / dist_count as Real);
    let opts = SinkhornOptions {
        epsilon,
        max_iters: solver.max_iters,
        tol: solver.tol,
        anneal: solver.anneal,
    };

    // Second pass: one entropic solve per label pair at the shared epsilon.
    let mut values = Array2::from_elem((v_t, v_v), Real::NAN);
    let mut filled = Vec::new();
    let mut unconverged = Vec::new();
    for (y_t, st) in supports_t.iter().enumerate() {
        for (y_v, sv) in supports_v.iter().enumerate() {
            if st.is_empty() || sv.is_empty() {
                filled.push((y_t as u32, y_v as u32));
                continue;
            }
            let _guard = tracker.alloc(st.len() * sv.len());
            let cost = euclidean_cost(train, val, st, sv)?;
            let a = crate::ot::uniform_weights(st.len());
            let b = crate::ot::uniform_weights(sv.len());
            let res = sinkhorn(&cost, &a, &b, &opts)?;
            if !res.duals.converged {
                unconverged.push((y_t as u32, y_v as u32));
            }
            // Entropic dual objectives can dip a hair below zero on
            // near-degenerate supports; distances are clamped to the valid
            // range.
            values[(y_t, y_v)] = res.value.max(0.0);
        }
    }

    let max_finite = values.iter().copied().filter(|x| x.is_finite()).fold(0.0, Real::max);
    for &(y_t, y_v) in &filled {
        values[(y_t as usize, y_v as usize)] = max_finite * 2.0;
    }

    Ok(LabelDistanceMatrix {
        values,
        epsilon_used: epsilon,
        built_on,
        filled_pairs: filled,
        unconverged_pairs: unconverged,
    })
}

/// Per-label support rows, optionally restricted to `rows`, each capped to
/// `cap` points by a seeded draw (kept sorted for deterministic layouts).
fn label_supports(
    ds: &LabeledDataset,
    rows: Option<&[usize]>,
    cap: usize,
    seed: u64,
    side: u64,
) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); ds.v()];
    match rows {
        Some(rows) => {
            for &i in rows {
                groups[ds.labels()[i] as usize].push(i);
            }
            for g in &mut groups {
                g.sort_unstable();
            }
        }
        None => {
            for (i, &label) in ds.labels().iter().enumerate() {
                groups[label as usize].push(i);
            }
        }
    }
    use rand::SeedableRng;
    for (label, g) in groups.iter_mut().enumerate() {
        if g.len() > cap {
            let stream = side << 32 | label as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(
                seed ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(stream.wrapping_add(2)),
            );
            let mut picked = rand::seq::index::sample(&mut rng, g.len(), cap).into_vec();
            picked.sort_unstable();
            *g = picked.into_iter().map(|k| g[k]).collect();
        }
    }
    groups
}

fn euclidean_cost(
    train: &LabeledDataset,
    val: &LabeledDataset,
    rows: &[usize],
    cols: &[usize],
) -> Result<CostMatrix<Real>> {
    let mut values = Array2::zeros((rows.len(), cols.len()));
    for (k, &i) in rows.iter().enumerate() {
        let x = train.row(i);
        for (l, &j) in cols.iter().enumerate() {
            values[(k, l)] = euclid(x, val.row(j));
        }
    }
    CostMatrix::new(values, "label support (train)", "label support (val)")
}

#[inline]
fn euclid(x: ArrayView1<'_, Real>, y: ArrayView1<'_, Real>) -> Real {
    let mut s = 0.0;
    for (a, b) in x.iter().zip(y.iter()) {
        let d = a - b;
        s += d * d;
    }
    s.sqrt()
}

/// Ground cost between one labeled point and one labeled validation point:
/// Euclidean feature distance plus `c` times the label-to-label distance.
pub fn point_pair_cost(
    x_t: ArrayView1<'_, Real>,
    y_t: u32,
    x_v: ArrayView1<'_, Real>,
    y_v: u32,
    l: &LabelDistanceMatrix,
    c: Real,
) -> Result<Real> {
    if !(c >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "label cost weight {c} must be >= 0"
        )));
    }
    Ok(euclid(x_t, x_v) + c * l.get(y_t, y_v)?)
}

/// Ground-cost matrix between a train batch and a validation batch, with its
/// entries registered on `tracker` for the lifetime of the returned guard.
pub fn batch_cost_matrix(
    train: &LabeledDataset,
    val: &LabeledDataset,
    rows: &[usize],
    cols: &[usize],
    l: &LabelDistanceMatrix,
    c: Real,
    tracker: &PeakTracker,
) -> Result<(CostMatrix<Real>, AllocGuard)> {
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::DegenerateSize(0));
    }
    if train.d() != val.d() {
        return Err(Error::DimensionMismatch(format!(
            "train has {} feature dims, validation has {}",
            train.d(),
            val.d()
        )));
    }
    if !(c >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "label cost weight {c} must be >= 0"
        )));
    }
    let guard = tracker.alloc(rows.len() * cols.len());
    let mut values = Array2::zeros((rows.len(), cols.len()));
    for (k, &i) in rows.iter().enumerate() {
        let x = train.row(i);
        let y_t = train.labels()[i];
        let l_row: Vec<Real> = (0..val.v() as u32)
            .map(|y_v| l.get(y_t, y_v))
            .collect::<Result<_>>()?;
        for (m, &j) in cols.iter().enumerate() {
            values[(k, m)] = euclid(x, val.row(j)) + c * l_row[val.labels()[j] as usize];
        }
    }
    let cost = CostMatrix::new(values, "train batch", "val batch")?;
    Ok((cost, guard))
}
