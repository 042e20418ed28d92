//! Seeded Gaussian-mixture synthesis, the desk-scale stand-in for embedding
//! extractors.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::Real;

use super::LabeledDataset;

/// Independent deterministic RNG stream for one (seed, purpose) pair.
fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(stream + 1))
}

/// `v` unit-covariance Gaussian clusters with centers pairwise at least `sep`
/// apart; labels are cluster ids, assigned round-robin so per-label counts
/// are as even as possible. Deterministic per seed.
pub fn synth_gaussian_mixture(
    n: usize,
    d: usize,
    v: usize,
    sep: Real,
    seed: u64,
) -> Result<LabeledDataset> {
    let (train, _) = synth_split(n, 0, d, v, sep, seed)?;
    Ok(train)
}

/// Training/validation pair drawn from the same mixture: identical centers,
/// independent sample streams. The validation side is clean by construction.
pub fn synth_gaussian_mixture_pair(
    n_train: usize,
    n_val: usize,
    d: usize,
    v: usize,
    sep: Real,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if n_val == 0 {
        return Err(Error::InvalidConfig("validation size must be >= 1".into()));
    }
    let (train, val) = synth_split(n_train, n_val, d, v, sep, seed)?;
    Ok((train, val.expect("n_val >= 1 produces a validation set")))
}

fn synth_split(
    n: usize,
    n_val: usize,
    d: usize,
    v: usize,
    sep: Real,
    seed: u64,
) -> Result<(LabeledDataset, Option<LabeledDataset>)> {
    if v == 0 || d == 0 {
        return Err(Error::InvalidConfig(
            "need at least one class and one dimension".into(),
        ));
    }
    if n < v {
        return Err(Error::InvalidConfig(format!(
            "n={n} cannot cover v={v} clusters"
        )));
    }
    if n_val > 0 && n_val < v {
        return Err(Error::InvalidConfig(format!(
            "val_n={n_val} cannot cover v={v} clusters"
        )));
    }
    if !(sep > 0.0) {
        return Err(Error::InvalidConfig("sep must be > 0".into()));
    }

    let centers = cluster_centers(v, d, sep);
    let train = sample_mixture(n, d, v, &centers, stream_rng(seed, 1))?;
    let val = if n_val > 0 {
        Some(sample_mixture(n_val, d, v, &centers, stream_rng(seed, 2))?)
    } else {
        None
    };
    Ok((train, val))
}

/// Centers pairwise at least `sep` apart.
///
/// Up to `2d` clusters fit on the cross-polytope `+-(sep/sqrt(2)) e_k`
/// (closest pair exactly `sep` apart); beyond that, centers fall back to a
/// lattice spaced `sep` along the first axis.
fn cluster_centers(v: usize, d: usize, sep: Real) -> Vec<Vec<Real>> {
    let mut centers = vec![vec![0.0; d]; v];
    if v <= 2 * d {
        let r = sep / Real::sqrt(2.0);
        for (k, c) in centers.iter_mut().enumerate() {
            let axis = k / 2;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            c[axis] = sign * r;
        }
    } else {
        for (k, c) in centers.iter_mut().enumerate() {
            c[0] = k as Real * sep;
        }
    }
    centers
}

fn sample_mixture(
    n: usize,
    d: usize,
    v: usize,
    centers: &[Vec<Real>],
    mut rng: ChaCha8Rng,
) -> Result<LabeledDataset> {
    let mut features = Array2::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = (i % v) as u32;
        labels.push(label);
        let center = &centers[label as usize];
        for (j, x) in features.row_mut(i).iter_mut().enumerate() {
            let z: Real = rng.sample(StandardNormal);
            *x = center[j] + z;
        }
    }
    let ids = (0..n as u64).collect();
    LabeledDataset::new(features, labels, ids, v)
}
