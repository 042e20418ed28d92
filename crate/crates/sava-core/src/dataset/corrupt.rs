//! Seeded corruption injectors. Each injector returns the corrupted copy
//! together with the ground-truth mask so detection can be scored later.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::Real;

use super::{selection_count, CorruptionKind, CorruptionMask, LabeledDataset};

fn select_rows(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, ChaCha8Rng)> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidConfig(format!(
            "corruption fraction {fraction} is outside [0, 1]"
        )));
    }
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = selection_count(fraction, n);
    let chosen = rand::seq::index::sample(&mut rng, n, k).into_vec();
    Ok((chosen, rng))
}

/// Flips the label of a uniformly sampled `fraction` of rows to a uniformly
/// chosen *different* label. Rejects single-class datasets when asked to flip
/// anything, since no different label exists.
pub fn inject_label_noise(
    dataset: &LabeledDataset,
    fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, CorruptionMask)> {
    let (chosen, mut rng) = select_rows(dataset.n(), fraction, seed)?;
    if !chosen.is_empty() && dataset.v() < 2 {
        return Err(Error::SingleClassDataset);
    }

    let mut labels = dataset.labels().to_vec();
    let mut flags = vec![false; dataset.n()];
    let v = dataset.v() as u32;
    for &i in &chosen {
        let old = labels[i];
        let draw = rng.random_range(0..v - 1);
        labels[i] = if draw >= old { draw + 1 } else { draw };
        flags[i] = true;
    }

    let corrupted = dataset.clone().with_labels(labels)?;
    let mask = CorruptionMask {
        flags,
        kind: CorruptionKind::LabelNoise,
        fraction,
        seed,
    };
    Ok((corrupted, mask))
}

/// Adds isotropic Gaussian noise of scale `sigma` to the features of a
/// uniformly sampled `fraction` of rows. Labels are untouched.
pub fn inject_feature_noise(
    dataset: &LabeledDataset,
    fraction: f64,
    sigma: Real,
    seed: u64,
) -> Result<(LabeledDataset, CorruptionMask)> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "noise scale {sigma} must be >= 0"
        )));
    }
    let (chosen, mut rng) = select_rows(dataset.n(), fraction, seed)?;

    let mut features = dataset.features().to_owned();
    let mut flags = vec![false; dataset.n()];
    for &i in &chosen {
        for x in features.row_mut(i).iter_mut() {
            let z: Real = rng.sample(StandardNormal);
            *x += sigma * z;
        }
        flags[i] = true;
    }

    let corrupted = LabeledDataset::new(
        features,
        dataset.labels().to_vec(),
        dataset.ids().to_vec(),
        dataset.v(),
    )?;
    let mask = CorruptionMask {
        flags,
        kind: CorruptionKind::FeatureNoise,
        fraction,
        seed,
    };
    Ok((corrupted, mask))
}
