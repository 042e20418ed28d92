//! Seeded batch partitioning: disjoint index batches covering a dataset.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::config::Strategy;
use crate::error::{Error, Result};

use super::{BatchPartition, LabeledDataset};

/// Splits `[0, n)` into `ceil(n / batch_size)` disjoint batches. All batches
/// have exactly `batch_size` points except possibly the last. `Random`
/// shuffles then chunks; `Stratified` interleaves per-label shuffled queues
/// round-robin before chunking, so every batch samples the labels evenly for
/// as long as each label has points left.
pub fn partition_batches(
    dataset: &LabeledDataset,
    batch_size: usize,
    strategy: Strategy,
    seed: u64,
) -> Result<BatchPartition> {
    let n = dataset.n();
    if batch_size == 0 || batch_size > n {
        return Err(Error::InvalidConfig(format!(
            "batch_size {batch_size} must be in [1, {n}]"
        )));
    }
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let batches = match strategy {
        Strategy::Random => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            order.chunks(batch_size).map(<[usize]>::to_vec).collect()
        }
        Strategy::Stratified => stratified(dataset, batch_size, &mut rng),
    };
    debug_assert_eq!(batches.iter().map(Vec::len).sum::<usize>(), n);
    Ok(BatchPartition {
        batches,
        batch_size,
        strategy,
        seed,
    })
}

fn stratified(
    dataset: &LabeledDataset,
    batch_size: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<usize>> {
    let n = dataset.n();
    let v = dataset.v();

    // Per-label index queues in shuffled order; we pop from the back.
    let mut queues: Vec<Vec<usize>> = vec![Vec::new(); v];
    for (i, &label) in dataset.labels().iter().enumerate() {
        queues[label as usize].push(i);
    }
    for q in &mut queues {
        q.shuffle(rng);
    }

    // Round-robin over labels: one point from each non-empty queue per
    // sweep. Minority labels therefore appear in as many batches as their
    // counts allow, which keeps per-batch label coverage maximal.
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        for q in &mut queues {
            if let Some(i) = q.pop() {
                order.push(i);
            }
        }
    }
    order.chunks(batch_size).map(<[usize]>::to_vec).collect()
}
