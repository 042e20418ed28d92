//! Synthesize a corrupted dataset, value it with the batched engine, and
//! print the detection rate. Run with:
//!
//! ```sh
//! cargo run --release --example quickstart
//! ```

use sava_core::budget::PeakTracker;
use sava_core::config::{SolverConfig, ValuationConfig};
use sava_core::dataset::{inject_label_noise, synth_gaussian_mixture_pair};
use sava_core::eval::{detection_rate, rank_by_value};
use sava_core::sava::sava_values;

fn main() -> sava_core::Result<()> {
    let (clean, val) = synth_gaussian_mixture_pair(5000, 2000, 32, 10, 8.0, 1)?;
    let (train, mask) = inject_label_noise(&clean, 0.3, 2)?;

    let solver = SolverConfig::default();
    let valuation = ValuationConfig {
        batch_size: 1024,
        val_batch_size: 1024,
        solver: solver.clone(),
        ..ValuationConfig::default()
    };
    let tracker = PeakTracker::default();

    // `None` builds the label-distance matrix from the data; pass a saved
    // one to skip that step on repeat runs.
    let report = sava_values(&train, &val, None, &solver, &valuation, &tracker)?;
    let order = rank_by_value(&report.values, &report.ids)?;
    let rate = detection_rate(&order, &mask, 0.25, "sava")?;
    println!("detection rate: {:.3}", rate.detection_rate);
    Ok(())
}
