//! Whole-dataset valuation: one entropic transport solve over the full
//! train-by-validation cost matrix, calibrated dual gradients as values.

use std::time::Instant;

use crate::budget::PeakTracker;
use crate::config::{SolverConfig, ValuationConfig};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::label_geometry::{batch_cost_matrix, LabelDistanceMatrix};
use crate::ot::{calibrated_gradient, sinkhorn, uniform_weights, SinkhornOptions};
use crate::report::{Method, ValuationReport};

/// Runs the single full-matrix solve. The cost matrix is materialized on
/// purpose: this method exists to exhibit the quadratic memory wall, so the
/// budget guard refuses oversized problems instead of silently streaming.
pub fn lava_values(
    train: &LabeledDataset,
    val: &LabeledDataset,
    l: &LabelDistanceMatrix,
    solver: &SolverConfig,
    valuation: &ValuationConfig,
    tracker: &PeakTracker,
) -> Result<ValuationReport> {
    solver.validate()?;
    valuation.validate()?;
    let start = Instant::now();

    let entries = train.n() * val.n();
    if entries > valuation.memory_budget_entries {
        return Err(Error::MemoryBudgetExceeded {
            required: entries,
            budget: valuation.memory_budget_entries,
        });
    }

    let rows: Vec<usize> = (0..train.n()).collect();
    let cols: Vec<usize> = (0..val.n()).collect();
    let (cost, _guard) = batch_cost_matrix(train, val, &rows, &cols, l, valuation.c, tracker)?;

    let a = uniform_weights(train.n());
    let b = uniform_weights(val.n());
    let opts = SinkhornOptions::from_config(solver, cost.mean());
    let solved = sinkhorn(&cost, &a, &b, &opts)?;

    let mut warnings = Vec::new();
    if !solved.duals.converged {
        warnings.push(format!(
            "full-matrix solve stopped at marginal error {:.3e} after {} iterations",
            solved.duals.marginal_err, solved.duals.iterations
        ));
    }
    for &(y_t, y_v) in l.filled_pairs() {
        warnings.push(format!(
            "label pair ({y_t}, {y_v}) had no support on one side; distance was filled"
        ));
    }

    let values = calibrated_gradient(&solved.duals.f)?;
    Ok(ValuationReport {
        method: Method::Lava,
        ids: train.ids().to_vec(),
        values,
        warnings,
        wall_time_s: start.elapsed().as_secs_f64(),
        peak_cost_matrix_entries: tracker.peak(),
        config: serde_json::json!({ "solver": solver, "valuation": valuation }),
        train_hash: train.content_hash(),
        val_hash: val.content_hash(),
    })
}
