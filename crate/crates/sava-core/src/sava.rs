//! Batched hierarchical valuation: per-pair transport solves over batch
//! cost matrices, an outer batch-level solve, and plan-weighted per-point
//! scores. Includes the batch-wise baseline that skips the outer level.

use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;

use crate::budget::PeakTracker;
use crate::config::{CachePolicy, SolverConfig, ValuationConfig};
use crate::dataset::{partition_batches, BatchPartition, LabeledDataset};
use crate::error::{Error, Result};
use crate::label_geometry::{
    batch_cost_matrix, label_distance_matrix, label_distance_matrix_within, LabelDistanceMatrix,
};
use crate::ot::{
    calibrated_gradient, exact_ot, recover_plan, sinkhorn, uniform_weights, CostMatrix,
    DualPotentials, SinkhornOptions, TransportPlan,
};
use crate::report::{Method, ValuationReport};
use crate::Real;

/// Results of all per-pair solves: the batch-distance matrix plus the
/// training-side duals needed for point scores.
#[derive(Debug)]
pub struct BatchOtTable {
    cbar: CostMatrix<Real>,
    /// `duals_f[i][j]` is the train-side dual vector of pair `(i, j)`,
    /// parallel to batch `i`'s member list.
    duals_f: Vec<Vec<Vec<Real>>>,
    pair_warnings: Vec<String>,
    _cbar_guard: crate::budget::AllocGuard,
}

impl BatchOtTable {
    pub fn k_t(&self) -> usize {
        self.cbar.n()
    }

    pub fn k_v(&self) -> usize {
        self.cbar.m()
    }

    pub fn cbar(&self) -> ndarray::ArrayView2<'_, Real> {
        self.cbar.values()
    }

    pub fn pair_duals(&self, i: usize, j: usize) -> &[Real] {
        &self.duals_f[i][j]
    }

    pub fn pair_warnings(&self) -> &[String] {
        &self.pair_warnings
    }
}

/// Batch-level transport plan and duals over the batch-distance matrix.
#[derive(Debug)]
pub struct OuterPlan {
    pub pibar: TransportPlan<Real>,
    pub duals: DualPotentials<Real>,
}

struct PairSolve {
    value: Real,
    f: Vec<Real>,
    warning: Option<String>,
    filled_pairs: Vec<(u32, u32)>,
}

/// Solves one entropic problem per batch pair, in `(i, j)` lexicographic
/// order (or concurrently with identical results). Only one pair cost
/// matrix is live at a time per worker; the batch-distance matrix itself is
/// the only quadratic-in-K allocation.
#[allow(clippy::too_many_arguments)]
pub fn batch_ot_table(
    train: &LabeledDataset,
    val: &LabeledDataset,
    pt: &BatchPartition,
    pv: &BatchPartition,
    l: Option<&LabelDistanceMatrix>,
    solver: &SolverConfig,
    valuation: &ValuationConfig,
    tracker: &PeakTracker,
) -> Result<BatchOtTable> {
    solver.validate()?;
    valuation.validate()?;
    let (k_t, k_v) = (pt.k(), pv.k());
    let cbar_guard = tracker.alloc(k_t * k_v);

    let solve_pair = |i: usize, j: usize| -> Result<PairSolve> {
        // Without a shared label-distance cache every pair rebuilds it from
        // the full datasets; the values are identical, only slower.
        let rebuilt;
        let l_ref = match l {
            Some(l) => l,
            None => {
                rebuilt = label_distance_matrix(
                    train,
                    val,
                    solver,
                    valuation.l2l_subsample_cap,
                    valuation.seed,
                    tracker,
                )?;
                &rebuilt
            }
        };
        let (cost, _guard) =
            batch_cost_matrix(train, val, &pt.batches[i], &pv.batches[j], l_ref, valuation.c, tracker)?;
        let a = uniform_weights(pt.batches[i].len());
        let b = uniform_weights(pv.batches[j].len());
        let opts = SinkhornOptions::from_config(solver, cost.mean());
        let solved = sinkhorn(&cost, &a, &b, &opts)?;
        let warning = (!solved.duals.converged).then(|| {
            format!(
                "batch pair ({i}, {j}) stopped at marginal error {:.3e} after {} iterations",
                solved.duals.marginal_err, solved.duals.iterations
            )
        });
        let filled_pairs = if i == 0 && j == 0 {
            l_ref.filled_pairs().to_vec()
        } else {
            Vec::new()
        };
        Ok(PairSolve {
            value: solved.value.max(0.0),
            f: solved.duals.f,
            warning,
            filled_pairs,
        })
    };

    let pairs: Vec<(usize, usize)> = (0..k_t).flat_map(|i| (0..k_v).map(move |j| (i, j))).collect();
    let solved: Vec<PairSolve> = if valuation.workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(valuation.workers)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
        pool.install(|| {
            pairs
                .par_iter()
                .map(|&(i, j)| solve_pair(i, j))
                .collect::<Result<Vec<_>>>()
        })?
    } else {
        pairs
            .iter()
            .map(|&(i, j)| solve_pair(i, j))
            .collect::<Result<Vec<_>>>()?
    };

    let mut cbar = Array2::zeros((k_t, k_v));
    let mut duals_f: Vec<Vec<Vec<Real>>> = (0..k_t).map(|_| Vec::with_capacity(k_v)).collect();
    let mut warnings = Vec::new();
    for (&(i, j), pair) in pairs.iter().zip(solved) {
        cbar[(i, j)] = pair.value;
        duals_f[i].push(pair.f);
        if let Some(w) = pair.warning {
            warnings.push(w);
        }
        for (y_t, y_v) in pair.filled_pairs {
            warnings.push(format!(
                "label pair ({y_t}, {y_v}) had no support on one side; distance was filled"
            ));
        }
    }
    let cbar = CostMatrix::new(cbar, "train batches", "val batches")?;
    Ok(BatchOtTable {
        cbar,
        duals_f,
        pair_warnings: warnings,
        _cbar_guard: cbar_guard,
    })
}

/// Entropic solve over the batch-distance matrix with uniform batch weights.
pub fn outer_plan(table: &BatchOtTable, solver: &SolverConfig) -> Result<OuterPlan> {
    let a = uniform_weights(table.k_t());
    let b = uniform_weights(table.k_v());
    let opts = SinkhornOptions::from_config(solver, table.cbar.mean());
    let solved = sinkhorn(&table.cbar, &a, &b, &opts)?;
    let pibar = recover_plan(&solved.duals, &table.cbar)?;
    Ok(OuterPlan {
        pibar,
        duals: solved.duals,
    })
}

/// Calibrated batch-level gradients: which whole batches help or hurt.
pub fn batch_values(outer: &OuterPlan) -> Result<Vec<Real>> {
    calibrated_gradient(&outer.duals.f)
}

/// Full batched pipeline with artifacts kept for inspection.
#[derive(Debug)]
pub struct SavaRun {
    pub report: ValuationReport,
    pub cbar: Array2<Real>,
    pub pibar: Array2<Real>,
    pub partition_t: BatchPartition,
    pub partition_v: BatchPartition,
}

/// Batched valuation: per-point scores are the outer-plan-weighted sums of
/// per-pair calibrated gradients. `l` short-circuits the cache policy when
/// supplied (e.g. loaded from disk).
pub fn sava_run(
    train: &LabeledDataset,
    val: &LabeledDataset,
    l: Option<&LabelDistanceMatrix>,
    solver: &SolverConfig,
    valuation: &ValuationConfig,
    tracker: &PeakTracker,
) -> Result<SavaRun> {
    let start = Instant::now();
    let (pt, pv, owned_l) = prepare(train, val, l, solver, valuation, tracker)?;
    let l_ref = match (l, &owned_l) {
        (Some(l), _) => Some(l),
        (None, Some(owned)) => Some(owned),
        (None, None) => None,
    };

    let table = batch_ot_table(train, val, &pt, &pv, l_ref, solver, valuation, tracker)?;
    let outer = outer_plan(&table, solver)?;

    let mut weights = outer.pibar.pi.clone();
    if valuation.row_normalize_plan {
        for mut row in weights.outer_iter_mut() {
            let s: Real = row.iter().sum();
            if !(s > 0.0) {
                return Err(Error::NonFiniteIntermediate("outer plan row sum"));
            }
            row.mapv_inplace(|w| w / s);
        }
    }

    let (values, mut warnings) = assemble_scores(&table, &pt, &weights, train.n())?;
    warnings.extend(table.pair_warnings.iter().cloned());
    if !outer.duals.converged {
        warnings.push(format!(
            "batch-level solve stopped at marginal error {:.3e} after {} iterations",
            outer.duals.marginal_err, outer.duals.iterations
        ));
    }
    if let Some(l) = l_ref {
        for &(y_t, y_v) in l.filled_pairs() {
            warnings.push(format!(
                "label pair ({y_t}, {y_v}) had no support on one side; distance was filled"
            ));
        }
    }

    let report = ValuationReport {
        method: Method::Sava,
        ids: train.ids().to_vec(),
        values,
        warnings,
        wall_time_s: start.elapsed().as_secs_f64(),
        peak_cost_matrix_entries: tracker.peak(),
        config: serde_json::json!({ "solver": solver, "valuation": valuation }),
        train_hash: train.content_hash(),
        val_hash: val.content_hash(),
    };
    Ok(SavaRun {
        report,
        cbar: table.cbar.values().to_owned(),
        pibar: outer.pibar.pi.clone(),
        partition_t: pt,
        partition_v: pv,
    })
}

pub fn sava_values(
    train: &LabeledDataset,
    val: &LabeledDataset,
    l: Option<&LabelDistanceMatrix>,
    solver: &SolverConfig,
    valuation: &ValuationConfig,
    tracker: &PeakTracker,
) -> Result<ValuationReport> {
    Ok(sava_run(train, val, l, solver, valuation, tracker)?.report)
}

/// Baseline that aggregates the same per-pair gradients uniformly over
/// validation batches instead of through the batch-level plan.
pub fn batchwise_lava_values(
    train: &LabeledDataset,
    val: &LabeledDataset,
    l: Option<&LabelDistanceMatrix>,
    solver: &SolverConfig,
    valuation: &ValuationConfig,
    tracker: &PeakTracker,
) -> Result<ValuationReport> {
    let start = Instant::now();
    let (pt, pv, owned_l) = prepare(train, val, l, solver, valuation, tracker)?;
    let l_ref = match (l, &owned_l) {
        (Some(l), _) => Some(l),
        (None, Some(owned)) => Some(owned),
        (None, None) => None,
    };

    let table = batch_ot_table(train, val, &pt, &pv, l_ref, solver, valuation, tracker)?;
    let weights = Array2::from_elem((pt.k(), pv.k()), 1.0 / pv.k() as Real);
    let (values, mut warnings) = assemble_scores(&table, &pt, &weights, train.n())?;
    warnings.extend(table.pair_warnings.iter().cloned());
    if let Some(l) = l_ref {
        for &(y_t, y_v) in l.filled_pairs() {
            warnings.push(format!(
                "label pair ({y_t}, {y_v}) had no support on one side; distance was filled"
            ));
        }
    }

    Ok(ValuationReport {
        method: Method::BatchwiseLava,
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

/// Both levels solved exactly: per-pair linear programs fill the batch
/// distance matrix, then one exact solve on top. Used as the upper-level
/// reference when comparing against the exact whole-problem value.
pub fn hierarchical_exact_value(
    train: &LabeledDataset,
    val: &LabeledDataset,
    pt: &BatchPartition,
    pv: &BatchPartition,
    l: &LabelDistanceMatrix,
    c: Real,
    tracker: &PeakTracker,
) -> Result<Real> {
    let (k_t, k_v) = (pt.k(), pv.k());
    let _guard = tracker.alloc(k_t * k_v);
    let mut cbar = Array2::zeros((k_t, k_v));
    for i in 0..k_t {
        for j in 0..k_v {
            let (cost, _g) =
                batch_cost_matrix(train, val, &pt.batches[i], &pv.batches[j], l, c, tracker)?;
            let a = uniform_weights(pt.batches[i].len());
            let b = uniform_weights(pv.batches[j].len());
            cbar[(i, j)] = exact_ot(&cost, &a, &b)?.value;
        }
    }
    let outer = CostMatrix::new(cbar, "train batches", "val batches")?;
    let a = uniform_weights(k_t);
    let b = uniform_weights(k_v);
    Ok(exact_ot(&outer, &a, &b)?.value)
}

/// Clamps batch sizes to the dataset sizes, partitions both sides, and
/// builds the label-distance cache according to policy (unless the caller
/// already supplied one).
fn prepare(
    train: &LabeledDataset,
    val: &LabeledDataset,
    l: Option<&LabelDistanceMatrix>,
    solver: &SolverConfig,
    valuation: &ValuationConfig,
    tracker: &PeakTracker,
) -> Result<(BatchPartition, BatchPartition, Option<LabelDistanceMatrix>)> {
    solver.validate()?;
    valuation.validate()?;
    let bs_t = valuation.batch_size.min(train.n());
    let bs_v = valuation.val_batch_size.min(val.n());
    let pt = partition_batches(train, bs_t, valuation.strategy, valuation.seed)?;
    let pv = partition_batches(val, bs_v, valuation.strategy, valuation.seed.wrapping_add(1))?;

    let owned_l = if l.is_some() {
        None
    } else {
        match valuation.l2l_cache {
            CachePolicy::Full => Some(label_distance_matrix(
                train,
                val,
                solver,
                valuation.l2l_subsample_cap,
                valuation.seed,
                tracker,
            )?),
            CachePolicy::FirstBatch => Some(label_distance_matrix_within(
                train,
                val,
                solver,
                valuation.l2l_subsample_cap,
                valuation.seed,
                tracker,
                &pt.batches[0],
                &pv.batches[0],
            )?),
            CachePolicy::Off => None,
        }
    };
    Ok((pt, pv, owned_l))
}

/// Sums weighted per-pair calibrated gradients into per-point scores.
/// Single-point batches have no calibration (there is no other point to
/// trade mass with), so they score 0 and get flagged.
fn assemble_scores(
    table: &BatchOtTable,
    pt: &BatchPartition,
    weights: &Array2<Real>,
    n: usize,
) -> Result<(Vec<Real>, Vec<String>)> {
    if weights.nrows() != table.k_t() || weights.ncols() != table.k_v() {
        return Err(Error::DimensionMismatch(format!(
            "weight matrix {}x{} vs table {}x{}",
            weights.nrows(),
            weights.ncols(),
            table.k_t(),
            table.k_v()
        )));
    }
    let mut values = vec![0.0; n];
    let mut warnings = Vec::new();
    for (i, members) in pt.batches.iter().enumerate() {
        if members.len() == 1 {
            warnings.push(format!(
                "batch {i} holds a single point; its score is pinned to 0"
            ));
            continue;
        }
        for j in 0..table.k_v() {
            let w = weights[(i, j)];
            let cal = calibrated_gradient(table.pair_duals(i, j))?;
            for (p, &k) in members.iter().enumerate() {
                values[k] += w * cal[p];
            }
        }
    }
    Ok((values, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Strategy;
    use crate::dataset::synth_gaussian_mixture_pair;
    use crate::label_geometry::BuiltOn;
    use crate::lava::lava_values;

    fn toy(
        n: usize,
        m: usize,
        seed: u64,
    ) -> (LabeledDataset, LabeledDataset, LabelDistanceMatrix, PeakTracker) {
        let (train, val) = synth_gaussian_mixture_pair(n, m, 3, 2, 6.0, seed).unwrap();
        let tracker = PeakTracker::default();
        let l = label_distance_matrix(&train, &val, &SolverConfig::default(), 5000, 0, &tracker)
            .unwrap();
        (train, val, l, tracker)
    }

    #[test]
    fn single_batch_pair_reduces_to_the_full_solve() {
        let (train, val, l, tracker) = toy(40, 16, 1);
        let solver = SolverConfig::default();
        let cfg = ValuationConfig {
            batch_size: 4096,
            val_batch_size: 4096,
            ..ValuationConfig::default()
        };
        let sava = sava_values(&train, &val, Some(&l), &solver, &cfg, &tracker).unwrap();
        let lava = lava_values(&train, &val, &l, &solver, &cfg, &tracker).unwrap();
        assert_eq!(sava.values.len(), lava.values.len());
        for (s, v) in sava.values.iter().zip(&lava.values) {
            assert!((s - v).abs() <= 1e-8, "sava {s} vs lava {v}");
        }
    }

    #[test]
    fn table_k1_matches_direct_value_and_identical_batches_cost_nothing() {
        let (train, val, l, tracker) = toy(12, 12, 2);
        let solver = SolverConfig::default();
        let cfg = ValuationConfig::default();
        let pt = BatchPartition::whole(12);
        let pv = BatchPartition::whole(12);
        let table =
            batch_ot_table(&train, &val, &pt, &pv, Some(&l), &solver, &cfg, &tracker).unwrap();
        assert_eq!((table.k_t(), table.k_v()), (1, 1));

        let rows: Vec<usize> = (0..12).collect();
        let (cost, _g) = batch_cost_matrix(&train, &val, &rows, &rows, &l, 1.0, &tracker).unwrap();
        let direct = sinkhorn(
            &cost,
            &uniform_weights(12),
            &uniform_weights(12),
            &SinkhornOptions::from_config(&solver, cost.mean()),
        )
        .unwrap();
        assert!((table.cbar()[(0, 0)] - direct.value).abs() < 1e-12);

        // Self-transport with the label term disabled is (near) free.
        let cfg0 = ValuationConfig {
            c: 0.0,
            ..ValuationConfig::default()
        };
        let self_table =
            batch_ot_table(&train, &train, &pt, &pv, Some(&l), &solver, &cfg0, &tracker).unwrap();
        let scale = cost.mean();
        assert!(
            self_table.cbar()[(0, 0)] <= 0.05 * scale,
            "self distance {} vs scale {scale}",
            self_table.cbar()[(0, 0)]
        );
    }

    #[test]
    fn pair_entries_match_the_exact_oracle() {
        let (train, val, l, tracker) = toy(8, 8, 3);
        let solver = SolverConfig {
            epsilon_factor: 1e-3,
            max_iters: 20_000,
            ..SolverConfig::default()
        };
        let cfg = ValuationConfig::default();
        let pt = partition_batches(&train, 4, Strategy::Random, 5).unwrap();
        let pv = partition_batches(&val, 4, Strategy::Random, 6).unwrap();
        let table =
            batch_ot_table(&train, &val, &pt, &pv, Some(&l), &solver, &cfg, &tracker).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let (cost, _g) = batch_cost_matrix(
                    &train,
                    &val,
                    &pt.batches[i],
                    &pv.batches[j],
                    &l,
                    1.0,
                    &tracker,
                )
                .unwrap();
                let exact = exact_ot(&cost, &uniform_weights(4), &uniform_weights(4))
                    .unwrap()
                    .value;
                let rel = (table.cbar()[(i, j)] - exact).abs() / exact.max(1e-9);
                assert!(rel < 0.05, "pair ({i},{j}): entropic vs exact rel err {rel}");
            }
        }
    }

    #[test]
    fn outer_plan_is_doubly_stochastic_up_to_batch_weights() {
        let (train, val, l, tracker) = toy(32, 16, 4);
        let solver = SolverConfig::default();
        let cfg = ValuationConfig::default();
        let pt = partition_batches(&train, 8, Strategy::Random, 0).unwrap();
        let pv = partition_batches(&val, 4, Strategy::Random, 1).unwrap();
        let table =
            batch_ot_table(&train, &val, &pt, &pv, Some(&l), &solver, &cfg, &tracker).unwrap();
        let outer = outer_plan(&table, &solver).unwrap();
        for row in outer.pibar.pi.outer_iter() {
            let s: Real = row.iter().sum();
            assert!((s - 0.25).abs() < 1e-4, "row sum {s}");
        }
        for col in outer.pibar.pi.columns() {
            let s: Real = col.iter().sum();
            assert!((s - 0.25).abs() < 1e-4, "col sum {s}");
        }
    }

    #[test]
    fn sharp_outer_plan_concentrates_on_cheap_pairs() {
        let cbar = ndarray::array![[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]];
        let cost = CostMatrix::new(cbar, "r", "c").unwrap();
        let solver = SolverConfig {
            epsilon_abs: Some(1e-3),
            ..SolverConfig::default()
        };
        let solved = sinkhorn(
            &cost,
            &uniform_weights(3),
            &uniform_weights(3),
            &SinkhornOptions::from_config(&solver, cost.mean()),
        )
        .unwrap();
        let plan = recover_plan(&solved.duals, &cost).unwrap();
        for i in 0..3 {
            assert!(plan.pi[(i, i)] > 0.32, "diagonal mass {}", plan.pi[(i, i)]);
        }
    }

    #[test]
    fn batch_gradients_follow_the_closed_form() {
        let duals = DualPotentials {
            f: vec![1.0, 3.0],
            g: vec![0.0],
            a: vec![0.5, 0.5],
            b: vec![1.0],
            epsilon: 0.1,
            iterations: 1,
            marginal_err: 0.0,
            converged: true,
        };
        let outer = OuterPlan {
            pibar: TransportPlan {
                pi: Array2::from_elem((2, 1), 0.5),
                epsilon: 0.1,
            },
            duals,
        };
        assert_eq!(batch_values(&outer).unwrap(), vec![-2.0, 2.0]);
    }

    #[test]
    fn scores_are_zero_sum_per_batch() {
        let (train, val, l, tracker) = toy(60, 24, 5);
        let solver = SolverConfig::default();
        let cfg = ValuationConfig {
            batch_size: 20,
            val_batch_size: 8,
            ..ValuationConfig::default()
        };
        let run = sava_run(&train, &val, Some(&l), &solver, &cfg, &tracker).unwrap();
        for (i, batch) in run.partition_t.batches.iter().enumerate() {
            let s: Real = batch.iter().map(|&k| run.report.values[k]).sum();
            let scale: Real = batch
                .iter()
                .map(|&k| run.report.values[k].abs())
                .fold(0.0, Real::max);
            assert!(
                s.abs() <= 1e-9 * batch.len() as Real * scale.max(1e-300),
                "batch {i} sums to {s}"
            );
        }
    }

    #[test]
    fn uniform_weights_reproduce_the_batchwise_baseline() {
        let (train, val, l, tracker) = toy(48, 16, 6);
        let solver = SolverConfig::default();
        let cfg = ValuationConfig {
            batch_size: 16,
            val_batch_size: 8,
            ..ValuationConfig::default()
        };
        let pt = partition_batches(&train, 16, cfg.strategy, cfg.seed).unwrap();
        let pv = partition_batches(&val, 8, cfg.strategy, cfg.seed.wrapping_add(1)).unwrap();
        let table =
            batch_ot_table(&train, &val, &pt, &pv, Some(&l), &solver, &cfg, &tracker).unwrap();
        let uniform = Array2::from_elem((pt.k(), pv.k()), 1.0 / pv.k() as Real);
        let (direct, _) = assemble_scores(&table, &pt, &uniform, 48).unwrap();
        let baseline =
            batchwise_lava_values(&train, &val, Some(&l), &solver, &cfg, &tracker).unwrap();
        for (a, b) in direct.iter().zip(&baseline.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_validation_batch_makes_both_methods_agree() {
        let (train, val, l, tracker) = toy(48, 12, 7);
        let solver = SolverConfig::default();
        let cfg = ValuationConfig {
            batch_size: 16,
            val_batch_size: 4096,
            ..ValuationConfig::default()
        };
        let sava = sava_values(&train, &val, Some(&l), &solver, &cfg, &tracker).unwrap();
        let bw = batchwise_lava_values(&train, &val, Some(&l), &solver, &cfg, &tracker).unwrap();
        for (a, b) in sava.values.iter().zip(&bw.values) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn singleton_batches_score_zero_with_a_warning() {
        let (train, val, l, tracker) = toy(9, 8, 8);
        let solver = SolverConfig::default();
        let cfg = ValuationConfig {
            batch_size: 4,
            val_batch_size: 8,
            ..ValuationConfig::default()
        };
        let run = sava_run(&train, &val, Some(&l), &solver, &cfg, &tracker).unwrap();
        let lone = run.partition_t.batches.last().unwrap()[0];
        assert_eq!(run.partition_t.batches.last().unwrap().len(), 1);
        assert_eq!(run.report.values[lone], 0.0);
        assert!(run
            .report
            .warnings
            .iter()
            .any(|w| w.contains("single point")));
    }

    #[test]
    fn peak_memory_stays_within_the_pair_plus_table_bound() {
        let (train, val) = synth_gaussian_mixture_pair(64, 32, 3, 2, 6.0, 9).unwrap();
        let l_tracker = PeakTracker::default();
        let l =
            label_distance_matrix(&train, &val, &SolverConfig::default(), 5000, 0, &l_tracker)
                .unwrap();
        let tracker = PeakTracker::default();
        let solver = SolverConfig::default();
        let cfg = ValuationConfig {
            batch_size: 16,
            val_batch_size: 8,
            ..ValuationConfig::default()
        };
        let run = sava_run(&train, &val, Some(&l), &solver, &cfg, &tracker).unwrap();
        let k_t = run.partition_t.k();
        let k_v = run.partition_v.k();
        assert_eq!((k_t, k_v), (4, 4));
        assert!(
            run.report.peak_cost_matrix_entries <= 16 * 8 + k_t * k_v,
            "peak {} exceeds {}",
            run.report.peak_cost_matrix_entries,
            16 * 8 + k_t * k_v
        );
    }

    #[test]
    fn runs_are_deterministic() {
        let (train, val, l, tracker) = toy(30, 12, 10);
        let solver = SolverConfig::default();
        let cfg = ValuationConfig {
            batch_size: 10,
            val_batch_size: 6,
            ..ValuationConfig::default()
        };
        let a = sava_values(&train, &val, Some(&l), &solver, &cfg, &tracker).unwrap();
        let b = sava_values(&train, &val, Some(&l), &solver, &cfg, &tracker).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn cache_off_rebuilds_but_matches_full_cache() {
        let (train, val, l, tracker) = toy(24, 12, 11);
        let solver = SolverConfig::default();
        let with_cache = ValuationConfig {
            batch_size: 8,
            val_batch_size: 6,
            ..ValuationConfig::default()
        };
        let without = ValuationConfig {
            l2l_cache: CachePolicy::Off,
            ..with_cache.clone()
        };
        let a = sava_values(&train, &val, Some(&l), &solver, &with_cache, &tracker).unwrap();
        let b = sava_values(&train, &val, None, &solver, &without, &tracker).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn first_batch_cache_is_built_from_batch_rows() {
        let (train, val, _, tracker) = toy(24, 12, 12);
        let solver = SolverConfig::default();
        let cfg = ValuationConfig {
            batch_size: 8,
            val_batch_size: 6,
            l2l_cache: CachePolicy::FirstBatch,
            ..ValuationConfig::default()
        };
        let (pt, pv, owned) = prepare(&train, &val, None, &solver, &cfg, &tracker).unwrap();
        let l = owned.expect("first-batch policy builds a cache");
        assert_eq!(l.built_on(), BuiltOn::FirstBatch);
        let direct = label_distance_matrix_within(
            &train,
            &val,
            &solver,
            cfg.l2l_subsample_cap,
            cfg.seed,
            &tracker,
            &pt.batches[0],
            &pv.batches[0],
        )
        .unwrap();
        assert_eq!(l.values(), direct.values());
    }

    #[test]
    fn exact_hierarchy_upper_bounds_the_exact_flat_value() {
        let (train, val, l, tracker) = toy(12, 9, 13);
        let pt = partition_batches(&train, 6, Strategy::Random, 1).unwrap();
        let pv = partition_batches(&val, 5, Strategy::Random, 2).unwrap();
        let hier = hierarchical_exact_value(&train, &val, &pt, &pv, &l, 1.0, &tracker).unwrap();
        let rows: Vec<usize> = (0..12).collect();
        let cols: Vec<usize> = (0..9).collect();
        let (cost, _g) = batch_cost_matrix(&train, &val, &rows, &cols, &l, 1.0, &tracker).unwrap();
        let flat = exact_ot(&cost, &uniform_weights(12), &uniform_weights(9))
            .unwrap()
            .value;
        assert!(
            hier >= flat - 1e-9,
            "hierarchical {hier} must not undercut flat {flat}"
        );
    }
}
