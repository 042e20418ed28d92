//! Configuration shared by the valuation methods.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entropic solver knobs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct SolverConfig {
    /// Regularization strength as a fraction of the mean cost of each problem.
    pub epsilon_factor: f64,
    /// Absolute regularization override; when set, `epsilon_factor` is ignored.
    pub epsilon_abs: Option<f64>,
    /// Max-norm marginal violation accepted as converged.
    pub tol: f64,
    /// Iteration budget per solve (shared across annealing levels).
    pub max_iters: usize,
    /// Warm-started epsilon scaling from the cost scale down to the target.
    pub anneal: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon_factor: 0.01,
            epsilon_abs: None,
            tol: 1e-6,
            max_iters: 5000,
            anneal: true,
        }
    }
}

impl SolverConfig {
    /// Regularization strength for a problem whose costs average `mean_cost`.
    pub fn epsilon_for(&self, mean_cost: f64) -> f64 {
        match self.epsilon_abs {
            Some(e) => e,
            None => {
                let e = self.epsilon_factor * mean_cost;
                if e > 0.0 {
                    e
                } else {
                    // Degenerate all-zero costs still need a positive strength.
                    self.epsilon_factor.max(f64::MIN_POSITIVE)
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon_factor <= 0.0 {
            return Err(Error::InvalidConfig("epsilon_factor must be > 0".into()));
        }
        if let Some(e) = self.epsilon_abs {
            if e <= 0.0 {
                return Err(Error::InvalidConfig("epsilon_abs must be > 0".into()));
            }
        }
        if self.tol <= 0.0 {
            return Err(Error::InvalidConfig("tol must be > 0".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

/// How batches are drawn from a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Random,
    Stratified,
}

/// When the label-to-label distance matrix is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CachePolicy {
    /// Build once from whole-dataset conditionals, reuse for every batch pair.
    Full,
    /// Build once from the first batch pair's conditionals, reuse everywhere.
    FirstBatch,
    /// Rebuild from whole-dataset conditionals for every batch pair (ablation
    /// arm: bit-identical values to `Full`, paid for repeatedly).
    Off,
}

/// Knobs for one valuation run, embedded verbatim into every report.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct ValuationConfig {
    pub solver: SolverConfig,
    /// Training-side batch size.
    pub batch_size: usize,
    /// Validation-side batch size.
    pub val_batch_size: usize,
    pub strategy: Strategy,
    /// Seed for batch construction and label subsampling.
    pub seed: u64,
    /// Weight of the label-to-label term in the ground cost.
    pub c: f64,
    pub l2l_cache: CachePolicy,
    /// Per-label support cap for the label-to-label problems.
    pub l2l_subsample_cap: usize,
    /// Divide each outer-plan row by its sum before weighting pair gradients.
    pub row_normalize_plan: bool,
    /// Refuse to materialize more cost-matrix entries than this at once.
    pub memory_budget_entries: usize,
    /// Concurrent batch-pair solves (1 = sequential).
    pub workers: usize,
}

impl Default for ValuationConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            batch_size: 1024,
            val_batch_size: 1024,
            strategy: Strategy::Random,
            seed: 0,
            c: 1.0,
            l2l_cache: CachePolicy::Full,
            l2l_subsample_cap: 5000,
            row_normalize_plan: true,
            memory_budget_entries: 100_000_000,
            workers: 1,
        }
    }
}

impl ValuationConfig {
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if self.batch_size == 0 || self.val_batch_size == 0 {
            return Err(Error::InvalidConfig("batch sizes must be >= 1".into()));
        }
        if self.c < 0.0 {
            return Err(Error::InvalidConfig("c must be >= 0".into()));
        }
        if self.l2l_subsample_cap == 0 {
            return Err(Error::InvalidConfig("l2l_subsample_cap must be >= 1".into()));
        }
        if self.memory_budget_entries == 0 {
            return Err(Error::InvalidConfig("memory budget must be >= 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidConfig("workers must be >= 1".into()));
        }
        Ok(())
    }
}
