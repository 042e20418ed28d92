//! Config-file schema and the flag/file/default merge.
//!
//! Precedence: explicit command-line flags beat config-file keys, which beat
//! built-in defaults. The file uses the same kebab-case names as the flags.

use std::path::Path;

use serde::Deserialize;

use sava_core::config::{SolverConfig, ValuationConfig};
use sava_core::{Error, Result};

use crate::cli::{CacheArg, KnobArgs, MethodArg, StrategyArg};

/// Every key a `value`/`bench` config file may set; all optional.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct FileConfig {
    pub method: Option<MethodArg>,
    pub batch_size: Option<usize>,
    pub val_batch_size: Option<usize>,
    pub strategy: Option<StrategyArg>,
    pub seed: Option<u64>,
    pub c: Option<f64>,
    pub epsilon_factor: Option<f64>,
    pub epsilon_abs: Option<f64>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub anneal: Option<bool>,
    pub l2l_cache: Option<CacheArg>,
    pub l2l_cap: Option<usize>,
    pub row_normalize_plan: Option<bool>,
    pub memory_budget: Option<usize>,
    pub workers: Option<usize>,
}

pub fn load_file_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text)
        .map_err(|e| Error::InvalidConfig(format!("config file {}: {e}", path.display())))
}

/// The fully resolved settings of one valuation run.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub method: MethodArg,
    pub solver: SolverConfig,
    pub valuation: ValuationConfig,
}

/// Applies precedence and validates the result. Batch-count flags
/// (`--k-train`/`--k-val`) are resolved later, once dataset sizes are known.
pub fn resolve(knobs: &KnobArgs, file: &FileConfig) -> Result<RunSettings> {
    let sd = SolverConfig::default();
    let solver = SolverConfig {
        epsilon_factor: knobs
            .epsilon_factor
            .or(file.epsilon_factor)
            .unwrap_or(sd.epsilon_factor),
        epsilon_abs: knobs.epsilon_abs.or(file.epsilon_abs).or(sd.epsilon_abs),
        tol: knobs.tol.or(file.tol).unwrap_or(sd.tol),
        max_iters: knobs.max_iters.or(file.max_iters).unwrap_or(sd.max_iters),
        anneal: knobs.anneal.or(file.anneal).unwrap_or(sd.anneal),
    };
    let vd = ValuationConfig::default();
    let valuation = ValuationConfig {
        solver: solver.clone(),
        batch_size: knobs.batch_size.or(file.batch_size).unwrap_or(vd.batch_size),
        val_batch_size: knobs
            .val_batch_size
            .or(file.val_batch_size)
            .unwrap_or(vd.val_batch_size),
        strategy: knobs
            .strategy
            .or(file.strategy)
            .map_or(vd.strategy, StrategyArg::to_core),
        seed: knobs.seed.or(file.seed).unwrap_or(vd.seed),
        c: knobs.c.or(file.c).unwrap_or(vd.c),
        l2l_cache: knobs
            .l2l_cache
            .or(file.l2l_cache)
            .map_or(vd.l2l_cache, CacheArg::to_core),
        l2l_subsample_cap: knobs.l2l_cap.or(file.l2l_cap).unwrap_or(vd.l2l_subsample_cap),
        row_normalize_plan: knobs
            .row_normalize_plan
            .or(file.row_normalize_plan)
            .unwrap_or(vd.row_normalize_plan),
        memory_budget_entries: knobs
            .memory_budget
            .or(file.memory_budget)
            .unwrap_or(vd.memory_budget_entries),
        workers: knobs.workers.or(file.workers).unwrap_or(vd.workers),
    };
    valuation.validate()?;
    let method = knobs.method.or(file.method).unwrap_or(MethodArg::Sava);
    Ok(RunSettings {
        method,
        solver,
        valuation,
    })
}

/// Loads the file named by `--config` (if any) and merges it under the flags.
pub fn resolve_with_file(knobs: &KnobArgs) -> Result<RunSettings> {
    let file = match &knobs.config {
        Some(path) => load_file_config(path)?,
        None => FileConfig::default(),
    };
    resolve(knobs, &file)
}
