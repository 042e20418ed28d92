//! `sava bench`: sweep a (method x size x batch x seed) grid and tabulate
//! detection rate, wall time, and peak matrix footprint per run.

use serde::Deserialize;

use sava_core::budget::PeakTracker;
use sava_core::dataset::{synth_gaussian_mixture_pair, CorruptionMask, LabeledDataset};
use sava_core::eval::{detection_rate, random_values, rank_by_value};
use sava_core::label_geometry::{label_distance_matrix, LabelDistanceMatrix};
use sava_core::lava::lava_values;
use sava_core::report::atomic_write;
use sava_core::sava::{batchwise_lava_values, sava_values};
use sava_core::{Error, Result};

use crate::cli::{BenchArgs, KnobArgs, MethodArg};
use crate::settings::{resolve, FileConfig};
use crate::util::{csv_cell, NoisePlan};

#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct BenchConfig {
    grid: Grid,
    data: DataSpec,
    #[serde(default)]
    knobs: FileConfig,
    #[serde(default)]
    eval: EvalSpec,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct Grid {
    methods: Vec<MethodArg>,
    n: Vec<usize>,
    batch_sizes: Vec<usize>,
    seeds: Vec<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct DataSpec {
    n_val: usize,
    d: usize,
    v: usize,
    sep: f64,
    label_noise: Option<f64>,
    feature_noise: Option<f64>,
    noise_sigma: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
struct EvalSpec {
    prefix: Option<f64>,
}

pub fn run(args: &BenchArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.config)?;
    let cfg: BenchConfig = toml::from_str(&text)
        .map_err(|e| Error::InvalidConfig(format!("bench config {}: {e}", args.config.display())))?;
    if cfg.grid.methods.is_empty()
        || cfg.grid.n.is_empty()
        || cfg.grid.batch_sizes.is_empty()
        || cfg.grid.seeds.is_empty()
    {
        return Err(Error::InvalidConfig(
            "bench grid lists must all be nonempty".into(),
        ));
    }
    let noise = NoisePlan {
        label_noise: cfg.data.label_noise,
        feature_noise: cfg.data.feature_noise,
        noise_sigma: cfg.data.noise_sigma,
    };
    if cfg.data.label_noise.is_none() && cfg.data.feature_noise.is_none() {
        return Err(Error::InvalidConfig(
            "bench needs a corruption to detect: set label-noise or feature-noise".into(),
        ));
    }
    let prefix = cfg.eval.prefix.unwrap_or(0.25);

    let total = cfg.grid.methods.len() * cfg.grid.n.len() * cfg.grid.batch_sizes.len()
        * cfg.grid.seeds.len();
    let mut done = 0usize;
    let mut out = String::from(
        "method,n,n_val,batch_size,seed,detection_rate,wall_time_s,peak_entries,status,error\n",
    );

    for &n in &cfg.grid.n {
        for &seed in &cfg.grid.seeds {
            // One dataset per (n, seed), shared by every method and batch
            // size so the rows are comparable.
            let data = prepare_data(&cfg, &noise, n, seed);
            for &method in &cfg.grid.methods {
                for &batch in &cfg.grid.batch_sizes {
                    done += 1;
                    let row = match &data {
                        Ok((train, val, mask, l)) => {
                            run_one(args, &cfg, method, batch, seed, train, val, mask, l, prefix)
                        }
                        Err(e) => Err(Error::InvalidConfig(format!("data synthesis: {e}"))),
                    };
                    match row {
                        Ok((rate, wall, peak)) => {
                            println!(
                                "[{done}/{total}] {method:?} n={n} batch={batch} seed={seed}: rate {rate:.4}, {wall:.2}s"
                            );
                            out.push_str(&format!(
                                "{},{n},{},{batch},{seed},{rate:.6},{wall:.3},{peak},ok,\n",
                                method_name(method),
                                cfg.data.n_val
                            ));
                        }
                        Err(e) => {
                            println!("[{done}/{total}] {method:?} n={n} batch={batch} seed={seed}: error: {e}");
                            out.push_str(&format!(
                                "{},{n},{},{batch},{seed},,,,error,{}\n",
                                method_name(method),
                                cfg.data.n_val,
                                csv_cell(&e.to_string())
                            ));
                        }
                    }
                }
            }
        }
    }

    atomic_write(&args.out, out.as_bytes())?;
    println!("bench table: {} ({total} rows)", args.out.display());
    Ok(())
}

type PreparedData = (LabeledDataset, LabeledDataset, CorruptionMask, LabelDistanceMatrix);

fn prepare_data(
    cfg: &BenchConfig,
    noise: &NoisePlan,
    n: usize,
    seed: u64,
) -> Result<PreparedData> {
    let (clean, val) =
        synth_gaussian_mixture_pair(n, cfg.data.n_val, cfg.data.d, cfg.data.v, cfg.data.sep, seed)?;
    let (train, mask) = noise
        .apply(&clean, seed.wrapping_add(1), cfg.data.sep)?
        .expect("bench validated that a corruption kind is set");
    // The label matrix is built once per dataset and shared across rows.
    let base = resolve(&KnobArgs::default(), &cfg.knobs)?;
    let tracker = PeakTracker::default();
    let l = label_distance_matrix(
        &train,
        &val,
        &base.solver,
        base.valuation.l2l_subsample_cap,
        seed,
        &tracker,
    )?;
    Ok((train, val, mask, l))
}

#[allow(clippy::too_many_arguments)]
fn run_one(
    args: &BenchArgs,
    cfg: &BenchConfig,
    method: MethodArg,
    batch: usize,
    seed: u64,
    train: &LabeledDataset,
    val: &LabeledDataset,
    mask: &CorruptionMask,
    l: &LabelDistanceMatrix,
    prefix: f64,
) -> Result<(f64, f64, usize)> {
    let mut settings = resolve(&KnobArgs::default(), &cfg.knobs)?;
    settings.valuation.batch_size = batch;
    settings.valuation.val_batch_size = batch;
    settings.valuation.seed = seed;
    if let Some(w) = args.workers {
        settings.valuation.workers = w;
    }
    settings.valuation.validate()?;
    let (solver, valuation) = (settings.solver, settings.valuation);

    let tracker = PeakTracker::default();
    let (values, ids, wall, peak) = match method {
        MethodArg::Random => {
            let values = random_values(train.n(), seed);
            (values, train.ids().to_vec(), 0.0, 0)
        }
        MethodArg::Lava => {
            let r = lava_values(train, val, l, &solver, &valuation, &tracker)?;
            (r.values, r.ids, r.wall_time_s, r.peak_cost_matrix_entries)
        }
        MethodArg::Sava => {
            let r = sava_values(train, val, Some(l), &solver, &valuation, &tracker)?;
            (r.values, r.ids, r.wall_time_s, r.peak_cost_matrix_entries)
        }
        MethodArg::Batchwise => {
            let r = batchwise_lava_values(train, val, Some(l), &solver, &valuation, &tracker)?;
            (r.values, r.ids, r.wall_time_s, r.peak_cost_matrix_entries)
        }
    };
    let order = rank_by_value(&values, &ids)?;
    let rate = detection_rate(&order, mask, prefix, method_name(method))?.detection_rate;
    Ok((rate, wall, peak))
}

fn method_name(m: MethodArg) -> &'static str {
    match m {
        MethodArg::Lava => "lava",
        MethodArg::Sava => "sava",
        MethodArg::Batchwise => "batchwise",
        MethodArg::Random => "random",
    }
}
