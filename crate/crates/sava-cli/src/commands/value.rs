//! `sava value`: run one valuation method end to end and write its artifacts.

use std::time::Instant;

use sava_core::budget::PeakTracker;
use sava_core::dataset::{load_dataset, CorruptionMask, LabeledDataset};
use sava_core::eval::random_values;
use sava_core::label_geometry::{label_distance_matrix, LabelDistanceMatrix};
use sava_core::lava::lava_values;
use sava_core::report::{atomic_write, Method, ValuationReport};
use sava_core::sava::{batchwise_lava_values, sava_run, sava_values};
use sava_core::{Error, Result};

use crate::cli::{MethodArg, ValueArgs};
use crate::settings::{resolve_with_file, RunSettings};
use crate::util::{format_for, matrix_csv};

pub fn run(args: &ValueArgs) -> Result<()> {
    let mut settings = resolve_with_file(&args.knobs)?;
    let train = load_dataset(&args.train, format_for(&args.train))?;
    let val = load_dataset(&args.val, format_for(&args.val))?;
    resolve_batch_counts(args, &mut settings, train.n(), val.n())?;
    let RunSettings {
        method,
        solver,
        valuation,
    } = settings;

    if args.dump_artifacts.is_some() && method != MethodArg::Sava {
        return Err(Error::InvalidConfig(
            "--dump-artifacts shows batch-level structure and needs --method sava".into(),
        ));
    }

    let tracker = PeakTracker::default();

    // An explicit label matrix (loaded or about to be saved) overrides the
    // cache policy; the whole-dataset method always needs one.
    let loaded_l = match &args.l2l_in {
        Some(path) => {
            let (l, stored_c) = LabelDistanceMatrix::load(path)?;
            if (stored_c - valuation.c).abs() > f64::EPSILON {
                println!(
                    "note: label matrix was saved with c={stored_c}, this run uses c={}",
                    valuation.c
                );
            }
            Some(l)
        }
        None => None,
    };
    let built_l = if loaded_l.is_none()
        && (method == MethodArg::Lava || (args.l2l_out.is_some() && method != MethodArg::Random))
    {
        Some(label_distance_matrix(
            &train,
            &val,
            &solver,
            valuation.l2l_subsample_cap,
            valuation.seed,
            &tracker,
        )?)
    } else {
        None
    };
    let l = loaded_l.as_ref().or(built_l.as_ref());

    let mut artifacts = None;
    let report = match method {
        MethodArg::Random => random_report(&train, &val, &solver, &valuation),
        MethodArg::Lava => lava_values(
            &train,
            &val,
            l.expect("whole-dataset method builds or loads a label matrix"),
            &solver,
            &valuation,
            &tracker,
        )?,
        MethodArg::Batchwise => {
            batchwise_lava_values(&train, &val, l, &solver, &valuation, &tracker)?
        }
        MethodArg::Sava => {
            if args.dump_artifacts.is_some() {
                let run = sava_run(&train, &val, l, &solver, &valuation, &tracker)?;
                let report = run.report;
                artifacts = Some((run.cbar, run.pibar, run.partition_t, run.partition_v));
                report
            } else {
                sava_values(&train, &val, l, &solver, &valuation, &tracker)?
            }
        }
    };

    if let (Some(path), Some(l)) = (&args.l2l_out, l) {
        l.save(path, valuation.c)?;
        println!("label matrix: {}", path.display());
    }

    report.save_json(&args.out)?;
    println!(
        "report: {} (method {:?}, n {}, wall {:.3}s, peak {} entries, {} warnings)",
        args.out.display(),
        report.method,
        report.values.len(),
        report.wall_time_s,
        report.peak_cost_matrix_entries,
        report.warnings.len()
    );

    if let Some(csv_path) = &args.csv {
        let mask = match &args.mask {
            Some(p) => Some(CorruptionMask::load(p)?),
            None => None,
        };
        report.write_csv(csv_path, mask.as_ref())?;
        println!("values: {}", csv_path.display());
    }

    if let (Some(dir), Some((cbar, pibar, pt, pv))) = (&args.dump_artifacts, &artifacts) {
        std::fs::create_dir_all(dir)?;
        atomic_write(&dir.join("cbar.csv"), matrix_csv(&cbar.view()).as_bytes())?;
        atomic_write(&dir.join("pibar.csv"), matrix_csv(&pibar.view()).as_bytes())?;
        let partitions = serde_json::json!({
            "train": pt.batches,
            "val": pv.batches,
        });
        atomic_write(
            &dir.join("partitions.json"),
            serde_json::to_string_pretty(&partitions)?.as_bytes(),
        )?;
        println!(
            "artifacts: {} (batch table {}x{})",
            dir.display(),
            cbar.nrows(),
            cbar.ncols()
        );
    }
    Ok(())
}

/// Turns `--k-train`/`--k-val` into batch sizes now that sizes are known.
fn resolve_batch_counts(
    args: &ValueArgs,
    settings: &mut RunSettings,
    n: usize,
    m: usize,
) -> Result<()> {
    if let Some(k) = args.knobs.k_train {
        if k == 0 || k > n {
            return Err(Error::InvalidConfig(format!(
                "--k-train {k} must be in [1, {n}]"
            )));
        }
        settings.valuation.batch_size = n.div_ceil(k);
    }
    if let Some(k) = args.knobs.k_val {
        if k == 0 || k > m {
            return Err(Error::InvalidConfig(format!(
                "--k-val {k} must be in [1, {m}]"
            )));
        }
        settings.valuation.val_batch_size = m.div_ceil(k);
    }
    Ok(())
}

/// Seeded uniform scores: the calibration baseline every method must beat.
fn random_report(
    train: &LabeledDataset,
    val: &LabeledDataset,
    solver: &sava_core::config::SolverConfig,
    valuation: &sava_core::config::ValuationConfig,
) -> ValuationReport {
    let start = Instant::now();
    let values = random_values(train.n(), valuation.seed);
    ValuationReport {
        method: Method::Random,
        ids: train.ids().to_vec(),
        values,
        warnings: Vec::new(),
        wall_time_s: start.elapsed().as_secs_f64(),
        peak_cost_matrix_entries: 0,
        config: serde_json::json!({ "solver": solver, "valuation": valuation }),
        train_hash: train.content_hash(),
        val_hash: val.content_hash(),
    }
}
