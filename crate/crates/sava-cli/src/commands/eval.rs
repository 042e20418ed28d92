//! `sava eval`: detection rate of a value report against a corruption mask.

use sava_core::dataset::CorruptionMask;
use sava_core::eval::{detection_rate, rank_by_value};
use sava_core::report::{atomic_write, ValuationReport};
use sava_core::Result;

use crate::cli::EvalArgs;
use crate::util::sha256_hex;

pub fn run(args: &EvalArgs) -> Result<()> {
    let report = ValuationReport::load_json(&args.report)?;
    let mask = CorruptionMask::load(&args.mask)?;
    let order = rank_by_value(&report.values, &report.ids)?;
    let method = format!("{:?}", report.method).to_lowercase();
    let result = detection_rate(&order, &mask, args.prefix, &method)?;

    // The output embeds the run's config and hashes of everything it read,
    // so a detection number can always be traced back to its inputs.
    let wrapper = serde_json::json!({
        "detection": result,
        "run_config": report.config,
        "inputs": {
            "report": { "path": args.report.display().to_string(), "sha256": sha256_hex(&args.report)? },
            "mask": { "path": args.mask.display().to_string(), "sha256": sha256_hex(&args.mask)? },
        },
    });
    atomic_write(&args.out, serde_json::to_string_pretty(&wrapper)?.as_bytes())?;
    println!(
        "detection rate at the {:.0}% prefix ({} points): {:.4} -> {}",
        100.0 * result.prefix_fraction,
        result.prefix_size,
        result.detection_rate,
        args.out.display()
    );

    if let Some(curve) = &args.curve {
        result.write_curve_csv(curve)?;
        println!("curve: {}", curve.display());
    }
    Ok(())
}
