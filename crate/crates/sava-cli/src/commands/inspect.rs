//! `sava inspect`: one-screen summaries of any artifact the tool writes.

use std::path::Path;

use sava_core::dataset::{load_dataset, CorruptionMask, Format, LabeledDataset};
use sava_core::label_geometry::LabelDistanceMatrix;
use sava_core::report::ValuationReport;
use sava_core::{Error, Result};

use crate::cli::InspectArgs;

pub fn run(args: &InspectArgs) -> Result<()> {
    let path = &args.path;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    match ext.as_str() {
        "csv" => inspect_csv(path),
        "json" => inspect_json(path),
        _ => inspect_dataset(load_dataset(path, Format::Binary)?),
    }
}

fn inspect_csv(path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    let rows = lines.count();
    if header.starts_with("id,label,") {
        return inspect_dataset(load_dataset(path, Format::Csv)?);
    }
    if header.starts_with("id,value,rank") {
        println!("kind: per-point value table");
        println!("rows: {rows}");
        println!("columns: {header}");
        return Ok(());
    }
    if header.starts_with("inspected_fraction") {
        println!("kind: detection curve ({rows} prefix points)");
        return Ok(());
    }
    println!("kind: csv table");
    println!("rows: {rows}");
    println!("columns: {header}");
    Ok(())
}

fn inspect_json(path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let has = |k: &str| value.get(k).is_some();

    if has("values") && has("method") {
        let report = ValuationReport::load_json(path)?;
        println!("kind: value report");
        println!("method: {:?}", report.method);
        println!("points: {}", report.values.len());
        let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for &v in &report.values {
            lo = lo.min(v);
            hi = hi.max(v);
            sum += v;
        }
        println!(
            "values: min {lo:.6e}, mean {:.6e}, max {hi:.6e}",
            sum / report.values.len().max(1) as f64
        );
        println!("wall_time_s: {:.3}", report.wall_time_s);
        println!("peak_cost_matrix_entries: {}", report.peak_cost_matrix_entries);
        println!("warnings: {}", report.warnings.len());
        for w in report.warnings.iter().take(5) {
            println!("  - {w}");
        }
        println!("train_hash: {}", report.train_hash);
        println!("val_hash: {}", report.val_hash);
        println!("config: {}", serde_json::to_string(&report.config)?);
        return Ok(());
    }
    if has("flags") && has("kind") {
        let mask = CorruptionMask::load(path)?;
        println!("kind: corruption mask");
        println!("points: {}", mask.flags.len());
        println!("corrupted: {}", mask.corrupted());
        println!("fraction: {}", mask.fraction);
        println!("corruption: {:?}", mask.kind);
        println!("seed: {}", mask.seed);
        return Ok(());
    }
    if has("detection") {
        println!("kind: detection result");
        if let Some(d) = value.get("detection") {
            for key in ["method", "prefix_fraction", "prefix_size", "detection_rate"] {
                if let Some(v) = d.get(key) {
                    println!("{key}: {v}");
                }
            }
        }
        if let Some(inputs) = value.get("inputs") {
            println!("inputs: {inputs}");
        }
        return Ok(());
    }
    if has("detection_rate") {
        println!("kind: detection result");
        for key in ["method", "prefix_fraction", "prefix_size", "detection_rate"] {
            if let Some(v) = value.get(key) {
                println!("{key}: {v}");
            }
        }
        return Ok(());
    }
    if has("epsilon_used") {
        let (l, c) = LabelDistanceMatrix::load(path)?;
        let m = l.values();
        println!("kind: label distance matrix");
        println!("shape: {}x{}", m.nrows(), m.ncols());
        println!("epsilon_used: {}", l.epsilon_used());
        println!("built_on: {:?}", l.built_on());
        println!("cost_weight_c: {c}");
        println!("filled_pairs: {}", l.filled_pairs().len());
        println!("unconverged_pairs: {}", l.unconverged_pairs().len());
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in m.iter() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        println!("entries: min {lo:.6}, max {hi:.6}");
        return Ok(());
    }
    if has("train") && has("val") {
        let count = |k: &str| value[k].as_array().map_or(0, Vec::len);
        println!("kind: batch partitions");
        println!("train_batches: {}", count("train"));
        println!("val_batches: {}", count("val"));
        return Ok(());
    }
    Err(Error::InvalidConfig(format!(
        "unrecognized JSON artifact {} (top-level keys: {})",
        path.display(),
        value
            .as_object()
            .map(|o| o.keys().cloned().collect::<Vec<_>>().join(", "))
            .unwrap_or_default()
    )))
}

fn inspect_dataset(ds: LabeledDataset) -> Result<()> {
    println!("kind: labeled dataset");
    println!("points: {}", ds.n());
    println!("dims: {}", ds.d());
    println!("classes: {}", ds.v());
    let mut counts = vec![0usize; ds.v()];
    for &l in ds.labels() {
        counts[l as usize] += 1;
    }
    let shown = counts.len().min(20);
    let rendered: Vec<String> = counts[..shown]
        .iter()
        .enumerate()
        .map(|(l, c)| format!("{l}:{c}"))
        .collect();
    println!(
        "label_counts: {}{}",
        rendered.join(" "),
        if shown < counts.len() { " ..." } else { "" }
    );
    let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for &x in ds.features().iter() {
        lo = lo.min(x);
        hi = hi.max(x);
        sum += x;
    }
    let total = (ds.n() * ds.d()).max(1) as f64;
    println!("features: min {lo:.4}, mean {:.4}, max {hi:.4}", sum / total);
    println!("content_hash: {}", ds.content_hash());
    Ok(())
}
