//! End-to-end flows at desk scale: synthesize, corrupt, value with every
//! method, score detections, and push the artifacts through their file
//! formats.

use sava_core::budget::PeakTracker;
use sava_core::config::{SolverConfig, ValuationConfig};
use sava_core::dataset::{inject_label_noise, synth_gaussian_mixture_pair, CorruptionMask};
use sava_core::eval::{detection_rate, random_values, rank_by_value, DetectionResult};
use sava_core::label_geometry::label_distance_matrix;
use sava_core::lava::lava_values;
use sava_core::sava::{batchwise_lava_values, sava_run, sava_values};
use sava_core::Real;

fn rate_of(values: &[Real], ids: &[u64], mask: &CorruptionMask, method: &str) -> DetectionResult {
    let order = rank_by_value(values, ids).unwrap();
    detection_rate(&order, mask, 0.25, method).unwrap()
}

#[test]
fn label_noise_is_detected_by_both_methods() {
    let (clean, val) = synth_gaussian_mixture_pair(400, 200, 4, 4, 6.0, 11).unwrap();
    let (train, mask) = inject_label_noise(&clean, 0.3, 13).unwrap();
    let solver = SolverConfig::default();
    let valuation = ValuationConfig {
        batch_size: 128,
        val_batch_size: 128,
        ..ValuationConfig::default()
    };

    let tracker = PeakTracker::default();
    let l = label_distance_matrix(&train, &val, &solver, 5000, 0, &tracker).unwrap();

    let lava = lava_values(&train, &val, &l, &solver, &valuation, &tracker).unwrap();
    let sava = sava_values(&train, &val, Some(&l), &solver, &valuation, &tracker).unwrap();
    let batchwise =
        batchwise_lava_values(&train, &val, Some(&l), &solver, &valuation, &tracker).unwrap();

    let r_lava = rate_of(&lava.values, lava.ids.as_slice(), &mask, "lava");
    let r_sava = rate_of(&sava.values, sava.ids.as_slice(), &mask, "sava");
    let r_batch = rate_of(&batchwise.values, batchwise.ids.as_slice(), &mask, "batchwise");
    let noise = random_values(train.n(), 99);
    let r_rand = rate_of(&noise, train.ids(), &mask, "random");

    for r in [&r_lava, &r_sava, &r_batch, &r_rand] {
        assert!(
            (0.0..=1.0).contains(&r.detection_rate),
            "{}: rate {} out of range",
            r.method,
            r.detection_rate
        );
    }
    assert!(
        r_lava.detection_rate >= r_rand.detection_rate + 0.2,
        "lava {} vs random {}",
        r_lava.detection_rate,
        r_rand.detection_rate
    );
    assert!(
        r_sava.detection_rate >= r_rand.detection_rate + 0.2,
        "sava {} vs random {}",
        r_sava.detection_rate,
        r_rand.detection_rate
    );

    // The detection curve is a nondecreasing step function ending at 1.
    for r in [&r_lava, &r_sava, &r_rand] {
        let mut prev = 0.0;
        for &(_, y) in &r.curve {
            assert!(y + 1e-12 >= prev, "{}: curve decreased", r.method);
            prev = y;
        }
        let last = r.curve.last().unwrap();
        assert!((last.1 - 1.0).abs() < 1e-12);
    }
}

#[test]
fn artifacts_survive_their_file_formats() {
    let (clean, val) = synth_gaussian_mixture_pair(150, 80, 3, 3, 6.0, 2).unwrap();
    let (train, mask) = inject_label_noise(&clean, 0.2, 3).unwrap();
    let solver = SolverConfig::default();
    let valuation = ValuationConfig {
        batch_size: 64,
        val_batch_size: 64,
        ..ValuationConfig::default()
    };
    let tracker = PeakTracker::default();
    let run = sava_run(&train, &val, None, &solver, &valuation, &tracker).unwrap();

    let dir = tempfile::tempdir().unwrap();

    let report_path = dir.path().join("report.json");
    run.report.save_json(&report_path).unwrap();
    let report = sava_core::report::ValuationReport::load_json(&report_path).unwrap();
    assert_eq!(report.values, run.report.values);
    assert_eq!(report.train_hash, train.content_hash());

    let csv_path = dir.path().join("values.csv");
    run.report.write_csv(&csv_path, Some(&mask)).unwrap();
    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert!(text.starts_with("id,value,rank,corrupt_flag"));
    assert_eq!(text.lines().count(), train.n() + 1);

    let mask_path = dir.path().join("mask.json");
    mask.save(&mask_path).unwrap();
    let mask_back = CorruptionMask::load(&mask_path).unwrap();
    assert_eq!(mask_back, mask);

    let order = rank_by_value(&run.report.values, &run.report.ids).unwrap();
    let result = detection_rate(&order, &mask, 0.25, "sava").unwrap();
    let det_path = dir.path().join("detection.json");
    result.save_json(&det_path).unwrap();
    let curve_path = dir.path().join("curve.csv");
    result.write_curve_csv(&curve_path).unwrap();
    let curve_text = std::fs::read_to_string(&curve_path).unwrap();
    assert_eq!(curve_text.lines().count(), 101); // header + 100 points
}

#[test]
fn sava_run_exposes_consistent_artifacts() {
    let (train, val) = synth_gaussian_mixture_pair(200, 120, 3, 3, 6.0, 5).unwrap();
    let solver = SolverConfig::default();
    let valuation = ValuationConfig {
        batch_size: 64,
        val_batch_size: 48,
        ..ValuationConfig::default()
    };
    let tracker = PeakTracker::default();
    let run = sava_run(&train, &val, None, &solver, &valuation, &tracker).unwrap();

    let k_t = run.partition_t.k();
    let k_v = run.partition_v.k();
    assert_eq!(run.cbar.dim(), (k_t, k_v));
    assert_eq!(run.pibar.dim(), (k_t, k_v));
    assert!(run.cbar.iter().all(|&x| x >= 0.0 && x.is_finite()));

    // The batch-level plan has uniform marginals over batches.
    for i in 0..k_t {
        let row: Real = (0..k_v).map(|j| run.pibar[(i, j)]).sum();
        assert!((row - 1.0 / k_t as Real).abs() <= 2e-6);
    }
    for j in 0..k_v {
        let col: Real = (0..k_t).map(|i| run.pibar[(i, j)]).sum();
        assert!((col - 1.0 / k_v as Real).abs() <= 2e-6);
    }

    // Per-batch calibrated scores sum to zero within each training batch.
    for batch in &run.partition_t.batches {
        let s: Real = batch.iter().map(|&i| run.report.values[i]).sum();
        let scale = 1.0
            + batch
                .iter()
                .map(|&i| run.report.values[i].abs())
                .fold(0.0, Real::max);
        assert!(
            s.abs() <= 1e-9 * batch.len() as Real * scale,
            "batch gradient sum {s}"
        );
    }

    // Memory contract: never more live entries than one batch-pair cost
    // matrix plus the batch-level table.
    let max_bt = run.partition_t.batches.iter().map(Vec::len).max().unwrap();
    let max_bv = run.partition_v.batches.iter().map(Vec::len).max().unwrap();
    assert!(run.report.peak_cost_matrix_entries <= max_bt * max_bv + k_t * k_v);
}
