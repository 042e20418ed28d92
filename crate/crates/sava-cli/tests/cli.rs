//! End-to-end tests of the command-line interface: flows, file outputs,
//! config precedence, and the documented exit codes.

use std::path::{Path, PathBuf};
use std::process::Command;

fn sava() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sava"))
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().expect("spawn sava");
    assert!(
        out.status.success(),
        "command failed with {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 stdout")
}

fn exit_code(cmd: &mut Command) -> i32 {
    let out = cmd.output().expect("spawn sava");
    out.status.code().expect("exit code")
}

fn synth_noisy(dir: &Path, n: usize, n_val: usize, seed: u64) -> (PathBuf, PathBuf, PathBuf) {
    run_ok(sava().args([
        "synth",
        "--out-dir",
        dir.to_str().unwrap(),
        "--n",
        &n.to_string(),
        "--n-val",
        &n_val.to_string(),
        "--d",
        "4",
        "--v",
        "4",
        "--sep",
        "6",
        "--seed",
        &seed.to_string(),
        "--label-noise",
        "0.3",
    ]));
    (
        dir.join("train.bin"),
        dir.join("val.bin"),
        dir.join("mask.json"),
    )
}

fn report_values(path: &Path) -> Vec<f64> {
    let text = std::fs::read_to_string(path).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["values"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect()
}

#[test]
fn synth_is_deterministic_and_rejects_double_corruption() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    synth_noisy(&a, 80, 40, 5);
    synth_noisy(&b, 80, 40, 5);
    for name in ["train.bin", "val.bin", "mask.json"] {
        let left = std::fs::read(a.join(name)).unwrap();
        let right = std::fs::read(b.join(name)).unwrap();
        assert_eq!(left, right, "{name} differs between identical runs");
    }

    let code = exit_code(sava().args([
        "synth",
        "--out-dir",
        tmp.path().join("c").to_str().unwrap(),
        "--n",
        "80",
        "--label-noise",
        "0.2",
        "--feature-noise",
        "0.2",
    ]));
    assert_eq!(code, 2, "two corruption kinds must be a config error");
}

#[test]
fn value_writes_report_csv_and_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let (train, val, mask) = synth_noisy(&tmp.path().join("data"), 80, 40, 7);
    let report = tmp.path().join("report.json");
    let csv = tmp.path().join("values.csv");
    let art = tmp.path().join("art");
    let stdout = run_ok(sava().args([
        "value",
        "--train",
        train.to_str().unwrap(),
        "--val",
        val.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
        "--mask",
        mask.to_str().unwrap(),
        "--method",
        "sava",
        "--batch-size",
        "32",
        "--dump-artifacts",
        art.to_str().unwrap(),
    ]));
    assert!(stdout.contains("report:"), "stdout: {stdout}");

    let values = report_values(&report);
    assert_eq!(values.len(), 80);
    let sum: f64 = values.iter().sum();
    assert!(sum.abs() < 1e-9, "per-batch calibration keeps the total near zero");

    let csv_text = std::fs::read_to_string(&csv).unwrap();
    assert!(csv_text.starts_with("id,value,rank,corrupt_flag"));
    assert_eq!(csv_text.lines().count(), 81);

    // ceil(80/32) = 3 training batches, one validation batch.
    let cbar = std::fs::read_to_string(art.join("cbar.csv")).unwrap();
    assert_eq!(cbar.lines().count(), 3);
    let pibar = std::fs::read_to_string(art.join("pibar.csv")).unwrap();
    assert_eq!(pibar.lines().count(), 3);
    assert!(art.join("partitions.json").exists());

    let inspected = run_ok(sava().args(["inspect", report.to_str().unwrap()]));
    assert!(inspected.contains("kind: value report"), "{inspected}");
}

#[test]
fn single_batch_pair_matches_whole_dataset_through_the_cli() {
    let tmp = tempfile::tempdir().unwrap();
    let (train, val, _mask) = synth_noisy(&tmp.path().join("data"), 90, 45, 11);
    let solver_flags = [
        "--epsilon-factor",
        "0.2",
        "--tol",
        "1e-9",
        "--max-iters",
        "30000",
    ];
    let batched = tmp.path().join("sava.json");
    run_ok(
        sava()
            .args([
                "value",
                "--train",
                train.to_str().unwrap(),
                "--val",
                val.to_str().unwrap(),
                "--out",
                batched.to_str().unwrap(),
                "--method",
                "sava",
                "--k-train",
                "1",
                "--k-val",
                "1",
            ])
            .args(solver_flags),
    );
    let whole = tmp.path().join("lava.json");
    run_ok(
        sava()
            .args([
                "value",
                "--train",
                train.to_str().unwrap(),
                "--val",
                val.to_str().unwrap(),
                "--out",
                whole.to_str().unwrap(),
                "--method",
                "lava",
            ])
            .args(solver_flags),
    );
    let a = report_values(&batched);
    let b = report_values(&whole);
    assert_eq!(a.len(), b.len());
    let worst = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0_f64, f64::max);
    assert!(worst <= 1e-8, "single-pair batched vs whole: {worst:.3e}");
}

#[test]
fn guard_and_numerical_failures_use_their_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let (train, val, _mask) = synth_noisy(&tmp.path().join("data"), 60, 30, 13);
    let code = exit_code(sava().args([
        "value",
        "--train",
        train.to_str().unwrap(),
        "--val",
        val.to_str().unwrap(),
        "--out",
        tmp.path().join("r.json").to_str().unwrap(),
        "--method",
        "lava",
        "--memory-budget",
        "100",
    ]));
    assert_eq!(code, 3, "memory budget is the resource-guard exit");

    let code = exit_code(sava().args([
        "value",
        "--train",
        train.to_str().unwrap(),
        "--val",
        val.to_str().unwrap(),
        "--out",
        tmp.path().join("r2.json").to_str().unwrap(),
        "--method",
        "sava",
        "--epsilon-abs",
        "1e-320",
        "--anneal",
        "false",
    ]));
    assert_eq!(code, 4, "regularization underflow is the numerical exit");
}

#[test]
fn config_file_yields_to_explicit_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let (train, val, _mask) = synth_noisy(&tmp.path().join("data"), 60, 30, 17);
    let cfg = tmp.path().join("run.toml");
    std::fs::write(
        &cfg,
        "batch-size = 50\nc = 0.5\nepsilon-factor = 0.05\nmethod = \"batchwise\"\n",
    )
    .unwrap();
    let report = tmp.path().join("report.json");
    run_ok(sava().args([
        "value",
        "--train",
        train.to_str().unwrap(),
        "--val",
        val.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--batch-size",
        "16",
    ]));
    let text = std::fs::read_to_string(&report).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["method"], "batchwise_lava", "file picks the method");
    let cfg = &v["config"]["valuation"];
    assert_eq!(cfg["batch_size"], 16, "flag beats file");
    assert_eq!(cfg["c"], 0.5, "file beats default");
    assert_eq!(v["config"]["solver"]["epsilon_factor"], 0.05);

    let unknown = tmp.path().join("bad.toml");
    std::fs::write(&unknown, "batchsize = 5\n").unwrap();
    let code = exit_code(sava().args([
        "value",
        "--train",
        train.to_str().unwrap(),
        "--val",
        val.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
        "--config",
        unknown.to_str().unwrap(),
    ]));
    assert_eq!(code, 2, "unknown config keys are config errors");
}

#[test]
fn eval_scores_a_random_report_near_the_prefix() {
    let tmp = tempfile::tempdir().unwrap();
    let (train, val, mask) = synth_noisy(&tmp.path().join("data"), 400, 60, 19);
    let report = tmp.path().join("random.json");
    run_ok(sava().args([
        "value",
        "--train",
        train.to_str().unwrap(),
        "--val",
        val.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
        "--method",
        "random",
        "--seed",
        "23",
    ]));
    let det = tmp.path().join("det.json");
    let curve = tmp.path().join("curve.csv");
    run_ok(sava().args([
        "eval",
        "--report",
        report.to_str().unwrap(),
        "--mask",
        mask.to_str().unwrap(),
        "--out",
        det.to_str().unwrap(),
        "--curve",
        curve.to_str().unwrap(),
    ]));
    let text = std::fs::read_to_string(&det).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let rate = v["detection"]["detection_rate"].as_f64().unwrap();
    assert!(
        (0.08..=0.42).contains(&rate),
        "random ranking should recover about a quarter, got {rate}"
    );
    assert!(v["run_config"]["valuation"].is_object(), "config embedded");
    assert!(
        v["inputs"]["report"]["sha256"].as_str().unwrap().len() == 64,
        "input hashes embedded"
    );
    assert_eq!(
        std::fs::read_to_string(&curve).unwrap().lines().count(),
        101
    );
}

#[test]
fn corrupt_flags_exactly_the_requested_fraction() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("data");
    run_ok(sava().args([
        "synth",
        "--out-dir",
        dir.to_str().unwrap(),
        "--n",
        "80",
        "--n-val",
        "20",
        "--d",
        "4",
        "--v",
        "4",
        "--sep",
        "6",
        "--seed",
        "3",
    ]));
    assert!(!dir.join("mask.json").exists(), "clean synth writes no mask");
    let noisy = tmp.path().join("noisy.bin");
    let mask = tmp.path().join("mask.json");
    run_ok(sava().args([
        "corrupt",
        "--input",
        dir.join("train.bin").to_str().unwrap(),
        "--out",
        noisy.to_str().unwrap(),
        "--mask",
        mask.to_str().unwrap(),
        "--label-noise",
        "0.25",
        "--seed",
        "29",
    ]));
    let text = std::fs::read_to_string(&mask).unwrap();
    let loaded = sava_core::dataset::CorruptionMask::from_json(&text).unwrap();
    assert_eq!(loaded.corrupted(), 20, "exactly a quarter of 80 points");

    let inspected = run_ok(sava().args(["inspect", noisy.to_str().unwrap()]));
    assert!(inspected.contains("kind: labeled dataset"), "{inspected}");
}

#[test]
fn bench_sweeps_the_grid_and_reports_every_row() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bench.toml");
    std::fs::write(
        &cfg,
        r#"
[grid]
methods = ["sava", "random"]
n = [120]
batch-sizes = [48, 64]
seeds = [0]

[data]
n-val = 60
d = 4
v = 3
sep = 6.0
label-noise = 0.3

[eval]
prefix = 0.25
"#,
    )
    .unwrap();
    let out = tmp.path().join("bench.csv");
    let stdout = run_ok(sava().args([
        "bench",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]));
    assert!(stdout.contains("[4/4]"), "{stdout}");
    let table = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 5, "header plus one row per grid point:\n{table}");
    assert!(lines[0].starts_with("method,n,n_val,batch_size,seed,detection_rate"));
    for row in &lines[1..] {
        assert!(row.contains(",ok,"), "row not ok: {row}");
    }
}
