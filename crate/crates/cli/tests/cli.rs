use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn sensorq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sensorq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn config(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all = args.to_vec();
    let out = dir.to_string_lossy().into_owned();
    all.extend(["--out", &out]);
    sensorq(&all)
}

#[test]
fn simulate_defaults_write_the_full_ladder() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["simulate"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("simulation.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "N,mse,stderr,pcrlb_limit");
    assert_eq!(lines.len(), 12);
    assert!(lines[1].starts_with("16,"));
    assert!(lines[11].starts_with("16384,"));
    assert!(csv.ends_with('\n'));
}

#[test]
fn negative_variance_is_a_config_error_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("out");
    let out = run_in(
        &target,
        &[
            "fisher",
            "--config",
            &config("invalid_negative_variance.json"),
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fisher"));
    assert!(!target.exists());
}

#[test]
fn unknown_keys_are_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("typo.json");
    fs::write(&cfg, r#"{"runs": 10, "sensor": [4]}"#).unwrap();
    let out = run_in(
        &dir.path().join("out"),
        &["simulate", "--config", &cfg.to_string_lossy()],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown field"));
}

#[test]
fn wide_gaussian_design_reports_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["design", "--config", &config("design_wide_gaussian.json")],
    );
    assert_eq!(out.status.code(), Some(3));
    let summary = fs::read_to_string(dir.path().join("design_summary.txt")).unwrap();
    assert!(summary.contains("deconvolution: failed"));
    assert!(summary.contains("reconvolution residual"));
    assert!(!dir.path().join("quantizer.csv").exists());
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.json");
    fs::write(
        &cfg,
        r#"{"sensors": [16, 256, 4096], "runs": 400, "seed": 99}"#,
    )
    .unwrap();
    let cfg = cfg.to_string_lossy().into_owned();
    let mut csvs = Vec::new();
    for threads in ["1", "8"] {
        let out_dir = dir.path().join(threads);
        let out = run_in(
            &out_dir,
            &["simulate", "--config", &cfg, "--threads", threads],
        );
        assert_eq!(out.status.code(), Some(0));
        csvs.push(fs::read(out_dir.join("simulation.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);

    let seeded = dir.path().join("seeded");
    run_in(&seeded, &["simulate", "--config", &cfg, "--seed", "100"]);
    assert_ne!(fs::read(seeded.join("simulation.csv")).unwrap(), csvs[0]);
}

#[test]
fn every_shipped_config_runs() {
    let expect = [
        (
            "design",
            "design_least_favorable_delta.json",
            0,
            "quantizer.csv",
        ),
        (
            "design",
            "design_bvp_truncated_gaussian.json",
            0,
            "gstar.csv",
        ),
        ("fisher", "fisher_threshold.json", 0, "equicorrelated.csv"),
        ("rate", "rate_low_snr.json", 0, "rate.csv"),
        ("pbpo", "pbpo_two_sensors.json", 0, "brute_force.csv"),
        ("pbpo", "pbpo_latent.json", 0, "strategy.csv"),
        (
            "counterexample",
            "counterexample.json",
            0,
            "counterexample.csv",
        ),
    ];
    for (cmd, file, code, artifact) in expect {
        let dir = tempfile::tempdir().unwrap();
        let first = run_in(dir.path(), &[cmd, "--config", &config(file)]);
        assert_eq!(
            first.status.code(),
            Some(code),
            "{file}: {}",
            String::from_utf8_lossy(&first.stderr)
        );
        let a = fs::read(dir.path().join(artifact)).unwrap();
        run_in(dir.path(), &[cmd, "--config", &config(file)]);
        assert_eq!(
            fs::read(dir.path().join(artifact)).unwrap(),
            a,
            "{file} is not idempotent"
        );
    }
}

#[test]
fn rate_ranks_binary_first_at_low_snr() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["rate", "--config", &config("rate_low_snr.json")],
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("rate.csv")).unwrap();
    let first = csv.lines().nth(1).unwrap();
    assert!(first.starts_with("1,2,8,8,"), "{first}");
}

#[test]
fn infeasible_rate_candidate_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("rate.json");
    fs::write(
        &cfg,
        r#"{"budget": 4, "prior": {"kind": "gaussian", "mean": 0, "variance": 0.2}, "variance": 1,
            "candidates": [{"levels": 2, "count": 8}]}"#,
    )
    .unwrap();
    let out = run_in(
        &dir.path().join("out"),
        &["rate", "--config", &cfg.to_string_lossy()],
    );
    assert_eq!(out.status.code(), Some(2));
}
