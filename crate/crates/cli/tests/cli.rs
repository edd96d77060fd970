//! End-to-end checks of the rowplan binary: generate -> plan -> simulate ->
//! report, plus the experiment pipeline and exit-code conventions.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rowplan"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rowplan-cli-{name}"));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

#[test]
fn generate_plan_simulate_report_pipeline() {
    let dir = tmp_dir("pipeline");
    let field = dir.join("field.json");
    let plan = dir.join("plan.json");
    let metrics = dir.join("metrics.json");

    let out = run(&[
        "generate",
        "--lambda",
        "8.2",
        "--length",
        "12",
        "--seed",
        "5",
        "--crop-spacing",
        "0.2",
        "--out",
        &path_str(&field),
    ]);
    assert!(out.status.success(), "generate failed: {out:?}");
    assert!(field.exists());

    let out = run(&[
        "plan",
        "--field",
        &path_str(&field),
        "--mode",
        "rolling",
        "--out",
        &path_str(&plan),
    ]);
    assert!(out.status.success(), "plan failed: {out:?}");
    let plan_json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&plan).unwrap()).unwrap();
    assert_eq!(plan_json["mode"], "rolling");
    assert_eq!(plan_json["axes"].as_array().unwrap().len(), 4);

    let out = run(&[
        "simulate",
        "--field",
        &path_str(&field),
        "--plan",
        &path_str(&plan),
        "--out",
        &path_str(&metrics),
    ]);
    assert!(out.status.success(), "simulate failed: {out:?}");
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&metrics).unwrap()).unwrap();
    let total = m["total_weeds"].as_u64().unwrap();
    let acc = m["accurate_hits"].as_u64().unwrap();
    let part = m["partial_hits"].as_u64().unwrap();
    let missed = m["missed"].as_u64().unwrap();
    assert_eq!(acc + part + missed, total, "conservation on CLI output");

    // Trajectory report from the same artifacts.
    let report_dir = dir.join("report");
    let exp_dir = dir.join("exp");
    let out = run(&[
        "experiment",
        "--suite",
        "paper-densities",
        "--lambda",
        "8.2",
        "--seeds",
        "2",
        "--out",
        &path_str(&exp_dir),
    ]);
    assert!(out.status.success(), "experiment failed: {out:?}");
    let csv = exp_dir.join("metrics.csv");
    assert!(csv.exists());
    assert!(exp_dir.join("summary.json").exists());

    let out = run(&[
        "report",
        "--metrics",
        &path_str(&csv),
        "--out",
        &path_str(&report_dir),
        "--field",
        &path_str(&field),
        "--plan",
        &path_str(&plan),
    ]);
    assert!(out.status.success(), "report failed: {out:?}");
    for file in [
        "loss_vs_density.svg",
        "axis_distance.svg",
        "paired_delta.svg",
        "report.txt",
        "trajectory.svg",
    ] {
        assert!(report_dir.join(file).exists(), "missing {file}");
    }
}

#[test]
fn experiment_reruns_are_byte_identical() {
    let dir_a = tmp_dir("rerun-a");
    let dir_b = tmp_dir("rerun-b");
    for dir in [&dir_a, &dir_b] {
        let out = run(&[
            "experiment",
            "--suite",
            "paper-densities",
            "--lambda",
            "3.1",
            "--seeds",
            "3",
            "--out",
            &path_str(dir),
        ]);
        assert!(out.status.success(), "experiment failed: {out:?}");
    }
    let a = std::fs::read(dir_a.join("metrics.csv")).unwrap();
    let b = std::fs::read(dir_b.join("metrics.csv")).unwrap();
    assert_eq!(a, b, "metrics CSV must be reproducible byte for byte");
}

#[test]
fn generate_is_deterministic() {
    let dir = tmp_dir("gen-det");
    let a = dir.join("a.json");
    let b = dir.join("b.json");
    for f in [&a, &b] {
        let out = run(&[
            "generate",
            "--lambda",
            "5",
            "--seed",
            "9",
            "--out",
            &path_str(f),
        ]);
        assert!(out.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn experiment_accepts_a_config_file() {
    let dir = tmp_dir("config");
    let cfg = dir.join("exp.json");
    std::fs::write(
        &cfg,
        r#"{
            "fields": [
                {"label": "tiny", "source": {"spec": {
                    "lambda": 6.0, "width": 1.39, "length": 8.0,
                    "species_mix": [{"name": "weed", "fraction": 1.0, "beta": 1.0,
                        "priority": "high", "area_median_mm2": 600.0, "area_sigma": 0.5}],
                    "crop_spacing": 0.0, "seed": 0
                }}}
            ],
            "tool": {"heads": 4, "coverage_m": 1.39, "work_depth_m": 0.36,
                     "footprint_m": 0.05, "gamma": 0.5, "theta": 5.0, "dwell_s": 0.0},
            "variants": [
                {"label": "segment", "planner": {"omega": 50.0, "rho": 0.6,
                    "mode": "segment", "biodiv": false, "window_m": 1.0,
                    "stride_fraction": 0.5, "max_window_targets": 12,
                    "commit_horizon_s": 0.2}}
            ],
            "sim": {"noise_sigma": 0.0, "accurate_radius_m": 0.01,
                    "partial_radius_m": 0.025, "crop_safety_radius_m": 0.03,
                    "withhold_prob": 0.0, "seed": 0},
            "seeds": [0]
        }"#,
    )
    .unwrap();
    let out_dir = dir.join("out");
    let out = run(&[
        "experiment",
        "--config",
        &path_str(&cfg),
        "--seeds",
        "2",
        "--out",
        &path_str(&out_dir),
    ]);
    assert!(out.status.success(), "config experiment failed: {out:?}");
    let csv = std::fs::read_to_string(out_dir.join("metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3, "header plus one row per seed");
}

#[test]
fn verify_subcommand_passes() {
    let out = run(&["verify", "--instances", "60", "--grid-samples", "20000"]);
    assert!(out.status.success(), "verify failed: {out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("0 mismatches"));
}

#[test]
fn exit_codes_distinguish_config_and_runtime_errors() {
    // Unknown flag: usage error, exit 1.
    let out = run(&["generate", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));

    // Invalid cutoff: config validation error, exit 1.
    let dir = tmp_dir("exit-codes");
    let field = dir.join("field.json");
    let out = run(&["generate", "--lambda", "2", "--out", &path_str(&field)]);
    assert!(out.status.success());
    let out = run(&[
        "plan",
        "--field",
        &path_str(&field),
        "--rho",
        "0.4",
        "--out",
        &path_str(&dir.join("plan.json")),
    ]);
    assert_eq!(out.status.code(), Some(1), "stderr: {:?}", out.stderr);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("\"kind\""),
        "machine-readable record expected"
    );

    // Missing input file: read failure, exit 2.
    let out = run(&[
        "plan",
        "--field",
        "/nonexistent/field.json",
        "--out",
        &path_str(&dir.join("plan.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn species_mix_file_drives_priorities() {
    let dir = tmp_dir("mix");
    let mix = dir.join("mix.json");
    std::fs::write(
        &mix,
        r#"[
            {"name": "dicot", "fraction": 0.9, "beta": 1.0, "priority": "low",
             "area_median_mm2": 500.0, "area_sigma": 0.4},
            {"name": "grass", "fraction": 0.1, "beta": 2.0, "priority": "high",
             "area_median_mm2": 800.0, "area_sigma": 0.4}
        ]"#,
    )
    .unwrap();
    let field = dir.join("field.json");
    let out = run(&[
        "generate",
        "--lambda",
        "20",
        "--length",
        "20",
        "--species-mix",
        &path_str(&mix),
        "--out",
        &path_str(&field),
    ]);
    assert!(out.status.success(), "generate failed: {out:?}");
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&field).unwrap()).unwrap();
    let plants = parsed["plants"].as_array().unwrap();
    let highs = plants.iter().filter(|p| p["priority"] == "high").count();
    assert!(highs > 0 && highs < plants.len());
}
