//! End-to-end checks of the command-line surface: exit codes, file
//! emission, config merging, and report determinism.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fraclab"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fraclab_cli_{tag}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("reading {path:?}: {e}"))
}

#[test]
fn solve_writes_artifacts_and_exits_zero() {
    let dir = tmp_dir("solve");
    let status = bin()
        .args([
            "solve", "--domain", "ball", "--s", "0.5", "--lambda", "0", "--p", "2", "--n",
            "257", "--plot",
        ])
        .args(["--out-dir", dir.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = read(&dir.join("solve_solution.csv"));
    assert!(csv.starts_with("# fraclab"));
    assert!(csv.lines().nth(1).unwrap().starts_with("x,u"));
    let summary: serde_json::Value =
        serde_json::from_str(&read(&dir.join("solve_summary.json"))).unwrap();
    // JSON peak equals the CSV maximum
    let u0 = summary["u0"].as_f64().unwrap();
    let csv_max = csv
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    assert!((u0 - csv_max).abs() <= 1e-9 * csv_max.abs());
    assert!(dir.join("solve_profile.svg").exists());
}

#[test]
fn invalid_order_is_a_config_error() {
    let out = bin().args(["solve", "--s", "1.5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("(0, 1)"), "message: {msg}");
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tmp_dir("cfg");
    let cfg = dir.join("run.json");
    std::fs::write(&cfg, r#"{"s": 0.5, "unknown-knob": 3}"#).unwrap();
    let out = bin()
        .args(["solve", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn flags_override_config_file() {
    let dir = tmp_dir("cfg_merge");
    let cfg = dir.join("run.json");
    // file asks for an invalid order; the flag must win
    std::fs::write(&cfg, r#"{"s": 0.9, "n": 257}"#).unwrap();
    let status = bin()
        .args(["solve", "--config", cfg.to_str().unwrap(), "--s", "0.5"])
        .args(["--out-dir", dir.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let summary: serde_json::Value =
        serde_json::from_str(&read(&dir.join("solve_summary.json"))).unwrap();
    assert_eq!(summary["problem"]["s"].as_f64().unwrap(), 0.5);
    assert_eq!(summary["problem"]["n"].as_u64().unwrap(), 257);
}

#[test]
fn spectrum_emits_requested_rows() {
    let dir = tmp_dir("spectrum");
    let status = bin()
        .args([
            "spectrum", "--domain", "ball", "--s", "0.5", "--lambda", "0", "--p", "2", "--n",
            "257", "--sector", "odd", "--k", "3",
        ])
        .args(["--out-dir", dir.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = read(&dir.join("spectrum_eigenvalues.csv"));
    let rows: Vec<&str> = csv.lines().skip(2).collect();
    assert_eq!(rows.len(), 3);
    let summary: serde_json::Value =
        serde_json::from_str(&read(&dir.join("spectrum_summary.json"))).unwrap();
    assert!(summary["gap_to_p"].as_f64().unwrap() > 0.0);
}

#[test]
fn branch_csv_has_increasing_exponent_column() {
    let dir = tmp_dir("branch");
    let status = bin()
        .args([
            "branch", "--s", "0.5", "--lambda", "0", "--p-start", "1.6", "--p-end", "2.2",
            "--n", "257", "--plot",
        ])
        .args(["--out-dir", dir.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = read(&dir.join("branch_points.csv"));
    let ps: Vec<f64> = csv
        .lines()
        .skip(2)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(ps.len() >= 3);
    assert!(ps.windows(2).all(|w| w[1] > w[0]));
    assert!(dir.join("branch_diagram.svg").exists());
}

#[test]
fn extend_reports_small_divergence_residual() {
    let dir = tmp_dir("extend");
    let status = bin()
        .args(["extend", "--trace", "lorentzian", "--s", "0.5", "--plot"])
        .args(["--out-dir", dir.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let summary: serde_json::Value =
        serde_json::from_str(&read(&dir.join("extend_summary.json"))).unwrap();
    let res = summary["pde_residual"].as_f64().unwrap();
    let scale = summary["field_max"].as_f64().unwrap();
    assert!(res <= 1e-2 * scale, "residual {res} vs scale {scale}");
    assert!(summary["normal_derivative_consistency"].as_f64().unwrap() <= 0.02);
    assert!(dir.join("extend_field.svg").exists());
    assert!(read(&dir.join("extend_field.csv")).lines().nth(1).unwrap().starts_with("x,t,w"));
}

#[test]
fn picone_command_emits_draws() {
    let dir = tmp_dir("picone");
    let status = bin()
        .args(["picone", "--draws", "3", "--seed", "11"])
        .args(["--out-dir", dir.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = read(&dir.join("picone_draws.csv"));
    // 3 line draws + proportional pair + 3 interval references
    assert_eq!(csv.lines().skip(2).count(), 7);
}

#[test]
fn verify_filter_and_injected_failure() {
    let dir = tmp_dir("verify");
    let status = bin()
        .args(["verify", "--only", "operator"])
        .args(["--out-dir", dir.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&read(&dir.join("verify_report.json"))).unwrap();
    let names: Vec<&str> = report["criteria"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, vec!["operator-correctness"]);

    // tolerance zero forces failure with exit code 3
    let status = bin()
        .args(["verify", "--only", "operator", "--tolerance-scale", "0"])
        .args(["--out-dir", dir.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));

    // no matching criterion is a configuration error
    let status = bin()
        .args(["verify", "--only", "zzz-not-a-criterion"])
        .args(["--out-dir", dir.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn verify_report_is_byte_identical_across_runs() {
    let dir_a = tmp_dir("det_a");
    let dir_b = tmp_dir("det_b");
    for dir in [&dir_a, &dir_b] {
        let status = bin()
            .args(["verify", "--only", "operator"])
            .args(["--out-dir", dir.to_str().unwrap()])
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    assert_eq!(
        read(&dir_a.join("verify_report.json")),
        read(&dir_b.join("verify_report.json"))
    );
}

#[test]
fn solve_outputs_are_deterministic() {
    let dir_a = tmp_dir("sdet_a");
    let dir_b = tmp_dir("sdet_b");
    for dir in [&dir_a, &dir_b] {
        let status = bin()
            .args(["solve", "--domain", "ball", "--n", "257", "--seed", "9"])
            .args(["--out-dir", dir.to_str().unwrap()])
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    assert_eq!(
        read(&dir_a.join("solve_solution.csv")),
        read(&dir_b.join("solve_solution.csv"))
    );
    assert_eq!(
        read(&dir_a.join("solve_summary.json")),
        read(&dir_b.join("solve_summary.json"))
    );
}

#[test]
fn thread_cap_env_is_honored() {
    let dir = tmp_dir("threads");
    let status = bin()
        .env("FRACLAB_THREADS", "1")
        .args(["solve", "--domain", "ball", "--n", "257"])
        .args(["--out-dir", dir.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    // single-threaded output matches the default-pool output bit for bit
    let dir2 = tmp_dir("threads2");
    let status = bin()
        .args(["solve", "--domain", "ball", "--n", "257"])
        .args(["--out-dir", dir2.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(
        read(&dir.join("solve_solution.csv")),
        read(&dir2.join("solve_solution.csv"))
    );
}
