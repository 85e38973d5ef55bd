//! End-to-end tests of the command-line interface: run/validate/oracle,
//! exit codes, atomic outputs, and provenance round-trips.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn spinsync(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinsync"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, contents: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, contents).unwrap();
    path.to_string_lossy().into_owned()
}

const SYNC_CONFIG: &str = r#"{
  "experiment": "sync-scan",
  "drive": {
    "rabi_frequency_mhz": 6.0,
    "mw_detuning_mhz": 0.0,
    "rf_frequency_mhz": 6.0,
    "rf_amplitude_mhz": 2.7,
    "rf_phase_rad": 0.0,
    "gamma1_per_us": 0.00578,
    "gamma2_per_us": 0.3,
    "w_eq": 1.0
  },
  "sync-scan": {
    "rabi_start_mhz": 5.5,
    "rabi_stop_mhz": 6.5,
    "rabi_points": 5,
    "tau_max_us": 10.0,
    "tau_points": 512,
    "phase_average": 4
  }
}"#;

#[test]
fn run_produces_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "config.json", SYNC_CONFIG);
    let out = spinsync(&["run", &config, "--out", "results"], dir.path());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let csv = fs::read_to_string(dir.path().join("results/result.csv")).unwrap();
    assert!(csv.starts_with("rabi_frequency_mhz,freq_mhz,mag\n"));
    assert!(csv.lines().count() > 5 * 100);

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("results/summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["experiment"], "sync-scan");
    assert!(summary["summary"]["gaps"].as_array().unwrap().len() == 5);

    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("results/meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["tool"], "spinsync");
    assert!(meta["wall_time_s"].as_f64().unwrap() > 0.0);

    // no stray temp files
    assert_eq!(fs::read_dir(dir.path().join("results")).unwrap().count(), 3);
}

#[test]
fn summary_config_round_trips_to_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "config.json", SYNC_CONFIG);
    let out = spinsync(&["run", &config, "--out", "a"], dir.path());
    assert!(out.status.success());

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a/summary.json")).unwrap())
            .unwrap();
    let resolved = serde_json::to_string_pretty(&summary["config"]).unwrap();
    let config2 = write_config(dir.path(), "resolved.json", &resolved);
    let out = spinsync(&["run", &config2, "--out", "b"], dir.path());
    assert!(out.status.success());

    let a = fs::read(dir.path().join("a/result.csv")).unwrap();
    let b = fs::read(dir.path().join("b/result.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn shot_noise_is_seeded_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "config.json",
        r#"{
  "experiment": "rabi-map",
  "noise": {"photons_per_point": 500},
  "drive": {
    "rabi_frequency_mhz": 5.0,
    "mw_detuning_mhz": 0.0,
    "rf_frequency_mhz": 15.0,
    "rf_amplitude_mhz": 4.5,
    "rf_phase_rad": 0.0,
    "gamma1_per_us": 0.0,
    "gamma2_per_us": 0.0,
    "w_eq": 1.0
  },
  "rabi-map": {
    "detuning_start_mhz": -1.0,
    "detuning_stop_mhz": 1.0,
    "detuning_points": 3,
    "tau_max_us": 2.0,
    "tau_points": 128,
    "phase_average": 2
  }
}"#,
    );
    for (out_dir, seed) in [("s7a", "7"), ("s7b", "7"), ("s8", "8")] {
        let out = spinsync(&["run", &config, "--seed", seed, "--out", out_dir], dir.path());
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    let a = fs::read(dir.path().join("s7a/result.csv")).unwrap();
    let b = fs::read(dir.path().join("s7b/result.csv")).unwrap();
    let c = fs::read(dir.path().join("s8/result.csv")).unwrap();
    assert_eq!(a, b, "same seed must be bit-identical");
    assert_ne!(a, c, "different seed must differ");
}

#[test]
fn validate_reports_and_exit_codes_classify_errors() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), "good.json", SYNC_CONFIG);
    let out = spinsync(&["validate", &good], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("ok"));

    // unknown key → exit 2
    let unknown = write_config(
        dir.path(),
        "unknown.json",
        &SYNC_CONFIG.replace("\"rabi_frequency_mhz\"", "\"rabi_frequency\""),
    );
    let out = spinsync(&["validate", &unknown], dir.path());
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rabi_frequency"));

    // syntax error → exit 2 with position
    let broken = write_config(dir.path(), "broken.json", "{\n  \"experiment\": \n}");
    let out = spinsync(&["validate", &broken], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));

    // invariant violation → exit 3
    let off_resonance = write_config(
        dir.path(),
        "invariant.json",
        &SYNC_CONFIG.replace("\"mw_detuning_mhz\": 0.0", "\"mw_detuning_mhz\": 1.0"),
    );
    let out = spinsync(&["validate", &off_resonance], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unwritable_output_fails_without_partial_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "config.json", SYNC_CONFIG);
    // a regular file where the output directory should go
    fs::write(dir.path().join("blocked"), "not a directory").unwrap();
    let out = spinsync(&["run", &config, "--out", "blocked"], dir.path());
    assert_eq!(out.status.code(), Some(5), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    // target untouched, no partial outputs anywhere
    assert_eq!(
        fs::read_to_string(dir.path().join("blocked")).unwrap(),
        "not a directory"
    );
    let stray: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".tmp") || n.ends_with(".csv") || n.ends_with(".json"))
        .filter(|n| n != "config.json")
        .collect();
    assert!(stray.is_empty(), "stray files: {stray:?}");
}

#[test]
fn oracle_commands_print_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = spinsync(&["oracle", "bessel", "1", "0.3"], dir.path());
    assert!(out.status.success());
    let v: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!((v - 0.148318816273104).abs() < 1e-12);

    let out = spinsync(&["oracle", "splitting", "5", "6", "2.7"], dir.path());
    let v: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!((v - 1.6800297616411444).abs() < 1e-12);

    let out = spinsync(&["oracle", "floquet", "5", "6", "0"], dir.path());
    let text = String::from_utf8_lossy(&out.stdout);
    let vals: Vec<f64> = text
        .split_whitespace()
        .map(|s| s.parse().unwrap())
        .collect();
    assert_eq!(vals.len(), 3);
    assert!((vals[0] - 2.5).abs() < 1e-9);
    assert!((vals[1] + 2.5).abs() < 1e-9);
    assert!((vals[2] - 1.0).abs() < 1e-9);

    // out-of-range oracle query → experiment error exit code
    let out = spinsync(&["oracle", "bessel", "99", "0.3"], dir.path());
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn floquet_and_lightshift_experiments_emit_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "floquet.json",
        r#"{
  "experiment": "floquet",
  "drive": {
    "rabi_frequency_mhz": 6.0,
    "mw_detuning_mhz": 0.0,
    "rf_frequency_mhz": 6.0,
    "rf_amplitude_mhz": 2.7,
    "rf_phase_rad": 0.0,
    "gamma1_per_us": 0.0,
    "gamma2_per_us": 0.0,
    "w_eq": 1.0
  },
  "floquet": {}
}"#,
    );
    let out = spinsync(&["run", &config, "--out", "fq"], dir.path());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("fq/summary.json")).unwrap())
            .unwrap();
    let gap = summary["summary"]["gap_mhz"].as_f64().unwrap();
    assert!(gap < 1.35 && gap > 1.25, "gap {gap}");

    let ls_config = write_config(
        dir.path(),
        "lightshift.json",
        &fs::read_to_string(dir.path().join("floquet.json"))
            .unwrap()
            .replace("\"experiment\": \"floquet\"", "\"experiment\": \"lightshift\"")
            .replace("\"floquet\": {}", "\"lightshift\": {}"),
    );
    let out = spinsync(&["run", &ls_config, "--out", "ls"], dir.path());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("ls/summary.json")).unwrap())
            .unwrap();
    let center = summary["summary"]["omega_r_center_mhz"].as_f64().unwrap();
    assert!(center < 6.0 && center > 5.8, "center {center}");
    let c2 = summary["summary"]["series"]["c2"].as_f64().unwrap();
    assert!((c2 + 1.0 / 16.0).abs() < 0.01, "c2 {c2}");
    let csv = fs::read_to_string(dir.path().join("ls/result.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11); // header + 10 samples
}
