//! End-to-end runs of the `qmzi` binary.

use std::path::PathBuf;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

fn qmzi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmzi")).args(args).output().expect("qmzi runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qmzi-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn lossless_two_db_is_two_db_below_sql() {
    let cfg = scratch("two_db.conf", "n_photons = 1e16\nsqueeze_db = 2\n");
    let out = qmzi(&["sensitivity", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("2.00 dB below SQL"), "{}", stdout(&out));
}

#[test]
fn heavy_loss_balanced_is_above_sql() {
    let cfg = scratch("lossy.conf", "n_photons = 1e16\nsqueeze_db = 10\nloss_a = 0.7\n");
    let out = qmzi(&["sensitivity", "--config", cfg.to_str().unwrap()]);
    assert!(stdout(&out).contains("1.03 dB above SQL"), "{}", stdout(&out));
}

#[test]
fn json_and_key_value_configs_agree() {
    let kv = scratch("same.conf", "n_photons = 1e16\nsqueeze_db = 10\nloss_a = 0.7\nr1 = 0.8\n");
    let js = scratch("same.json", r#"{"n_photons": 1e16, "squeeze_db": 10, "loss_a": 0.7, "r1": 0.8}"#);
    let a = qmzi(&["sensitivity", "--format", "json", "--config", kv.to_str().unwrap()]);
    let b = qmzi(&["sensitivity", "--format", "json", "--config", js.to_str().unwrap()]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn unit_reflectivity_is_a_domain_error_naming_r1() {
    let cfg = scratch("r1.conf", "r1 = 1.0\n");
    let out = qmzi(&["sensitivity", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("r1"), "{}", stderr(&out));
}

#[test]
fn config_problems_exit_with_two() {
    let missing = qmzi(&["sensitivity", "--config", "/nonexistent/qmzi.conf"]);
    assert_eq!(missing.status.code(), Some(2));
    let unknown = scratch("unknown.conf", "bogus = 1\n");
    assert_eq!(qmzi(&["sensitivity", "--config", unknown.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(qmzi(&["sweep", "--preset", "no_such_preset"]).status.code(), Some(2));
    assert_eq!(qmzi(&["sweep", "--preset", "r1_scan", "--threads", "0"]).status.code(), Some(2));
    // a sweep needs an axis
    let plain = scratch("plain.conf", "squeeze_db = 2\n");
    assert_eq!(qmzi(&["sweep", "--config", plain.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn validate_fails_with_a_starved_fock_cutoff() {
    let out = qmzi(&["validate", "--fock-cutoff", "8"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("fock oracle"), "{}", stderr(&out));
    assert!(stdout(&out).contains("[FAIL]"));
}

#[test]
fn sweep_output_is_independent_of_thread_count() {
    let one = qmzi(&["sweep", "--preset", "loss_scan", "--threads", "1"]);
    let many = qmzi(&["sweep", "--preset", "loss_scan", "--threads", "4"]);
    assert!(one.status.success(), "{}", stderr(&one));
    assert_eq!(one.stdout, many.stdout);
}

#[test]
fn every_preset_sweeps_quickly_without_errors() {
    for preset in ["r1_scan", "r1_signal_noise", "optimal_r1_vs_loss", "loss_signal_noise", "loss_scan", "squeezing_scan", "gain_vs_loss"] {
        let start = Instant::now();
        let out = qmzi(&["sweep", "--preset", preset]);
        assert!(start.elapsed() < Duration::from_secs(10), "{preset} too slow");
        assert!(out.status.success(), "{preset}: {}", stderr(&out));
        let text = stdout(&out);
        assert!(text.starts_with("series,axis,"), "{preset}");
        // precision and internal failures must not show up as flags
        for line in text.lines().skip(1) {
            let flags = line.rsplit(',').next().unwrap();
            assert!(!flags.contains("precision") && !flags.contains("error"), "{preset}: {line}");
        }
    }
}

#[test]
fn gain_vs_loss_preset_reports_two_db_gain_without_loss() {
    let out = qmzi(&["sweep", "--preset", "gain_vs_loss"]);
    let text = stdout(&out);
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let (axis, or_db, series) = (col("axis"), col("or_db"), col("series"));
    let row = text
        .lines()
        .map(|l| l.split(',').collect::<Vec<_>>())
        .find(|r| r[series] == "qmzi_vbs_opt" && r[axis].parse::<f64>().unwrap() == 0.0)
        .unwrap();
    assert_eq!(row[or_db], "2.000");
}

#[test]
fn r1_scan_json_has_the_minimum_near_r1_083() {
    let out = qmzi(&["sweep", "--preset", "r1_scan", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v["rows"].as_array().unwrap();
    let best = rows
        .iter()
        .filter(|r| r["series"] == "qmzi_vbs")
        .min_by(|a, b| a["delta_phi_closed"].as_f64().partial_cmp(&b["delta_phi_closed"].as_f64()).unwrap())
        .unwrap();
    let r1 = best["axis"].as_f64().unwrap();
    assert!((r1 - 0.83).abs() < 0.011, "minimum at {r1}");
}

#[test]
fn out_flag_writes_a_file() {
    let path = scratch("sweep.csv", "");
    let out = qmzi(&["sweep", "--preset", "optimal_r1_vs_loss", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).is_empty());
    assert!(std::fs::read_to_string(&path).unwrap().starts_with("series,axis,"));
}

#[test]
fn optimize_reports_closed_and_numeric_optimum() {
    let cfg = scratch("opt.conf", "squeeze_db = 10\nloss_a = 0.7\n");
    let out = qmzi(&["optimize", "--config", cfg.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let closed = v["closed_form"]["r1_opt"].as_f64().unwrap();
    let numeric = v["numeric"]["r1_opt"].as_f64().unwrap();
    assert!((closed - numeric).abs() < 1e-4);
}

#[test]
fn qcrb_bound_is_below_detection() {
    let cfg = scratch("qcrb.conf", "n_photons = 1e8\nsqueeze_db = 6\nloss_a = 0.4\nr1 = 0.5\n");
    let out = qmzi(&["qcrb", "--format", "json", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let ratio = v["ratio"].as_f64().unwrap();
    assert!(ratio >= 1.0 - 1e-6, "{ratio}");
    assert_eq!(v["encoding"], "reference_free");
}
