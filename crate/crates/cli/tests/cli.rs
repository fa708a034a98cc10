use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(dir: &Path, args: &[&str], config: &str) -> Output {
    let cfg = dir.join("config.json");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_gauge-dirac"))
        .arg("--out-dir")
        .arg(dir.join("out"))
        .args(args)
        .arg(&cfg)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(Result::unwrap).collect()
}

fn field(row: &csv::StringRecord, i: usize) -> f64 {
    row[i].parse().unwrap()
}

#[test]
fn extract_default_packet() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["extract"], r#"{"pulse": {"f": 4}}"#);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&dir.path().join("out/extract.csv"));
    assert_eq!(rows.len(), 1);
    assert!(field(&rows[0], 5) < 1e-10);
    assert!(field(&rows[0], 1) < 0.0);
    assert!(dir.path().join("out/extract_report.txt").exists());
}

#[test]
fn zero_strength_changes_nothing() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["extract"], r#"{"pulse": {"f": 0}, "grid": {"n_points": 256}}"#);
    assert_eq!(code(&o), 0);
    let rows = csv_rows(&dir.path().join("out/extract.csv"));
    assert!(field(&rows[0], 1).abs() < 1e-13);
}

#[test]
fn plane_wave_target_is_refused() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["extract"], r#"{"packet": {"kind": "plane"}, "pulse": {"delta_target": -1}}"#);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("no current divergence"));
}

#[test]
fn config_errors_exit_3() {
    let dir = TempDir::new().unwrap();
    for cfg in [
        "not json",
        r#"{"grid": {"points": 64}}"#,
        r#"{"pulse": {"f": 1, "f_list": [1, 2]}}"#,
        r#"{"pulse": {"t_a": 3, "t_b": 2}}"#,
        r#"{"physics": {"mass": 0}}"#,
    ] {
        assert_eq!(code(&run(dir.path(), &["extract"], cfg)), 3, "{cfg}");
    }
    assert_eq!(code(&run(dir.path(), &["scan-f"], r#"{"pulse": {"f": 1}}"#)), 3);
}

#[test]
fn scan_is_linear_and_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"pulse": {"f_list": [1, 2, 4, 8]}}"#;
    let o = run(dir.path(), &["scan-f"], cfg);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let csv_path = dir.path().join("out/scan.csv");
    let first = fs::read(&csv_path).unwrap();
    let header = String::from_utf8_lossy(&first).lines().next().unwrap().to_string();
    assert_eq!(
        header,
        "f,delta_measured,delta_eq26,delta_eq27,delta_eq30,rel_err_27,energy_before,energy_after,neg_branch_after,tail_fraction_after,warnings"
    );
    let rows = csv_rows(&csv_path);
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert!((field(r, 2) - field(r, 3)).abs() <= 1e-12 * field(r, 3).abs());
    }
    for w in rows.windows(2) {
        assert!(field(&w[1], 1) < field(&w[0], 1));
    }
    assert!(fs::read_to_string(dir.path().join("out/scan.svg")).unwrap().starts_with("<svg"));

    run(dir.path(), &["scan-f"], cfg);
    assert_eq!(fs::read(&csv_path).unwrap(), first);
}

#[test]
fn warnings_reach_csv_and_report() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["extract"], r#"{"grid": {"n_points": 512}, "pulse": {"f": 100000}}"#);
    assert!(matches!(code(&o), 0 | 2));
    let rows = csv_rows(&dir.path().join("out/extract.csv"));
    assert!(rows[0][10].contains("under-resolved"));
    let report = fs::read_to_string(dir.path().join("out/extract_report.txt")).unwrap();
    assert!(report.contains("under-resolved"));
}

#[test]
fn verify_default_and_guards() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["verify"], "{}");
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{stdout}");
    assert!(stdout.contains("all 15 checks passed"));
    assert_eq!(code(&run(dir.path(), &["verify"], r#"{"grid": {"n_points": 128}}"#)), 3);
    assert_eq!(code(&run(dir.path(), &["verify"], r#"{"physics": {"mass": 0}}"#)), 3);
}

#[test]
fn convergence_study() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["convergence"], r#"{"grid": {"n_points": 512}, "integrator": {"enabled": true}}"#);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let rows = csv_rows(&dir.path().join("out/convergence.csv"));
    assert_eq!(rows.len(), 4);
    let order = field(&rows[3], 3);
    assert!((order - 2.0).abs() < 0.2);
    assert!(dir.path().join("out/convergence.svg").exists());

    let zero = run(dir.path(), &["convergence"], r#"{"grid": {"n_points": 256}, "integrator": {"enabled": true}, "pulse": {"f": 0}}"#);
    assert_eq!(code(&zero), 0);
    assert!(String::from_utf8_lossy(&zero.stdout).contains("degenerate"));

    assert_eq!(code(&run(dir.path(), &["convergence"], "{}")), 3);
}
