use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use corrcs::bpdn::epsilon_rule;
use corrcs::experiments::{parse_manifest, parse_results_csv};
use corrcs::model::measure_noiseless;
use corrcs::siggen::{InstanceConfig, ProblemInstance};
use serde_json::Value;

fn corrcs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corrcs"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn dir_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn read_column(path: &Path) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.trim().parse().unwrap())
        .collect()
}

#[test]
fn one_bit_quantizer_levels() {
    let dir = tempfile::tempdir().unwrap();
    let out = corrcs(&[
        "quantizer", "--design", "lloyd-max", "--bits", "1", "--samples", "20000", "--out", &dir_arg(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let q = read_json(&dir.path().join("quantizer.json"));
    let levels: Vec<f64> = q["levels"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let c = (2.0 / std::f64::consts::PI).sqrt();
    assert_eq!(levels.len(), 2);
    assert!((levels[0] + c).abs() < 1e-8 && (levels[1] - c).abs() < 1e-8);
    let fit = read_json(&dir.path().join("gain_fit.json"));
    assert!((fit["alpha"].as_f64().unwrap() - 2.0 / std::f64::consts::PI).abs() < 0.02);
}

#[test]
fn invalid_arguments_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir_arg(dir.path());
    assert_eq!(corrcs(&["quantizer", "--design", "uniform", "--bits", "0", "--out", &d]).status.code(), Some(1));
    assert_eq!(corrcs(&["reproduce", "--figure", "fig9", "--out", &d]).status.code(), Some(1));
    assert_eq!(corrcs(&["reproduce", "--figure", "fig3", "--trials", "0", "--out", &d]).status.code(), Some(1));
    assert_eq!(corrcs(&["--help"]).status.code(), Some(0));
}

#[test]
fn table1_gains() {
    let dir = tempfile::tempdir().unwrap();
    let out = corrcs(&["reproduce", "--figure", "table1", "--out", &dir_arg(dir.path())]);
    assert!(out.status.success());
    let table = read_json(&dir.path().join("table1.json"));
    let entries = table["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 6);
    let lm1 = entries
        .iter()
        .find(|e| e["design"] == "lloyd-max" && e["bits"] == 1)
        .unwrap();
    assert!((lm1["alpha"].as_f64().unwrap() - 0.6366).abs() < 2e-3);
    let alphas: Vec<f64> = entries.iter().map(|e| e["alpha"].as_f64().unwrap()).collect();
    assert!(alphas.iter().all(|&a| a > 0.6 && a < 1.0));
    parse_manifest(&fs::read_to_string(dir.path().join("table1.manifest.json")).unwrap()).unwrap();
}

#[test]
fn figure_outputs_parse_and_rerun_identically() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    for dir in [&first, &second] {
        let out = corrcs(&[
            "reproduce", "--figure", "fig3", "--trials", "2", "--seed", "5", "--workers", "2", "--out",
            &dir_arg(dir.path()),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let csv = fs::read_to_string(first.path().join("fig3.csv")).unwrap();
    let rows = parse_results_csv(&csv).unwrap();
    assert_eq!(rows.len(), 3 * 9 * 2);
    assert!(rows.iter().all(|r| r.trials == 2 && r.mean_nmse.is_finite()));
    assert_eq!(csv, fs::read_to_string(second.path().join("fig3.csv")).unwrap());
    let manifest = parse_manifest(&fs::read_to_string(first.path().join("fig3.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.results, rows);
    assert_eq!(manifest.master_seed, 5);
    assert!(first.path().join("fig3.gp").exists());
}

/// Writes a random instance's matrix and a correlated-noise measurement.
fn write_problem(dir: &Path, alpha: f64) -> (Vec<f64>, f64) {
    let inst = ProblemInstance::generate(InstanceConfig::new(60, 40, 3, 77, 0).unwrap()).unwrap();
    let ybar = measure_noiseless(&inst.signal, &inst.ensemble).unwrap();
    let y: Vec<f64> = ybar
        .iter()
        .enumerate()
        .map(|(i, v)| alpha * v + 0.01 * ((i as f64) * 1.7).sin())
        .collect();
    let a = inst.ensemble.system_matrix();
    let matrix: String = a
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(",") + "\n")
        .collect();
    fs::write(dir.join("a.csv"), matrix).unwrap();
    fs::write(dir.join("y.csv"), y.iter().map(|v| format!("{v:e}\n")).collect::<String>()).unwrap();
    let sy2 = ybar.iter().map(|v| v * v).sum::<f64>() / ybar.len() as f64;
    (inst.signal.values().to_vec(), sy2)
}

fn solve(dir: &Path, out: &str, extra: &[&str]) -> Output {
    let a = dir_arg(&dir.join("a.csv"));
    let y = dir_arg(&dir.join("y.csv"));
    let o = dir_arg(&dir.join(out));
    let mut args = vec!["solve", "--matrix", &a, "--y", &y, "--out", &o];
    args.extend_from_slice(extra);
    corrcs(&args)
}

#[test]
fn solve_scaled_with_unit_gain_matches_plain() {
    let dir = tempfile::tempdir().unwrap();
    let (x, _) = write_problem(dir.path(), 0.8);
    let plain = solve(dir.path(), "plain", &["--method", "bpdn", "--epsilon", "0.1"]);
    assert!(plain.status.success(), "{}", String::from_utf8_lossy(&plain.stderr));
    let unit = solve(dir.path(), "unit", &["--method", "bpdn-scale", "--alpha", "1", "--epsilon", "0.1"]);
    assert!(unit.status.success());
    let p = read_column(&dir.path().join("plain/solution.csv"));
    let u = read_column(&dir.path().join("unit/solution.csv"));
    assert_eq!(p, u);

    let scaled = solve(dir.path(), "scaled", &["--method", "bpdn-scale", "--alpha", "0.8", "--epsilon", "0.1"]);
    assert!(scaled.status.success());
    let s = read_column(&dir.path().join("scaled/solution.csv"));
    let err = |v: &[f64]| v.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    assert!(err(&s) < err(&p));
}

#[test]
fn solve_epsilon_auto_uses_rule() {
    let dir = tempfile::tempdir().unwrap();
    write_problem(dir.path(), 0.8);
    let out = solve(dir.path(), "auto", &["--method", "bpdn", "--sigma", "0.05"]);
    assert!(out.status.success());
    let report = read_json(&dir.path().join("auto/report.json"));
    let eps = report["epsilon"].as_f64().unwrap();
    assert!((eps - epsilon_rule(40, 0.05)).abs() < 1e-12);
    assert!((report["residual_norm"].as_f64().unwrap() - eps).abs() < 1e-3 * eps);
}

#[test]
fn solve_rejects_missing_inputs() {
    let dir = tempfile::tempdir().unwrap();
    write_problem(dir.path(), 0.8);
    assert_eq!(solve(dir.path(), "x", &["--method", "bpdn-scale", "--epsilon", "0.1"]).status.code(), Some(1));
    assert_eq!(solve(dir.path(), "x", &["--method", "biht"]).status.code(), Some(1));
    assert_eq!(solve(dir.path(), "x", &["--method", "bpdn"]).status.code(), Some(1));
    let ok = solve(dir.path(), "b", &["--method", "biht", "--k", "3"]);
    assert!(ok.status.success());
    let x = read_column(&dir.path().join("b/solution.csv"));
    assert_eq!(x.iter().filter(|v| **v != 0.0).count(), 3);
}

#[test]
fn phase_sweep_single_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = corrcs(&[
        "phase-sweep", "--n", "40", "--delta-step", "0.25", "--rho-step", "0.25", "--deltas", "0.5", "--trials", "2",
        "--out", &dir_arg(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = parse_results_csv(&fs::read_to_string(dir.path().join("phase.csv")).unwrap()).unwrap();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| (r.delta - 0.5).abs() < 1e-12));
    assert!(rows.iter().any(|r| r.method == "biht") && rows.iter().any(|r| r.method == "bpdn-scale"));
}
