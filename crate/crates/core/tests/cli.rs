//! End-to-end runs of the `qbm` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbm")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = qbm(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn identical_runs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        fs::create_dir(&out).unwrap();
        ok(&[
            "moments",
            "--steps",
            "301",
            "--out",
            out.join("m.csv").to_str().unwrap(),
        ]);
        ok(&["wigner", "--nx", "41", "--ny", "41", "--out", out.to_str().unwrap()]);
    }
    for file in ["m.csv", "m.summary.json", "wigner_tau_0.csv", "wigner_tau_0.45.csv"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file}");
    }
}

#[test]
fn dumped_config_reloads_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let first = ok(&[
        "--g",
        "0.2",
        "--wc-over-2pikt",
        "1e-3",
        "--state",
        "coherent",
        "--alpha-re",
        "-1.5",
        "--dump-config",
    ]);
    let path = dir.path().join("cfg.json");
    fs::write(&path, &first).unwrap();
    let second = ok(&["--config", path.to_str().unwrap(), "--dump-config"]);
    assert_eq!(first, second);
    let cfg: serde_json::Value = serde_json::from_str(&first).unwrap();
    assert_eq!(cfg["g"], 0.2);
    assert_eq!(cfg["alpha_re"], -1.5);
}

#[test]
fn exit_codes() {
    assert_eq!(qbm(&["coeffs", "--bogus"]).status.code(), Some(2));
    assert_eq!(
        qbm(&["coeffs", "--kt-over-wc", "1", "--wc-over-2pikt", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(qbm(&["coeffs", "--r", "0"]).status.code(), Some(2));
    assert_eq!(qbm(&["wigner", "--taus", "-1"]).status.code(), Some(2));
    assert_eq!(
        qbm(&["coeffs", "--config", "/nonexistent/cfg.json"]).status.code(),
        Some(4)
    );
    assert_eq!(
        qbm(&["coeffs", "--out", "/nonexistent/dir/c.csv"]).status.code(),
        Some(4)
    );
    assert_eq!(qbm(&["--version"]).status.code(), Some(0));
}

#[test]
fn coefficient_table() {
    let text = ok(&["coeffs", "--steps", "201"]);
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(text.lines().nth(1), Some("0,0,0,0,0"));
    assert_eq!(rows.len(), 201);
    assert!(rows.iter().any(|r| r[1] + r[2] < 0.0), "Δ + γ should dip below zero");

    let decoupled = ok(&["coeffs", "--g", "0", "--steps", "21"]);
    assert!(decoupled
        .lines()
        .skip(1)
        .all(|l| l.split(',').skip(1).all(|v| v == "0")));
}

#[test]
fn moments_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("n3.csv");
    ok(&[
        "moments",
        "--state",
        "coherent",
        "--alpha-re",
        "1.7320508075688772",
        "--out",
        out.to_str().unwrap(),
    ]);
    let summary = json(&dir.path().join("n3.summary.json"));
    let period = summary["n_mean_period"].as_f64().unwrap();
    let expected = 2.0 * std::f64::consts::PI * 0.05;
    assert!((period - expected).abs() < 0.02 * expected, "{period}");

    let table = ok(&["moments", "--format", "json", "--steps", "11"]);
    let v: serde_json::Value = serde_json::from_str(&table).unwrap();
    assert_eq!(v["rows"][0]["var_x"], 0.05);
    assert_eq!(v["rows"].as_array().unwrap().len(), 11);
}

#[test]
fn wigner_files() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "wigner",
        "--taus",
        "0,0.3",
        "--nx",
        "121",
        "--ny",
        "121",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    for tau in ["0", "0.3"] {
        let text = fs::read_to_string(dir.path().join(format!("wigner_tau_{tau}.csv"))).unwrap();
        let mut lines = text.lines();
        let header: Vec<f64> = lines
            .next()
            .unwrap()
            .trim_start_matches("# ")
            .split(',')
            .map(|v| v.parse().unwrap())
            .collect();
        let (nx, ny) = (header[4] as usize, header[5] as usize);
        let values: Vec<f64> = lines
            .flat_map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect::<Vec<_>>())
            .collect();
        assert_eq!(values.len(), nx * ny);
        let area = (header[1] - header[0]) / nx as f64 * (header[3] - header[2]) / ny as f64;
        let total: f64 = values.iter().sum::<f64>() * area;
        assert!((total - 1.0).abs() < 1e-6, "τ={tau}: {total}");
    }

    ok(&[
        "wigner",
        "--taus",
        "0",
        "--format",
        "json",
        "--nx",
        "5",
        "--ny",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let grid = json(&dir.path().join("wigner_tau_0.json"));
    assert_eq!(grid["values"].as_array().unwrap().len(), 3);
    assert_eq!(grid["values"][0].as_array().unwrap().len(), 5);
}

#[test]
fn classification() {
    let v: serde_json::Value = serde_json::from_str(&ok(&["classify"])).unwrap();
    assert_eq!(v["is_lindblad_type"], false);
    assert!(!v["delta_plus_gamma_negative"].as_array().unwrap().is_empty());
    let v: serde_json::Value = serde_json::from_str(&ok(&["classify", "--g", "0"])).unwrap();
    assert_eq!(v["is_lindblad_type"], true);
}
