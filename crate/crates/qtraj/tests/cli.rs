use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const DARK_PAIR: &str = r#"{"model":"two_atom_eigen","omega_rabi":5,"delta_total":"antisymmetric","delta_diff":2,"v":10,"gamma12":1}"#;
const DRIVEN: &str = r#"{"model":"driven","omega_rabi":5}"#;

fn qtraj(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtraj")).current_dir(dir).args(args).env_remove("QTRAJ_THREADS").output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = qtraj(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn setup() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("dark_pair.json"), DARK_PAIR).unwrap();
    std::fs::write(dir.path().join("driven.json"), DRIVEN).unwrap();
    dir
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn simulate_writes_trajectories_and_manifest() {
    let d = setup();
    let p = d.path();
    ok(p, &["simulate", "--model", "driven.json", "--out", "sim", "--t-final", "2", "--n-traj", "2", "--samples", "20"]);
    let out = p.join("sim");
    for f in ["trajectory_0000.csv", "trajectory_0001.csv", "jumps_0000.csv", "photons_0000.txt", "ensemble.csv"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    assert_eq!(csv_rows(&out.join("trajectory_0000.csv")).len(), 21);
    let m = manifest(&out);
    assert_eq!(m["command"], "simulate");
    assert_eq!(m["config"]["t_final"], 2.0);
    assert!(m["units"].as_str().unwrap().contains("1/Gamma"));
    assert!(m["outputs"].as_array().unwrap().len() >= 5);
}

#[test]
fn ensemble_replays_from_manifest() {
    let d = setup();
    let p = d.path();
    let args = ["ensemble", "--model", "driven.json", "--t-final", "3", "--n-traj", "30", "--samples", "6", "--seed", "42"];
    ok(p, &[&args[..], &["--out", "a"]].concat());
    ok(p, &["ensemble", "--config", "a/manifest.json", "--out", "b"]);
    let a = std::fs::read_to_string(p.join("a/ensemble.csv")).unwrap();
    let b = std::fs::read_to_string(p.join("b/ensemble.csv")).unwrap();
    assert_eq!(a, b);
    ok(p, &["ensemble", "--config", "a/manifest.json", "--out", "c", "--threads", "3"]);
    assert_eq!(a, std::fs::read_to_string(p.join("c/ensemble.csv")).unwrap());
    ok(p, &["ensemble", "--config", "a/manifest.json", "--out", "e", "--seed", "43"]);
    assert_ne!(a, std::fs::read_to_string(p.join("e/ensemble.csv")).unwrap());
}

#[test]
fn flags_override_config() {
    let d = setup();
    let p = d.path();
    std::fs::write(p.join("run.json"), r#"{"model":"driven.json","t_final":5,"n_traj":4,"seed":1}"#).unwrap();
    ok(p, &["ensemble", "--config", "run.json", "--t-final", "1", "--param", "omega_rabi=2", "--out", "o"]);
    let m = manifest(&p.join("o"));
    assert_eq!(m["config"]["t_final"], 1.0);
    assert_eq!(m["config"]["n_traj"], 4);
    assert_eq!(m["config"]["model"]["omega_rabi"], 2.0);
}

#[test]
fn steadyscan_finds_three_resonances() {
    let d = setup();
    let p = d.path();
    std::fs::write(
        p.join("pair.json"),
        r#"{"model":"two_atom_product","omega_rabi":6,"delta_diff":46.4,"v":19.3,"gamma12":0.18}"#,
    )
    .unwrap();
    ok(p, &["steadyscan", "--model", "pair.json", "--out", "s", "--delta-min", "-60", "--delta-max", "60"]);
    let rows = csv_rows(&p.join("s/steady_scan.csv"));
    assert_eq!(rows.len(), 241);
    let peaks: Vec<f64> = manifest(&p.join("s"))["derived"]["excited_manifold_peaks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(peaks.len(), 3, "{peaks:?}");
    for (got, want) in peaks.iter().zip([-30.2, 0.0, 30.2]) {
        assert!((got - want).abs() <= 0.5, "{peaks:?}");
    }
}

#[test]
fn g2_simulated_and_from_stream() {
    let d = setup();
    let p = d.path();
    ok(p, &["g2", "--model", "driven.json", "--t-final", "2000", "--out", "g", "--tau-max", "3"]);
    assert!(p.join("g/photons.txt").exists());
    assert!(p.join("g/g2_analytic.csv").exists());
    let rows = csv_rows(&p.join("g/g2.csv"));
    let g0: f64 = rows[0][1].parse().unwrap();
    assert!(g0 < 0.3, "g2(0) = {g0}");

    ok(p, &["g2", "--stream", "g/photons.txt", "--dtd", "0.05", "--tau-max", "1", "--out", "h"]);
    assert_eq!(csv_rows(&p.join("h/g2.csv")).len(), 21);
}

#[test]
fn darkstats_reports_analytic_statistics() {
    let d = setup();
    let p = d.path();
    ok(p, &["darkstats", "--model", "dark_pair.json", "--out", "d"]);
    let stats: Value = serde_json::from_str(&std::fs::read_to_string(p.join("d/period_stats.json")).unwrap()).unwrap();
    let t_d = stats["analytic"]["t_d"].as_f64().unwrap();
    assert!((t_d / 39384.0 - 1.0).abs() < 1e-3, "{stats}");
    assert!(stats["orthogonality_defect"].as_f64().unwrap() < 0.05);
    assert!(!p.join("d/photons.txt").exists());

    ok(p, &["darkstats", "--model", "dark_pair.json", "--out", "e", "--simulate", "--t-final", "3000"]);
    for f in ["photons.txt", "periods.csv", "intensity.csv"] {
        assert!(p.join("e").join(f).exists(), "missing {f}");
    }
}

#[test]
fn heatmap_writes_every_statistic() {
    let d = setup();
    let p = d.path();
    ok(p, &["heatmap", "--model", "dark_pair.json", "--out", "m", "--n-v", "3", "--n-delta", "3"]);
    let files: Vec<String> = std::fs::read_dir(p.join("m")).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert!(files.iter().any(|f| f == "heatmap_defect.csv"));
    assert!(files.iter().filter(|f| f.ends_with("_log10.csv")).count() >= 4, "{files:?}");
}

#[test]
fn bad_inputs_exit_with_config_code() {
    let d = setup();
    let p = d.path();
    std::fs::write(p.join("bad.json"), r#"{"model":"spin"}"#).unwrap();
    std::fs::write(p.join("typo.json"), r#"{"model":"driven","omega":1}"#).unwrap();
    for args in [
        &["simulate", "--model", "bad.json"][..],
        &["simulate", "--model", "typo.json"],
        &["simulate", "--model", "missing.json"],
        &["simulate"],
        &["simulate", "--model", "driven.json", "--solver", "euler"],
        &["simulate", "--model", "driven.json", "--initial", "x"],
        &["darkstats", "--model", "driven.json"],
        &["simulate", "--model", "driven.json", "--param", "v"],
    ] {
        let out = qtraj(p, args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
}
