use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn vortex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vortex")).args(args).output().expect("binary runs")
}

fn path_arg(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

fn write_config(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn read(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn error_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().rev().find(|l| l.starts_with('{')).expect("json error on stderr");
    serde_json::from_str(line).unwrap()
}

fn straight_pair(n_nodes: usize, t_end: f64, snapshots: &[f64]) -> Value {
    json!({
        "run": {
            "params": { "epsilon": 0.05, "r_c": 0.025, "b": 0.11, "delta": 0.0 },
            "n_nodes": n_nodes,
            "t_end": t_end,
            "snapshot_times": snapshots,
            "sample_interval": 0.01
        }
    })
}

#[test]
fn missing_config_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let out = vortex(&["pair", "--config", path_arg(&tmp.path().join("nope.json")), "--out", path_arg(&out_dir)]);
    assert_eq!(out.status.code(), Some(2));
    let err = error_json(&out);
    assert_eq!(err["exit_code"], 2);
    assert_eq!(err["error"], "usage");
}

#[test]
fn bad_flags_exit_with_usage_code() {
    assert_eq!(vortex(&["pair", "--workers", "many"]).status.code(), Some(2));
    assert_eq!(vortex(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(vortex(&["--help"]).status.code(), Some(0));
}

#[test]
fn invalid_eye_angle_reports_radicand() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "eye.json", &json!({ "run": { "b": 0.1, "theta": 1.5, "n_nodes": 64 } }));
    let out = vortex(&["eye", "--config", path_arg(&cfg), "--out", path_arg(&tmp.path().join("eye"))]);
    assert_eq!(out.status.code(), Some(2));
    let msg = error_json(&out)["message"].as_str().unwrap().to_string();
    assert!(msg.contains("(1+cos θ)/(1-cos θ) - 1/b² >= 0"), "{msg}");
}

#[test]
fn seed_without_noise_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "pair.json", &straight_pair(16, 0.001, &[]));
    let out = vortex(&["pair", "--config", path_arg(&cfg), "--seed", "7", "--out", path_arg(&tmp.path().join("p"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn crow_report_values() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("crow");
    assert!(vortex(&["crow", "--out", path_arg(&dir)]).status.success());
    let rep = read(&dir.join("report.json"));
    assert!((rep["lambda_min"].as_f64().unwrap() - 3.33792).abs() < 1e-5);
    assert!((rep["translation_velocity"].as_f64().unwrap() + 0.43222).abs() < 1e-5);
    let table = fs::read_to_string(dir.join("crow.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("omega,wavelength,growth_rate,frequency"));
    assert_eq!(table.lines().count(), 402);
    assert_eq!(read(&dir.join("config.json"))["command"], "crow");
}

#[test]
fn rndf_outputs_and_analysis() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("rndf");
    let cfg = write_config(tmp.path(), "rndf.json", &json!({ "terms": 100, "samples": 1024 }));
    assert!(vortex(&["rndf", "--config", path_arg(&cfg), "--out", path_arg(&dir)]).status.success());
    let rep = read(&dir.join("report.json"));
    let zero = rep["at_zero"]["value"][0].as_f64().unwrap();
    let bound = rep["at_zero"]["tail_bound"].as_f64().unwrap();
    assert!((zero - std::f64::consts::PI.powi(2) / 6.0).abs() <= bound);

    assert!(vortex(&["analyze", path_arg(&dir), "--what", "fourier,probe"]).status.success());
    let analysis = read(&dir.join("analysis.json"));
    assert!(analysis["results"]["fourier"]["overall"].as_f64().unwrap() > 5.0);
    assert!(analysis["results"]["probe"].as_array().unwrap().len() >= 5);

    let out = vortex(&["analyze", path_arg(&dir), "--what", "detector"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analyze_schema_mismatch_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("pair");
    let cfg = write_config(tmp.path(), "pair.json", &straight_pair(16, 0.002, &[]));
    assert!(vortex(&["pair", "--config", path_arg(&cfg), "--out", path_arg(&dir)]).status.success());
    fs::write(dir.join("timeseries.csv"), "t,F1\n0.0,zero\n").unwrap();
    let out = vortex(&["analyze", path_arg(&dir), "--what", "detector"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_json(&out)["error"], "data");

    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    assert_eq!(vortex(&["analyze", path_arg(&empty)]).status.code(), Some(3));
}

#[test]
fn straight_pair_translates_at_predicted_speed() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("pair");
    let cfg = write_config(tmp.path(), "pair.json", &straight_pair(32, 0.2, &[0.05, 0.1, 0.15]));
    let run = vortex(&["pair", "--config", path_arg(&cfg), "--out", path_arg(&dir)]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(dir.join("timeseries.csv").is_file());
    assert!(dir.join("report.json").is_file());
    assert!(vortex(&["analyze", path_arg(&dir), "--what", "velocity,crow"]).status.success());
    let res = &read(&dir.join("analysis.json"))["results"];
    assert!(res["velocity"]["relative_error"].as_f64().unwrap() < 1e-6);
    assert!(res["velocity"]["snapshots"].as_u64().unwrap() >= 4);
    assert!((res["crow"]["lambda_min"].as_f64().unwrap() - 3.33792).abs() < 1e-5);
}

#[test]
fn rerun_from_stored_record_is_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let mut value = straight_pair(24, 0.01, &[0.005]);
    value["run"]["params"]["delta"] = json!(0.005);
    value["run"]["noise"] = json!({ "amplitude": 1e-4, "seed": 3, "max_mode": 4 });
    let cfg = write_config(tmp.path(), "pair.json", &value);
    let first = tmp.path().join("a");
    assert!(vortex(&["pair", "--config", path_arg(&cfg), "--out", path_arg(&first)]).status.success());
    let record = read(&first.join("config.json"));
    let stored = write_config(tmp.path(), "stored.json", &record["config"]);
    let second = tmp.path().join("b");
    assert!(vortex(&["pair", "--config", path_arg(&stored), "--out", path_arg(&second)]).status.success());
    for name in ["timeseries.csv", "snapshots/snapshot_t0.010000.csv", "snapshots/snapshot_t0.005000.csv"] {
        assert_eq!(fs::read(first.join(name)).unwrap(), fs::read(second.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn sweep_is_independent_of_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let mut base = straight_pair(24, 0.004, &[]);
    base["run"]["params"]["delta"] = json!(0.005);
    let cfg = write_config(
        tmp.path(),
        "sweep.json",
        &json!({ "base": base, "epsilons": [0.03, 0.05], "r_cs": [5e-3, 2.5e-3] }),
    );
    let (serial, parallel) = (tmp.path().join("serial"), tmp.path().join("parallel"));
    for (dir, workers) in [(&serial, "1"), (&parallel, "4")] {
        let out = vortex(&["sweep", "--config", path_arg(&cfg), "--workers", workers, "--out", path_arg(dir)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(fs::read(serial.join("sweep.csv")).unwrap(), fs::read(parallel.join("sweep.csv")).unwrap());
    let (a, b) = (read(&serial.join("sweep.json")), read(&parallel.join("sweep.json")));
    assert_eq!(a["distances"], b["distances"]);
    assert_eq!(a["members"].as_array().unwrap().len(), 4);
    assert_eq!(vortex(&["sweep", "--config", path_arg(&cfg), "--workers", "0"]).status.code(), Some(2));
}
