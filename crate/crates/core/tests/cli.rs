use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use latsteer::cli::RunManifest;
use latsteer::presets::PRESETS;

fn latsteer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_latsteer"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

const SHORT_CIRCLE: &str = r#"
[vehicle]
wheelbase = 2.57
sensor_offset = 2.0
max_steer = "30 deg"
speed = 20.0

[control]
k1 = -0.8
k2 = 0.02
max_lateral_accel = 4.0
variant = "full"

[path]
kind = "circular"
radius = 200.0

[initial]
s = 0.0
e = -10.0
theta = "0 deg"

[sim]
t_end = 5.0
dt = 0.01
frame = "both"
"#;

#[test]
fn simulate_is_byte_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, SHORT_CIRCLE).unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = latsteer(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
            "--seedless",
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    for f in [
        "trajectory.csv",
        "trajectory_earth.csv",
        "metrics.txt",
        "metrics.json",
        "cross_check.json",
    ] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f} differs"
        );
    }
    let m = manifest(&a);
    assert_eq!(m.exit_status, 0);
    assert!(m.seedless);
    assert_eq!(m.inputs.len(), 1);
    assert_eq!(m.inputs[0].sha256.len(), 64);
}

#[test]
fn config_echo_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, SHORT_CIRCLE).unwrap();
    let first = tmp.path().join("first");
    assert!(latsteer(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        first.to_str().unwrap()
    ])
    .status
    .success());
    let echo = tmp.path().join("echo.toml");
    fs::write(&echo, manifest(&first).config_echo).unwrap();
    let second = tmp.path().join("second");
    let out = latsteer(&[
        "simulate",
        "--config",
        echo.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        fs::read(first.join("trajectory.csv")).unwrap(),
        fs::read(second.join("trajectory.csv")).unwrap()
    );
}

#[test]
fn trajectory_header_and_dt_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, SHORT_CIRCLE).unwrap();
    let out_dir = tmp.path().join("o");
    let out = latsteer(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--dt",
        "0.05",
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(header, latsteer::sim::TRAJECTORY_COLUMNS.join(","));
    // 5 s at 0.05 s plus the initial row
    assert_eq!(text.lines().count(), 1 + 101);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("o");
    let o = out_dir.to_str().unwrap();

    let missing = latsteer(&["simulate", "--config", "/nonexistent/x.toml", "--out", o]);
    assert_eq!(missing.status.code(), Some(4));

    let bad = tmp.path().join("bad.toml");
    fs::write(
        &bad,
        SHORT_CIRCLE.replace("max_steer = \"30 deg\"", "max_steer = \"30 furlongs\""),
    )
    .unwrap();
    let cfg_err = latsteer(&["simulate", "--config", bad.to_str().unwrap(), "--out", o]);
    assert_eq!(cfg_err.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&cfg_err.stderr).contains("max_steer"));
    let m = manifest(&out_dir);
    assert_eq!(m.exit_status, 2);
    assert!(m.error.is_some());

    let tight = tmp.path().join("tight.toml");
    fs::write(
        &tight,
        SHORT_CIRCLE.replace("radius = 200.0", "radius = 1.5"),
    )
    .unwrap();
    let domain = latsteer(&["simulate", "--config", tight.to_str().unwrap(), "--out", o]);
    assert_eq!(domain.status.code(), Some(3));

    let unknown = latsteer(&["simulate", "--config", "preset:nope", "--out", o]);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn compare_writes_per_variant_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(
        &cfg,
        SHORT_CIRCLE.to_string() + "\n[compare]\nvariants = [\"full\", \"naive\", \"linear\"]\n",
    )
    .unwrap();
    let out_dir = tmp.path().join("o");
    let out = latsteer(&[
        "compare",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = fs::read_to_string(out_dir.join("comparison.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    assert!(out_dir.join("deltas.csv").exists());
}

#[test]
fn analysis_commands_run_on_presets() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("o");
    let o = out_dir.to_str().unwrap();
    assert!(latsteer(&[
        "stability-map",
        "--config",
        "preset:gain_plane_d2",
        "--out",
        o
    ])
    .status
    .success());
    let map = fs::read_to_string(out_dir.join("stability_map.csv")).unwrap();
    assert_eq!(
        map.lines().next().unwrap(),
        "k1,k2,kappa0,stable,marginal,M_max,omega_m"
    );
    assert!(latsteer(&[
        "freq-response",
        "--config",
        "preset:gain_plane_d2",
        "--out",
        o
    ])
    .status
    .success());
    assert!(out_dir.join("peaks.csv").exists());
}

#[test]
fn every_simulation_preset_runs_quickly() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, text) in PRESETS {
        if text.contains("[analysis]") {
            continue;
        }
        let out_dir = tmp.path().join(name);
        let start = Instant::now();
        let out = latsteer(&[
            "simulate",
            "--config",
            &format!("preset:{name}"),
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        let elapsed = start.elapsed().as_secs_f64();
        assert!(
            out.status.success(),
            "{name}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(elapsed < 10.0, "{name} took {elapsed:.1} s");
    }
}
