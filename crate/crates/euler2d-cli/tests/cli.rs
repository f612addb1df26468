//! End-to-end tests of the `euler2d` binary: exit codes, file outputs, and
//! the reproducibility contract.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_euler2d")
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("euler2d-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

#[test]
fn constant_boundary_density_is_one() {
    let dir = tempdir("density-const");
    let config = write_config(
        &dir,
        "density.json",
        r#"{"truncation": 2,
            "coords": [{"k1":1,"k2":0,"component":"re"},
                       {"k1":0,"k2":1,"component":"re"}],
            "domain": {"ball": {"radius": 1.0}},
            "boundary": {"constant": 1.0},
            "epsilon": 0.5, "z0": [0.2, -0.1],
            "paths": 200, "dt": 1e-3, "seed": 4}"#,
    );
    let out = run(&[
        "estimate-density",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("value=1.0"), "summary: {stdout}");
    let csv = std::fs::read_to_string(dir.join("density.csv")).unwrap();
    assert!(csv.starts_with("epsilon,z0,z1,value,stderr,paths,mean_exit_time,flagged"));
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn grid_size_below_minimum_exits_with_config_error() {
    let dir = tempdir("grid-small");
    let config = write_config(
        &dir,
        "grid.json",
        r#"{"n": 4, "steps": 10, "epsilon": 0.0, "initial_mode": {"k1":1,"k2":0}}"#,
    );
    let out = run(&["simulate-grid", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("n must be >= 8"), "{stderr}");
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempdir("unknown-key");
    let config = write_config(
        &dir,
        "spectral.json",
        r#"{"truncation": 2, "steps": 5, "viscocity": 0.1,
            "initial": {"sample": "enstrophy"}}"#,
    );
    let out = run(&["simulate-spectral", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("viscocity"));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let out = run(&["simulate-spectral", "--config", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn blow_up_exits_with_numerical_error() {
    let dir = tempdir("blowup");
    let config = write_config(
        &dir,
        "spectral.json",
        r#"{"truncation": 4, "steps": 2000, "dt": 10.0,
            "scheme": "euler_maruyama", "epsilon": 5.0,
            "noise_profile": "uniform",
            "initial": {"sample": "enstrophy"}, "seed": 3}"#,
    );
    let out = run(&[
        "simulate-spectral",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("blew up"));
}

#[test]
fn spectral_run_writes_series_and_final_state() {
    let dir = tempdir("spectral-run");
    let config = write_config(
        &dir,
        "spectral.json",
        r#"{"truncation": 3, "steps": 200, "dt": 1e-3, "record_every": 50,
            "initial": {"single_mode": {"k1":1,"k2":0,"re":1.0,"im":0.0}},
            "seed": 7}"#,
    );
    let out = run(&[
        "simulate-spectral",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let series = std::fs::read_to_string(dir.join("series.csv")).unwrap();
    assert!(series.starts_with("t,energy,enstrophy\n"));
    // records at 0, 50, 100, 150, 200
    assert_eq!(series.lines().count(), 6);
    let state = std::fs::read_to_string(dir.join("final_state.csv")).unwrap();
    assert!(state.starts_with("k1,k2,re,im\n"));
    // stationary single mode: energy constant to double precision
    let rows: Vec<&str> = series.lines().skip(1).collect();
    let first: f64 = rows[0].split(',').nth(1).unwrap().parse().unwrap();
    let last: f64 = rows[rows.len() - 1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((first - last).abs() < 1e-12);
}

#[test]
fn reruns_are_byte_identical_and_worker_independent() {
    let dir = tempdir("determinism");
    let config = write_config(
        &dir,
        "grid.json",
        r#"{"n": 16, "steps": 40, "dt": 1e-3, "epsilon": 1.0,
            "snapshot_every": 20, "initial_mode": {"k1":2,"k2":2}, "seed": 11}"#,
    );
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    for (out, workers) in [(&out_a, "2"), (&out_b, "1")] {
        let status = Command::new(bin())
            .args([
                "simulate-grid",
                "--config",
                config.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])
            .env("APP_WORKERS", workers)
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    }
    for name in ["spectrum.csv", "snapshot_000000.f64", "snapshot_000040.f64"] {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between reruns");
    }
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempdir("seed-override");
    let config = write_config(
        &dir,
        "grid.json",
        r#"{"n": 16, "steps": 20, "dt": 1e-3, "epsilon": 1.0,
            "snapshot_every": 20, "initial_mode": {"k1":2,"k2":2}, "seed": 11}"#,
    );
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    for (out, seed) in [(&out_a, "11"), (&out_b, "12")] {
        let status = run(&[
            "simulate-grid",
            "--config",
            config.to_str().unwrap(),
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(status.status.success());
    }
    let a = std::fs::read(out_a.join("snapshot_000020.f64")).unwrap();
    let b = std::fs::read(out_b.join("snapshot_000020.f64")).unwrap();
    assert_ne!(a, b, "different seeds must produce different noise");
}

#[test]
fn check_invariance_reports_residuals() {
    let dir = tempdir("invariance");
    let config = write_config(
        &dir,
        "inv.json",
        r#"{"truncation": 4, "states": 20, "seed": 5}"#,
    );
    let out = run(&[
        "check-invariance",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("max |IM6 residual|"), "{stdout}");
    assert!(stdout.contains("max |SP4 residual|"), "{stdout}");
    let csv = std::fs::read_to_string(dir.join("residuals.csv")).unwrap();
    // header + 20 states x 2 measures
    assert_eq!(csv.lines().count(), 41);
}

#[test]
fn sweep_writes_table_and_differences() {
    let dir = tempdir("sweep");
    let config = write_config(
        &dir,
        "sweep.json",
        r#"{"truncation": 2,
            "coords": [{"k1":1,"k2":0,"component":"re"},
                       {"k1":0,"k2":1,"component":"re"}],
            "domain": {"box": {"half_widths": [1.0, 1.0]}},
            "boundary": {"constant": 2.0},
            "epsilons": [0.4, 0.2],
            "z_points": [[0.1, 0.1], [0.3, -0.2]],
            "paths": 50, "dt0": 1e-3, "seed": 6}"#,
    );
    let out = run(&[
        "sweep-epsilon",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("sweep.csv")).unwrap();
    assert!(csv.starts_with("epsilon,z0,z1,value,stderr,paths,mean_exit_time,flagged"));
    assert_eq!(csv.lines().count(), 5, "{csv}");
    // constant data: every value is exactly 2
    for line in csv.lines().skip(1) {
        let value: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert_eq!(value, 2.0);
    }
    let diffs = std::fs::read_to_string(dir.join("sweep_differences.csv")).unwrap();
    assert!(diffs.starts_with("z0,z1,eps_hi,eps_lo,abs_difference,combined_stderr"));
    assert_eq!(diffs.lines().count(), 3);
}

#[test]
fn condensation_reports_fractions() {
    let dir = tempdir("condensation");
    let config = write_config(
        &dir,
        "cond.json",
        r#"{"n": 16, "steps": 60, "dt": 1e-3, "epsilon": 1.0, "seeds": 2,
            "initial_mode": {"k1": 3, "k2": 3}, "snapshot_every": 30, "seed": 8}"#,
    );
    let out = run(&[
        "condensation",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("fractions.csv")).unwrap();
    assert!(csv.starts_with("run,seed,lowest_shell_fraction,total_energy,enstrophy"));
    assert_eq!(csv.lines().count(), 3);
    assert!(dir.join("final_run00.f64").exists());
    assert!(dir.join("final_run00.json").exists());
    assert!(dir.join("final_run01.f64").exists());
}
