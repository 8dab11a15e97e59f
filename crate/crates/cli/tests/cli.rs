//! End-to-end runs of the `apdg` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn apdg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_apdg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("apdg-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("case.cfg");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const SHORT_RUN: &str = "\
kind = prescribed_field
name = short
n_cells = 8
degree = 2
n_modes = 7
epsilon = 0.5
dt = 1e-5
t_end = 1e-3
boundary = inflow_maxwellian
field = bump
initial = maxwellian
limiter = on
series_every = 10
snapshots = 1e-3
";

#[test]
fn check_passes_and_writes_csv() {
    let dir = scratch("check");
    let out = apdg(&["check", "--out", dir.to_str().unwrap(), "--seed", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("PASS")));
    assert!(!stdout.contains("FAIL"));
    let csv: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "csv"))
        .collect();
    assert_eq!(csv.len(), 1);
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn short_run_writes_series_and_snapshot() {
    let dir = scratch("run");
    let cfg = write_config(&dir, SHORT_RUN);
    let out_dir = dir.join("out");
    let out = apdg(&["run", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("steps 100"), "{stdout}");
    let written: Vec<_> = stdout.lines().filter_map(|l| l.strip_prefix("wrote ")).collect();
    assert!(written.len() >= 2, "{stdout}");
    for f in written {
        let text = fs::read_to_string(f).unwrap();
        assert!(text.lines().count() >= 2, "{f} is empty");
    }
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn malformed_config_exits_with_status_two() {
    let dir = scratch("bad");
    let cfg = write_config(&dir, "kind = prescribed_field\nn_cells = eight\n");
    let out = apdg(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error kind=config"), "{stderr}");
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn kind_mismatch_is_rejected() {
    let dir = scratch("mismatch");
    let cfg = write_config(&dir, SHORT_RUN);
    let out = apdg(&["accuracy", &cfg, "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error kind=experiment"), "{stderr}");
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn missing_config_reports_io_error() {
    let out = apdg(&["run", "/nonexistent/apdg.cfg"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error kind=io"));
}
