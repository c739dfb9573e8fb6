use std::path::Path;
use std::process::{Command, Output};

use semiclassical::harness::ExperimentConfig;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semiclassical")).args(args).output().unwrap()
}

fn coarse_config(dir: &Path) -> String {
    let mut cfg = ExperimentConfig::default();
    cfg.grid.points = 32;
    let path = dir.join("coarse.toml");
    std::fs::write(&path, cfg.to_toml()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn template_is_a_valid_config() {
    let out = bin(&["emit-config-template"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let cfg = ExperimentConfig::from_toml(&text).unwrap();
    assert_eq!(cfg, ExperimentConfig::default());

    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["emit-config-template", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let written = std::fs::read_to_string(dir.path().join("config.toml")).unwrap();
    assert_eq!(written, text);
}

#[test]
fn bad_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    assert_eq!(bin(&["tdhf", "--h", "0.1,0.2", "--out", o]).status.code(), Some(2));
    assert_eq!(bin(&["tdhf", "--h", "-0.1", "--out", o]).status.code(), Some(2));
    let missing = dir.path().join("missing.toml");
    assert_eq!(bin(&["tdhf", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
    let junk = dir.path().join("junk.toml");
    std::fs::write(&junk, "[grid]\nhalf_width = 8.0\npoints = 512\nbogus = 1\n").unwrap();
    assert_eq!(bin(&["vlasov", "--config", junk.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(bin(&["calculus", "--suite", "nonsense", "--out", o]).status.code(), Some(2));
}

#[test]
fn coarse_grid_fails_the_calculus_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = coarse_config(dir.path());
    let out_dir = dir.path().join("out");
    let out = bin(&["calculus", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.contains("FAIL")));
    let csv = std::fs::read_to_string(out_dir.join("calculus.csv")).unwrap();
    assert!(csv.starts_with("experiment,h,t,metric,value\n"));
}

#[test]
fn vlasov_run_writes_csv_and_rasters() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.output.rasters = true;
    cfg.run.t_end = 0.5;
    let path = dir.path().join("cfg.toml");
    std::fs::write(&path, cfg.to_toml()).unwrap();
    let out_dir = dir.path().join("out");
    let out = bin(&["vlasov", "--config", path.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let (field, h) = semiclassical::harness::raster::read(&out_dir.join("vlasov_final.msf1")).unwrap();
    assert!(h.is_nan());
    assert_eq!(field.grid().shape(), (512, 512));
    let csv = std::fs::read_to_string(out_dir.join("vlasov.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("vlasov,nan,0.5,mass_drift,")));
}
