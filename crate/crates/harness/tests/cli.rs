//! End-to-end runs of the `ekch` binary.

use std::path::Path;
use std::process::{Command, Output};

fn ekch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ekch")).args(args).output().expect("spawn ekch")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn invalid_config_exits_2_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[kernel]\neta = -0.1\n");
    let out = ekch(&["run-nlch", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kernel.eta"));
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[kernel]\neta = 0.1\nwidth = 3\n");
    let out = ekch(&["verify-kernel", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("width"));
}

#[test]
fn verify_kernel_prints_rows_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "k.toml", "[grid]\nn = 64\n[kernel]\netas = [0.2, 0.1]\n[checks]\noffdiag_n = 64\n");
    let out_dir = dir.path().join("out");
    let out = ekch(&["verify-kernel", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 2);
    assert!(out_dir.join("kernel.csv").exists() && out_dir.join("kernel.json").exists());
}

#[test]
fn constant_state_is_stationary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "[grid]\nn = 64\n[kernel]\neta = 0.1\n[initial]\npreset = \"constant\"\n[time]\nt_end = 0.02\nsample_interval = 0.01\n",
    );
    for cmd in ["run-nlch", "run-lch"] {
        let out_dir = dir.path().join(cmd);
        let out = ekch(&[cmd, "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
        let change = doc["result"]["energy_change"].as_f64().unwrap();
        assert!(change.abs() < 1e-14, "{cmd}: energy change {change}");
    }
}
