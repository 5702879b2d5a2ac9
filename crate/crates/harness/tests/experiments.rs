//! Experiment drivers on small grids.

use ekch_core::Exec;
use ekch_harness::config::ExperimentConfig;
use ekch_harness::experiments::{self, RunContext};

const SMALL_SWEEP: &str = r#"
[grid]
n = 64

[kernel]
eta = 0.2

[time]
t_end = 0.02
sample_interval = 0.01

[ek]
epsilons = [0.04, 0.02]
"#;

fn ctx(dir: &std::path::Path, name: &str, exec: Exec) -> RunContext {
    let out = dir.join(name);
    std::fs::create_dir_all(&out).unwrap();
    RunContext { out, exec }
}

#[test]
fn serial_and_parallel_sweeps_write_identical_tables() {
    let cfg = ExperimentConfig::from_toml_str(SMALL_SWEEP).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let a = experiments::sweep_eps(&cfg, &ctx(dir.path(), "serial", Exec::Serial)).unwrap();
    let b = experiments::sweep_eps(&cfg, &ctx(dir.path(), "parallel", Exec::Parallel { threads: 2 })).unwrap();
    assert_eq!(a.rows, b.rows);
    for file in ["sweep.csv", "reference.csv", "series_eps_0.02.csv"] {
        let read = |d: &str| std::fs::read(dir.path().join(d).join(file)).unwrap();
        assert_eq!(read("serial"), read("parallel"), "{file}");
    }
}

#[test]
fn serial_and_parallel_pressure_checks_agree() {
    let cfg = ExperimentConfig::from_toml_str("[grid]\nn = 64\n[kernel]\neta = 0.2\n[checks]\nsamples = 2000\n").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let a = experiments::verify_potential(&cfg, &ctx(dir.path(), "s", Exec::Serial), 5).unwrap();
    let b = experiments::verify_potential(&cfg, &ctx(dir.path(), "p", Exec::Parallel { threads: 3 }), 5).unwrap();
    assert_eq!(a.rows, b.rows);
}

#[test]
fn single_epsilon_sweep_is_flagged_without_slopes() {
    let text = SMALL_SWEEP.replace("[0.04, 0.02]", "[0.04]");
    let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let r = experiments::sweep_eps(&cfg, &ctx(dir.path(), "one", Exec::Serial)).unwrap();
    assert_eq!(r.rows.len(), 1);
    assert!(r.slopes.error.is_none() && r.slopes.theta0.is_none());
    assert!(r.flags.iter().any(|f| f.contains("at least 3")));
}

#[test]
fn sweep_rows_track_the_reference() {
    let cfg = ExperimentConfig::from_toml_str(SMALL_SWEEP).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let r = experiments::sweep_eps(&cfg, &ctx(dir.path(), "rows", Exec::Serial)).unwrap();
    assert_eq!(r.concentration, 0.0);
    for row in &r.rows {
        assert!(row.min_theta >= -1e-10 && row.control_violations == 0, "{row:?}");
        assert!(row.sup_error > 0.0, "{row:?}");
    }
    assert!(r.rows[1].sup_error < r.rows[0].sup_error, "{:?}", r.rows);
    assert_eq!(std::fs::read_to_string(dir.path().join("rows/sweep.csv")).unwrap().lines().count(), 3);
}
