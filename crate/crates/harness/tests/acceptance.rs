//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Tolerances are pinned here rather than read from the
//! config files, so editing a config cannot loosen a criterion.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{ensure, Result};
use ekch_core::{spectral, Exec, ScalarField, TorusGrid};
use ekch_harness::config::{AuditConfig, ExperimentConfig};
use ekch_harness::experiments::{self, RunContext, SweepResult, System};
use ekch_harness::report::{audit_lines, Audit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pinned() -> AuditConfig {
    AuditConfig {
        mass_tol: 1e-10,
        theta_floor: -1e-10,
        envelope_slack: 1e-8,
        budget_ratio: [1.7, 2.3],
        consistency_slope: [1.8, 2.2],
        theta0_slope: [1.9, 2.1],
        min_error_order: 1.0,
        moment_tol: 1e-14,
        offdiag_tol: 1e-12,
        identical_tol: 1e-10,
    }
}

fn config(name: &str) -> Result<ExperimentConfig> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.toml"));
    let mut cfg = ExperimentConfig::load(&path)?;
    cfg.audits = pinned();
    Ok(cfg)
}

struct Suite {
    root: tempfile::TempDir,
    verdicts: Vec<bool>,
    sweep: Option<SweepResult>,
}

impl Suite {
    fn ctx(&self, dir: &str) -> Result<RunContext> {
        let out = self.root.path().join(dir);
        std::fs::create_dir_all(&out)?;
        Ok(RunContext { out, exec: Exec::Serial })
    }

    /// Runs one criterion and prints its line; audits are printed only on failure.
    fn check(&mut self, id: usize, title: &str, budget_secs: Option<f64>, f: impl FnOnce(&mut Self) -> Result<Vec<Audit>>) {
        let t = Instant::now();
        let outcome = f(self);
        let secs = t.elapsed().as_secs_f64();
        let in_time = budget_secs.map_or(true, |b| secs < b);
        let limit = budget_secs.map_or(String::new(), |b| format!(" (limit {b} s)"));
        let (ok, detail) = match outcome {
            Ok(audits) => {
                let ok = !audits.is_empty() && audits.iter().all(|a| a.passed);
                (ok, if ok { String::new() } else { audit_lines(&audits) })
            }
            Err(e) => (false, format!("error: {e:#}\n")),
        };
        let pass = ok && in_time;
        println!("{} criterion {id:>2}: {title} [{secs:.1} s{limit}]", if pass { "PASS" } else { "FAIL" });
        if !in_time {
            println!("    over the runtime limit");
        }
        print!("{}", detail.lines().map(|l| format!("    {l}\n")).collect::<String>());
        self.verdicts.push(pass);
    }

    fn sweep_audits(&self, names: &[&str]) -> Result<Vec<Audit>> {
        let Some(r) = &self.sweep else { anyhow::bail!("criterion 7 sweep did not complete") };
        let picked: Vec<Audit> = r.audits.iter().filter(|a| names.iter().any(|n| a.name.starts_with(n))).cloned().collect();
        ensure!(picked.len() >= names.len(), "missing sweep audits among {names:?}");
        Ok(picked)
    }
}

/// `dx^d sum_j g(j) f(i - j)` on a 1D or 2D grid.
fn direct_convolution(f: &ScalarField, g: &ScalarField) -> Vec<f64> {
    let grid = f.grid();
    (0..grid.len())
        .map(|i| {
            let [i0, i1] = grid.multi_index(i);
            let s: f64 = (0..grid.len())
                .map(|j| {
                    let [j0, j1] = grid.multi_index(j);
                    g.values()[j] * f.values()[grid.wrap_index(i0 as i64 - j0 as i64, i1 as i64 - j1 as i64)]
                })
                .sum();
            s * grid.cell_volume()
        })
        .collect()
}

fn convolution_oracle() -> Result<Vec<Audit>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let shapes = [(1usize, 8usize), (1, 16), (1, 32), (2, 8), (2, 16), (2, 32)];
    let mut worst = 0.0f64;
    for k in 0..50 {
        let (dim, n) = shapes[k % shapes.len()];
        let grid = TorusGrid::unit(dim, n)?;
        let mut random = || ScalarField::new(grid, (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let (f, g) = (random()?, random()?);
        let fast = spectral::convolve(&f, &g)?;
        let slow = direct_convolution(&f, &g);
        let scale = slow.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = fast.values().iter().zip(&slow).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
        worst = worst.max(err);
    }
    Ok(vec![Audit::at_most("worst relative deviation over 50 fields", worst, 1e-12)])
}

fn csv_files(dir: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "csv") {
            out.insert(PathBuf::from(path.file_name().unwrap()), std::fs::read(&path)?);
        }
    }
    Ok(out)
}

fn main() -> ExitCode {
    let mut s = Suite { root: tempfile::tempdir().expect("temporary directory"), verdicts: Vec::new(), sweep: None };

    s.check(1, "kernel certification", Some(5.0), |s| Ok(experiments::verify_kernel(&config("kernel")?, &s.ctx("kernel")?)?.audits));
    s.check(2, "operator consistency slope", Some(10.0), |s| {
        Ok(experiments::consistency(&config("consistency")?, &s.ctx("consistency")?)?.audits)
    });
    s.check(3, "convolution oracle equivalence", Some(10.0), |_| convolution_oracle());
    s.check(4, "Poincare certification", Some(10.0), |s| {
        let cfg = config("poincare")?;
        Ok(experiments::poincare(&cfg, &s.ctx("poincare")?, cfg.seed)?.audits)
    });
    s.check(5, "mass conservation of all three solvers", Some(120.0), |s| {
        let cfg = config("conservation")?;
        let mut audits = Vec::new();
        for system in [System::Ek, System::Nlch, System::Lch] {
            let r = experiments::run_single(system, &cfg, &s.ctx(&format!("conservation-{}", system.name()))?)?;
            audits.extend(r.audits.into_iter().map(|a| Audit { name: format!("{}: {}", system.name(), a.name), ..a }));
        }
        Ok(audits)
    });
    s.check(6, "dissipation budget ladder", Some(180.0), |s| {
        let r = experiments::run_single(System::Ek, &config("budget")?, &s.ctx("budget")?)?;
        ensure!(r.budget_ladder.len() == 3, "expected a 3-level ladder, got {}", r.budget_ladder.len());
        Ok(r.audits)
    });
    s.check(7, "relaxation error decreasing with order >= 1", Some(480.0), |s| {
        let r = experiments::sweep_eps(&config("sweep_eps")?, &s.ctx("sweep")?)?;
        s.sweep = Some(r);
        s.sweep_audits(&["mass drift", "error strictly decreasing", "error order in eps"])
    });
    s.check(8, "relative entropy structure", None, |s| s.sweep_audits(&["min theta", "theta(0) slope", "L2 control violations"]));
    s.check(9, "maximum principle envelope", Some(60.0), |s| {
        let r = experiments::run_single(System::Nlch, &config("envelope")?, &s.ctx("envelope")?)?;
        ensure!(r.envelope_violations.is_some(), "envelope check did not run");
        Ok(r.audits)
    });
    s.check(10, "L1 contraction", Some(60.0), |s| {
        let r = experiments::run_single(System::Nlch, &config("contraction")?, &s.ctx("contraction")?)?;
        ensure!(r.contraction_rate.is_some() && r.identical_distance.is_some(), "contraction check did not run");
        Ok(r.audits)
    });
    s.check(11, "nonlocal-to-local distance decreasing in eta", Some(240.0), |s| {
        Ok(experiments::sweep_joint(&config("joint")?, &s.ctx("joint")?)?.audits)
    });
    s.check(12, "Young-measure diagnostics", None, |s| {
        s.sweep_audits(&["w2 integral strictly decreasing", "kinetic norm strictly decreasing", "concentration"])
    });
    s.check(13, "pressure bounds and negative control", Some(30.0), |s| {
        let cfg = config("potentials")?;
        ensure!(cfg.checks.samples >= 100_000, "too few samples");
        Ok(experiments::verify_potential(&cfg, &s.ctx("potentials")?, cfg.seed)?.audits)
    });
    s.check(14, "byte-identical rerun of criterion 7", None, |s| {
        let first = csv_files(&s.root.path().join("sweep"))?;
        experiments::sweep_eps(&config("sweep_eps")?, &s.ctx("sweep-rerun")?)?;
        let second = csv_files(&s.root.path().join("sweep-rerun"))?;
        ensure!(!first.is_empty(), "criterion 7 wrote no CSV files");
        let differing: Vec<_> = first.keys().filter(|k| first.get(*k) != second.get(*k)).collect();
        Ok(vec![Audit::holds(
            format!("{} CSV files compared", first.len()),
            differing.is_empty() && first.len() == second.len(),
            format!("identical bytes; differing: {differing:?}"),
        )])
    });

    let failed = s.verdicts.iter().filter(|v| !**v).count();
    println!("{} of {} criteria passed", s.verdicts.len() - failed, s.verdicts.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
