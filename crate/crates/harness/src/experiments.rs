//! The experiments behind each CLI subcommand.
//!
//! Every experiment writes its artifacts under one output directory and
//! returns a serializable result carrying the audits that decide the exit
//! code. Sweep members are independent and may run concurrently; results are
//! always assembled in config order.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use ekch_core::ch::{self, CHState, LCHParams, NLCHParams};
use ekch_core::diagnostics::{self, RelativeEntropyInputs};
use ekch_core::ek::{self, EKParams, EKState};
use ekch_core::fit::{loglog_fit, strictly_decreasing, LineFit};
use ekch_core::mollifier::{apply_b_eta, estimate_poincare_constant, nonlocal_dirichlet_form};
use ekch_core::potential::{check_pressure_bounds, validate_assumption, FittedConstant, PressureParams};
use ekch_core::run::{RunOptions, TimeStep, Trajectory};
use ekch_core::{build_kernel, spectral, Exec, MollifierKernel, ScalarField, TorusGrid, VectorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::plot::{convergence_plot, Plot, Series};
use crate::presets;
use crate::report::{self, all_passed, num, opt, Audit, Document, Table, Timing};

/// Shared knobs of one invocation.
#[derive(Clone, Debug)]
pub struct RunContext {
    pub out: PathBuf,
    pub exec: Exec,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum System {
    Ek,
    Nlch,
    Lch,
}

impl System {
    pub fn name(self) -> &'static str {
        match self {
            System::Ek => "ek",
            System::Nlch => "nlch",
            System::Lch => "lch",
        }
    }
}

fn kernel_for(cfg: &ExperimentConfig, eta: f64, grid: &TorusGrid) -> Result<MollifierKernel> {
    build_kernel(cfg.profile(), eta, grid).with_context(|| format!("kernel.eta = {eta}"))
}

fn run_options(cfg: &ExperimentConfig, store_frames: bool) -> RunOptions {
    RunOptions {
        sample_interval: cfg.time.sample_interval,
        time_step: cfg.time.dt.map_or(TimeStep::Auto, TimeStep::Fixed),
        store_frames,
        ..RunOptions::default()
    }
}

fn ek_params(cfg: &ExperimentConfig, eps: f64, kernel: MollifierKernel) -> Result<EKParams> {
    let mut p = EKParams::new(eps, kernel, cfg.potential_spec())?;
    p.cfl = cfg.ek.cfl;
    p.delta_reg = cfg.ek.delta_reg;
    p.density_floor = cfg.ek.density_floor;
    p.reconstruction = cfg.reconstruction()?;
    p.validate()?;
    Ok(p)
}

fn nlch_params(cfg: &ExperimentConfig, kernel: MollifierKernel) -> Result<NLCHParams> {
    let mut p = NLCHParams::new(kernel, cfg.potential_spec(), cfg.nlch.mobility_delta, cfg.nlch.cfl_parabolic, cfg.integrator()?)?;
    p.rate_fraction = cfg.nlch.rate_fraction;
    Ok(p)
}

fn lch_params(cfg: &ExperimentConfig, default_diffusivity: f64) -> Result<LCHParams> {
    let mut p = LCHParams::new(cfg.lch.diffusivity.unwrap_or(default_diffusivity), cfg.potential_spec(), cfg.lch.dt_factor)?;
    p.stabilizer = cfg.lch.stabilizer;
    Ok(p)
}

fn ek_initial(cfg: &ExperimentConfig, rho: &ScalarField, params: &EKParams) -> Result<EKState> {
    let momentum = match cfg.initial.velocity.as_str() {
        "limit" => diagnostics::limit_velocity_u(rho, &params.kernel, &params.potential, params.epsilon)?.mul_scalar_field(rho)?,
        _ => VectorField::zeros(*rho.grid()),
    };
    Ok(EKState::new(rho.clone(), momentum, 0.0)?)
}

/// Writes every `stride`-th sample of a density as a snapshot.
struct SnapshotWriter {
    dir: PathBuf,
    stride: usize,
    count: usize,
}

impl SnapshotWriter {
    fn new(dir: &Path, stride: usize) -> Result<Self> {
        if stride > 0 {
            std::fs::create_dir_all(dir)?;
        }
        Ok(SnapshotWriter { dir: dir.to_path_buf(), stride, count: 0 })
    }

    fn observe(&mut self, rho: &ScalarField, time: f64) -> ekch_core::Result<()> {
        if self.stride > 0 && self.count % self.stride == 0 {
            let path = self.dir.join(format!("rho_{:05}.txt", self.count));
            rho.write_snapshot(std::fs::File::create(path)?, time)?;
        }
        self.count += 1;
        Ok(())
    }
}

/// Time-uniform trapezoidal integral of samples.
fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times.windows(2).zip(values.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum()
}

/// `(int_0^T ||a(t) - b(t)||_2^2 dt)^(1/2)` over aligned samples.
fn space_time_l2(times: &[f64], a: &[&ScalarField], b: &[&ScalarField]) -> Result<f64> {
    if a.len() != b.len() || a.len() != times.len() {
        bail!("trajectories are not aligned ({} vs {} samples)", a.len(), b.len());
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| Ok(x.sub(y)?.norm_l2().powi(2))).collect::<Result<_>>()?;
    Ok(trapezoid(times, &d).sqrt())
}

fn check_aligned(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| (x - y).abs() > 1e-12 * (1.0 + x.abs())) {
        bail!("sample times of the compared runs differ");
    }
    Ok(())
}

/// Slope fit, only from three or more positive points.
fn slope(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    if xs.len() < 3 {
        return None;
    }
    loglog_fit(xs, ys).ok()
}

// ---------------------------------------------------------------- run_single

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetLevel {
    pub dt: f64,
    pub max_residual: f64,
    pub max_abs_residual: f64,
    pub max_energy_drop: f64,
    /// `max_abs_residual` of the previous level divided by this one.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub system: System,
    pub steps: usize,
    pub samples: usize,
    pub initial_mass: f64,
    pub final_mass: f64,
    pub mass_drift: f64,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub energy_change: f64,
    pub min_density: f64,
    pub max_residual: f64,
    pub max_energy_drop: f64,
    pub budget_ladder: Vec<BudgetLevel>,
    pub envelope_violations: Option<usize>,
    pub same_sigma_upper_violations: Option<usize>,
    pub contraction_rate: Option<f64>,
    pub contraction_excursions: Option<usize>,
    pub identical_distance: Option<f64>,
    pub audits: Vec<Audit>,
}

impl RunSummary {
    pub fn passed(&self) -> bool {
        all_passed(&self.audits)
    }
}

fn energy_audits(series: &diagnostics::DiagnosticsSeries, audits: &mut Vec<Audit>, gradient_flow: bool) {
    if gradient_flow {
        let worst = series.energy.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        let worst = if worst.is_finite() { worst } else { 0.0 };
        audits.push(Audit::at_most("energy increase between samples", worst, 1e-12 * (1.0 + series.energy[0].abs())));
    }
}

pub fn run_single(system: System, cfg: &ExperimentConfig, ctx: &RunContext) -> Result<RunSummary> {
    let grid = cfg.torus();
    let eta = cfg.eta();
    let kernel = kernel_for(cfg, eta, &grid)?;
    let rho0 = presets::initial_density(&cfg.initial, &grid)?;
    let mut timing = Timing::new();
    let started = Instant::now();
    let mut snaps = SnapshotWriter::new(&ctx.out.join("snapshots"), cfg.time.snapshot_stride)?;
    let a = &cfg.audits;
    let mut audits = Vec::new();
    let mut budget_ladder = Vec::new();
    let (mut envelope_violations, mut same_sigma, mut rate, mut excursions, mut identical) = (None, None, None, None, None);

    let (series, steps, min_density) = match system {
        System::Ek => {
            let params = ek_params(cfg, cfg.epsilon()?, kernel)?;
            let init = ek_initial(cfg, &rho0, &params)?;
            let mut min_rho = f64::INFINITY;
            let traj = ek::run_ek(init.clone(), &params, cfg.time.t_end, &run_options(cfg, false), &mut |s| {
                min_rho = min_rho.min(s.rho.min());
                snaps.observe(&s.rho, s.time)
            })?;
            if cfg.ek.budget_refinements > 0 {
                let dt0 = cfg.time.dt.expect("validated ladder");
                let levels: Vec<f64> = (0..=cfg.ek.budget_refinements).map(|j| dt0 / 2f64.powi(j as i32)).collect();
                let tasks: Vec<_> = levels
                    .iter()
                    .map(|&dt| {
                        let (params, init) = (&params, init.clone());
                        move || -> Result<diagnostics::BudgetReport> {
                            let opts = RunOptions { time_step: TimeStep::Fixed(dt), ..run_options(cfg, false) };
                            let t = ek::run_ek(init, params, cfg.time.t_end, &opts, &mut |_| Ok(()))?;
                            Ok(diagnostics::dissipation_budget(&t.series)?)
                        }
                    })
                    .collect();
                let reports = ctx.exec.run(tasks).into_iter().collect::<Result<Vec<_>>>()?;
                let mut prev: Option<f64> = None;
                for (dt, b) in levels.iter().zip(&reports) {
                    let ratio = prev.map(|p| p / b.max_abs_residual);
                    budget_ladder.push(BudgetLevel {
                        dt: *dt,
                        max_residual: b.max_residual,
                        max_abs_residual: b.max_abs_residual,
                        max_energy_drop: b.max_energy_drop,
                        ratio,
                    });
                    audits.push(Audit::at_most(format!("budget residual at dt={dt:e} within its level"), b.max_residual, b.max_abs_residual));
                    if let Some(r) = ratio {
                        audits.push(Audit::within(format!("budget residual ratio at dt={dt:e}"), r, a.budget_ratio));
                    }
                    prev = Some(b.max_abs_residual);
                }
                let mut t = Table::new(&["dt", "max_residual", "max_abs_residual", "max_energy_drop", "ratio"]);
                for l in &budget_ladder {
                    t.push(vec![num(l.dt), num(l.max_residual), num(l.max_abs_residual), num(l.max_energy_drop), opt(l.ratio)]);
                }
                report::write_text(&ctx.out.join("budget.csv"), &t.to_csv())?;
            }
            (traj.series, traj.steps, min_rho)
        }
        System::Nlch => {
            let params = nlch_params(cfg, kernel)?;
            let mut min_rho = f64::INFINITY;
            let init = CHState::new(rho0.clone(), 0.0);
            let traj = ch::run_nlch(init.clone(), &params, cfg.time.t_end, &run_options(cfg, true), &mut |s| {
                min_rho = min_rho.min(s.rho.min());
                snaps.observe(&s.rho, s.time)
            })?;
            energy_audits(&traj.series, &mut audits, true);
            let sigma = cfg.nlch.sigma.unwrap_or_else(|| rho0.min());
            if sigma > 0.0 {
                let env = ch::max_principle_envelope(&traj.frames, &params.kernel, sigma, a.envelope_slack, traj.dt_max)?;
                let mut t = Table::new(&["t", "drift_integral", "min_rho", "max_rho", "lower", "upper"]);
                for i in 0..env.times.len() {
                    let acc = env.drift_integral[i];
                    t.push(vec![
                        num(env.times[i]),
                        num(acc),
                        num(env.min_rho[i]),
                        num(env.max_rho[i]),
                        num(sigma * (-acc).exp()),
                        num(env.sigma_upper * acc.exp()),
                    ]);
                }
                report::write_text(&ctx.out.join("envelope.csv"), &t.to_csv())?;
                audits.push(Audit::at_most("envelope violations", env.violations() as f64, 0.0));
                envelope_violations = Some(env.violations());
                same_sigma = Some(env.same_sigma_upper_violations);
            }
            if let Some(amp) = cfg.nlch.contraction_perturbation {
                let opts = run_options(cfg, true);
                let partner = CHState::new(presets::contraction_partner(&rho0, amp), 0.0);
                let partner = ch::run_nlch(partner, &params, cfg.time.t_end, &opts, &mut |_| Ok(()))?;
                let rep = ch::contraction_report(&traj.frames, &partner.frames, &params)?;
                // a second run from the same data must retrace the first
                let again = ch::run_nlch(init.clone(), &params, cfg.time.t_end, &opts, &mut |_| Ok(()))?;
                let same = ch::contraction_report(&traj.frames, &again.frames, &params)?;
                let worst_same = same.distances.iter().copied().fold(0.0, f64::max);
                let mut t = Table::new(&["t", "l1_distance", "bound"]);
                for (tm, d) in rep.times.iter().zip(&rep.distances) {
                    t.push(vec![num(*tm), num(*d), num((rep.bound_rate * tm).exp() * rep.distances[0])]);
                }
                report::write_text(&ctx.out.join("contraction.csv"), &t.to_csv())?;
                audits.push(Audit::holds("fitted contraction rate finite", rep.fitted_rate.is_finite(), "finite"));
                audits.push(Audit::at_most("super-exponential excursions", rep.excursions as f64, 0.0));
                audits.push(Audit::at_most("identical data L1 distance", worst_same, a.identical_tol));
                rate = Some(rep.fitted_rate);
                excursions = Some(rep.excursions);
                identical = Some(worst_same);
            }
            (traj.series, traj.steps, min_rho)
        }
        System::Lch => {
            let params = lch_params(cfg, kernel.laplacian_coefficient())?;
            let mut min_rho = f64::INFINITY;
            let traj = ch::run_lch(CHState::new(rho0.clone(), 0.0), &params, cfg.time.t_end, &run_options(cfg, false), &mut |s| {
                min_rho = min_rho.min(s.rho.min());
                snaps.observe(&s.rho, s.time)
            })?;
            energy_audits(&traj.series, &mut audits, true);
            (traj.series, traj.steps, min_rho)
        }
    };
    timing.record(system.name(), started.elapsed().as_secs_f64());
    series.validate()?;
    report::write_text(&ctx.out.join("diagnostics.csv"), &series.to_csv())?;
    let budget = diagnostics::dissipation_budget(&series)?;
    let n = series.len();
    audits.insert(0, Audit::at_most("relative mass drift", series.mass_drift(), a.mass_tol));
    audits.insert(1, Audit::at_least("minimum density", min_density, 0.0));
    if system == System::Ek {
        let slack = 1e-12 * (1.0 + series.energy[0].abs());
        audits.insert(2, Audit::at_most("energy inequality residual", budget.max_residual, slack));
    }

    let summary = RunSummary {
        system,
        steps,
        samples: n,
        initial_mass: series.mass[0],
        final_mass: series.mass[n - 1],
        mass_drift: series.mass_drift(),
        initial_energy: series.energy[0],
        final_energy: series.energy[n - 1],
        energy_change: series.energy[n - 1] - series.energy[0],
        min_density,
        max_residual: budget.max_residual,
        max_energy_drop: budget.max_energy_drop,
        budget_ladder,
        envelope_violations,
        same_sigma_upper_violations: same_sigma,
        contraction_rate: rate,
        contraction_excursions: excursions,
        identical_distance: identical,
        audits,
    };
    report::write_json(&ctx.out.join("summary.json"), &Document::new(&format!("run-{}", system.name()), cfg, &summary))?;
    timing.write(&ctx.out)?;
    Ok(summary)
}

// ---------------------------------------------------------------- sweep_eps

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eta: f64,
    pub eps: f64,
    /// `sup_t ||rho_eps - rho_ref||_2`.
    pub sup_error: f64,
    pub theta0: f64,
    pub sup_theta: f64,
    pub min_theta: f64,
    /// `int_0^T int (rho - P)^2 + |m|^2/rho`.
    pub w2_integral: f64,
    /// `sup_t ||m / sqrt(rho)||_2`.
    pub sup_kinetic: f64,
    /// Samples where `||rho - P||^2 > (C_P / kappa) * nonlocal addend`.
    pub control_violations: usize,
    pub mass_drift: f64,
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSlopes {
    pub error: Option<LineFit>,
    pub theta0: Option<LineFit>,
    pub w2_integral: Option<LineFit>,
    pub kinetic: Option<LineFit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub c_p: f64,
    pub kappa: f64,
    pub concentration: f64,
    pub rows: Vec<SweepRow>,
    pub slopes: SweepSlopes,
    /// Reasons why some columns carry no slope.
    pub flags: Vec<String>,
    pub audits: Vec<Audit>,
}

pub const SWEEP_HEADER: [&str; 11] = [
    "eta", "eps", "sup_error", "theta0", "sup_theta", "min_theta", "w2_integral", "sup_kinetic", "control_violations", "mass_drift", "steps",
];

pub fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new(&SWEEP_HEADER);
    for r in rows {
        t.push(vec![
            num(r.eta),
            num(r.eps),
            num(r.sup_error),
            num(r.theta0),
            num(r.sup_theta),
            num(r.min_theta),
            num(r.w2_integral),
            num(r.sup_kinetic),
            r.control_violations.to_string(),
            num(r.mass_drift),
            r.steps.to_string(),
        ]);
    }
    t
}

struct MemberOutput {
    row: SweepRow,
    series: Table,
    theta: Vec<(f64, f64)>,
}

#[allow(clippy::too_many_arguments)]
fn sweep_member(
    cfg: &ExperimentConfig,
    eps: f64,
    kernel: &MollifierKernel,
    rho0: &ScalarField,
    reference: &Trajectory<CHState>,
    c_p: f64,
    kappa: f64,
) -> Result<MemberOutput> {
    let params = ek_params(cfg, eps, kernel.clone())?;
    let init = ek_initial(cfg, rho0, &params)?;
    let traj = ek::run_ek(init, &params, cfg.time.t_end, &run_options(cfg, true), &mut |_| Ok(()))?;
    let times: Vec<f64> = traj.frames.iter().map(|f| f.time).collect();
    check_aligned(&times, &reference.series.times)?;
    let floor = cfg.ek.density_floor;
    let pot = &params.potential;
    let mut series = Table::new(&["t", "error", "theta", "theta_kinetic", "theta_potential", "theta_nonlocal", "w2", "kinetic_norm", "mass", "energy"]);
    let (mut sup_err, mut sup_theta, mut min_theta, mut sup_kin, mut violations) = (0.0f64, f64::NEG_INFINITY, f64::INFINITY, 0.0f64, 0);
    let mut w2 = Vec::with_capacity(times.len());
    let mut theta_pts = Vec::with_capacity(times.len());
    let mut theta0 = 0.0;
    for (i, (f, r)) in traj.frames.iter().zip(&reference.frames).enumerate() {
        let p = &r.rho;
        let err = f.rho.sub(p)?.norm_l2();
        let u = diagnostics::limit_velocity_u(p, kernel, pot, eps)?;
        let th = diagnostics::relative_entropy_theta(&RelativeEntropyInputs {
            rho: &f.rho,
            momentum: &f.momentum,
            p,
            u: &u,
            kernel,
            potential: pot,
            epsilon: eps,
            density_floor: floor,
        })?;
        if err * err > c_p / kappa * th.nonlocal + 1e-14 {
            violations += 1;
        }
        let w = diagnostics::w2_dirac_distance(&f.rho, &f.momentum, p, floor)?.integrate();
        let kin = (2.0 * traj.series.kinetic[i]).sqrt();
        if i == 0 {
            theta0 = th.total;
        }
        sup_err = sup_err.max(err);
        sup_theta = sup_theta.max(th.total);
        min_theta = min_theta.min(th.total);
        sup_kin = sup_kin.max(kin);
        w2.push(w);
        theta_pts.push((f.time, th.total));
        series.push(vec![
            num(f.time),
            num(err),
            num(th.total),
            num(th.kinetic),
            num(th.potential),
            num(th.nonlocal),
            num(w),
            num(kin),
            num(traj.series.mass[i]),
            num(traj.series.energy[i]),
        ]);
    }
    let row = SweepRow {
        eta: kernel.eta(),
        eps,
        sup_error: sup_err,
        theta0,
        sup_theta,
        min_theta,
        w2_integral: trapezoid(&times, &w2),
        sup_kinetic: sup_kin,
        control_violations: violations,
        mass_drift: traj.series.mass_drift(),
        steps: traj.steps,
    };
    Ok(MemberOutput { row, series, theta: theta_pts })
}

pub fn sweep_eps(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<SweepResult> {
    let grid = cfg.torus();
    let eta = cfg.eta();
    let kernel = kernel_for(cfg, eta, &grid)?;
    let rho0 = presets::initial_density(&cfg.initial, &grid)?;
    let epsilons = cfg.epsilons();
    if epsilons.is_empty() {
        bail!("ek.epsilons: sweep-eps needs at least one epsilon");
    }
    let mut timing = Timing::new();
    let pot = cfg.potential_spec();
    let c_p = estimate_poincare_constant(&kernel)?.c_p;
    let assumption = validate_assumption(&pot, c_p, cfg.checks.range)?;
    let kappa = assumption.margin;

    let t = Instant::now();
    let reference = ch::run_nlch(CHState::new(rho0.clone(), 0.0), &nlch_params(cfg, kernel.clone())?, cfg.time.t_end, &run_options(cfg, true), &mut |_| Ok(()))?;
    timing.record("reference nlch", t.elapsed().as_secs_f64());
    report::write_text(&ctx.out.join("reference.csv"), &reference.series.to_csv())?;

    let tasks: Vec<_> = epsilons
        .iter()
        .map(|&eps| {
            let (kernel, rho0, reference) = (&kernel, &rho0, &reference);
            move || -> Result<(MemberOutput, f64)> {
                let t = Instant::now();
                let out = sweep_member(cfg, eps, kernel, rho0, reference, c_p, kappa).with_context(|| format!("sweep member eps = {eps}"))?;
                Ok((out, t.elapsed().as_secs_f64()))
            }
        })
        .collect();
    let members = ctx.exec.run(tasks).into_iter().collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut theta_plot = Plot {
        title: "relative entropy".into(),
        x_label: "t".into(),
        y_label: "theta".into(),
        log_y: true,
        ..Plot::default()
    };
    for (m, secs) in members {
        timing.record(format!("ek eps={}", m.row.eps), secs);
        report::write_text(&ctx.out.join(format!("series_eps_{}.csv", m.row.eps)), &m.series.to_csv())?;
        theta_plot.series.push(Series::line(format!("eps={}", m.row.eps), m.theta));
        rows.push(m.row);
    }
    let eps: Vec<f64> = rows.iter().map(|r| r.eps).collect();
    let col = |f: fn(&SweepRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let slopes = SweepSlopes {
        error: slope(&eps, &col(|r| r.sup_error)),
        theta0: slope(&eps, &col(|r| r.theta0)),
        w2_integral: slope(&eps, &col(|r| r.w2_integral)),
        kinetic: slope(&eps, &col(|r| r.sup_kinetic)),
    };
    let mut flags = Vec::new();
    if rows.len() < 3 {
        flags.push(format!("only {} epsilon value(s): slopes need at least 3", rows.len()));
    }
    let concentration = diagnostics::concentration_tv_report(&reference.frames).value;

    let a = &cfg.audits;
    let mut audits = vec![Audit::at_least("potential assumption margin", kappa, f64::MIN_POSITIVE)];
    for r in &rows {
        audits.push(Audit::at_most(format!("mass drift eps={}", r.eps), r.mass_drift, a.mass_tol));
    }
    audits.push(Audit::at_least("min theta", col(|r| r.min_theta).into_iter().fold(f64::INFINITY, f64::min), a.theta_floor));
    audits.push(Audit::at_most("L2 control violations", col(|r| r.control_violations as f64).iter().sum(), 0.0));
    audits.push(Audit::at_most("concentration", concentration, 0.0));
    if rows.len() >= 2 {
        audits.push(Audit::holds("error strictly decreasing", strictly_decreasing(&col(|r| r.sup_error)), "strictly decreasing in eps"));
        audits.push(Audit::holds("w2 integral strictly decreasing", strictly_decreasing(&col(|r| r.w2_integral)), "strictly decreasing in eps"));
        audits.push(Audit::holds("kinetic norm strictly decreasing", strictly_decreasing(&col(|r| r.sup_kinetic)), "strictly decreasing in eps"));
    }
    if let Some(f) = slopes.error {
        audits.push(Audit::at_least("error order in eps", f.slope, a.min_error_order));
    }
    if let Some(f) = slopes.theta0 {
        audits.push(Audit::within("theta(0) slope in eps", f.slope, a.theta0_slope));
    }

    let result = SweepResult { c_p, kappa, concentration, rows, slopes, flags, audits };
    report::write_text(&ctx.out.join("sweep.csv"), &sweep_table(&result.rows).to_csv())?;
    report::write_json(&ctx.out.join("sweep.json"), &Document::new("sweep-eps", cfg, &result))?;
    let fit = result.slopes.error.map(|f| (f.slope, f.intercept));
    report::write_text(
        &ctx.out.join("error_vs_eps.svg"),
        &convergence_plot("sup-in-time L2 error", "eps", "error", &eps, &col_of(&result.rows, |r| r.sup_error), fit).to_svg(),
    )?;
    report::write_text(&ctx.out.join("theta_vs_t.svg"), &theta_plot.to_svg())?;
    timing.write(&ctx.out)?;
    Ok(result)
}

fn col_of<T>(rows: &[T], f: impl Fn(&T) -> f64) -> Vec<f64> {
    rows.iter().map(f).collect()
}

// ---------------------------------------------------------------- sweep_joint

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Ok,
    /// The scaling rule asks for an epsilon below the solver floor.
    Infeasible,
    /// The relaxation run was disabled in the config.
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointRow {
    pub eta: f64,
    /// Raw `exp(-rule_scale C T / (4 eta^(d+3)))`.
    pub rule_value: f64,
    pub eps: Option<f64>,
    pub status: RowStatus,
    /// Space-time L2 distance of the nonlocal and local Cahn-Hilliard runs.
    pub nlch_vs_lch: f64,
    pub ek_vs_lch: Option<f64>,
    pub ek_vs_nlch: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointResult {
    pub diffusivity: f64,
    /// Discrete `C^{2,1}` size of the local reference.
    pub reference_norm: f64,
    pub rule: String,
    pub rows: Vec<JointRow>,
    pub slope_nlch_vs_lch: Option<LineFit>,
    pub audits: Vec<Audit>,
}

/// `max(|rho|, |grad rho|, |D^2 rho|, |d_t rho|)` over the stored samples.
pub fn c21_surrogate(frames: &[CHState]) -> Result<f64> {
    let mut m = 0.0f64;
    for (i, f) in frames.iter().enumerate() {
        m = m.max(f.rho.norm_linf());
        let g = spectral::gradient(&f.rho)?;
        m = m.max(g.norm_linf());
        for a in 0..g.components().len() {
            m = m.max(spectral::gradient(&g.component(a))?.norm_linf());
        }
        if i > 0 {
            let prev = &frames[i - 1];
            let dt = f.time - prev.time;
            m = m.max(f.rho.sub(&prev.rho)?.norm_linf() / dt);
        }
    }
    Ok(m)
}

pub const JOINT_HEADER: [&str; 7] = ["eta", "rule_value", "eps", "status", "nlch_vs_lch", "ek_vs_lch", "ek_vs_nlch"];

pub fn sweep_joint(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<JointResult> {
    let grid = cfg.torus();
    let etas = cfg.etas();
    let rho0 = presets::initial_density(&cfg.initial, &grid)?;
    let mut timing = Timing::new();
    let first = kernel_for(cfg, etas[0], &grid)?;
    // matched diffusivity: the local limit of the first (and, for a fixed profile, every) kernel
    let diffusivity = first.laplacian_coefficient();
    let t = Instant::now();
    let lch = ch::run_lch(CHState::new(rho0.clone(), 0.0), &lch_params(cfg, diffusivity)?, cfg.time.t_end, &run_options(cfg, true), &mut |_| Ok(()))?;
    timing.record("reference lch", t.elapsed().as_secs_f64());
    let norm = c21_surrogate(&lch.frames)?;
    let d = grid.dim() as i32;
    let j = &cfg.joint;
    let tasks: Vec<_> = etas
        .iter()
        .map(|&eta| {
            let (rho0, lch, grid) = (&rho0, &lch, &grid);
            move || -> Result<(JointRow, f64)> {
                let t = Instant::now();
                let kernel = kernel_for(cfg, eta, grid)?;
                let nl = ch::run_nlch(CHState::new(rho0.clone(), 0.0), &nlch_params(cfg, kernel.clone())?, cfg.time.t_end, &run_options(cfg, true), &mut |_| Ok(()))?;
                check_aligned(&nl.series.times, &lch.series.times)?;
                let times = &lch.series.times;
                let lref: Vec<&ScalarField> = lch.frames.iter().map(|f| &f.rho).collect();
                let nref: Vec<&ScalarField> = nl.frames.iter().map(|f| &f.rho).collect();
                let nlch_vs_lch = space_time_l2(times, &nref, &lref)?;
                let rule_value = (-j.rule_scale * norm * cfg.time.t_end / (4.0 * eta.powi(d + 3))).exp();
                let eps = rule_value.min(j.eps_max);
                let mut row = JointRow { eta, rule_value, eps: None, status: RowStatus::Skipped, nlch_vs_lch, ek_vs_lch: None, ek_vs_nlch: None };
                if eps < j.eps_floor {
                    row.status = RowStatus::Infeasible;
                } else if j.run_ek {
                    let params = ek_params(cfg, eps, kernel)?;
                    let init = ek_initial(cfg, rho0, &params)?;
                    let ek = ek::run_ek(init, &params, cfg.time.t_end, &run_options(cfg, true), &mut |_| Ok(()))?;
                    let eref: Vec<&ScalarField> = ek.frames.iter().map(|f| &f.rho).collect();
                    row.eps = Some(eps);
                    row.status = RowStatus::Ok;
                    row.ek_vs_lch = Some(space_time_l2(times, &eref, &lref)?);
                    row.ek_vs_nlch = Some(space_time_l2(times, &eref, &nref)?);
                } else {
                    row.eps = Some(eps);
                }
                Ok((row, t.elapsed().as_secs_f64()))
            }
        })
        .collect();
    let rows: Vec<JointRow> = ctx
        .exec
        .run(tasks)
        .into_iter()
        .map(|r| {
            r.map(|(row, secs)| {
                timing.record(format!("eta={}", row.eta), secs);
                row
            })
        })
        .collect::<Result<_>>()?;

    let mut audits = vec![Audit::at_most("local reference mass drift", lch.series.mass_drift(), cfg.audits.mass_tol)];
    let nl: Vec<f64> = rows.iter().map(|r| r.nlch_vs_lch).collect();
    if rows.len() >= 2 {
        audits.push(Audit::holds("nonlocal-vs-local distance strictly decreasing", strictly_decreasing(&nl), "strictly decreasing in eta"));
    }
    let ek_col: Vec<f64> = rows.iter().filter_map(|r| r.ek_vs_lch).collect();
    if ek_col.len() >= 2 {
        audits.push(Audit::holds("relaxation-vs-local distance strictly decreasing", strictly_decreasing(&ek_col), "strictly decreasing over feasible rows"));
    }
    let rule = format!(
        "eps_k = min({}, exp(-{} * C * T / (4 eta_k^{}))), C = {norm:.6e}; rows below eps_floor = {} are infeasible",
        j.eps_max,
        j.rule_scale,
        d + 3,
        j.eps_floor
    );
    let etas_col: Vec<f64> = rows.iter().map(|r| r.eta).collect();
    let result = JointResult { diffusivity, reference_norm: norm, rule, slope_nlch_vs_lch: slope(&etas_col, &nl), rows, audits };

    let mut t = Table::new(&JOINT_HEADER);
    for r in &result.rows {
        let status = match r.status {
            RowStatus::Ok => "ok",
            RowStatus::Infeasible => "infeasible",
            RowStatus::Skipped => "skipped",
        };
        t.push(vec![num(r.eta), num(r.rule_value), opt(r.eps), status.into(), num(r.nlch_vs_lch), opt(r.ek_vs_lch), opt(r.ek_vs_nlch)]);
    }
    report::write_text(&ctx.out.join("joint.csv"), &t.to_csv())?;
    report::write_json(&ctx.out.join("joint.json"), &Document::new("sweep-joint", cfg, &result))?;
    let fit = result.slope_nlch_vs_lch.map(|f| (f.slope, f.intercept));
    report::write_text(&ctx.out.join("joint.svg"), &convergence_plot("nonlocal vs local distance", "eta", "distance", &etas_col, &nl, fit).to_svg())?;
    timing.write(&ctx.out)?;
    Ok(result)
}

// ---------------------------------------------------------------- consistency

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyRow {
    pub eta: f64,
    pub laplacian_coefficient: f64,
    /// `||B f - c(-Lap f)|| / ||c Lap f||`, or the absolute error when `Lap f = 0`.
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyResult {
    pub rows: Vec<ConsistencyRow>,
    pub slope: Option<LineFit>,
    pub flags: Vec<String>,
    pub audits: Vec<Audit>,
}

pub fn consistency(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<ConsistencyResult> {
    let grid = cfg.torus();
    let f = presets::initial_density(&cfg.initial, &grid)?;
    let lap = spectral::laplacian(&f)?;
    let mut rows = Vec::new();
    for eta in cfg.etas() {
        let kernel = build_kernel(cfg.profile(), eta, &grid).map_err(|e| anyhow!("kernel.etas: eta = {eta} refused: {e}"))?;
        let c = kernel.laplacian_coefficient();
        let b = apply_b_eta(&kernel, &f)?;
        let target = lap.scale(-c);
        let diff = b.sub(&target)?.norm_l2();
        let scale = target.norm_l2();
        let error = if scale > 0.0 { diff / scale } else { diff };
        rows.push(ConsistencyRow { eta, laplacian_coefficient: c, error });
    }
    let etas: Vec<f64> = rows.iter().map(|r| r.eta).collect();
    let errs: Vec<f64> = rows.iter().map(|r| r.error).collect();
    let mut flags = Vec::new();
    let mut audits = Vec::new();
    let vanishing = errs.iter().all(|e| *e <= 1e-12);
    let fit = if vanishing {
        flags.push("errors vanish for this field; no slope".into());
        audits.push(Audit::at_most("max error", errs.iter().copied().fold(0.0, f64::max), 1e-12));
        None
    } else {
        let s = slope(&etas, &errs);
        if s.is_none() {
            flags.push("slope needs at least 3 widths".into());
        }
        s
    };
    if let Some(s) = fit {
        audits.push(Audit::within("consistency slope", s.slope, cfg.audits.consistency_slope));
    }
    let result = ConsistencyResult { rows, slope: fit, flags, audits };
    let mut t = Table::new(&["eta", "laplacian_coefficient", "error"]);
    for r in &result.rows {
        t.push(vec![num(r.eta), num(r.laplacian_coefficient), num(r.error)]);
    }
    report::write_text(&ctx.out.join("consistency.csv"), &t.to_csv())?;
    report::write_json(&ctx.out.join("consistency.json"), &Document::new("consistency", cfg, &result))?;
    report::write_text(
        &ctx.out.join("consistency.svg"),
        &convergence_plot("operator consistency", "eta", "relative error", &etas, &errs, fit.map(|f| (f.slope, f.intercept))).to_svg(),
    )?;
    Ok(result)
}

// ---------------------------------------------------------------- verify-kernel

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelRow {
    pub profile: String,
    pub eta: f64,
    pub m0: f64,
    pub m1: f64,
    pub m2: f64,
    pub diffusivity: f64,
    /// Off-diagonal second moment on the 2D grid.
    pub m2_offdiag: f64,
    pub c_p: f64,
    pub extremal_mode: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub rows: Vec<KernelRow>,
    pub audits: Vec<Audit>,
}

pub fn verify_kernel(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<KernelReport> {
    let grid = cfg.torus();
    let grid2 = TorusGrid::new(2, cfg.checks.offdiag_n, cfg.grid.length)?;
    let mut names = vec![cfg.kernel.profile.clone()];
    for p in &cfg.kernel.profiles {
        if !names.contains(p) {
            names.push(p.clone());
        }
    }
    let a = &cfg.audits;
    let mut rows = Vec::new();
    let mut audits = Vec::new();
    for name in &names {
        let profile = ekch_core::Profile::from_name(name).expect("validated profile");
        for eta in cfg.etas() {
            let k = build_kernel(profile.clone(), eta, &grid)?;
            let k2 = build_kernel(profile.clone(), eta, &grid2)?;
            let m = k.moments();
            let m1 = m.m1.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let est = estimate_poincare_constant(&k)?;
            let row = KernelRow {
                profile: name.clone(),
                eta,
                m0: m.m0,
                m1,
                m2: m.m2_diag[0],
                diffusivity: k.diffusivity(),
                m2_offdiag: k2.moments().m2_offdiag,
                c_p: est.c_p,
                extremal_mode: est.extremal_mode,
            };
            let tag = format!("{name} eta={eta}");
            audits.push(Audit::at_most(format!("|m0-1| {tag}"), (row.m0 - 1.0).abs(), a.moment_tol));
            audits.push(Audit::at_most(format!("|m1| {tag}"), row.m1, a.moment_tol));
            audits.push(Audit::at_most(format!("|m2 offdiag| {tag}"), row.m2_offdiag.abs(), a.offdiag_tol));
            rows.push(row);
        }
    }
    let mut t = Table::new(&["profile", "eta", "m0", "m1", "m2", "diffusivity", "m2_offdiag", "c_p"]);
    for r in &rows {
        t.push(vec![r.profile.clone(), num(r.eta), num(r.m0), num(r.m1), num(r.m2), num(r.diffusivity), num(r.m2_offdiag), num(r.c_p)]);
    }
    let result = KernelReport { rows, audits };
    report::write_text(&ctx.out.join("kernel.csv"), &t.to_csv())?;
    report::write_json(&ctx.out.join("kernel.json"), &Document::new("verify-kernel", cfg, &result))?;
    Ok(result)
}

// ---------------------------------------------------------------- verify-potential

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialRow {
    pub potential: String,
    pub expect_bounded: bool,
    pub relative_pressure: Option<f64>,
    pub growth: Option<f64>,
    pub convex_growth: Option<f64>,
    pub convex_third: Option<f64>,
    pub bounded: bool,
    pub assumption_margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialReport {
    pub eta: f64,
    pub c_p: f64,
    pub samples: usize,
    pub rows: Vec<PotentialRow>,
    pub audits: Vec<Audit>,
}

pub fn verify_potential(cfg: &ExperimentConfig, ctx: &RunContext, seed: u64) -> Result<PotentialReport> {
    let grid = cfg.torus();
    let eta = cfg.eta();
    let kernel = kernel_for(cfg, eta, &grid)?;
    let c_p = estimate_poincare_constant(&kernel)?.c_p;
    let pp = PressureParams::new(eta)?;
    let checks: Vec<(String, crate::config::PotentialConfig, bool)> = if cfg.checks.potentials.is_empty() {
        vec![("potential".into(), cfg.potential.clone(), true)]
    } else {
        cfg.checks.potentials.iter().enumerate().map(|(i, c)| (format!("checks.potentials[{i}]"), c.potential(), c.expect_bounded)).collect()
    };
    let mut rows = Vec::new();
    let mut audits = Vec::new();
    for (field, pc, expect) in checks {
        let spec = pc.to_spec(&field)?;
        let b = check_pressure_bounds(&spec, &pp, cfg.checks.range, cfg.checks.samples, seed, ctx.exec)?;
        let margin = validate_assumption(&spec, c_p, cfg.checks.range)?.margin;
        let row = PotentialRow {
            potential: b.potential.clone(),
            expect_bounded: expect,
            relative_pressure: b.relative_pressure.value(),
            growth: b.growth.value(),
            convex_growth: b.convex_growth.value(),
            convex_third: b.convex_third.value(),
            bounded: b.all_bounded(),
            assumption_margin: margin,
        };
        let verdict = |c: &FittedConstant| matches!(c, FittedConstant::Bounded { violations: 0, .. });
        let zero_violations = [&b.relative_pressure, &b.growth, &b.convex_growth, &b.convex_third].iter().all(|c| verdict(c));
        let ok = if expect { zero_violations } else { !b.all_bounded() };
        let limit = if expect { "bounded with zero violations" } else { "reported unbounded" };
        audits.push(Audit::holds(format!("{} ({})", row.potential, pc.name), ok, limit));
        rows.push(row);
    }
    let mut t = Table::new(&["potential", "expect_bounded", "relative_pressure", "growth", "convex_growth", "convex_third", "bounded", "assumption_margin"]);
    for r in &rows {
        t.push(vec![
            r.potential.clone(),
            r.expect_bounded.to_string(),
            opt(r.relative_pressure),
            opt(r.growth),
            opt(r.convex_growth),
            opt(r.convex_third),
            r.bounded.to_string(),
            num(r.assumption_margin),
        ]);
    }
    let result = PotentialReport { eta, c_p, samples: cfg.checks.samples, rows, audits };
    report::write_text(&ctx.out.join("potential.csv"), &t.to_csv())?;
    report::write_json(&ctx.out.join("potential.json"), &Document::new("verify-potential", cfg, &result))?;
    Ok(result)
}

// ---------------------------------------------------------------- poincare

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoincareReport {
    pub eta: f64,
    pub c_p: f64,
    pub extremal_mode: Vec<i64>,
    /// Modewise maximum computed by direct summation in physical space.
    pub oracle_c_p: f64,
    pub oracle_mode: Vec<i64>,
    pub fields: usize,
    pub violations: usize,
    /// Largest `||f||^2 / form(f)` seen over the random fields.
    pub worst_ratio: f64,
    pub audits: Vec<Audit>,
}

/// Random mean-free trigonometric polynomial with modes up to `bandwidth`.
pub fn random_band_limited(grid: &TorusGrid, bandwidth: usize, rng: &mut ChaCha8Rng) -> ScalarField {
    let l = grid.length();
    let b = bandwidth as i64;
    let mut terms = Vec::new();
    let range: Vec<i64> = if grid.dim() == 2 { (-b..=b).collect() } else { vec![0] };
    for m0 in 0..=b {
        for &m1 in &range {
            if m0 == 0 && m1 <= 0 {
                continue;
            }
            terms.push((m0, m1, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
    }
    grid.sample(|x| {
        terms
            .iter()
            .map(|&(m0, m1, a, c)| {
                let ph = 2.0 * std::f64::consts::PI * (m0 as f64 * x[0] + m1 as f64 * x[1]) / l;
                a * ph.cos() + c * ph.sin()
            })
            .sum()
    })
}

/// `(1/(4 eta^2)) sum_x sum_y w(y) |f(x) - f(x - y)|^2 h^(2d)` by direct summation.
pub fn direct_dirichlet_form(kernel: &MollifierKernel, f: &ScalarField) -> f64 {
    let g = kernel.grid();
    let dv = g.cell_volume();
    let w = kernel.values().values();
    let support: Vec<(usize, [i64; 2])> = (0..g.len())
        .filter(|&i| w[i] != 0.0)
        .map(|i| {
            let [a, b] = g.multi_index(i);
            (i, [g.signed_offset(a), g.signed_offset(b)])
        })
        .collect();
    let fv = f.values();
    let mut s = 0.0;
    for x in 0..g.len() {
        let [x0, x1] = g.multi_index(x);
        for &(i, [y0, y1]) in &support {
            let j = g.wrap_index(x0 as i64 - y0, x1 as i64 - y1);
            let d = fv[x] - fv[j];
            s += w[i] * d * d;
        }
    }
    s * dv * dv / (4.0 * kernel.eta() * kernel.eta())
}

pub fn poincare(cfg: &ExperimentConfig, ctx: &RunContext, seed: u64) -> Result<PoincareReport> {
    let grid = cfg.torus();
    let eta = cfg.eta();
    let kernel = kernel_for(cfg, eta, &grid)?;
    let est = estimate_poincare_constant(&kernel)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields: Vec<ScalarField> = (0..cfg.checks.fields).map(|_| random_band_limited(&grid, cfg.checks.bandwidth, &mut rng)).collect();
    let ratios = ctx.exec.map(fields.len(), |i| -> Result<f64> {
        let f = &fields[i];
        Ok(f.norm_l2().powi(2) / nonlocal_dirichlet_form(&kernel, f)?)
    });
    let ratios = ratios.into_iter().collect::<Result<Vec<_>>>()?;
    let violations = ratios.iter().filter(|&&r| r > est.c_p * (1.0 + 1e-12)).count();
    let worst = ratios.iter().copied().fold(0.0, f64::max);

    // modewise oracle over one representative of each {m, -m}
    let n = grid.n() as i64;
    let l = grid.length();
    let modes: Vec<[i64; 2]> = if grid.dim() == 1 {
        (1..=n / 2).map(|m| [m, 0]).collect()
    } else {
        let mut v = Vec::new();
        for m0 in 0..=n / 2 {
            for m1 in -(n / 2) + 1..=n / 2 {
                if m0 > 0 || m1 > 0 {
                    v.push([m0, m1]);
                }
            }
        }
        v
    };
    let oracle = ctx.exec.map(modes.len(), |i| {
        let [m0, m1] = modes[i];
        let e = grid.sample(|x| (2.0 * std::f64::consts::PI * (m0 as f64 * x[0] + m1 as f64 * x[1]) / l).cos());
        e.norm_l2().powi(2) / direct_dirichlet_form(&kernel, &e)
    });
    let (best_i, best) = oracle.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, &r)| if r > acc.1 { (i, r) } else { acc });
    let oracle_mode = modes[best_i][..grid.dim()].to_vec();

    let audits = vec![
        Audit::at_most("random-field violations", violations as f64, 0.0),
        Audit::at_most("estimate vs oracle relative gap", (est.c_p - best).abs() / best, 1e-10),
        Audit::holds("same extremal mode", est.extremal_mode == oracle_mode, format!("{:?}", est.extremal_mode)),
    ];
    let result = PoincareReport {
        eta,
        c_p: est.c_p,
        extremal_mode: est.extremal_mode,
        oracle_c_p: best,
        oracle_mode,
        fields: fields.len(),
        violations,
        worst_ratio: worst,
        audits,
    };
    report::write_json(&ctx.out.join("poincare.json"), &Document::new("poincare", cfg, &result))?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_form_matches_spectral_form() {
        let g = TorusGrid::unit(1, 64).unwrap();
        let k = build_kernel(ekch_core::Profile::Bump, 0.1, &g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_band_limited(&g, 6, &mut rng);
        let a = direct_dirichlet_form(&k, &f);
        let b = nonlocal_dirichlet_form(&k, &f).unwrap();
        assert!((a - b).abs() <= 1e-12 * b, "{a} vs {b}");
        assert!(f.mean().abs() < 1e-14);
    }

    #[test]
    fn surrogate_sees_time_derivative() {
        let g = TorusGrid::unit(1, 32).unwrap();
        let a = CHState::new(ScalarField::constant(g, 0.5), 0.0);
        let b = CHState::new(ScalarField::constant(g, 0.6), 0.01);
        assert!((c21_surrogate(&[a, b]).unwrap() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn trapezoid_and_space_time_norm() {
        assert!((trapezoid(&[0.0, 0.5, 1.0], &[1.0, 1.0, 1.0]) - 1.0).abs() < 1e-15);
        let g = TorusGrid::unit(1, 8).unwrap();
        let one = ScalarField::constant(g, 1.0);
        let zero = ScalarField::zeros(g);
        let d = space_time_l2(&[0.0, 1.0], &[&one, &one], &[&zero, &zero]).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
    }
}
