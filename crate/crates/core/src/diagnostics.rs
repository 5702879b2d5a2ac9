//! Energies, dissipation budgets, the relative entropy and its ingredients,
//! and the Wasserstein diagnostics, all on deterministic (Dirac-valued)
//! trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ek::EKState;
use crate::grid::{ScalarField, VectorField};
use crate::mollifier::{apply_b_eta, nonlocal_dirichlet_form, MollifierKernel};
use crate::potential::{relative_potential, PotentialSpec};
use crate::run::Sample;
use crate::spectral;

/// Time series of the scalar observables of a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSeries {
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub energy: Vec<f64>,
    pub kinetic: Vec<f64>,
    /// Cumulative dissipation from the initial time.
    pub dissipation: Vec<f64>,
    pub theta: Option<Vec<f64>>,
    pub w2_sq: Option<Vec<f64>>,
}

pub const CSV_HEADER: &str = "t,mass,energy,kinetic,dissipation,theta,w2sq";

impl DiagnosticsSeries {
    pub(crate) fn push(&mut self, t: f64, s: Sample, dissipated: f64) {
        self.times.push(t);
        self.mass.push(s.mass);
        self.energy.push(s.energy);
        self.kinetic.push(s.kinetic);
        self.dissipation.push(dissipated);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Checks strictly increasing times, equal lengths and monotone dissipation.
    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        let lens = [self.mass.len(), self.energy.len(), self.kinetic.len(), self.dissipation.len()];
        let opt = [self.theta.as_ref().map(Vec::len), self.w2_sq.as_ref().map(Vec::len)];
        if lens.iter().any(|&l| l != n) || opt.iter().flatten().any(|&l| l != n) {
            return Err(Error::Precondition("diagnostic columns differ in length".into()));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Precondition("sample times are not strictly increasing".into()));
        }
        if self.dissipation.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Precondition("cumulative dissipation decreased".into()));
        }
        Ok(())
    }

    /// CSV with the fixed header; absent columns are left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        let opt = |c: &Option<Vec<f64>>, i: usize| c.as_ref().map(|v| format!("{:e}", v[i])).unwrap_or_default();
        for i in 0..self.times.len() {
            out.push_str(&format!(
                "{:e},{:e},{:e},{:e},{:e},{},{}\n",
                self.times[i],
                self.mass[i],
                self.energy[i],
                self.kinetic[i],
                self.dissipation[i],
                opt(&self.theta, i),
                opt(&self.w2_sq, i)
            ));
        }
        out
    }

    /// Largest relative deviation of the mass from its initial value.
    pub fn mass_drift(&self) -> f64 {
        let m0 = match self.mass.first() {
            Some(m) => *m,
            None => return 0.0,
        };
        let scale = m0.abs().max(f64::MIN_POSITIVE);
        self.mass.iter().map(|m| (m - m0).abs() / scale).fold(0.0, f64::max)
    }
}

/// The three addends of the Euler-Korteweg energy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyParts {
    pub kinetic: f64,
    pub potential: f64,
    pub nonlocal: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.kinetic + self.potential + self.nonlocal
    }
}

/// `int |m|^2 / (2 max(rho, floor))`.
pub fn kinetic_energy(rho: &ScalarField, momentum: &VectorField, floor: f64) -> Result<f64> {
    rho.grid().check_same(momentum.grid())?;
    let r = rho.values();
    let mut s = 0.0;
    for c in momentum.components() {
        for (m, rv) in c.iter().zip(r) {
            s += 0.5 * m * m / rv.max(floor);
        }
    }
    Ok(s * rho.grid().cell_volume())
}

pub fn energy_ek_parts(
    state: &EKState,
    kernel: &MollifierKernel,
    potential: &PotentialSpec,
    floor: f64,
) -> Result<EnergyParts> {
    Ok(EnergyParts {
        kinetic: kinetic_energy(&state.rho, &state.momentum, floor)?,
        potential: potential.apply(&state.rho, 0).integrate(),
        nonlocal: nonlocal_dirichlet_form(kernel, &state.rho)?,
    })
}

/// Kinetic plus potential plus nonlocal interaction energy.
pub fn energy_ek(state: &EKState, kernel: &MollifierKernel, potential: &PotentialSpec, floor: f64) -> Result<f64> {
    Ok(energy_ek_parts(state, kernel, potential, floor)?.total())
}

/// `int F(rho) + nonlocal_dirichlet_form(rho)`.
pub fn energy_nlch(rho: &ScalarField, kernel: &MollifierKernel, potential: &PotentialSpec) -> Result<f64> {
    Ok(potential.apply(rho, 0).integrate() + nonlocal_dirichlet_form(kernel, rho)?)
}

/// `int F(rho) + (D/2) int |grad rho|^2`.
pub fn energy_lch(rho: &ScalarField, diffusivity: f64, potential: &PotentialSpec) -> Result<f64> {
    let grad = spectral::gradient(rho)?;
    Ok(potential.apply(rho, 0).integrate() + 0.5 * diffusivity * grad.norm_l2().powi(2))
}

/// Residual `R(t) = E(t) + D(t) - E(0)` of the energy inequality.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BudgetReport {
    pub times: Vec<f64>,
    pub residual: Vec<f64>,
    pub max_residual: f64,
    pub max_abs_residual: f64,
    /// `max_t (E(0) - E(t))`: the budget with the dissipation term dropped.
    pub max_energy_drop: f64,
}

pub fn dissipation_budget(series: &DiagnosticsSeries) -> Result<BudgetReport> {
    series.validate()?;
    let e0 = *series
        .energy
        .first()
        .ok_or_else(|| Error::Precondition("empty diagnostics series".into()))?;
    let residual: Vec<f64> = series.energy.iter().zip(&series.dissipation).map(|(e, d)| e + d - e0).collect();
    Ok(BudgetReport {
        times: series.times.clone(),
        max_residual: residual.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        max_abs_residual: residual.iter().map(|r| r.abs()).fold(0.0, f64::max),
        max_energy_drop: series.energy.iter().map(|e| e0 - e).fold(f64::NEG_INFINITY, f64::max),
        residual,
    })
}

/// `F'(P) + B_eta[P]`.
pub fn chemical_potential(p: &ScalarField, kernel: &MollifierKernel, potential: &PotentialSpec) -> Result<ScalarField> {
    let b = apply_b_eta(kernel, p)?;
    potential.apply(p, 1).zip_map(&b, |f, b| f + b)
}

/// `U = -eps grad(F'(P) + B_eta[P])`.
pub fn limit_velocity_u(
    p: &ScalarField,
    kernel: &MollifierKernel,
    potential: &PotentialSpec,
    epsilon: f64,
) -> Result<VectorField> {
    let mu = chemical_potential(p, kernel, potential)?;
    Ok(spectral::gradient(&mu)?.scale(-epsilon))
}

fn divergence_of_tensor(p: &ScalarField, a: &VectorField, b: &VectorField) -> Result<VectorField> {
    // component i: sum_j d_j (p a_i b_j)
    let g = *p.grid();
    let mut comps = Vec::with_capacity(g.dim());
    for i in 0..g.dim() {
        let rows = (0..g.dim())
            .map(|j| {
                let vals = (0..g.len()).map(|x| p.values()[x] * a.components()[i][x] * b.components()[j][x]).collect();
                ScalarField::new(g, vals)
            })
            .collect::<Result<Vec<_>>>()?;
        comps.push(spectral::divergence(&VectorField::from_fields(rows)?)?);
    }
    VectorField::from_fields(comps)
}

fn centered_difference(prev: &VectorField, next: &VectorField, h: f64) -> Result<VectorField> {
    Ok(next.sub(prev)?.scale(1.0 / (2.0 * h)))
}

/// `eps div(P grad mu (x) grad mu) - eps d_t(P grad mu)` at the middle of
/// three frames spaced `h` apart in time.
pub fn error_term_e(
    frames: [&ScalarField; 3],
    h: f64,
    kernel: &MollifierKernel,
    potential: &PotentialSpec,
    epsilon: f64,
) -> Result<VectorField> {
    if !(h > 0.0) {
        return Err(Error::Precondition("frame spacing must be positive".into()));
    }
    let flux = |p: &ScalarField| -> Result<VectorField> {
        let gm = spectral::gradient(&chemical_potential(p, kernel, potential)?)?;
        gm.mul_scalar_field(p)
    };
    let gm = spectral::gradient(&chemical_potential(frames[1], kernel, potential)?)?;
    let tensor = divergence_of_tensor(frames[1], &gm, &gm)?;
    let dt = centered_difference(&flux(frames[0])?, &flux(frames[2])?, h)?;
    Ok(tensor.sub(&dt)?.scale(epsilon))
}

/// The same quantity written as `d_t(P U) + (1/eps) div(P U (x) U)`.
pub fn error_term_e_from_velocity(
    frames: [&ScalarField; 3],
    h: f64,
    kernel: &MollifierKernel,
    potential: &PotentialSpec,
    epsilon: f64,
) -> Result<VectorField> {
    if !(h > 0.0) {
        return Err(Error::Precondition("frame spacing must be positive".into()));
    }
    let pu = |p: &ScalarField| -> Result<VectorField> {
        limit_velocity_u(p, kernel, potential, epsilon)?.mul_scalar_field(p)
    };
    let u = limit_velocity_u(frames[1], kernel, potential, epsilon)?;
    let dt = centered_difference(&pu(frames[0])?, &pu(frames[2])?, h)?;
    let tensor = divergence_of_tensor(frames[1], &u, &u)?;
    dt.sub(&tensor.scale(-1.0 / epsilon))
}

/// Inputs of the relative entropy at one time.
#[derive(Clone, Copy, Debug)]
pub struct RelativeEntropyInputs<'a> {
    pub rho: &'a ScalarField,
    pub momentum: &'a VectorField,
    pub p: &'a ScalarField,
    pub u: &'a VectorField,
    pub kernel: &'a MollifierKernel,
    pub potential: &'a PotentialSpec,
    pub epsilon: f64,
    pub density_floor: f64,
}

impl RelativeEntropyInputs<'_> {
    fn check(&self) -> Result<()> {
        let g = self.rho.grid();
        g.check_same(self.momentum.grid())?;
        g.check_same(self.p.grid())?;
        g.check_same(self.u.grid())?;
        g.check_same(self.kernel.grid())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThetaReport {
    pub total: f64,
    /// `int rho |u - U|^2 / 2`.
    pub kinetic: f64,
    /// `int F(rho | P)`.
    pub potential: f64,
    /// `nonlocal_dirichlet_form(rho - P)`.
    pub nonlocal: f64,
}

pub fn relative_entropy_theta(inp: &RelativeEntropyInputs) -> Result<ThetaReport> {
    inp.check()?;
    let g = *inp.rho.grid();
    let rho = inp.rho.values();
    let mut kinetic = 0.0;
    for (mc, uc) in inp.momentum.components().iter().zip(inp.u.components()) {
        for x in 0..g.len() {
            let u = mc[x] / rho[x].max(inp.density_floor);
            kinetic += 0.5 * rho[x] * (u - uc[x]).powi(2);
        }
    }
    kinetic *= g.cell_volume();
    let potential = inp.rho.zip_map(inp.p, |r, p| relative_potential(inp.potential, r, p))?.integrate();
    let nonlocal = nonlocal_dirichlet_form(inp.kernel, &inp.rho.sub(inp.p)?)?;
    Ok(ThetaReport { total: kinetic + potential + nonlocal, kinetic, potential, nonlocal })
}

/// `c_p * nonlocal_dirichlet_form(rho - P) - ||rho - P||^2`; refuses pairs
/// whose means differ.
pub fn poincare_control(inp: &RelativeEntropyInputs, c_p: f64) -> Result<f64> {
    inp.check()?;
    let (a, b) = (inp.rho.mean(), inp.p.mean());
    if (a - b).abs() > 1e-9 * (1.0 + a.abs().max(b.abs())) {
        return Err(Error::Precondition(format!("means differ: {a} vs {b}")));
    }
    let diff = inp.rho.sub(inp.p)?;
    Ok(c_p * nonlocal_dirichlet_form(inp.kernel, &diff)? - diff.norm_l2().powi(2))
}

/// Pointwise `(rho_ek - rho_ch)^2 + |m|^2 / max(rho_ek, floor)`.
pub fn w2_dirac_distance(
    rho_ek: &ScalarField,
    momentum: &VectorField,
    rho_ch: &ScalarField,
    floor: f64,
) -> Result<ScalarField> {
    rho_ek.grid().check_same(momentum.grid())?;
    let mut out = rho_ek.zip_map(rho_ch, |a, b| (a - b) * (a - b))?;
    for c in momentum.components() {
        for ((o, m), r) in out.values_mut().iter_mut().zip(c).zip(rho_ek.values()) {
            *o += m * m / r.max(floor);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub value: f64,
    pub label: &'static str,
}

/// Total variation of the concentration measures; zero for every
/// deterministic trajectory.
pub fn concentration_tv_report<S>(_frames: &[S]) -> ConcentrationReport {
    ConcentrationReport { value: 0.0, label: "structural zero" }
}

/// Linear interpolation of a frame sequence at time `t`.
pub fn interpolate_frames(times: &[f64], frames: &[ScalarField], t: f64) -> Result<ScalarField> {
    if times.len() != frames.len() || times.is_empty() {
        return Err(Error::Precondition("need matching, nonempty times and frames".into()));
    }
    let tol = 1e-12 * (1.0 + t.abs());
    if t < times[0] - tol || t > times[times.len() - 1] + tol {
        return Err(Error::Precondition(format!("time {t} outside the stored range")));
    }
    let j = times.partition_point(|&s| s < t - tol);
    if j < times.len() && (times[j] - t).abs() <= tol {
        return Ok(frames[j].clone());
    }
    let (t0, t1) = (times[j - 1], times[j]);
    let w = (t - t0) / (t1 - t0);
    frames[j - 1].zip_map(&frames[j], |a, b| (1.0 - w) * a + w * b)
}
