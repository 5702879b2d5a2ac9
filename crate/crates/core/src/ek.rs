//! Rescaled high-friction nonlocal Euler-Korteweg system
//!
//! ```text
//! d_t rho + (1/eps) div m = 0
//! d_t m + (1/eps) div(m (x) m / rho + p(rho) I) = (1/(eps eta^2)) rho grad(omega * rho) - m / eps^2
//! ```
//!
//! Conservative finite volumes with local Lax-Friedrichs flux splitting,
//! the nonlocal force evaluated spectrally, and the friction integrated
//! exactly inside a Strang splitting.

use serde::{Deserialize, Serialize};

use crate::diagnostics;
use crate::error::{Error, Result};
use crate::grid::{ScalarField, TorusGrid, VectorField};
use crate::mollifier::MollifierKernel;
use crate::potential::{pressure_pair_unchecked, pressure_prime_unchecked, PotentialSpec, PressureParams};
use crate::run::{self, Dynamics, RunOptions, Sample, Timed, Trajectory};
use crate::spectral::{self, wavenumber_sq};

/// Densities below this (negative) value abort a step.
pub const POSITIVITY_LIMIT: f64 = -1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct EKState {
    pub rho: ScalarField,
    pub momentum: VectorField,
    pub time: f64,
}

impl EKState {
    pub fn new(rho: ScalarField, momentum: VectorField, time: f64) -> Result<Self> {
        rho.grid().check_same(momentum.grid())?;
        Ok(EKState { rho, momentum, time })
    }

    /// Zero momentum.
    pub fn at_rest(rho: ScalarField, time: f64) -> Self {
        let momentum = VectorField::zeros(*rho.grid());
        EKState { rho, momentum, time }
    }

    pub fn grid(&self) -> &TorusGrid {
        self.rho.grid()
    }

    pub fn mass(&self) -> f64 {
        self.rho.integrate()
    }

    /// `m / max(rho, floor)`.
    pub fn velocity(&self, floor: f64) -> VectorField {
        let g = *self.grid();
        let comps = self
            .momentum
            .components()
            .iter()
            .map(|c| c.iter().zip(self.rho.values()).map(|(m, r)| m / r.max(floor)).collect())
            .collect();
        VectorField::new(g, comps).expect("same grid")
    }
}

impl Timed for EKState {
    fn time(&self) -> f64 {
        self.time
    }
    fn set_time(&mut self, t: f64) {
        self.time = t;
    }
}

/// Interface reconstruction of the split fluxes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reconstruction {
    /// Piecewise constant: the classic Rusanov flux.
    Constant,
    /// Fifth-order linear upwind reconstruction of `f +- a U`.
    Upwind5,
}

#[derive(Clone, Debug)]
pub struct EKParams {
    pub epsilon: f64,
    pub kernel: MollifierKernel,
    pub potential: PotentialSpec,
    /// Weight of the `(1 + |k|^2)^3` momentum damping; 0 disables it.
    pub delta_reg: f64,
    pub cfl: f64,
    pub density_floor: f64,
    pub reconstruction: Reconstruction,
    /// `false` leaves only the friction (for testing).
    pub fluxes: bool,
}

impl EKParams {
    pub fn new(epsilon: f64, kernel: MollifierKernel, potential: PotentialSpec) -> Result<Self> {
        let p = EKParams {
            epsilon,
            kernel,
            potential,
            delta_reg: 0.0,
            cfl: 0.25,
            density_floor: 1e-10,
            reconstruction: Reconstruction::Upwind5,
            fluxes: true,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::Precondition(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::Precondition(format!("cfl must lie in (0, 1), got {}", self.cfl)));
        }
        if !(self.delta_reg >= 0.0 && self.density_floor >= 0.0) {
            return Err(Error::Precondition("delta_reg and density_floor must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn pressure_params(&self) -> PressureParams {
        PressureParams { eta: self.kernel.eta() }
    }

    fn check_grid(&self, s: &EKState) -> Result<()> {
        self.kernel.grid().check_same(s.grid())
    }
}

fn sound_speed(params: &EKParams, pp: &PressureParams, rho: f64) -> f64 {
    let r = rho.max(params.density_floor);
    (pressure_prime_unchecked(&params.potential, pp, rho).max(0.0) / r).sqrt()
}

/// Largest characteristic speed `|u_a| + c(rho)` over cells and axes.
pub fn max_wave_speed(state: &EKState, params: &EKParams) -> f64 {
    let pp = params.pressure_params();
    let rho = state.rho.values();
    let mut a = 0.0f64;
    for i in 0..rho.len() {
        let r = rho[i].max(params.density_floor);
        let umax = state.momentum.components().iter().map(|c| (c[i] / r).abs()).fold(0.0, f64::max);
        a = a.max(umax + sound_speed(params, &pp, rho[i]));
    }
    a
}

/// `cfl * eps * dx / a_max`; infinite when fluxes are disabled.
pub fn stable_dt(state: &EKState, params: &EKParams) -> f64 {
    if !params.fluxes {
        return f64::INFINITY;
    }
    let a = max_wave_speed(state, params);
    if a <= 0.0 {
        return f64::INFINITY;
    }
    params.cfl * params.epsilon * state.grid().spacing() / a
}

fn check_positive(rho: &ScalarField, time: f64) -> Result<()> {
    let min = rho.min();
    if !min.is_finite() {
        return Err(Error::Divergence { time });
    }
    if min < POSITIVITY_LIMIT {
        return Err(Error::Positivity { min, time });
    }
    Ok(())
}

const GHOST: usize = 3;

/// Per-line flux divergence for the conservative variables `(rho, m_0, ..)`
/// along `axis`, accumulated into `out` as `-(1/eps) d_axis F`.
fn accumulate_flux_divergence(state: &EKState, params: &EKParams, axis: usize, out: &mut [Vec<f64>]) {
    let g = *state.grid();
    let n = g.n();
    let d = g.dim();
    let nv = 1 + d;
    let pp = params.pressure_params();
    let rho = state.rho.values();
    let mom = state.momentum.components();
    let inv = 1.0 / (params.epsilon * g.spacing());
    let (stride, lines): (usize, Vec<usize>) = match (d, axis) {
        (1, _) => (1, vec![0]),
        (_, 0) => (n, (0..n).collect()),
        _ => (1, (0..n).map(|i0| i0 * n).collect()),
    };

    // line buffers padded with GHOST periodic cells on each side
    let len = n + 2 * GHOST;
    let mut u = vec![vec![0.0; len]; nv];
    let mut f = vec![vec![0.0; len]; nv];
    let mut alpha = vec![0.0; len];
    let mut fp = [0.0; 6];
    let mut fm = [0.0; 6];
    // hat[i] is the flux through the right face of cell i
    let mut hat = vec![vec![0.0; n]; nv];
    for &base in &lines {
        for p in 0..len {
            let i = (p + n - GHOST) % n;
            let idx = base + i * stride;
            let r = rho[idx];
            let rf = r.max(params.density_floor);
            let ua = mom[axis][idx] / rf;
            let (pr, dpr) = pressure_pair_unchecked(&params.potential, &pp, r);
            u[0][p] = r;
            f[0][p] = mom[axis][idx];
            for b in 0..d {
                u[1 + b][p] = mom[b][idx];
                f[1 + b][p] = mom[axis][idx] * mom[b][idx] / rf + if b == axis { pr } else { 0.0 };
            }
            alpha[p] = ua.abs() + (dpr.max(0.0) / rf).sqrt();
        }
        match params.reconstruction {
            Reconstruction::Constant => {
                for j in 0..n {
                    let (l, r) = (j + GHOST, j + GHOST + 1);
                    let a = alpha[l].max(alpha[r]);
                    for v in 0..nv {
                        hat[v][j] = 0.5 * (f[v][l] + f[v][r]) - 0.5 * a * (u[v][r] - u[v][l]);
                    }
                }
            }
            Reconstruction::Upwind5 => {
                let amax: Vec<f64> = (0..n).map(|j| alpha[j + 1..j + 7].iter().fold(0.0, |m, &x| f64::max(m, x))).collect();
                for v in 0..nv {
                    for j in 0..n {
                        let c = j + GHOST;
                        let a = amax[j];
                        for o in 0..6 {
                            let q = c - 2 + o;
                            fp[o] = 0.5 * (f[v][q] + a * u[v][q]);
                            fm[o] = 0.5 * (f[v][q] - a * u[v][q]);
                        }
                        // fp/fm hold offsets -2..=3 around the face's left cell
                        let left = 2.0 * fp[0] - 13.0 * fp[1] + 47.0 * fp[2] + 27.0 * fp[3] - 3.0 * fp[4];
                        let right = 2.0 * fm[5] - 13.0 * fm[4] + 47.0 * fm[3] + 27.0 * fm[2] - 3.0 * fm[1];
                        hat[v][j] = (left + right) / 60.0;
                    }
                }
            }
        }
        for i in 0..n {
            let idx = base + i * stride;
            let im = if i == 0 { n - 1 } else { i - 1 };
            for v in 0..nv {
                out[v][idx] -= (hat[v][i] - hat[v][im]) * inv;
            }
        }
    }
}

/// `(1/(eps eta^2)) rho grad(omega * rho)`.
pub fn nonlocal_force(rho: &ScalarField, params: &EKParams) -> Result<VectorField> {
    let g = *rho.grid();
    let k = &params.kernel;
    let spec = k.spectrum_of(rho)?;
    let scale = 1.0 / (params.epsilon * k.eta() * k.eta());
    let smoothed = spec.apply_real(|i| k.symbol(i));
    let mut comps = Vec::with_capacity(g.dim());
    for a in 0..g.dim() {
        let d = spectral::derivative_from(&smoothed, a)?;
        comps.push(d.values().iter().zip(rho.values()).map(|(dv, r)| scale * r * dv).collect());
    }
    VectorField::new(g, comps)
}

/// Non-stiff right-hand side: flux divergence plus nonlocal force.
pub fn ek_rhs_flux(state: &EKState, params: &EKParams) -> Result<(ScalarField, VectorField)> {
    params.check_grid(state)?;
    state.rho.require_finite("ek_rhs_flux")?;
    state.momentum.require_finite("ek_rhs_flux")?;
    check_positive(&state.rho, state.time)?;
    let g = *state.grid();
    let nv = 1 + g.dim();
    let mut out = vec![vec![0.0; g.len()]; nv];
    for axis in 0..g.dim() {
        accumulate_flux_divergence(state, params, axis, &mut out);
    }
    let force = nonlocal_force(&state.rho, params)?;
    for (a, fc) in force.components().iter().enumerate() {
        for (o, fv) in out[1 + a].iter_mut().zip(fc) {
            *o += fv;
        }
    }
    let mut it = out.into_iter();
    let d_rho = ScalarField::new(g, it.next().expect("mass component"))?;
    let d_m = VectorField::new(g, it.collect())?;
    Ok((d_rho, d_m))
}

fn axpy(base: &EKState, dt: f64, rhs: &(ScalarField, VectorField)) -> EKState {
    let mut out = base.clone();
    for (o, d) in out.rho.values_mut().iter_mut().zip(rhs.0.values()) {
        *o += dt * d;
    }
    for (oc, dc) in out.momentum.components_mut().iter_mut().zip(rhs.1.components()) {
        for (o, d) in oc.iter_mut().zip(dc) {
            *o += dt * d;
        }
    }
    out
}

fn apply_friction(state: &mut EKState, factor: f64) {
    for c in state.momentum.components_mut() {
        for m in c.iter_mut() {
            *m *= factor;
        }
    }
}

fn h3_damping(momentum: &VectorField, dt: f64, delta: f64) -> Result<VectorField> {
    let g = *momentum.grid();
    let comps = (0..g.dim())
        .map(|a| {
            spectral::forward(&momentum.component(a))
                .apply_real(|i| 1.0 / (1.0 + dt * delta * (1.0 + wavenumber_sq(&g, i)).powi(3)))
                .to_field()
        })
        .collect::<Result<Vec<_>>>()?;
    VectorField::from_fields(comps)
}

/// One Strang step: half friction, SSP-RK2 on the fluxes, half friction,
/// then the optional high-order damping of the momentum.
pub fn step_ek(state: &EKState, params: &EKParams, dt: f64) -> Result<EKState> {
    params.check_grid(state)?;
    let limit = stable_dt(state, params);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-9) {
        return Err(Error::StepSize { dt, limit });
    }
    let half = (-dt / (2.0 * params.epsilon * params.epsilon)).exp();
    let mut s = state.clone();
    apply_friction(&mut s, half);
    if params.fluxes {
        let k1 = ek_rhs_flux(&s, params)?;
        let s1 = axpy(&s, dt, &k1);
        let k2 = ek_rhs_flux(&s1, params)?;
        let s2 = axpy(&s1, dt, &k2);
        for (o, v) in s.rho.values_mut().iter_mut().zip(s2.rho.values()) {
            *o = 0.5 * (*o + v);
        }
        for (oc, vc) in s.momentum.components_mut().iter_mut().zip(s2.momentum.components()) {
            for (o, v) in oc.iter_mut().zip(vc) {
                *o = 0.5 * (*o + v);
            }
        }
    }
    apply_friction(&mut s, half);
    if params.delta_reg > 0.0 {
        s.momentum = h3_damping(&s.momentum, dt, params.delta_reg)?;
    }
    s.time = state.time + dt;
    if !(s.rho.is_finite() && s.momentum.is_finite()) {
        return Err(Error::Divergence { time: s.time });
    }
    check_positive(&s.rho, s.time)?;
    Ok(s)
}

/// `(1/eps^2) int |m|^2 / max(rho, floor)`.
pub fn friction_dissipation(state: &EKState, params: &EKParams) -> f64 {
    let rho = state.rho.values();
    let mut s = 0.0;
    for c in state.momentum.components() {
        for (m, r) in c.iter().zip(rho) {
            s += m * m / r.max(params.density_floor);
        }
    }
    s * state.grid().cell_volume() / (params.epsilon * params.epsilon)
}

impl Dynamics for EKParams {
    type State = EKState;

    fn max_stable_dt(&self, s: &EKState) -> Result<f64> {
        Ok(stable_dt(s, self))
    }

    fn step(&self, s: &EKState, dt: f64) -> Result<EKState> {
        step_ek(s, self, dt)
    }

    fn dissipation_rate(&self, s: &EKState) -> Result<f64> {
        Ok(friction_dissipation(s, self))
    }

    fn sample(&self, s: &EKState) -> Result<Sample> {
        let parts = diagnostics::energy_ek_parts(s, &self.kernel, &self.potential, self.density_floor)?;
        Ok(Sample { mass: s.mass(), energy: parts.total(), kinetic: parts.kinetic })
    }
}

/// Integrates to `t_end`, sampling at `opts.sample_interval`.
pub fn run_ek(
    initial: EKState,
    params: &EKParams,
    t_end: f64,
    opts: &RunOptions,
    observer: &mut dyn FnMut(&EKState) -> Result<()>,
) -> Result<Trajectory<EKState>> {
    params.validate()?;
    params.check_grid(&initial)?;
    run::integrate(params, initial, t_end, opts, observer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mollifier::{build_kernel, Profile};
    use crate::potential::{builtin_double_well, builtin_power};
    use std::f64::consts::PI;

    fn params(n: usize, eps: f64) -> EKParams {
        let g = TorusGrid::unit(1, n).unwrap();
        let k = build_kernel(Profile::Quartic, 0.1, &g).unwrap();
        EKParams::new(eps, k, builtin_double_well()).unwrap()
    }

    #[test]
    fn constant_state_has_zero_rhs() {
        let p = params(64, 0.05);
        let g = *p.kernel.grid();
        let s = EKState::at_rest(ScalarField::constant(g, 0.6), 0.0);
        let (dr, dm) = ek_rhs_flux(&s, &p).unwrap();
        assert!(dr.norm_linf() < 1e-12);
        assert!(dm.norm_linf() < 1e-9, "{}", dm.norm_linf());
        let next = step_ek(&s, &p, stable_dt(&s, &p)).unwrap();
        assert!(next.rho.sub(&s.rho).unwrap().norm_linf() < 1e-14);
    }

    #[test]
    fn pure_friction_is_exact() {
        let mut p = params(64, 0.1);
        p.fluxes = false;
        let g = *p.kernel.grid();
        let rho = g.sample(|x| 1.0 + 0.3 * (2.0 * PI * x[0]).sin());
        let m = VectorField::from_fields(vec![g.sample(|x| (2.0 * PI * x[0]).cos())]).unwrap();
        let s = EKState::new(rho, m.clone(), 0.0).unwrap();
        let dt = 0.003;
        let next = step_ek(&s, &p, dt).unwrap();
        let f = (-dt / 0.01f64).exp();
        for (a, b) in next.momentum.components()[0].iter().zip(&m.components()[0]) {
            assert!((a - f * b).abs() <= 1e-15);
        }
    }

    #[test]
    fn step_size_is_checked() {
        let p = params(64, 0.05);
        let g = *p.kernel.grid();
        let s = EKState::at_rest(g.sample(|x| 0.5 + 0.1 * (2.0 * PI * x[0]).cos()), 0.0);
        let dt = stable_dt(&s, &p);
        assert!(matches!(step_ek(&s, &p, 2.0 * dt), Err(Error::StepSize { .. })));
    }

    #[test]
    fn negative_density_is_refused() {
        let p = params(64, 0.05);
        let g = *p.kernel.grid();
        let mut rho = ScalarField::constant(g, 0.5);
        rho.values_mut()[4] = -1e-6;
        let s = EKState::at_rest(rho, 0.0);
        assert!(matches!(ek_rhs_flux(&s, &p), Err(Error::Positivity { .. })));
    }

    #[test]
    fn mass_is_conserved() {
        let p = params(128, 0.05);
        let g = *p.kernel.grid();
        let s0 = EKState::at_rest(g.sample(|x| 0.5 + 0.2 * (2.0 * PI * x[0]).cos() + 0.05 * (6.0 * PI * x[0]).sin()), 0.0);
        let mut s = s0.clone();
        for _ in 0..200 {
            let dt = stable_dt(&s, &p);
            s = step_ek(&s, &p, dt).unwrap();
        }
        assert!(((s.mass() - s0.mass()) / s0.mass()).abs() <= 1e-13);
    }

    #[test]
    fn h3_damping_matches_multiplier() {
        let g = TorusGrid::unit(1, 32).unwrap();
        let m = VectorField::from_fields(vec![g.sample(|x| 1.0 + (2.0 * PI * 3.0 * x[0]).cos())]).unwrap();
        let damped = h3_damping(&m, 0.1, 1e-3).unwrap();
        let k2 = (6.0 * PI).powi(2);
        let factor = 1.0 / (1.0 + 1e-4 * (1.0 + k2).powi(3));
        let mean_factor = 1.0 / (1.0 + 1e-4);
        for (i, v) in damped.components()[0].iter().enumerate() {
            let e = mean_factor + factor * (2.0 * PI * 3.0 * g.point(i)[0]).cos();
            assert!((v - e).abs() < 1e-12, "{i}: {v} vs {e}");
        }
    }

    #[test]
    fn power_potential_sound_speed() {
        let g = TorusGrid::unit(1, 32).unwrap();
        let k = build_kernel(Profile::Bump, 0.2, &g).unwrap();
        let p = EKParams::new(0.1, k, builtin_power(3.0).unwrap()).unwrap();
        let s = EKState::at_rest(ScalarField::constant(g, 1.0), 0.0);
        // p'(1) = 1 * (6 + 25)
        assert!((max_wave_speed(&s, &p) - 31f64.sqrt()).abs() < 1e-12);
    }
}
