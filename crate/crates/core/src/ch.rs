//! Cahn-Hilliard solvers.
//!
//! The nonlocal equation is advanced in porous-medium form
//! `d_t rho = Lap phi_delta(rho) - div(T_delta(rho) b(rho))` with
//! `b = grad(omega * rho) / eta^2`, explicitly and in flux form. The local
//! degenerate equation `d_t rho = div(rho grad(-D Lap rho + F'(rho)))` uses a
//! linearly implicit spectral step frozen at the mean density.

use serde::{Deserialize, Serialize};

use crate::diagnostics;
use crate::error::{Error, Result};
use crate::grid::{ScalarField, TorusGrid};
use crate::mollifier::MollifierKernel;
use crate::potential::{Part, PotentialSpec};
use crate::run::{self, Dynamics, RunOptions, Sample, Timed, Trajectory};
use crate::spectral::{self, wavenumber_sq, Spectrum};

use rustfft::num_complex::Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct CHState {
    pub rho: ScalarField,
    pub time: f64,
}

impl CHState {
    pub fn new(rho: ScalarField, time: f64) -> Self {
        CHState { rho, time }
    }

    pub fn grid(&self) -> &TorusGrid {
        self.rho.grid()
    }

    pub fn mass(&self) -> f64 {
        self.rho.integrate()
    }
}

impl Timed for CHState {
    fn time(&self) -> f64 {
        self.time
    }
    fn set_time(&mut self, t: f64) {
        self.time = t;
    }
}

/// `s(x) = 2x^3 - x^4` on `[0, 1]`, `2x - 1` beyond, 0 below; C^2 and monotone.
fn ramp(x: f64) -> (f64, f64) {
    if x <= 0.0 {
        (0.0, 0.0)
    } else if x >= 1.0 {
        (2.0 * x - 1.0, 2.0)
    } else {
        (x * x * x * (2.0 - x), x * x * (6.0 - 4.0 * x))
    }
}

/// Mobility truncation: `delta/2` at zero, identity from `delta` on.
pub fn truncation_t_delta(rho: f64, delta: f64) -> f64 {
    if delta <= 0.0 {
        return rho;
    }
    0.5 * delta + 0.5 * delta * ramp(rho / delta).0
}

/// Derivative of [`truncation_t_delta`] in `rho`.
pub fn truncation_t_delta_prime(rho: f64, delta: f64) -> f64 {
    if delta <= 0.0 {
        return 1.0;
    }
    0.5 * ramp(rho / delta).1
}

/// Integrand `T_delta(s)(1/eta^2 + F''(s))` of `phi_delta`.
pub fn phi_delta_prime(spec: &PotentialSpec, eta: f64, rho: f64, delta: f64) -> f64 {
    truncation_t_delta(rho, delta) * (1.0 / (eta * eta) + spec.d2(rho))
}

fn ellipticity_floor(eta: f64) -> f64 {
    -1e-10 / (eta * eta)
}

fn simpson(f: &dyn Fn(f64) -> Result<f64>, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm)?, f(rm)?);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    Ok(simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)? + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// `phi_delta(rho) = int_0^rho T_delta(s)(1/eta^2 + F''(s)) ds` by adaptive Simpson.
pub fn phi_delta(spec: &PotentialSpec, eta: f64, rho: f64, delta: f64) -> Result<f64> {
    if !(eta > 0.0 && rho.is_finite() && delta >= 0.0) {
        return Err(Error::Precondition(format!("phi_delta needs eta > 0, delta >= 0, finite rho (got {eta}, {delta}, {rho})")));
    }
    if rho == 0.0 {
        return Ok(0.0);
    }
    let floor = ellipticity_floor(eta);
    let f = |s: f64| -> Result<f64> {
        let c = 1.0 / (eta * eta) + spec.d2(s);
        if c < floor {
            return Err(Error::Ellipticity { rho: s, value: c });
        }
        Ok(truncation_t_delta(s, delta) * c)
    };
    let (fa, fm, fb) = (f(0.0)?, f(0.5 * rho)?, f(rho)?);
    let whole = rho / 6.0 * (fa + 4.0 * fm + fb);
    let scale = (fa.abs() + fb.abs() + 1.0) * rho.abs();
    simpson(&f, 0.0, rho, fa, fm, fb, whole, 1e-12 * scale, 40)
}

const GL_NODES: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
const GL_WEIGHTS: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];

/// Fast pointwise `phi_delta` for the solver: closed form above `delta`,
/// 8-point Gauss-Legendre below.
#[derive(Clone, Debug)]
struct PhiEval {
    eta: f64,
    delta: f64,
    f_at_zero: f64,
    offset: f64,
}

impl PhiEval {
    fn new(spec: &PotentialSpec, eta: f64, delta: f64) -> Self {
        let mut e = PhiEval { eta, delta, f_at_zero: spec.value(0.0), offset: 0.0 };
        if delta > 0.0 {
            e.offset = e.below(spec, delta) - e.closed(spec, delta);
        }
        e
    }

    /// `rho^2/(2 eta^2) + rho F'(rho) - F(rho) + F(0)`, the untruncated primitive.
    fn closed(&self, spec: &PotentialSpec, rho: f64) -> f64 {
        let [f, df, _, _] = spec.derivs(Part::Total, rho);
        rho * rho / (2.0 * self.eta * self.eta) + rho * df - f + self.f_at_zero
    }

    fn below(&self, spec: &PotentialSpec, rho: f64) -> f64 {
        let half = 0.5 * rho;
        let mut s = 0.0;
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            for sgn in [-1.0, 1.0] {
                s += w * phi_delta_prime(spec, self.eta, half * (1.0 + sgn * x), self.delta);
            }
        }
        s * half
    }

    fn eval(&self, spec: &PotentialSpec, rho: f64) -> f64 {
        if self.delta <= 0.0 || rho >= self.delta {
            self.closed(spec, rho) + self.offset
        } else {
            self.below(spec, rho)
        }
    }
}

/// Time integrator of the nonlocal equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum NlchIntegrator {
    SspRk2,
    /// Second-order Runge-Kutta-Legendre super-time-stepping with `stages` stages.
    Rkl2 { stages: usize },
}

#[derive(Clone, Debug)]
pub struct NLCHParams {
    pub kernel: MollifierKernel,
    pub potential: PotentialSpec,
    pub mobility_delta: f64,
    pub cfl_parabolic: f64,
    pub integrator: NlchIntegrator,
    /// Automatic RKL2 steps are capped at `rate_fraction / r`, where `r` is
    /// the relative rate of change `||d_t rho|| / ||rho - mean||`.
    pub rate_fraction: f64,
    phi: PhiEval,
    max_k2: f64,
    max_k2_symbol: f64,
}

impl NLCHParams {
    pub fn new(kernel: MollifierKernel, potential: PotentialSpec, mobility_delta: f64, cfl_parabolic: f64, integrator: NlchIntegrator) -> Result<Self> {
        if !(cfl_parabolic > 0.0 && cfl_parabolic < 1.0) {
            return Err(Error::Precondition(format!("cfl_parabolic must lie in (0, 1), got {cfl_parabolic}")));
        }
        if !(mobility_delta >= 0.0 && mobility_delta.is_finite()) {
            return Err(Error::Precondition(format!("mobility delta must be nonnegative, got {mobility_delta}")));
        }
        if let NlchIntegrator::Rkl2 { stages } = integrator {
            if stages < 2 {
                return Err(Error::Precondition("RKL2 needs at least 2 stages".into()));
            }
        }
        let g = *kernel.grid();
        let mut max_k2 = 0.0f64;
        let mut max_k2_symbol = 0.0f64;
        for i in 0..g.len() {
            let k2 = wavenumber_sq(&g, i);
            max_k2 = max_k2.max(k2);
            max_k2_symbol = max_k2_symbol.max(k2 * kernel.symbol(i).abs());
        }
        let phi = PhiEval::new(&potential, kernel.eta(), mobility_delta);
        Ok(NLCHParams {
            kernel,
            potential,
            mobility_delta,
            cfl_parabolic,
            integrator,
            rate_fraction: DEFAULT_RATE_FRACTION,
            phi,
            max_k2,
            max_k2_symbol,
        })
    }

    /// RKL2 with 128 stages, half the stability limit, no truncation.
    pub fn with_defaults(kernel: MollifierKernel, potential: PotentialSpec) -> Result<Self> {
        Self::new(kernel, potential, 0.0, 0.5, NlchIntegrator::Rkl2 { stages: 128 })
    }

    fn eta(&self) -> f64 {
        self.kernel.eta()
    }

    fn check_grid(&self, s: &CHState) -> Result<()> {
        self.kernel.grid().check_same(s.grid())
    }
}

/// Drift `b = grad(omega * rho) / eta^2`.
pub fn drift(rho: &ScalarField, kernel: &MollifierKernel) -> Result<Vec<ScalarField>> {
    let spec = kernel.spectrum_of(rho)?;
    drift_from(&spec, kernel)
}

fn drift_from(spec: &Spectrum, kernel: &MollifierKernel) -> Result<Vec<ScalarField>> {
    let inv = 1.0 / (kernel.eta() * kernel.eta());
    let smoothed = spec.apply_real(|i| kernel.symbol(i) * inv);
    (0..spec.grid().dim()).map(|a| spectral::derivative_from(&smoothed, a)).collect()
}

/// `div b = Lap(omega * rho) / eta^2`.
pub fn drift_divergence(rho: &ScalarField, kernel: &MollifierKernel) -> Result<ScalarField> {
    let g = *rho.grid();
    let inv = 1.0 / (kernel.eta() * kernel.eta());
    kernel.spectrum_of(rho)?.apply_real(|i| -wavenumber_sq(&g, i) * kernel.symbol(i) * inv).to_field()
}

/// Right-hand side `Lap phi_delta(rho) - div(T_delta(rho) b)`.
pub fn nlch_rhs(rho: &ScalarField, params: &NLCHParams) -> Result<ScalarField> {
    let g = *rho.grid();
    rho.require_finite("nlch_rhs")?;
    let spec = spectral::forward(rho);
    let b = drift_from(&spec, &params.kernel)?;
    let eta = params.eta();
    let floor = ellipticity_floor(eta);
    let mut phi = Vec::with_capacity(g.len());
    for &r in rho.values() {
        let c = 1.0 / (eta * eta) + params.potential.d2(r);
        if c < floor {
            return Err(Error::Ellipticity { rho: r, value: c });
        }
        phi.push(params.phi.eval(&params.potential, r));
    }
    let phi_hat = spectral::forward(&ScalarField::new(g, phi)?);
    let kmax = spectral::max_wavenumber(&g);
    let mut source = phi_hat.source_scale() * kmax * kmax * g.dim() as f64;
    let mut acc: Vec<Complex64> = phi_hat.coeffs().iter().enumerate().map(|(i, c)| c * -wavenumber_sq(&g, i)).collect();
    for (a, ba) in b.iter().enumerate() {
        let flux: Vec<f64> = rho.values().iter().zip(ba.values()).map(|(&r, &bv)| truncation_t_delta(r, params.mobility_delta) * bv).collect();
        let fh = spectral::forward(&ScalarField::new(g, flux)?);
        source += fh.source_scale() * kmax;
        for (i, (o, c)) in acc.iter_mut().zip(fh.coeffs()).enumerate() {
            let k = spectral::wavevector(&g, i)[a];
            *o -= c * Complex64::new(0.0, k);
        }
    }
    Spectrum::from_coeffs(g, acc, source).to_field()
}

/// Spectral-radius bound of the linearized right-hand side.
fn nlch_rate_bound(rho: &ScalarField, params: &NLCHParams) -> Result<f64> {
    let eta = params.eta();
    let mut phi_max = 0.0f64;
    let mut t_max = 0.0f64;
    for &r in rho.values() {
        phi_max = phi_max.max(phi_delta_prime(&params.potential, eta, r, params.mobility_delta).abs());
        t_max = t_max.max(truncation_t_delta(r, params.mobility_delta).abs());
    }
    let b = drift(rho, &params.kernel)?;
    let b_max = b.iter().map(|c| c.norm_linf()).fold(0.0, f64::max);
    Ok(params.max_k2 * phi_max + params.max_k2_symbol * t_max / (eta * eta) + params.max_k2.sqrt() * b_max)
}

pub const DEFAULT_RATE_FRACTION: f64 = 0.1;

/// Stability gain of an `s`-stage RKL2 step over forward Euler.
fn rkl2_gain(stages: usize) -> f64 {
    let s = stages as f64;
    (s * s + s - 2.0) / 4.0
}

/// Forward-Euler limit scaled by `cfl_parabolic`; infinite for a zero rate.
fn euler_dt(rho: &ScalarField, params: &NLCHParams) -> Result<f64> {
    let lam = nlch_rate_bound(rho, params)?;
    Ok(if lam <= 0.0 { f64::INFINITY } else { params.cfl_parabolic * 2.0 / lam })
}

/// Largest accepted step for the configured integrator.
pub fn nlch_stable_dt(state: &CHState, params: &NLCHParams) -> Result<f64> {
    let euler = euler_dt(&state.rho, params)?;
    Ok(match params.integrator {
        NlchIntegrator::SspRk2 => euler,
        NlchIntegrator::Rkl2 { stages } => euler * rkl2_gain(stages),
    })
}

/// Step taken by automatic stepping: the stability limit, and for RKL2 also
/// the accuracy cap `rate_fraction / r`.
pub fn nlch_target_dt(state: &CHState, params: &NLCHParams) -> Result<f64> {
    let stable = nlch_stable_dt(state, params)?;
    if matches!(params.integrator, NlchIntegrator::SspRk2) {
        return Ok(stable);
    }
    let mean = state.rho.mean();
    let spread = state.rho.map(|v| v - mean).norm_l2();
    let rate = nlch_rhs(&state.rho, params)?.norm_l2();
    if spread == 0.0 || rate == 0.0 {
        return Ok(stable);
    }
    Ok(stable.min(params.rate_fraction * spread / rate))
}

/// Fewest stages (at least 2, at most `max`) whose stability limit covers `dt`.
fn rkl2_stages_for(dt: f64, euler: f64, max: usize) -> usize {
    let q = dt / euler;
    let mut s = (((9.0 + 16.0 * q).sqrt() - 1.0) / 2.0).ceil().max(2.0) as usize;
    while s > 2 && rkl2_gain(s - 1) >= q {
        s -= 1;
    }
    while s < max && rkl2_gain(s) < q {
        s += 1;
    }
    s.min(max)
}

fn combine(terms: &[(f64, &[f64])], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (c, v) in terms {
        if *c != 0.0 {
            for (o, x) in out.iter_mut().zip(v.iter()) {
                *o += c * x;
            }
        }
    }
    out
}

fn rkl2(rho: &ScalarField, params: &NLCHParams, dt: f64, stages: usize) -> Result<ScalarField> {
    let g = *rho.grid();
    let n = g.len();
    let s = stages as f64;
    let w1 = 4.0 / (s * s + s - 2.0);
    let b = |j: usize| if j < 2 { 1.0 / 3.0 } else { let j = j as f64; (j * j + j - 2.0) / (2.0 * j * (j + 1.0)) };
    let y0 = rho.values().to_vec();
    let l0 = nlch_rhs(rho, params)?.into_values();
    let mut prev2 = y0.clone();
    let mut prev = combine(&[(1.0, &y0), (b(1) * w1 * dt, &l0)], n);
    for j in 2..=stages {
        let jf = j as f64;
        let mu = (2.0 * jf - 1.0) / jf * b(j) / b(j - 1);
        let nu = -(jf - 1.0) / jf * b(j) / b(j - 2);
        let mu_t = mu * w1;
        let gamma_t = -(1.0 - b(j - 1)) * mu_t;
        let lp = nlch_rhs(&ScalarField::new(g, prev.clone())?, params)?.into_values();
        let next = combine(
            &[(mu, &prev), (nu, &prev2), (1.0 - mu - nu, &y0), (mu_t * dt, &lp), (gamma_t * dt, &l0)],
            n,
        );
        prev2 = std::mem::replace(&mut prev, next);
    }
    ScalarField::new(g, prev)
}

fn ssp_rk2(rho: &ScalarField, params: &NLCHParams, dt: f64) -> Result<ScalarField> {
    let g = *rho.grid();
    let n = g.len();
    let k1 = nlch_rhs(rho, params)?.into_values();
    let y1 = combine(&[(1.0, rho.values()), (dt, &k1)], n);
    let y1f = ScalarField::new(g, y1)?;
    let k2 = nlch_rhs(&y1f, params)?.into_values();
    ScalarField::new(g, combine(&[(0.5, rho.values()), (0.5, y1f.values()), (0.5 * dt, &k2)], n))
}

/// One explicit step of the nonlocal equation.
pub fn step_nlch(state: &CHState, params: &NLCHParams, dt: f64) -> Result<CHState> {
    params.check_grid(state)?;
    let euler = euler_dt(&state.rho, params)?;
    let limit = match params.integrator {
        NlchIntegrator::SspRk2 => euler,
        NlchIntegrator::Rkl2 { stages } => euler * rkl2_gain(stages),
    };
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-9) {
        return Err(Error::StepSize { dt, limit });
    }
    let rho = match params.integrator {
        NlchIntegrator::SspRk2 => ssp_rk2(&state.rho, params, dt)?,
        NlchIntegrator::Rkl2 { stages } => rkl2(&state.rho, params, dt, rkl2_stages_for(dt, euler, stages))?,
    };
    let time = state.time + dt;
    if !rho.is_finite() {
        return Err(Error::Divergence { time });
    }
    Ok(CHState { rho, time })
}

/// `int rho |grad mu|^2` for a chemical potential `mu`.
fn mobility_dissipation(rho: &ScalarField, mu: &ScalarField) -> Result<f64> {
    let g = spectral::gradient(mu)?;
    let sq = g.norm_sq_field();
    Ok(rho.zip_map(&sq, |r, s| r * s)?.integrate())
}

impl Dynamics for NLCHParams {
    type State = CHState;

    fn max_stable_dt(&self, s: &CHState) -> Result<f64> {
        nlch_target_dt(s, self)
    }

    fn step(&self, s: &CHState, dt: f64) -> Result<CHState> {
        step_nlch(s, self, dt)
    }

    fn dissipation_rate(&self, s: &CHState) -> Result<f64> {
        let mu = diagnostics::chemical_potential(&s.rho, &self.kernel, &self.potential)?;
        mobility_dissipation(&s.rho, &mu)
    }

    fn sample(&self, s: &CHState) -> Result<Sample> {
        Ok(Sample { mass: s.mass(), energy: diagnostics::energy_nlch(&s.rho, &self.kernel, &self.potential)?, kinetic: 0.0 })
    }
}

pub fn run_nlch(
    initial: CHState,
    params: &NLCHParams,
    t_end: f64,
    opts: &RunOptions,
    observer: &mut dyn FnMut(&CHState) -> Result<()>,
) -> Result<Trajectory<CHState>> {
    params.check_grid(&initial)?;
    if !(params.rate_fraction > 0.0) {
        return Err(Error::Precondition(format!("rate_fraction must be positive, got {}", params.rate_fraction)));
    }
    run::integrate(params, initial, t_end, opts, observer)
}

#[derive(Clone, Debug)]
pub struct LCHParams {
    pub diffusivity: f64,
    pub potential: PotentialSpec,
    /// Step size relative to the time scale of the slowest nonconstant mode.
    pub dt_factor: f64,
    /// Coefficient of the implicit `-S Lap` stabilizer; `None` measures
    /// `max |rho F''(rho)|` every step.
    pub stabilizer: Option<f64>,
}

impl LCHParams {
    pub fn new(diffusivity: f64, potential: PotentialSpec, dt_factor: f64) -> Result<Self> {
        if !(diffusivity.is_finite() && diffusivity > 0.0) {
            return Err(Error::Precondition(format!("diffusivity must be positive, got {diffusivity}")));
        }
        if !(dt_factor.is_finite() && dt_factor > 0.0) {
            return Err(Error::Precondition(format!("dt_factor must be positive, got {dt_factor}")));
        }
        Ok(LCHParams { diffusivity, potential, dt_factor, stabilizer: None })
    }

    fn stabilizer_for(&self, rho: &ScalarField) -> f64 {
        self.stabilizer.unwrap_or_else(|| {
            rho.values().iter().map(|&r| (r * self.potential.d2(r)).abs()).fold(0.0, f64::max)
        })
    }
}

/// `-D Lap rho + F'(rho)`.
pub fn local_chemical_potential(rho: &ScalarField, params: &LCHParams) -> Result<ScalarField> {
    let lap = spectral::laplacian(rho)?;
    params.potential.apply(rho, 1).zip_map(&lap, |f, l| f - params.diffusivity * l)
}

/// `dt_factor / (mean(rho) (D k1^4 + S k1^2) + 1)` with `k1 = 2 pi / L`.
pub fn lch_dt(state: &CHState, params: &LCHParams) -> f64 {
    let k1 = 2.0 * std::f64::consts::PI / state.grid().length();
    let k2 = k1 * k1;
    let mean = state.rho.mean().abs();
    let s = params.stabilizer_for(&state.rho);
    params.dt_factor / (mean * (params.diffusivity * k2 * k2 + s * k2) + 1.0)
}

/// Linearly implicit step: `mean(rho) D Lap^2 - S Lap` implicit, the rest explicit.
pub fn step_lch(state: &CHState, params: &LCHParams, dt: f64) -> Result<CHState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::StepSize { dt, limit: f64::INFINITY });
    }
    let g = *state.grid();
    let rho = &state.rho;
    rho.require_finite("step_lch")?;
    let mu = local_chemical_potential(rho, params)?;
    let grad_mu = spectral::gradient(&mu)?;
    let explicit = spectral::divergence(&grad_mu.mul_scalar_field(rho)?)?;
    let mean = rho.mean();
    let s = params.stabilizer_for(rho);
    let d = params.diffusivity;
    let rho_hat = spectral::forward(rho);
    let e_hat = spectral::forward(&explicit);
    let coeffs = (0..g.len())
        .map(|i| {
            let k2 = wavenumber_sq(&g, i);
            let a = mean * d * k2 * k2 + s * k2;
            rho_hat.coeffs()[i] + e_hat.coeffs()[i] * (dt / (1.0 + dt * a))
        })
        .collect();
    let source = rho_hat.source_scale() + dt * e_hat.source_scale();
    let rho_new = Spectrum::from_coeffs(g, coeffs, source).to_field()?;
    let time = state.time + dt;
    if !rho_new.is_finite() {
        return Err(Error::Divergence { time });
    }
    Ok(CHState { rho: rho_new, time })
}

impl Dynamics for LCHParams {
    type State = CHState;

    fn max_stable_dt(&self, s: &CHState) -> Result<f64> {
        Ok(lch_dt(s, self))
    }

    fn step(&self, s: &CHState, dt: f64) -> Result<CHState> {
        step_lch(s, self, dt)
    }

    fn dissipation_rate(&self, s: &CHState) -> Result<f64> {
        mobility_dissipation(&s.rho, &local_chemical_potential(&s.rho, self)?)
    }

    fn sample(&self, s: &CHState) -> Result<Sample> {
        Ok(Sample { mass: s.mass(), energy: diagnostics::energy_lch(&s.rho, self.diffusivity, &self.potential)?, kinetic: 0.0 })
    }
}

pub fn run_lch(
    initial: CHState,
    params: &LCHParams,
    t_end: f64,
    opts: &RunOptions,
    observer: &mut dyn FnMut(&CHState) -> Result<()>,
) -> Result<Trajectory<CHState>> {
    run::integrate(params, initial, t_end, opts, observer)
}

/// Residuals of the weak formulation
/// `int rho(t) psi - int rho(0) psi + int_0^t int rho grad mu . grad psi = 0`
/// against low-mode trigonometric test functions, time integral by the
/// trapezoidal rule over the stored frames. Returns `max_t |r|` per test function.
pub fn weak_residuals(frames: &[CHState], params: &LCHParams, count: usize) -> Result<Vec<f64>> {
    let first = frames.first().ok_or_else(|| Error::Precondition("no frames".into()))?;
    let g = *first.grid();
    let l = g.length();
    let tests: Vec<ScalarField> = (0..count)
        .map(|j| {
            let m = (j / 2 + 1) as f64;
            let axis = if g.dim() == 2 { (j / 2) % 2 } else { 0 };
            let w = 2.0 * std::f64::consts::PI * m / l;
            g.sample(move |x| if j % 2 == 0 { (w * x[axis]).cos() } else { (w * x[axis]).sin() })
        })
        .collect();
    let mut flux_terms: Vec<Vec<f64>> = Vec::with_capacity(frames.len());
    for f in frames {
        let mu = local_chemical_potential(&f.rho, params)?;
        let gm = spectral::gradient(&mu)?.mul_scalar_field(&f.rho)?;
        let row = tests
            .iter()
            .map(|psi| {
                let gp = spectral::gradient(psi)?;
                let mut s = 0.0;
                for (a, b) in gm.components().iter().zip(gp.components()) {
                    s += a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
                }
                Ok(s * g.cell_volume())
            })
            .collect::<Result<Vec<_>>>()?;
        flux_terms.push(row);
    }
    let mut out = vec![0.0f64; count];
    for (j, psi) in tests.iter().enumerate() {
        let base = first.rho.zip_map(psi, |a, b| a * b)?.integrate();
        let mut integral = 0.0;
        for k in 1..frames.len() {
            let h = frames[k].time - frames[k - 1].time;
            integral += 0.5 * h * (flux_terms[k][j] + flux_terms[k - 1][j]);
            let now = frames[k].rho.zip_map(psi, |a, b| a * b)?.integrate();
            out[j] = out[j].max((now - base + integral).abs());
        }
    }
    Ok(out)
}

/// Two-sided exponential envelope of the nonlocal equation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvelopeReport {
    pub sigma_lower: f64,
    pub sigma_upper: f64,
    pub times: Vec<f64>,
    /// `int_0^t ||div b||_inf`.
    pub drift_integral: Vec<f64>,
    pub min_rho: Vec<f64>,
    pub max_rho: Vec<f64>,
    /// Violations with `min rho0` below and `max rho0` above.
    pub lower_violations: usize,
    pub upper_violations: usize,
    /// Upper-bound violations when `min rho0` is used on both sides.
    pub same_sigma_upper_violations: usize,
    /// Smallest `min rho - lower envelope` over the samples.
    pub worst_lower_margin: f64,
    /// Smallest `upper envelope - max rho`.
    pub worst_upper_margin: f64,
}

impl EnvelopeReport {
    pub fn violations(&self) -> usize {
        self.lower_violations + self.upper_violations
    }
}

/// Checks `sigma e^{-I(t)} <= rho <= sigma_bar e^{I(t)}` with tolerance
/// `abs_slack + dt * ||div b||_inf * 2` at every stored frame.
pub fn max_principle_envelope(
    frames: &[CHState],
    kernel: &MollifierKernel,
    sigma: f64,
    abs_slack: f64,
    dt: f64,
) -> Result<EnvelopeReport> {
    let first = frames.first().ok_or_else(|| Error::Precondition("no frames".into()))?;
    if sigma > first.rho.min() {
        return Err(Error::Precondition(format!("sigma {sigma} exceeds min rho0 = {}", first.rho.min())));
    }
    let sigma_upper = first.rho.max();
    let mut times = Vec::new();
    let mut integral = Vec::new();
    let mut min_rho = Vec::new();
    let mut max_rho = Vec::new();
    let (mut lower_v, mut upper_v, mut same_v) = (0, 0, 0);
    let (mut worst_l, mut worst_u) = (f64::INFINITY, f64::INFINITY);
    let mut acc = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for f in frames {
        let divb = drift_divergence(&f.rho, kernel)?.norm_linf();
        if let Some((t0, d0)) = prev {
            acc += 0.5 * (f.time - t0) * (d0 + divb);
        }
        prev = Some((f.time, divb));
        let slack = abs_slack + 2.0 * dt * divb;
        let (lo, hi) = (f.rho.min(), f.rho.max());
        let lower = sigma * (-acc).exp();
        let upper = sigma_upper * acc.exp();
        worst_l = worst_l.min(lo - lower);
        worst_u = worst_u.min(upper - hi);
        lower_v += usize::from(lo < lower - slack);
        upper_v += usize::from(hi > upper + slack);
        same_v += usize::from(hi > sigma * acc.exp() + slack);
        times.push(f.time);
        integral.push(acc);
        min_rho.push(lo);
        max_rho.push(hi);
    }
    Ok(EnvelopeReport {
        sigma_lower: sigma,
        sigma_upper,
        times,
        drift_integral: integral,
        min_rho,
        max_rho,
        lower_violations: lower_v,
        upper_violations: upper_v,
        same_sigma_upper_violations: same_v,
        worst_lower_margin: worst_l,
        worst_upper_margin: worst_u,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionReport {
    pub times: Vec<f64>,
    /// `||rho1 - rho2||_1` at every sample.
    pub distances: Vec<f64>,
    /// Smallest `C` with `d(t) <= e^{C t} d(0)` on the samples.
    pub fitted_rate: f64,
    /// Rate bound built from kernel derivative norms and the solutions' L1 norms.
    pub bound_rate: f64,
    /// Samples exceeding `e^{bound_rate t} d(0)`.
    pub excursions: usize,
}

/// Runs both initial data with the same parameters and compares them in L1.
pub fn l1_contraction_test(
    initial1: CHState,
    initial2: CHState,
    params: &NLCHParams,
    t_end: f64,
    opts: &RunOptions,
) -> Result<ContractionReport> {
    let opts = RunOptions { store_frames: true, ..opts.clone() };
    let a = run_nlch(initial1, params, t_end, &opts, &mut |_| Ok(()))?;
    let b = run_nlch(initial2, params, t_end, &opts, &mut |_| Ok(()))?;
    contraction_report(&a.frames, &b.frames, params)
}

/// The contraction report for two stored trajectories sampled at the same times.
pub fn contraction_report(a: &[CHState], b: &[CHState], params: &NLCHParams) -> Result<ContractionReport> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::Precondition(format!("need two equally sampled nonempty trajectories, got {} and {} frames", a.len(), b.len())));
    }
    let (grad_w, hess_w) = params.kernel.derivative_sup_norms();
    let eta2 = params.eta() * params.eta();
    let mut times = Vec::new();
    let mut dist = Vec::new();
    let mut bound = 0.0f64;
    for (fa, fb) in a.iter().zip(b) {
        if (fa.time - fb.time).abs() > 1e-12 * (1.0 + fa.time.abs()) {
            return Err(Error::Precondition(format!("sample times differ: {} vs {}", fa.time, fb.time)));
        }
        times.push(fa.time);
        dist.push(fa.rho.sub(&fb.rho)?.norm_l1());
        let grad2 = spectral::gradient(&fb.rho)?;
        let grad_l1 = grad2.norm_sq_field().map(f64::sqrt).integrate();
        let (l1a, l1b) = (fa.rho.norm_l1(), fb.rho.norm_l1());
        bound = bound.max(hess_w / eta2 * (l1a + l1b) + grad_w / eta2 * grad_l1 + hess_w / eta2 * l1a);
    }
    let d0 = dist[0];
    let mut fitted = f64::NEG_INFINITY;
    let mut excursions = 0;
    for (t, d) in times.iter().zip(&dist).skip(1) {
        if d0 > 0.0 {
            fitted = fitted.max((d / d0).ln() / t);
            excursions += usize::from(*d > (bound * t).exp() * d0 * (1.0 + 1e-9));
        } else {
            fitted = fitted.max(0.0);
            excursions += usize::from(*d > 1e-10);
        }
    }
    Ok(ContractionReport { times, distances: dist, fitted_rate: fitted, bound_rate: bound, excursions })
}
