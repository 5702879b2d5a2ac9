//! Solver behaviour against linearized closed forms and structural identities.

use std::f64::consts::PI;

use ekch_core::ch::{run_nlch, CHState, NLCHParams, NlchIntegrator};
use ekch_core::diagnostics::{
    energy_nlch, error_term_e, error_term_e_from_velocity, limit_velocity_u, relative_entropy_theta, RelativeEntropyInputs,
};
use ekch_core::ek::{run_ek, EKParams, EKState};
use ekch_core::potential::{builtin_double_well, builtin_power};
use ekch_core::run::{RunOptions, TimeStep};
use ekch_core::{build_kernel, spectral, Profile, ScalarField, TorusGrid, VectorField};
use proptest::prelude::*;

fn mode_amplitude(f: &ScalarField, m: i64) -> f64 {
    let g = f.grid();
    let idx = g.wrap_index(m, 0);
    2.0 * spectral::forward(f).coeffs()[idx].re / g.len() as f64
}

// Linearizing about a constant state at rest gives, per Fourier mode,
// eps^2 a'' + a' + lambda a = 0 with lambda = k^2 rho (F''(rho) + b_k),
// b_k the eigenvalue of the nonlocal operator.
#[test]
fn ek_linear_mode_follows_damped_oscillator() {
    let g = TorusGrid::unit(1, 64).unwrap();
    let k = build_kernel(Profile::Quartic, 0.1, &g).unwrap();
    let pot = builtin_power(4.0).unwrap();
    let (mean, a0, eps) = (0.5, 1e-6, 0.05);
    let kk = 2.0 * PI;
    let lambda = kk * kk * mean * (pot.d2(mean) + k.b_eta_eigenvalue(k.index_of_mode([1, 0])));
    let disc = 1.0 - 4.0 * eps * eps * lambda;
    let exact = |t: f64| {
        // a(0) = a0, a'(0) = 0
        let e2 = eps * eps;
        if disc > 0.0 {
            let s = disc.sqrt();
            let (r1, r2) = ((-1.0 + s) / (2.0 * e2), (-1.0 - s) / (2.0 * e2));
            a0 * (r2 * (r1 * t).exp() - r1 * (r2 * t).exp()) / (r2 - r1)
        } else {
            let (re, im) = (-1.0 / (2.0 * e2), (-disc).sqrt() / (2.0 * e2));
            a0 * (re * t).exp() * ((im * t).cos() - re / im * (im * t).sin())
        }
    };
    let rho = g.sample(|x| mean + a0 * (kk * x[0]).cos());
    let params = EKParams::new(eps, k, pot).unwrap();
    let opts = RunOptions { sample_interval: 0.01, time_step: TimeStep::Fixed(1e-5), ..RunOptions::default() };
    let traj = run_ek(EKState::at_rest(rho, 0.0), &params, 0.05, &opts, &mut |_| Ok(())).unwrap();
    for f in &traj.frames {
        let got = mode_amplitude(&f.rho, 1);
        assert!((got - exact(f.time)).abs() < 2e-3 * a0, "t={} got {got} exact {}", f.time, exact(f.time));
    }
}

#[test]
fn nlch_linear_mode_decays_at_the_linear_rate() {
    let g = TorusGrid::unit(1, 64).unwrap();
    let k = build_kernel(Profile::Bump, 0.1, &g).unwrap();
    let pot = builtin_power(4.0).unwrap();
    let (mean, a0) = (0.5, 1e-7);
    let lambda = 4.0 * PI * PI * mean * (pot.d2(mean) + k.b_eta_eigenvalue(k.index_of_mode([1, 0])));
    let rho = g.sample(|x| mean + a0 * (2.0 * PI * x[0]).cos());
    let params = NLCHParams::new(k, pot, 0.0, 0.5, NlchIntegrator::SspRk2).unwrap();
    let opts = RunOptions { sample_interval: 0.005, ..RunOptions::default() };
    let traj = run_nlch(CHState::new(rho, 0.0), &params, 0.02, &opts, &mut |_| Ok(())).unwrap();
    for f in &traj.frames {
        let expected = a0 * (-lambda * f.time).exp();
        let got = mode_amplitude(&f.rho, 1);
        assert!((got - expected).abs() < 1e-4 * expected, "t={} got {got} expected {expected}", f.time);
    }
}

#[test]
fn theta_vanishes_on_the_limit_profile_and_is_positive_away() {
    let g = TorusGrid::unit(1, 128).unwrap();
    let k = build_kernel(Profile::Quartic, 0.1, &g).unwrap();
    let pot = builtin_power(4.0).unwrap();
    let eps = 0.02;
    let p = g.sample(|x| 0.5 + 0.2 * (2.0 * PI * x[0]).cos());
    let u = limit_velocity_u(&p, &k, &pot, eps).unwrap();
    let m = u.mul_scalar_field(&p).unwrap();
    let at = |rho: &ScalarField, mom: &VectorField| {
        relative_entropy_theta(&RelativeEntropyInputs {
            rho,
            momentum: mom,
            p: &p,
            u: &u,
            kernel: &k,
            potential: &pot,
            epsilon: eps,
            density_floor: 1e-12,
        })
        .unwrap()
    };
    assert!(at(&p, &m).total.abs() < 1e-15);
    let rho = g.sample(|x| 0.5 + 0.1 * (4.0 * PI * x[0]).sin() + 0.2 * (2.0 * PI * x[0]).cos());
    let th = at(&rho, &VectorField::zeros(g));
    assert!(th.kinetic > 0.0 && th.potential > 0.0 && th.nonlocal > 0.0);
    // kinetic addend at rest is int rho |U|^2 / 2
    let direct: f64 = rho.values().iter().zip(&u.components()[0]).map(|(r, v)| 0.5 * r * v * v).sum::<f64>() * g.cell_volume();
    assert!((th.kinetic - direct).abs() < 1e-14 * direct);
}

#[test]
fn limit_velocity_is_linear_in_eps() {
    let g = TorusGrid::unit(2, 32).unwrap();
    let k = build_kernel(Profile::Bump, 0.2, &g).unwrap();
    let pot = builtin_double_well();
    let p = g.sample(|x| 0.5 + 0.1 * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).sin());
    let u1 = limit_velocity_u(&p, &k, &pot, 0.01).unwrap();
    let u3 = limit_velocity_u(&p, &k, &pot, 0.03).unwrap();
    assert!(u3.sub(&u1.scale(3.0)).unwrap().norm_linf() < 1e-13 * u3.norm_linf());
}

#[test]
fn error_term_has_equivalent_velocity_form() {
    let g = TorusGrid::unit(1, 64).unwrap();
    let k = build_kernel(Profile::Quartic, 0.1, &g).unwrap();
    let pot = builtin_double_well();
    let h = 1e-3;
    let frames: Vec<ScalarField> =
        (0..3).map(|j| g.sample(|x| 0.5 + 0.2 * (2.0 * PI * x[0] - j as f64 * h).cos())).collect();
    let refs = [&frames[0], &frames[1], &frames[2]];
    let a = error_term_e(refs, h, &k, &pot, 0.01).unwrap();
    let b = error_term_e_from_velocity(refs, h, &k, &pot, 0.01).unwrap();
    assert!(a.sub(&b).unwrap().norm_linf() <= 1e-10 * a.norm_linf().max(1e-300));
}

#[test]
fn energy_of_a_constant_is_the_potential_times_volume() {
    let g = TorusGrid::new(2, 16, 2.0).unwrap();
    let k = build_kernel(Profile::Bump, 0.5, &g).unwrap();
    let c = ScalarField::constant(g, 0.5);
    // F(1/2) = 1/16 on a torus of area 4
    assert!((energy_nlch(&c, &k, &builtin_double_well()).unwrap() - 0.25).abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn short_runs_conserve_mass(a in 0.0f64..0.2, b in 0.0f64..0.2, m in 1i64..4) {
        let g = TorusGrid::unit(1, 64).unwrap();
        let k = build_kernel(Profile::Quartic, 0.1, &g).unwrap();
        let pot = builtin_double_well();
        let rho = g.sample(|x| 0.5 + a * (2.0 * PI * m as f64 * x[0]).cos() + b * (2.0 * PI * x[0]).sin());
        let mass0 = rho.integrate();
        let opts = RunOptions { sample_interval: 0.005, ..RunOptions::default() };
        let nl = run_nlch(CHState::new(rho.clone(), 0.0), &NLCHParams::with_defaults(k.clone(), pot.clone()).unwrap(), 0.01, &opts, &mut |_| Ok(())).unwrap();
        let ek = run_ek(EKState::at_rest(rho, 0.0), &EKParams::new(0.05, k, pot).unwrap(), 0.01, &opts, &mut |_| Ok(())).unwrap();
        for m in nl.series.mass.iter().chain(&ek.series.mass) {
            prop_assert!((m - mass0).abs() <= 1e-12 * mass0);
        }
        // energy never increases along either flow
        for w in nl.series.energy.windows(2).chain(ek.series.energy.windows(2)) {
            prop_assert!(w[1] <= w[0] + 1e-13);
        }
    }
}
