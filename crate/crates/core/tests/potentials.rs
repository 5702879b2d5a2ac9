//! Potential derivatives and pressure identities against finite differences.

use ekch_core::potential::{
    builtin_double_well, builtin_power, pressure, pressure_prime, pressure_second, relative_potential, relative_pressure,
    steep_wall, Part,
};
use ekch_core::{PotentialSpec, PressureParams};
use proptest::prelude::*;

fn central(f: impl Fn(f64) -> f64, u: f64, h: f64) -> f64 {
    (f(u + h) - f(u - h)) / (2.0 * h)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-8)
}

fn all_potentials() -> Vec<PotentialSpec> {
    vec![builtin_double_well(), builtin_power(3.0).unwrap(), builtin_power(4.5).unwrap(), steep_wall(10.0, 0.3)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn derivatives_match_central_differences(u in 0.05f64..2.0, which in 0usize..4) {
        let spec = &all_potentials()[which];
        let h = 1e-5;
        for part in [Part::Convex, Part::Bounded, Part::Total] {
            let [_, d1, d2, d3] = spec.derivs(part, u);
            let fd1 = central(|x| spec.derivs(part, x)[0], u, h);
            let fd2 = central(|x| spec.derivs(part, x)[1], u, h);
            let fd3 = central(|x| spec.derivs(part, x)[2], u, h);
            prop_assert!((d1 - fd1).abs() <= 1e-6 * d1.abs().max(1.0), "{} d1 at {}", spec.name, u);
            prop_assert!((d2 - fd2).abs() <= 1e-6 * d2.abs().max(1.0), "{} d2 at {}", spec.name, u);
            prop_assert!((d3 - fd3).abs() <= 1e-6 * d3.abs().max(1.0), "{} d3 at {}", spec.name, u);
        }
    }

    #[test]
    fn pressure_derivatives_match_differences(rho in 0.05f64..2.0, eta in 0.05f64..1.0, which in 0usize..3) {
        let spec = &all_potentials()[which];
        let pp = PressureParams::new(eta).unwrap();
        let h = 1e-5;
        let fd1 = central(|r| pressure(spec, &pp, r).unwrap(), rho, h);
        let fd2 = central(|r| pressure_prime(spec, &pp, r).unwrap(), rho, h);
        prop_assert!(rel(pressure_prime(spec, &pp, rho).unwrap(), fd1) < 1e-6);
        prop_assert!(rel(pressure_second(spec, &pp, rho).unwrap(), fd2) < 1e-6);
    }

    // p'(rho) = rho (F''(rho) + 1/eta^2), the identity behind the momentum flux
    #[test]
    fn pressure_gradient_identity(rho in 0.01f64..2.0, eta in 0.05f64..1.0) {
        let spec = builtin_double_well();
        let pp = PressureParams::new(eta).unwrap();
        let expected = rho * (spec.d2(rho) + 1.0 / (eta * eta));
        prop_assert!(rel(pressure_prime(&spec, &pp, rho).unwrap(), expected) < 1e-13);
    }

    #[test]
    fn relative_quantities_vanish_on_the_diagonal_and_are_convex_for_power(rho in 0.0f64..2.0, p in 0.0f64..2.0) {
        let spec = builtin_power(4.0).unwrap();
        let pp = PressureParams::new(0.1).unwrap();
        prop_assert!(relative_potential(&spec, rho, p) >= -1e-12);
        prop_assert!(relative_potential(&spec, p, p).abs() < 1e-12);
        prop_assert!(relative_pressure(&spec, &pp, p, p).unwrap().abs() < 1e-9);
    }
}

#[test]
fn closed_form_values() {
    let cube = builtin_power(3.0).unwrap();
    assert!((cube.value(2.0) - 8.0).abs() < 1e-14);
    // p = rho F' - F + rho^2 / (2 eta^2) = 3 - 1 + 1/2
    let p = pressure(&cube, &PressureParams::new(1.0).unwrap(), 1.0).unwrap();
    assert!((p - 2.5).abs() < 1e-14);
    let dw = builtin_double_well();
    assert!((dw.value(0.5) - 0.0625).abs() < 1e-14);
    assert!((dw.d2(0.5) + 1.0).abs() < 1e-13);
    assert!(dw.value(0.0).abs() < 1e-14 && dw.value(1.0).abs() < 1e-14);
}

#[test]
fn negative_density_is_refused() {
    let pp = PressureParams::new(0.1).unwrap();
    assert!(pressure(&builtin_double_well(), &pp, -0.1).is_err());
    assert!(PressureParams::new(0.0).is_err());
}
