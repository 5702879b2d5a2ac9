//! Potentials `F = F1 + F2` (convex part plus bounded-curvature part), the
//! pressure `p(rho) = rho F'(rho) - F(rho) + rho^2 / (2 eta^2)`, Taylor
//! remainders, and sampling checks of the structural inequalities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::par::Exec;

/// Building block of a potential, with derivatives up to third order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Term {
    /// `sum_j coeffs[j] u^j`.
    Poly { coeffs: Vec<f64> },
    /// `coef |u|^gamma`.
    AbsPower { coef: f64, gamma: f64 },
    /// `amp exp(-(u - center)^2 / (2 width^2))`.
    Gaussian { amp: f64, center: f64, width: f64 },
    /// `amp exp(-u / scale)`.
    ExpDecay { amp: f64, scale: f64 },
}

impl Term {
    /// `[g, g', g'', g''']` at `u`.
    pub fn eval(&self, u: f64) -> [f64; 4] {
        match self {
            Term::Poly { coeffs } => {
                // Horner for the value and first three derivatives at once
                let (mut d0, mut d1, mut d2, mut d3) = (0.0, 0.0, 0.0, 0.0);
                for &c in coeffs.iter().rev() {
                    d3 = d3 * u + d2;
                    d2 = d2 * u + d1;
                    d1 = d1 * u + d0;
                    d0 = d0 * u + c;
                }
                [d0, d1, 2.0 * d2, 6.0 * d3]
            }
            Term::AbsPower { coef, gamma } => {
                let a = u.abs();
                let s = u.signum();
                let g = *gamma;
                let pow = |e: f64| if a == 0.0 { 0.0 } else { a.powf(e) };
                [
                    coef * pow(g),
                    coef * g * pow(g - 1.0) * s,
                    coef * g * (g - 1.0) * pow(g - 2.0),
                    coef * g * (g - 1.0) * (g - 2.0) * pow(g - 3.0) * s,
                ]
            }
            Term::Gaussian { amp, center, width } => {
                let x = u - center;
                let w2 = width * width;
                let g = amp * (-x * x / (2.0 * w2)).exp();
                [
                    g,
                    -x / w2 * g,
                    (x * x / (w2 * w2) - 1.0 / w2) * g,
                    (3.0 * x / (w2 * w2) - x * x * x / (w2 * w2 * w2)) * g,
                ]
            }
            Term::ExpDecay { amp, scale } => {
                let g = amp * (-u / scale).exp();
                let r = -1.0 / scale;
                [g, r * g, r * r * g, r * r * r * g]
            }
        }
    }
}

fn sum_terms(terms: &[Term], u: f64) -> [f64; 4] {
    terms.iter().fold([0.0; 4], |mut acc, t| {
        let v = t.eval(u);
        for i in 0..4 {
            acc[i] += v[i];
        }
        acc
    })
}

/// Which part of the split to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Convex,
    Bounded,
    Total,
}

/// `F = F1 + F2` with `F1` convex and nonnegative, `F2''` bounded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub name: String,
    pub f1: Vec<Term>,
    pub f2: Vec<Term>,
    pub growth_k: f64,
}

/// Shape of the bounded bump in the double-well split.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleWellSplit {
    /// Width of the Gaussian centred at `1/2`.
    pub width: f64,
    /// `sup |F2''|`, attained at the centre.
    pub curvature: f64,
    /// Constant moved from `F2` into `F1` to keep `F1 >= 0`.
    pub shift: f64,
}

impl Default for DoubleWellSplit {
    fn default() -> Self {
        DoubleWellSplit { width: 0.4, curvature: 1.1, shift: 0.12 }
    }
}

/// `F(u) = u^2 (u - 1)^2` with the default split.
pub fn builtin_double_well() -> PotentialSpec {
    double_well_with(DoubleWellSplit::default())
}

/// `F(u) = u^2 (u - 1)^2` with `F2 = A g(u) - shift`, `g` a Gaussian bump at
/// `1/2`, and `F1 = F - F2`. `F''` dips to `-1` at `1/2`; a curvature above 1
/// makes `F1` convex.
pub fn double_well_with(split: DoubleWellSplit) -> PotentialSpec {
    let amp = split.curvature * split.width * split.width;
    PotentialSpec {
        name: "double_well".into(),
        f1: vec![
            Term::Poly { coeffs: vec![split.shift, 0.0, 1.0, -2.0, 1.0] },
            Term::Gaussian { amp: -amp, center: 0.5, width: split.width },
        ],
        f2: vec![
            Term::Gaussian { amp, center: 0.5, width: split.width },
            Term::Poly { coeffs: vec![-split.shift] },
        ],
        growth_k: 4.0,
    }
}

/// `F(u) = |u|^gamma`, convex, `F2 = 0`.
pub fn builtin_power(gamma: f64) -> Result<PotentialSpec> {
    if !(gamma.is_finite() && gamma > 2.0) {
        return Err(Error::Potential(format!("power exponent must exceed 2, got {gamma}")));
    }
    Ok(PotentialSpec {
        name: format!("power_{gamma}"),
        f1: vec![Term::AbsPower { coef: 1.0, gamma }],
        f2: vec![],
        growth_k: gamma,
    })
}

/// Deliberately invalid potential for negative controls: `F1 = u^4`,
/// `F2 = -K s^2 exp(-u/s)` whose curvature is unbounded as `u -> -inf` and
/// of size `K` near the origin.
pub fn steep_wall(strength: f64, scale: f64) -> PotentialSpec {
    PotentialSpec {
        name: "steep_wall".into(),
        f1: vec![Term::Poly { coeffs: vec![0.0, 0.0, 0.0, 0.0, 1.0] }],
        f2: vec![Term::ExpDecay { amp: -strength * scale * scale, scale }],
        growth_k: 4.0,
    }
}

impl PotentialSpec {
    /// `[F, F', F'', F''']` of one part at `u`.
    pub fn derivs(&self, part: Part, u: f64) -> [f64; 4] {
        match part {
            Part::Convex => sum_terms(&self.f1, u),
            Part::Bounded => sum_terms(&self.f2, u),
            Part::Total => {
                let a = sum_terms(&self.f1, u);
                let b = sum_terms(&self.f2, u);
                [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
            }
        }
    }

    pub fn value(&self, u: f64) -> f64 {
        self.derivs(Part::Total, u)[0]
    }

    pub fn d1(&self, u: f64) -> f64 {
        self.derivs(Part::Total, u)[1]
    }

    pub fn d2(&self, u: f64) -> f64 {
        self.derivs(Part::Total, u)[2]
    }

    pub fn d3(&self, u: f64) -> f64 {
        self.derivs(Part::Total, u)[3]
    }

    /// Lebesgue exponent `s = 2k/(k-1)` implied by the growth exponent.
    pub fn exponent_s(&self) -> f64 {
        2.0 * self.growth_k / (self.growth_k - 1.0)
    }

    /// Pointwise `F^(order)` of a field.
    pub fn apply(&self, f: &ScalarField, order: usize) -> ScalarField {
        f.map(|u| self.derivs(Part::Total, u)[order.min(3)])
    }

    /// `max |g^(order)|` of one part over `samples + 1` equispaced points of `[lo, hi]`.
    pub fn sup_abs(&self, part: Part, order: usize, lo: f64, hi: f64, samples: usize) -> f64 {
        let samples = samples.max(1);
        (0..=samples)
            .map(|i| lo + (hi - lo) * i as f64 / samples as f64)
            .map(|u| self.derivs(part, u)[order.min(3)].abs())
            .fold(0.0, f64::max)
    }

    /// `min g^(order)` of one part on the same sample set.
    pub fn min_of(&self, part: Part, order: usize, lo: f64, hi: f64, samples: usize) -> f64 {
        let samples = samples.max(1);
        (0..=samples)
            .map(|i| lo + (hi - lo) * i as f64 / samples as f64)
            .map(|u| self.derivs(part, u)[order.min(3)])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Carrier of the `1/(2 eta^2)` term in the pressure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PressureParams {
    pub eta: f64,
}

impl PressureParams {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::Precondition(format!("eta must be positive, got {eta}")));
        }
        Ok(PressureParams { eta })
    }

    fn inv_eta2(&self) -> f64 {
        1.0 / (self.eta * self.eta)
    }
}

fn require_density(rho: f64) -> Result<()> {
    if rho.is_finite() && rho >= 0.0 {
        Ok(())
    } else {
        Err(Error::Precondition(format!("density must be nonnegative, got {rho}")))
    }
}

/// `rho F'(rho) - F(rho) + rho^2 / (2 eta^2)`.
pub fn pressure(spec: &PotentialSpec, pp: &PressureParams, rho: f64) -> Result<f64> {
    require_density(rho)?;
    Ok(pressure_unchecked(spec, pp, rho))
}

pub(crate) fn pressure_unchecked(spec: &PotentialSpec, pp: &PressureParams, rho: f64) -> f64 {
    let [f, f1, _, _] = spec.derivs(Part::Total, rho);
    rho * f1 - f + 0.5 * rho * rho * pp.inv_eta2()
}

/// `rho (F''(rho) + 1/eta^2)`.
pub fn pressure_prime(spec: &PotentialSpec, pp: &PressureParams, rho: f64) -> Result<f64> {
    require_density(rho)?;
    Ok(pressure_prime_unchecked(spec, pp, rho))
}

pub(crate) fn pressure_prime_unchecked(spec: &PotentialSpec, pp: &PressureParams, rho: f64) -> f64 {
    rho * (spec.d2(rho) + pp.inv_eta2())
}

/// `(p(rho), p'(rho))` from a single evaluation of the potential.
pub(crate) fn pressure_pair_unchecked(spec: &PotentialSpec, pp: &PressureParams, rho: f64) -> (f64, f64) {
    let [f, f1, f2, _] = spec.derivs(Part::Total, rho);
    (rho * f1 - f + 0.5 * rho * rho * pp.inv_eta2(), rho * (f2 + pp.inv_eta2()))
}

/// `F''(rho) + rho F'''(rho) + 1/eta^2`.
pub fn pressure_second(spec: &PotentialSpec, pp: &PressureParams, rho: f64) -> Result<f64> {
    require_density(rho)?;
    let [_, _, f2, f3] = spec.derivs(Part::Total, rho);
    Ok(f2 + rho * f3 + pp.inv_eta2())
}

/// `F(rho | P) = F(rho) - F(P) - F'(P)(rho - P)`.
pub fn relative_potential(spec: &PotentialSpec, rho: f64, big_p: f64) -> f64 {
    let [fp, dfp, _, _] = spec.derivs(Part::Total, big_p);
    spec.value(rho) - fp - dfp * (rho - big_p)
}

/// `p(rho | P) = p(rho) - p(P) - p'(P)(rho - P)`.
pub fn relative_pressure(spec: &PotentialSpec, pp: &PressureParams, rho: f64, big_p: f64) -> Result<f64> {
    require_density(rho)?;
    require_density(big_p)?;
    Ok(pressure_unchecked(spec, pp, rho)
        - pressure_unchecked(spec, pp, big_p)
        - pressure_prime_unchecked(spec, pp, big_p) * (rho - big_p))
}

/// Outcome of fitting one constant.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FittedConstant {
    Bounded { value: f64, violations: usize },
    Unbounded { violations_at_cap: usize },
}

impl FittedConstant {
    pub fn value(&self) -> Option<f64> {
        match self {
            FittedConstant::Bounded { value, .. } => Some(*value),
            FittedConstant::Unbounded { .. } => None,
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, FittedConstant::Bounded { violations: 0, .. })
    }
}

/// Sampled constants of the pressure and growth inequalities.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub potential: String,
    pub eta: f64,
    pub range: f64,
    pub samples: usize,
    pub seed: u64,
    /// `p(rho|P) <= C F(rho|P) + (C + 1/eta^2)|rho - P|^2`.
    pub relative_pressure: FittedConstant,
    /// `|rho F'(rho)| <= C (F(rho) + rho^2 + 1)`.
    pub growth: FittedConstant,
    /// `|u F1'(u)| <= C (F1(u) + 1)`.
    pub convex_growth: FittedConstant,
    /// `|u F1'''(u)| <= C (F1''(u) + 1)`.
    pub convex_third: FittedConstant,
}

impl BoundReport {
    pub fn all_bounded(&self) -> bool {
        self.relative_pressure.is_bounded()
            && self.growth.is_bounded()
            && self.convex_growth.is_bounded()
            && self.convex_third.is_bounded()
    }
}

/// Largest constant tried before a family of samples is declared unbounded.
pub const CONSTANT_CAP: f64 = 1e6;
const BISECTION_RTOL: f64 = 1e-3;

/// One sampled inequality `lhs <= C * weight + slack`.
#[derive(Clone, Copy, Debug)]
struct Constraint {
    lhs: f64,
    weight: f64,
    slack: f64,
}

impl Constraint {
    fn holds(&self, c: f64) -> bool {
        self.lhs <= c * self.weight + self.slack * (1.0 + c)
    }
}

/// Smallest constant (to `BISECTION_RTOL`) satisfying every constraint.
fn fit_constant(cons: &[Constraint]) -> FittedConstant {
    let violations = |c: f64| cons.iter().filter(|k| !k.holds(c)).count();
    if violations(0.0) == 0 {
        return FittedConstant::Bounded { value: 0.0, violations: 0 };
    }
    // only positively weighted constraints become easier as C grows
    let lower_ok = |c: f64| cons.iter().filter(|k| k.weight > 0.0).all(|k| k.holds(c));
    let mut hi = 1.0;
    while !lower_ok(hi) {
        hi *= 2.0;
        if hi > CONSTANT_CAP {
            return FittedConstant::Unbounded { violations_at_cap: violations(CONSTANT_CAP) };
        }
    }
    let mut lo = 0.0;
    while hi - lo > BISECTION_RTOL * hi {
        let mid = 0.5 * (lo + hi);
        if lower_ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    match violations(hi) {
        0 => FittedConstant::Bounded { value: hi, violations: 0 },
        // a negatively weighted sample caps C below what the others need
        _ => FittedConstant::Unbounded { violations_at_cap: violations(CONSTANT_CAP) },
    }
}

const ROUNDOFF: f64 = 64.0 * f64::EPSILON;

/// Samples `(rho, P)` uniformly in `(0, R]^2` and fits the smallest constants.
pub fn check_pressure_bounds(
    spec: &PotentialSpec,
    pp: &PressureParams,
    range_r: f64,
    samples: usize,
    seed: u64,
    exec: Exec,
) -> Result<BoundReport> {
    if !(range_r.is_finite() && range_r > 0.0) {
        return Err(Error::Precondition(format!("range must be positive, got {range_r}")));
    }
    if samples == 0 {
        return Err(Error::Precondition("at least one sample is required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // (0, R]: map [0, 1) to (0, 1]
    let pairs: Vec<(f64, f64)> = (0..samples)
        .map(|_| {
            let a: f64 = rng.gen();
            let b: f64 = rng.gen();
            (range_r * (1.0 - a), range_r * (1.0 - b))
        })
        .collect();
    let inv_eta2 = pp.inv_eta2();

    let rows: Vec<[Constraint; 4]> = exec.map(samples, |i| {
        let (rho, big_p) = pairs[i];
        let d = rho - big_p;
        let p_rho = pressure_unchecked(spec, pp, rho);
        let p_big = pressure_unchecked(spec, pp, big_p);
        let dp_big = pressure_prime_unchecked(spec, pp, big_p);
        let rel_p = p_rho - p_big - dp_big * d;
        let [f_rho, df_rho, _, _] = spec.derivs(Part::Total, rho);
        let [f_big, df_big, _, _] = spec.derivs(Part::Total, big_p);
        let rel_f = f_rho - f_big - df_big * d;
        let pressure_c = Constraint {
            lhs: rel_p - inv_eta2 * d * d,
            weight: rel_f + d * d,
            slack: ROUNDOFF
                * (p_rho.abs() + p_big.abs() + (dp_big * d).abs() + f_rho.abs() + f_big.abs() + (df_big * d).abs()),
        };
        let growth_c = Constraint {
            lhs: (rho * df_rho).abs(),
            weight: f_rho + rho * rho + 1.0,
            slack: ROUNDOFF * (rho * df_rho).abs(),
        };
        let [g, dg, ddg, dddg] = spec.derivs(Part::Convex, rho);
        let convex_growth = Constraint {
            lhs: (rho * dg).abs(),
            weight: g + 1.0,
            slack: ROUNDOFF * (rho * dg).abs(),
        };
        let convex_third = Constraint {
            lhs: (rho * dddg).abs(),
            weight: ddg + 1.0,
            slack: ROUNDOFF * (rho * dddg).abs(),
        };
        [pressure_c, growth_c, convex_growth, convex_third]
    });
    let column = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<_>>();
    Ok(BoundReport {
        potential: spec.name.clone(),
        eta: pp.eta,
        range: range_r,
        samples,
        seed,
        relative_pressure: fit_constant(&column(0)),
        growth: fit_constant(&column(1)),
        convex_growth: fit_constant(&column(2)),
        convex_third: fit_constant(&column(3)),
    })
}

/// Comparison of the curvature of the bounded part against `1/C_P`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub potential: String,
    pub c_p: f64,
    pub range: f64,
    pub sup_f2_second: f64,
    pub inverse_c_p: f64,
    pub min_f1: f64,
    pub min_f1_second: f64,
    /// `1 - c_p * sup |F2''|`.
    pub margin: f64,
    pub ok: bool,
}

const ASSUMPTION_SAMPLES: usize = 40_000;

/// Samples `F1`, `F1''` and `F2''` on `[-R, R]` and reports the margin.
pub fn validate_assumption(spec: &PotentialSpec, c_p: f64, range_r: f64) -> Result<AssumptionReport> {
    if !(c_p.is_finite() && c_p > 0.0 && range_r.is_finite() && range_r > 0.0) {
        return Err(Error::Precondition(format!("need positive c_p and range, got {c_p}, {range_r}")));
    }
    let sup = spec.sup_abs(Part::Bounded, 2, -range_r, range_r, ASSUMPTION_SAMPLES);
    let min_f1 = spec.min_of(Part::Convex, 0, -range_r, range_r, ASSUMPTION_SAMPLES);
    let min_f1pp = spec.min_of(Part::Convex, 2, -range_r, range_r, ASSUMPTION_SAMPLES);
    let margin = 1.0 - c_p * sup;
    Ok(AssumptionReport {
        potential: spec.name.clone(),
        c_p,
        range: range_r,
        sup_f2_second: sup,
        inverse_c_p: 1.0 / c_p,
        min_f1,
        min_f1_second: min_f1pp,
        margin,
        ok: margin > 0.0 && min_f1 >= 0.0 && min_f1pp >= 0.0 && sup.is_finite(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: impl Fn(f64) -> f64, u: f64) -> f64 {
        let h = 1e-5;
        (f(u + h) - f(u - h)) / (2.0 * h)
    }

    #[test]
    fn double_well_values() {
        let s = builtin_double_well();
        assert!(s.value(0.0).abs() < 1e-15);
        assert!(s.value(1.0).abs() < 1e-15);
        assert!((s.value(0.5) - 1.0 / 16.0).abs() < 1e-15);
        for u in [0.0, 0.5, 1.0] {
            assert!(s.d1(u).abs() < 1e-14, "F'({u}) = {}", s.d1(u));
        }
        assert!((s.d1(2.0) - 2.0 * 2.0 * 1.0 * 3.0).abs() < 1e-12);
    }

    #[test]
    fn double_well_split_is_admissible() {
        let s = builtin_double_well();
        assert!(s.min_of(Part::Convex, 0, -3.0, 3.0, 60_000) >= 0.0);
        assert!(s.min_of(Part::Convex, 2, -3.0, 3.0, 60_000) >= 0.09);
        assert!((s.sup_abs(Part::Bounded, 2, -3.0, 3.0, 60_000) - 1.1).abs() < 1e-9);
    }

    #[test]
    fn power_values_and_derivatives() {
        let s = builtin_power(3.0).unwrap();
        assert_eq!(s.value(2.0), 8.0);
        let u = 1.3;
        let exact = 3.0 * 2.0 * u;
        assert!((s.d2(u) - exact).abs() / exact < 1e-12);
        assert!((fd(|v| s.d1(v), u) - exact).abs() / exact < 1e-6);
        assert_eq!(s.derivs(Part::Total, 0.0), [0.0; 4]);
        assert!(builtin_power(2.0).is_err());
    }

    #[test]
    fn pressure_examples() {
        let pp = PressureParams::new(1.0).unwrap();
        let s = builtin_power(3.0).unwrap();
        assert!((pressure(&s, &pp, 1.0).unwrap() - 2.5).abs() < 1e-15);
        let dw = builtin_double_well();
        assert!(pressure(&dw, &pp, 0.0).unwrap().abs() < 1e-15);
        assert!(pressure(&dw, &pp, -0.1).is_err());
        let pp = PressureParams::new(0.1).unwrap();
        let rho = 0.7;
        let fdp = fd(|r| pressure(&dw, &pp, r).unwrap(), rho);
        let exact = pressure_prime(&dw, &pp, rho).unwrap();
        assert!((fdp - exact).abs() / exact < 1e-6);
    }

    #[test]
    fn relative_quantities_vanish_on_the_diagonal() {
        let dw = builtin_double_well();
        let pp = PressureParams::new(0.1).unwrap();
        assert_eq!(relative_potential(&dw, 0.3, 0.3), 0.0);
        assert_eq!(relative_pressure(&dw, &pp, 0.3, 0.3).unwrap(), 0.0);
        assert!((relative_potential(&dw, 0.8, 0.0) - dw.value(0.8)).abs() < 1e-14);
    }

    #[test]
    fn power_bounds_are_finite() {
        let s = builtin_power(3.0).unwrap();
        let pp = PressureParams::new(0.1).unwrap();
        let r = check_pressure_bounds(&s, &pp, 2.0, 2000, 7, Exec::Serial).unwrap();
        assert!(r.all_bounded(), "{r:?}");
    }

    #[test]
    fn steep_wall_is_unbounded() {
        let s = steep_wall(1000.0, 0.1);
        let pp = PressureParams::new(0.1).unwrap();
        let r = check_pressure_bounds(&s, &pp, 2.0, 20_000, 7, Exec::Serial).unwrap();
        assert!(matches!(r.relative_pressure, FittedConstant::Unbounded { .. }), "{r:?}");
    }

    #[test]
    fn assumption_margins() {
        let p = builtin_power(4.0).unwrap();
        assert_eq!(validate_assumption(&p, 0.7, 2.0).unwrap().margin, 1.0);
        let dw = builtin_double_well();
        let ok = validate_assumption(&dw, 0.71, 2.0).unwrap();
        assert!(ok.ok && ok.margin > 0.2, "{ok:?}");
        assert!(!validate_assumption(&dw, 5.0, 2.0).unwrap().ok);
    }

    #[test]
    fn fit_rejects_conflicting_samples() {
        let cons = [
            Constraint { lhs: 1.0, weight: 1.0, slack: 0.0 },
            Constraint { lhs: 1.0, weight: -1.0, slack: 0.0 },
        ];
        assert!(matches!(fit_constant(&cons), FittedConstant::Unbounded { .. }));
        let cons = [Constraint { lhs: 3.0, weight: 2.0, slack: 0.0 }];
        let v = fit_constant(&cons).value().unwrap();
        assert!((1.5..1.5 * (1.0 + 2e-3)).contains(&v));
    }
}
