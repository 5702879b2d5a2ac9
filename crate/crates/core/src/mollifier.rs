//! Discrete mollifier kernels, the nonlocal operator `B_eta`, the nonlocal
//! Dirichlet form and the nonlocal Poincare constant.
//!
//! A kernel is sampled from a radial profile on the grid offsets, cut off
//! outside radius `eta`, and renormalized so that its discrete mass is one.
//! Moments are certified in the scaled coordinate `y / eta`, so the second
//! moment is `eta`-independent in the continuum and equals `2D/d` per axis.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{ScalarField, TorusGrid};
use crate::spectral::{self, mode, Spectrum};

/// Radial profile `omega(r)` on `r in [0, 1)`; normalization is irrelevant.
#[derive(Clone)]
pub enum Profile {
    /// `exp(1 - 1/(1 - r^2))`, smooth and compactly supported.
    Bump,
    /// `(1 - r^2)^2`.
    Quartic,
    Custom { name: String, f: Arc<dyn Fn(f64) -> f64 + Send + Sync> },
}

impl Profile {
    pub fn custom(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Profile::Custom { name: name.into(), f: Arc::new(f) }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "bump" => Some(Profile::Bump),
            "quartic" => Some(Profile::Quartic),
            _ => None,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Profile::Bump => "bump",
            Profile::Quartic => "quartic",
            Profile::Custom { name, .. } => name,
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        if !(0.0..1.0).contains(&r) {
            return 0.0;
        }
        match self {
            Profile::Bump => (1.0 - 1.0 / (1.0 - r * r)).exp(),
            Profile::Quartic => (1.0 - r * r).powi(2),
            Profile::Custom { f, .. } => f(r),
        }
    }
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Discrete moments of a kernel in the scaled coordinate `y / eta`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Moments {
    pub m0: f64,
    pub m1: Vec<f64>,
    pub m2_diag: Vec<f64>,
    pub m2_offdiag: f64,
}

/// Sampled kernel `omega_eta` with certified moments and cached Fourier symbol.
#[derive(Clone, Debug)]
pub struct MollifierKernel {
    grid: TorusGrid,
    eta: f64,
    profile: Profile,
    values: ScalarField,
    moments: Moments,
    diffusivity: f64,
    symbol: Vec<f64>,
}

/// Builds `omega_eta` on the grid offsets.
pub fn build_kernel(profile: Profile, eta: f64, grid: &TorusGrid) -> Result<MollifierKernel> {
    let h = grid.spacing();
    let min = 4.0 * h;
    if !(eta.is_finite() && eta >= min * (1.0 - 1e-12)) {
        return Err(Error::Resolution { eta, min });
    }
    let max = grid.length() / 2.0;
    if eta >= max {
        return Err(Error::Support { eta, max });
    }
    let d = grid.dim();
    let offsets = |idx: usize| -> [f64; 2] {
        let [i0, i1] = grid.multi_index(idx);
        let y0 = grid.signed_offset(i0) as f64 * h;
        let y1 = if d == 2 { grid.signed_offset(i1) as f64 * h } else { 0.0 };
        [y0, y1]
    };
    let mut raw: Vec<f64> = (0..grid.len())
        .map(|i| {
            let [y0, y1] = offsets(i);
            let r = (y0 * y0 + y1 * y1).sqrt() / eta;
            let w = profile.eval(r);
            if w.is_finite() && w >= 0.0 {
                w
            } else {
                f64::NAN
            }
        })
        .collect();
    if raw.iter().any(|w| !w.is_finite()) {
        return Err(Error::Precondition(format!(
            "profile {:?} must be finite and nonnegative",
            profile.name()
        )));
    }
    let dv = grid.cell_volume();
    let mass = raw.iter().sum::<f64>() * dv;
    if mass <= 0.0 {
        return Err(Error::Precondition("kernel has no mass on this grid".into()));
    }
    for w in raw.iter_mut() {
        *w /= mass;
    }

    let mut m0 = 0.0;
    let mut m1 = vec![0.0; d];
    let mut m2 = vec![0.0; d];
    let mut m2_off = 0.0;
    for (i, &w) in raw.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let y = offsets(i);
        let s = [y[0] / eta, y[1] / eta];
        m0 += w * dv;
        for a in 0..d {
            m1[a] += s[a] * w * dv;
            m2[a] += s[a] * s[a] * w * dv;
        }
        if d == 2 {
            m2_off += s[0] * s[1] * w * dv;
        }
    }
    let moments = Moments { m0, m1, m2_diag: m2, m2_offdiag: m2_off };
    let m2_axis = moments.m2_diag.iter().sum::<f64>() / d as f64;
    let diffusivity = d as f64 * m2_axis / 2.0;

    let values = ScalarField::new(*grid, raw)?;
    let spec = spectral::forward(&values);
    let symbol = spec.coeffs().iter().map(|c| c.re * dv).collect();
    Ok(MollifierKernel { grid: *grid, eta, profile, values, moments, diffusivity, symbol })
}

impl MollifierKernel {
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    /// Kernel samples, offset `j` stored at index `j mod n`.
    pub fn values(&self) -> &ScalarField {
        &self.values
    }

    pub fn moments(&self) -> &Moments {
        &self.moments
    }

    /// `D` from the normalization `int y_i y_j omega = delta_ij 2D/d`.
    pub fn diffusivity(&self) -> f64 {
        self.diffusivity
    }

    /// Coefficient `c` with `B_eta -> -c Laplacian` as `eta -> 0`, i.e. half
    /// the per-axis second moment. Equals [`Self::diffusivity`] in one
    /// dimension and `D/d` in general.
    pub fn laplacian_coefficient(&self) -> f64 {
        self.diffusivity / self.grid.dim() as f64
    }

    /// Discrete Fourier coefficient `w_hat` at a spectral index.
    pub fn symbol(&self, idx: usize) -> f64 {
        self.symbol[idx]
    }

    pub fn symbols(&self) -> &[f64] {
        &self.symbol
    }

    /// Eigenvalue `(1 - w_hat)/eta^2` of `B_eta` at a spectral index.
    pub fn b_eta_eigenvalue(&self, idx: usize) -> f64 {
        (1.0 - self.symbol[idx]) / (self.eta * self.eta)
    }

    /// Spectral index of the mode `(m0, m1)`.
    pub fn index_of_mode(&self, m: [i64; 2]) -> usize {
        self.grid.wrap_index(m[0], m[1])
    }

    /// `omega_eta * f` via the cached symbol.
    pub fn convolve(&self, f: &ScalarField) -> Result<ScalarField> {
        self.convolve_spectrum(&self.spectrum_of(f)?)
    }

    pub(crate) fn spectrum_of(&self, f: &ScalarField) -> Result<Spectrum> {
        self.grid.check_same(f.grid())?;
        f.require_finite("convolution")?;
        Ok(spectral::forward(f))
    }

    pub(crate) fn convolve_spectrum(&self, s: &Spectrum) -> Result<ScalarField> {
        s.apply_real(|i| self.symbol[i]).to_field()
    }

    /// Sup norms of the first and second derivatives of the sampled kernel,
    /// by centered differences.
    pub fn derivative_sup_norms(&self) -> (f64, f64) {
        let g = self.grid;
        let h = g.spacing();
        let v = self.values.values();
        let mut grad = 0.0f64;
        let mut hess = 0.0f64;
        for idx in 0..g.len() {
            let [i0, i1] = g.multi_index(idx);
            let (i0, i1) = (i0 as i64, i1 as i64);
            let at = |a: i64, b: i64| v[g.wrap_index(a, b)];
            let dx = (at(i0 + 1, i1) - at(i0 - 1, i1)) / (2.0 * h);
            let dxx = (at(i0 + 1, i1) - 2.0 * v[idx] + at(i0 - 1, i1)) / (h * h);
            if g.dim() == 1 {
                grad = grad.max(dx.abs());
                hess = hess.max(dxx.abs());
            } else {
                let dy = (at(i0, i1 + 1) - at(i0, i1 - 1)) / (2.0 * h);
                let dyy = (at(i0, i1 + 1) - 2.0 * v[idx] + at(i0, i1 - 1)) / (h * h);
                let dxy = (at(i0 + 1, i1 + 1) - at(i0 + 1, i1 - 1) - at(i0 - 1, i1 + 1)
                    + at(i0 - 1, i1 - 1))
                    / (4.0 * h * h);
                grad = grad.max((dx * dx + dy * dy).sqrt());
                // Frobenius norm of the Hessian
                hess = hess.max((dxx * dxx + dyy * dyy + 2.0 * dxy * dxy).sqrt());
            }
        }
        (grad, hess)
    }
}

/// `B_eta[rho] = (rho - omega_eta * rho) / eta^2`.
pub fn apply_b_eta(kern: &MollifierKernel, rho: &ScalarField) -> Result<ScalarField> {
    let s = kern.spectrum_of(rho)?;
    s.apply_real(|i| kern.b_eta_eigenvalue(i)).to_field()
}

/// `(1/(4 eta^2)) int int omega_eta(x - y) |f(x) - f(y)|^2`, evaluated as
/// `(1/(2 eta^2)) [int f^2 - int f (omega_eta * f)]`.
pub fn nonlocal_dirichlet_form(kern: &MollifierKernel, f: &ScalarField) -> Result<f64> {
    let conv = kern.convolve(f)?;
    let dv = f.grid().cell_volume();
    let s: f64 = f.values().iter().zip(conv.values()).map(|(a, c)| a * (a - c)).sum();
    Ok(s * dv / (2.0 * kern.eta() * kern.eta()))
}

/// Certified constant of the nonlocal Poincare inequality
/// `||f - mean f||^2 <= C_P * nonlocal_dirichlet_form(f)` on one grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoincareEstimate {
    pub c_p: f64,
    pub eta: f64,
    pub grid: TorusGrid,
    /// Signed mode numbers of the maximizing Fourier mode.
    pub extremal_mode: Vec<i64>,
}

/// Modewise maximum of `2 eta^2 / (1 - w_hat(k))` over nonzero modes.
pub fn estimate_poincare_constant(kern: &MollifierKernel) -> Result<PoincareEstimate> {
    let g = *kern.grid();
    let eta2 = kern.eta() * kern.eta();
    let mut best = (f64::NEG_INFINITY, 0usize);
    for idx in 1..g.len() {
        let gap = 1.0 - kern.symbol(idx);
        if gap <= 1e-14 {
            return Err(Error::SingularKernel { mode: canonical_mode(mode(&g, idx), g.dim()) });
        }
        let ratio = 2.0 * eta2 / gap;
        if ratio > best.0 {
            best = (ratio, idx);
        }
    }
    Ok(PoincareEstimate {
        c_p: best.0,
        eta: kern.eta(),
        grid: g,
        extremal_mode: canonical_mode(mode(&g, best.1), g.dim()),
    })
}

/// Representative of `{m, -m}` whose first nonzero entry is positive.
fn canonical_mode(m: [i64; 2], dim: usize) -> Vec<i64> {
    let flip = m[0] < 0 || (m[0] == 0 && m[1] < 0);
    let m = if flip { [-m[0], -m[1]] } else { m };
    m[..dim].to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid1(n: usize) -> TorusGrid {
        TorusGrid::unit(1, n).unwrap()
    }

    #[test]
    fn moments_are_certified() {
        for profile in [Profile::Bump, Profile::Quartic] {
            for eta in [0.2, 0.1, 0.05] {
                let k = build_kernel(profile.clone(), eta, &grid1(256)).unwrap();
                let m = k.moments();
                assert!((m.m0 - 1.0).abs() <= 1e-14);
                assert!(m.m1[0].abs() <= 1e-14);
                assert!(k.values().min() >= 0.0);
            }
        }
        let g2 = TorusGrid::unit(2, 64).unwrap();
        let k = build_kernel(Profile::Quartic, 0.1, &g2).unwrap();
        let m = k.moments();
        assert!(m.m2_offdiag.abs() <= 1e-12);
        assert!((m.m2_diag[0] - m.m2_diag[1]).abs() <= 1e-10);
        assert!((m.m2_diag[0] - 2.0 * k.diffusivity() / 2.0).abs() <= 1e-10);
    }

    #[test]
    fn support_is_inside_the_ball() {
        let g = grid1(128);
        let k = build_kernel(Profile::Bump, 0.1, &g).unwrap();
        for (i, &w) in k.values().values().iter().enumerate() {
            let y = g.signed_offset(i) as f64 * g.spacing();
            if y.abs() >= 0.1 {
                assert_eq!(w, 0.0);
            }
        }
    }

    #[test]
    fn radius_preconditions() {
        let g = grid1(64);
        assert!(matches!(build_kernel(Profile::Quartic, 0.05, &g), Err(Error::Resolution { .. })));
        let g = TorusGrid::unit(1, 1024).unwrap();
        assert!(matches!(build_kernel(Profile::Quartic, 0.5, &g), Err(Error::Support { .. })));
    }

    #[test]
    fn b_eta_annihilates_constants() {
        let g = grid1(64);
        let k = build_kernel(Profile::Quartic, 0.2, &g).unwrap();
        let b = apply_b_eta(&k, &ScalarField::constant(g, 0.7)).unwrap();
        assert!(b.norm_linf() < 1e-12);
        assert!(nonlocal_dirichlet_form(&k, &ScalarField::constant(g, 0.7)).unwrap().abs() < 1e-14);
    }

    #[test]
    fn b_eta_acts_on_cosine_by_its_eigenvalue() {
        let g = grid1(64);
        let k = build_kernel(Profile::Bump, 0.2, &g).unwrap();
        let f = g.sample(|x| (2.0 * PI * x[0]).cos());
        let b = apply_b_eta(&k, &f).unwrap();
        let lam = k.b_eta_eigenvalue(k.index_of_mode([1, 0]));
        for (bv, fv) in b.values().iter().zip(f.values()) {
            assert!((bv - lam * fv).abs() < 1e-11);
        }
    }

    #[test]
    fn dirichlet_form_of_a_mode() {
        let g = grid1(64);
        let k = build_kernel(Profile::Quartic, 0.1, &g).unwrap();
        let f = g.sample(|x| (4.0 * PI * x[0]).cos());
        let what = k.symbol(k.index_of_mode([2, 0]));
        let expected = f.norm_l2().powi(2) * (1.0 - what) / (2.0 * 0.01);
        let got = nonlocal_dirichlet_form(&k, &f).unwrap();
        assert!((got - expected).abs() < 1e-12 * expected.abs());
    }

    #[test]
    fn poincare_equality_on_extremal_mode() {
        let g = grid1(128);
        let k = build_kernel(Profile::Quartic, 0.1, &g).unwrap();
        let est = estimate_poincare_constant(&k).unwrap();
        assert_eq!(est.extremal_mode, vec![1]);
        let f = g.sample(|x| (2.0 * PI * x[0]).cos());
        let lhs = f.norm_l2().powi(2);
        let rhs = est.c_p * nonlocal_dirichlet_form(&k, &f).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn degenerate_kernel_is_singular() {
        // all mass at the origin and at half the torus: w_hat = 1 on even modes
        let g = grid1(32);
        let k = build_kernel(
            Profile::custom("spike", |r: f64| if r < 0.05 { 1.0 } else { 0.0 }),
            4.0 / 32.0,
            &g,
        )
        .unwrap();
        assert!(matches!(estimate_poincare_constant(&k), Err(Error::SingularKernel { .. })));
    }
}
