//! Fourier-collocation operators on the torus.
//!
//! Forward transforms are unnormalized; inverse transforms divide by the
//! point count and check that the imaginary residue is roundoff-sized. Each
//! spectrum carries the coefficient scale of the fields it was built from,
//! scaled by the symbols applied since, so roundoff inherited from a large
//! source is not mistaken for a broken symmetry.
//! Derivative symbols treat the Nyquist wavenumber as zero so that
//! `divergence(gradient(f)) == laplacian(f)` holds mode by mode.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{ScalarField, TorusGrid, VectorField};

/// Relative size of the imaginary residue tolerated after an inverse transform.
pub const IMAGINARY_TOLERANCE: f64 = 1e-9;

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans(n: usize) -> Arc<Plans> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
    map.entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plans { forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) })
        })
        .clone()
}

fn transpose(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

fn transform(grid: &TorusGrid, buf: &mut [Complex64], inverse: bool) {
    let p = plans(grid.n());
    let fft = if inverse { &p.inverse } else { &p.forward };
    // rustfft transforms every contiguous chunk of length n
    fft.process(buf);
    if grid.dim() == 2 {
        transpose(buf, grid.n());
        fft.process(buf);
        transpose(buf, grid.n());
    }
}

/// Discrete Fourier coefficients of a real field.
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
    source_scale: f64,
}

impl Spectrum {
    /// `source_scale` bounds the mean coefficient size of the inputs the
    /// coefficients were combined from.
    pub(crate) fn from_coeffs(grid: TorusGrid, coeffs: Vec<Complex64>, source_scale: f64) -> Spectrum {
        debug_assert_eq!(coeffs.len(), grid.len());
        Spectrum { grid, coeffs, source_scale }
    }

    pub(crate) fn source_scale(&self) -> f64 {
        self.source_scale
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Multiplies every coefficient by `symbol(idx)`.
    pub fn apply(&self, symbol: impl Fn(usize) -> Complex64) -> Spectrum {
        let mut largest = 0.0f64;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let s = symbol(i);
                largest = largest.max(s.norm());
                c * s
            })
            .collect();
        Spectrum { grid: self.grid, coeffs, source_scale: self.source_scale * largest }
    }

    pub fn apply_real(&self, symbol: impl Fn(usize) -> f64) -> Spectrum {
        self.apply(|i| Complex64::new(symbol(i), 0.0))
    }

    /// Inverse transform back to a real field.
    pub fn to_field(&self) -> Result<ScalarField> {
        let mut buf = self.coeffs.clone();
        transform(&self.grid, &mut buf, true);
        let inv_n = 1.0 / self.grid.len() as f64;
        let scale = mean_norm(&self.coeffs).max(self.source_scale);
        let mut residue = 0.0f64;
        let values: Vec<f64> = buf
            .iter()
            .map(|c| {
                residue = residue.max((c.im * inv_n).abs());
                c.re * inv_n
            })
            .collect();
        let limit = IMAGINARY_TOLERANCE * scale;
        if residue > limit {
            return Err(Error::ImaginaryResidue { residue, limit });
        }
        let field = ScalarField::new(self.grid, values)?;
        field.require_finite("inverse transform")?;
        Ok(field)
    }

    /// Weighted sum of squared coefficients, equal to `norm_l2^2` by Parseval.
    pub fn parseval_norm_sq(&self) -> f64 {
        let w = self.grid.cell_volume() / self.grid.len() as f64;
        w * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }
}

fn mean_norm(coeffs: &[Complex64]) -> f64 {
    coeffs.iter().map(|c| c.norm()).sum::<f64>() / coeffs.len() as f64
}

/// Forward transform of a real field.
pub fn forward(f: &ScalarField) -> Spectrum {
    let mut coeffs: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform(f.grid(), &mut coeffs, false);
    let source_scale = mean_norm(&coeffs);
    Spectrum { grid: *f.grid(), coeffs, source_scale }
}

/// Upper bound of `|k_a|` over the grid's wavevectors.
pub fn max_wavenumber(grid: &TorusGrid) -> f64 {
    PI * grid.n() as f64 / grid.length()
}

/// Signed mode numbers `(m0, m1)` of a flat spectral index.
pub fn mode(grid: &TorusGrid, idx: usize) -> [i64; 2] {
    let [i0, i1] = grid.multi_index(idx);
    match grid.dim() {
        1 => [grid.signed_offset(i0), 0],
        _ => [grid.signed_offset(i0), grid.signed_offset(i1)],
    }
}

fn axis_wavenumber(grid: &TorusGrid, m: i64) -> f64 {
    if 2 * m.unsigned_abs() as usize == grid.n() {
        0.0
    } else {
        2.0 * PI * m as f64 / grid.length()
    }
}

/// Derivative wavevector of a spectral index (Nyquist component zeroed).
pub fn wavevector(grid: &TorusGrid, idx: usize) -> [f64; 2] {
    let m = mode(grid, idx);
    [axis_wavenumber(grid, m[0]), axis_wavenumber(grid, m[1])]
}

/// `|k|^2` with the same Nyquist convention as [`wavevector`].
pub fn wavenumber_sq(grid: &TorusGrid, idx: usize) -> f64 {
    let k = wavevector(grid, idx);
    k[0] * k[0] + k[1] * k[1]
}

/// Spectral derivative along one axis of an already-transformed field.
pub fn derivative_from(spec: &Spectrum, axis: usize) -> Result<ScalarField> {
    let g = *spec.grid();
    spec.apply(|i| Complex64::new(0.0, wavevector(&g, i)[axis])).to_field()
}

pub fn gradient(f: &ScalarField) -> Result<VectorField> {
    f.require_finite("gradient")?;
    let spec = forward(f);
    let comps = (0..f.grid().dim())
        .map(|a| derivative_from(&spec, a))
        .collect::<Result<Vec<_>>>()?;
    VectorField::from_fields(comps)
}

pub fn divergence(v: &VectorField) -> Result<ScalarField> {
    v.require_finite("divergence")?;
    let g = *v.grid();
    let mut acc = vec![Complex64::new(0.0, 0.0); g.len()];
    let mut source = 0.0;
    for a in 0..g.dim() {
        let spec = forward(&v.component(a));
        source += spec.source_scale * max_wavenumber(&g);
        for (i, (s, c)) in acc.iter_mut().zip(spec.coeffs()).enumerate() {
            *s += c * Complex64::new(0.0, wavevector(&g, i)[a]);
        }
    }
    Spectrum { grid: g, coeffs: acc, source_scale: source }.to_field()
}

pub fn laplacian(f: &ScalarField) -> Result<ScalarField> {
    f.require_finite("laplacian")?;
    let g = *f.grid();
    forward(f).apply_real(|i| -wavenumber_sq(&g, i)).to_field()
}

/// Periodic convolution `dx^d * sum_j g_j f_{i-j}` where `g` holds samples at
/// grid offsets (offset `j` stored at index `j mod n`).
pub fn convolve(f: &ScalarField, g: &ScalarField) -> Result<ScalarField> {
    f.grid().check_same(g.grid())?;
    f.require_finite("convolution")?;
    g.require_finite("convolution")?;
    let w = f.grid().cell_volume();
    let gs = forward(g);
    forward(f).apply(|i| gs.coeffs()[i] * w).to_field()
}

/// 2/3-rule mask: `true` for modes kept.
pub fn dealias_mask(grid: &TorusGrid) -> Vec<bool> {
    let cutoff = grid.n() as i64 / 3;
    (0..grid.len())
        .map(|i| {
            let m = mode(grid, i);
            m[0].abs() <= cutoff && m[1].abs() <= cutoff
        })
        .collect()
}

/// Applies a dealiasing mask to a field.
pub fn dealias(f: &ScalarField) -> Result<ScalarField> {
    let mask = dealias_mask(f.grid());
    forward(f).apply_real(|i| if mask[i] { 1.0 } else { 0.0 }).to_field()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(d: usize, n: usize) -> TorusGrid {
        TorusGrid::unit(d, n).unwrap()
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = unit(2, 16);
        let grad = gradient(&ScalarField::constant(g, 3.5)).unwrap();
        assert!(grad.norm_linf() < 1e-14);
    }

    #[test]
    fn gradient_of_sine_1d() {
        let g = TorusGrid::new(1, 64, 2.0).unwrap();
        let k = 2.0 * PI / 2.0;
        let f = g.sample(|x| (k * x[0]).sin());
        let grad = gradient(&f).unwrap();
        let err = grad.components()[0]
            .iter()
            .enumerate()
            .map(|(i, v)| (v - k * (k * g.point(i)[0]).cos()).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-10, "err = {err}");
    }

    #[test]
    fn gradient_of_product_2d() {
        let g = unit(2, 32);
        let k = 2.0 * PI;
        let f = g.sample(|x| (k * x[0]).sin() * (k * x[1]).sin());
        let grad = gradient(&f).unwrap();
        for i in 0..g.len() {
            let [x, y] = g.point(i);
            let ex = k * (k * x).cos() * (k * y).sin();
            let ey = k * (k * x).sin() * (k * y).cos();
            assert!((grad.components()[0][i] - ex).abs() < 1e-10);
            assert!((grad.components()[1][i] - ey).abs() < 1e-10);
        }
    }

    #[test]
    fn divergence_of_cosine_2d() {
        let g = unit(2, 32);
        let k = 2.0 * PI;
        let v = VectorField::from_fields(vec![g.sample(|x| (k * x[0]).cos()), ScalarField::zeros(g)])
            .unwrap();
        let div = divergence(&v).unwrap();
        for i in 0..g.len() {
            let e = -k * (k * g.point(i)[0]).sin();
            assert!((div.values()[i] - e).abs() < 1e-10);
        }
        let c = VectorField::constant(g, &[1.0, -2.0]).unwrap();
        assert!(divergence(&c).unwrap().norm_linf() < 1e-14);
    }

    #[test]
    fn laplacian_of_cosine_and_constant() {
        let g = TorusGrid::new(1, 64, 3.0).unwrap();
        let k = 2.0 * PI / 3.0;
        let f = g.sample(|x| (k * x[0]).cos());
        let lap = laplacian(&f).unwrap();
        for i in 0..g.len() {
            assert!((lap.values()[i] + k * k * f.values()[i]).abs() < 1e-10);
        }
        assert!(laplacian(&ScalarField::constant(g, 2.0)).unwrap().norm_linf() < 1e-13);
    }

    #[test]
    fn inverse_detects_non_hermitian_symbols() {
        let g = unit(1, 16);
        let f = g.sample(|x| (2.0 * PI * x[0]).cos());
        // an odd real symbol breaks Hermitian symmetry
        let bad = forward(&f).apply_real(|i| mode(&g, i)[0] as f64);
        assert!(matches!(bad.to_field(), Err(Error::ImaginaryResidue { .. })));
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let g = unit(1, 16);
        let mut f = ScalarField::zeros(g);
        f.values_mut()[3] = f64::NAN;
        assert!(matches!(gradient(&f), Err(Error::NonFinite { .. })));
        assert!(laplacian(&f).is_err());
    }

    #[test]
    fn dealias_removes_high_modes() {
        let g = unit(1, 32);
        let f = g.sample(|x| (2.0 * PI * 15.0 * x[0]).cos() + (2.0 * PI * x[0]).cos());
        let d = dealias(&f).unwrap();
        for i in 0..g.len() {
            assert!((d.values()[i] - (2.0 * PI * g.point(i)[0]).cos()).abs() < 1e-12);
        }
    }
}
