//! Uniform periodic grids on the flat torus and the fields that live on them.
//!
//! Points are stored row-major: in two dimensions the value at grid index
//! `(i0, i1)` sits at `i0 * n + i1`, with axis 0 the slow index.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid with `n` points per axis on `[0, L)^d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
    length: f64,
}

impl TorusGrid {
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::Dimension(dim));
        }
        if n < 8 {
            return Err(Error::InvalidGrid(format!("n = {n} is below the minimum of 8")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("side length {length} must be positive")));
        }
        Ok(Self { dim, n, length })
    }

    /// Grid on the unit torus.
    pub fn unit(dim: usize, n: usize) -> Result<Self> {
        Self::new(dim, n, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Total number of points, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `dx^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Torus volume `L^d`.
    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// Per-axis integer coordinates of a flat index.
    pub fn multi_index(&self, idx: usize) -> [usize; 2] {
        match self.dim {
            1 => [idx, 0],
            _ => [idx / self.n, idx % self.n],
        }
    }

    /// Flat index of a (possibly out-of-range) multi-index, wrapped periodically.
    pub fn wrap_index(&self, i0: i64, i1: i64) -> usize {
        let n = self.n as i64;
        let a = i0.rem_euclid(n) as usize;
        match self.dim {
            1 => a,
            _ => a * self.n + i1.rem_euclid(n) as usize,
        }
    }

    /// Physical coordinates of a grid point.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let h = self.spacing();
        let [i0, i1] = self.multi_index(idx);
        [i0 as f64 * h, i1 as f64 * h]
    }

    /// Signed integer offset in `(-n/2, n/2]` for a per-axis index.
    pub fn signed_offset(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i > n / 2 {
            i - n
        } else {
            i
        }
    }

    pub(crate) fn check_same(&self, other: &TorusGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }

    /// Samples a function of the physical coordinates.
    pub fn sample(&self, f: impl Fn([f64; 2]) -> f64) -> ScalarField {
        let values = (0..self.len()).map(|i| f(self.point(i))).collect();
        ScalarField { grid: *self, values }
    }
}

/// Grid-sampled scalar such as a density or chemical potential.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn require_finite(&self, op: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite { op })
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<ScalarField> {
        self.grid.check_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(ScalarField { grid: self.grid, values })
    }

    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> ScalarField {
        self.map(|v| v * s)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Translates the field by whole cells, `out(i) = self(i - shift)`.
    pub fn shifted(&self, shift: [i64; 2]) -> ScalarField {
        let g = self.grid;
        let mut values = vec![0.0; g.len()];
        for (idx, v) in values.iter_mut().enumerate() {
            let [i0, i1] = g.multi_index(idx);
            *v = self.values[g.wrap_index(i0 as i64 - shift[0], i1 as i64 - shift[1])];
        }
        ScalarField { grid: g, values }
    }

    /// `dx^d * sum(values)`.
    pub fn integrate(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().sum::<f64>()
    }

    pub fn mean(&self) -> f64 {
        self.integrate() / self.grid.volume()
    }

    pub fn norm_l1(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().map(|v| v.abs()).sum::<f64>()
    }

    pub fn norm_l2(&self) -> f64 {
        (self.grid.cell_volume() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn norm_linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Writes the plain-text snapshot format: a `torus d n L t` header line
    /// followed by the values in row-major order, one axis-1 row per line.
    pub fn write_snapshot<W: Write>(&self, mut w: W, time: f64) -> Result<()> {
        let g = self.grid;
        let mut out = format!("torus {} {} {} {}\n", g.dim, g.n, g.length, time);
        for row in self.values.chunks(g.n) {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(' ');
                }
                first = false;
                write!(out, "{v:e}").expect("writing to a String cannot fail");
            }
            out.push('\n');
        }
        w.write_all(out.as_bytes())?;
        Ok(())
    }

    /// Parses a snapshot; returns the field and its time stamp.
    pub fn read_snapshot<R: Read>(r: R) -> Result<(ScalarField, f64)> {
        let mut reader = BufReader::new(r);
        let mut header = String::new();
        reader.read_line(&mut header)?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 5 || parts[0] != "torus" {
            return Err(Error::Parse(format!("bad header line {:?}", header.trim_end())));
        }
        let bad = |what: &str| Error::Parse(format!("bad {what} in header"));
        let dim: usize = parts[1].parse().map_err(|_| bad("dimension"))?;
        let n: usize = parts[2].parse().map_err(|_| bad("point count"))?;
        let length: f64 = parts[3].parse().map_err(|_| bad("side length"))?;
        let time: f64 = parts[4].parse().map_err(|_| bad("time"))?;
        let grid = TorusGrid::new(dim, n, length)?;
        let mut body = String::new();
        reader.read_to_string(&mut body)?;
        let values = body
            .split_whitespace()
            .map(|tok| tok.parse::<f64>().map_err(|_| Error::Parse(format!("bad value {tok:?}"))))
            .collect::<Result<Vec<_>>>()?;
        let field = ScalarField::new(grid, values)?;
        field.require_finite("snapshot")?;
        Ok((field, time))
    }
}

/// Grid-sampled vector field with one component per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: TorusGrid,
    components: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn new(grid: TorusGrid, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.len() != grid.dim() {
            return Err(Error::GridMismatch(format!(
                "{} components for a {}-dimensional grid",
                components.len(),
                grid.dim()
            )));
        }
        if components.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::GridMismatch("component length differs from point count".into()));
        }
        Ok(Self { grid, components })
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self { grid, components: vec![vec![0.0; grid.len()]; grid.dim()] }
    }

    pub fn constant(grid: TorusGrid, v: &[f64]) -> Result<Self> {
        if v.len() != grid.dim() {
            return Err(Error::GridMismatch("constant vector has the wrong length".into()));
        }
        Ok(Self { grid, components: v.iter().map(|&c| vec![c; grid.len()]).collect() })
    }

    pub fn from_fields(fields: Vec<ScalarField>) -> Result<Self> {
        let grid = *fields
            .first()
            .ok_or_else(|| Error::GridMismatch("no components".into()))?
            .grid();
        for f in &fields {
            grid.check_same(f.grid())?;
        }
        Self::new(grid, fields.into_iter().map(ScalarField::into_values).collect())
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.components
    }

    pub fn component(&self, axis: usize) -> ScalarField {
        ScalarField { grid: self.grid, values: self.components[axis].clone() }
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().flatten().all(|v| v.is_finite())
    }

    pub(crate) fn require_finite(&self, op: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite { op })
        }
    }

    /// Pointwise squared Euclidean norm.
    pub fn norm_sq_field(&self) -> ScalarField {
        let mut values = vec![0.0; self.grid.len()];
        for c in &self.components {
            for (acc, v) in values.iter_mut().zip(c) {
                *acc += v * v;
            }
        }
        ScalarField { grid: self.grid, values }
    }

    /// Discrete `L^2` norm of `|v|`.
    pub fn norm_l2(&self) -> f64 {
        self.norm_sq_field().integrate().sqrt()
    }

    pub fn norm_linf(&self) -> f64 {
        self.norm_sq_field().values.iter().fold(0.0f64, |m, v| m.max(*v)).sqrt()
    }

    pub fn scale(&self, s: f64) -> VectorField {
        VectorField {
            grid: self.grid,
            components: self.components.iter().map(|c| c.iter().map(|v| v * s).collect()).collect(),
        }
    }

    pub fn sub(&self, other: &VectorField) -> Result<VectorField> {
        self.grid.check_same(&other.grid)?;
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        Ok(VectorField { grid: self.grid, components })
    }

    /// Multiplies every component pointwise by a scalar field.
    pub fn mul_scalar_field(&self, s: &ScalarField) -> Result<VectorField> {
        self.grid.check_same(s.grid())?;
        let components = self
            .components
            .iter()
            .map(|c| c.iter().zip(s.values()).map(|(a, b)| a * b).collect())
            .collect();
        Ok(VectorField { grid: self.grid, components })
    }

    pub fn shifted(&self, shift: [i64; 2]) -> VectorField {
        let components = (0..self.grid.dim())
            .map(|a| self.component(a).shifted(shift).into_values())
            .collect();
        VectorField { grid: self.grid, components }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_rejects_bad_shapes() {
        assert!(matches!(TorusGrid::new(3, 16, 1.0), Err(Error::Dimension(3))));
        assert!(TorusGrid::new(1, 4, 1.0).is_err());
        assert!(TorusGrid::new(1, 16, 0.0).is_err());
    }

    #[test]
    fn periodic_indexing_wraps() {
        let g = TorusGrid::unit(2, 8).unwrap();
        assert_eq!(g.len(), 64);
        assert_eq!(g.wrap_index(8, 3), g.wrap_index(0, 3));
        assert_eq!(g.wrap_index(-1, -1), 63);
        assert_eq!(g.signed_offset(5), -3);
        assert_eq!(g.signed_offset(4), 4);
    }

    #[test]
    fn integrals_and_norms() {
        let g = TorusGrid::unit(1, 64).unwrap();
        let one = ScalarField::constant(g, 1.0);
        assert!((one.integrate() - 1.0).abs() < 1e-15);
        assert!((one.mean() - 1.0).abs() < 1e-15);
        let s = g.sample(|x| (2.0 * PI * x[0]).sin());
        assert!(s.integrate().abs() < 1e-14);
        let sq = s.map(|v| v * v);
        assert!((s.norm_l2().powi(2) - sq.integrate()).abs() < 1e-15);
        assert!((s.norm_linf() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn snapshot_round_trip() {
        let g = TorusGrid::new(2, 8, 2.0).unwrap();
        let f = g.sample(|x| (x[0] * 3.1).sin() + x[1] * 1e-7);
        let mut buf = Vec::new();
        f.write_snapshot(&mut buf, 0.25).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("torus 2 8 2 0.25\n"));
        let (back, t) = ScalarField::read_snapshot(&buf[..]).unwrap();
        assert_eq!(t, 0.25);
        assert_eq!(back, f);
    }

    #[test]
    fn snapshot_rejects_short_body() {
        let text = "torus 1 8 1 0\n1 2 3\n";
        assert!(ScalarField::read_snapshot(text.as_bytes()).is_err());
        assert!(ScalarField::read_snapshot("tor 1 8 1 0\n".as_bytes()).is_err());
    }
}
