//! Least-squares fits of convergence orders.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Least-squares line through `(x_i, y_i)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Precondition(format!("need at least two paired points, got {} and {}", xs.len(), ys.len())));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 || !sxy.is_finite() {
        return Err(Error::Precondition("abscissae must not all coincide".into()));
    }
    let slope = sxy / sxx;
    Ok(LineFit { slope, intercept: my - slope * mx, points: xs.len() })
}

/// Slope of `log y` against `log x`; all values must be positive.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Precondition("log-log fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    linear_fit(&lx, &ly)
}

pub fn strictly_decreasing(ys: &[f64]) -> bool {
    ys.windows(2).all(|w| w[1] < w[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_a_power_law() {
        let xs = [0.04, 0.02, 0.01, 0.005];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powi(2)).collect();
        let f = loglog_fit(&xs, &ys).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(loglog_fit(&[1.0], &[1.0]).is_err());
        assert!(loglog_fit(&[1.0, 2.0], &[0.0, 1.0]).is_err());
        assert!(linear_fit(&[1.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(strictly_decreasing(&[3.0, 2.0, 1.0]));
        assert!(!strictly_decreasing(&[3.0, 3.0]));
    }
}
