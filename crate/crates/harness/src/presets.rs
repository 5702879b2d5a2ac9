//! Named initial data.

use std::f64::consts::PI;

use anyhow::{bail, Context, Result};
use ekch_core::{ScalarField, TorusGrid};

use crate::config::InitialConfig;

/// Density for the configured preset on `grid`.
pub fn initial_density(cfg: &InitialConfig, grid: &TorusGrid) -> Result<ScalarField> {
    let l = grid.length();
    let d = grid.dim();
    let (mean, amp) = (cfg.mean, cfg.amplitude);
    let field = match cfg.preset.as_str() {
        "constant" => ScalarField::constant(*grid, mean),
        "single-mode" => {
            let k = 2.0 * PI * cfg.mode as f64 / l;
            grid.sample(|x| mean + amp * (0..d).map(|a| (k * x[a]).cos()).sum::<f64>() / d as f64)
        }
        "double-well-spinodal" => {
            let k = 2.0 * PI / l;
            grid.sample(|x| mean + amp * (0..d).map(|a| (k * x[a]).cos() + 0.5 * (2.0 * k * x[a]).sin()).sum::<f64>() / d as f64)
        }
        "snapshot" => {
            let path = cfg.path.as_ref().context("initial.path: missing snapshot path")?;
            let file = std::fs::File::open(path).with_context(|| format!("initial.path: cannot open {}", path.display()))?;
            let (f, _) = ScalarField::read_snapshot(std::io::BufReader::new(file))
                .with_context(|| format!("initial.path: cannot parse {}", path.display()))?;
            if f.grid() != grid {
                bail!("initial.path: snapshot grid {:?} does not match the configured grid {:?}", f.grid(), grid);
            }
            f
        }
        other => bail!("initial.preset: unknown preset '{other}'"),
    };
    if field.min() < 0.0 {
        bail!("initial: preset '{}' yields negative density (min {})", cfg.preset, field.min());
    }
    Ok(field)
}

/// Mean-free smooth perturbation used for the second L1-contraction run.
pub fn contraction_partner(rho: &ScalarField, amplitude: f64) -> ScalarField {
    let g = rho.grid();
    let k = 4.0 * PI / g.length();
    let bump = g.sample(|x| amplitude * (k * x[0]).sin());
    rho.zip_map(&bump, |a, b| a + b).expect("same grid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(preset: &str) -> InitialConfig {
        InitialConfig { preset: preset.into(), ..InitialConfig::default() }
    }

    #[test]
    fn presets_have_the_configured_mean() {
        let g = TorusGrid::unit(1, 64).unwrap();
        for p in ["constant", "single-mode", "double-well-spinodal"] {
            let f = initial_density(&cfg(p), &g).unwrap();
            assert!((f.mean() - 0.5).abs() < 1e-14, "{p}");
        }
        let f = initial_density(&cfg("double-well-spinodal"), &g).unwrap();
        assert!(f.min() > 0.2 && f.max() < 0.8);
    }

    #[test]
    fn snapshot_round_trip() {
        let g = TorusGrid::unit(1, 16).unwrap();
        let f = initial_density(&cfg("single-mode"), &g).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rho.txt");
        f.write_snapshot(std::fs::File::create(&path).unwrap(), 0.0).unwrap();
        let c = InitialConfig { preset: "snapshot".into(), path: Some(path), ..InitialConfig::default() };
        assert_eq!(initial_density(&c, &g).unwrap(), f);
        assert!(initial_density(&c, &TorusGrid::unit(1, 32).unwrap()).is_err());
    }

    #[test]
    fn negative_density_is_refused() {
        let g = TorusGrid::unit(1, 16).unwrap();
        let c = InitialConfig { preset: "single-mode".into(), amplitude: 2.0, ..InitialConfig::default() };
        assert!(initial_density(&c, &g).is_err());
    }
}
