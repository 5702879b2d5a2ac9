//! Periodic-torus simulator for the high-friction chain nonlocal
//! Euler-Korteweg -> nonlocal Cahn-Hilliard -> local Cahn-Hilliard.

pub mod ch;
pub mod diagnostics;
pub mod ek;
pub mod error;
pub mod fit;
pub mod grid;
pub mod mollifier;
pub mod par;
pub mod potential;
pub mod run;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{ScalarField, TorusGrid, VectorField};
pub use mollifier::{build_kernel, MollifierKernel, Profile};
pub use par::Exec;
pub use potential::{PotentialSpec, PressureParams};
pub use ch::{CHState, LCHParams, NLCHParams};
pub use ek::{EKParams, EKState};
pub use run::{RunOptions, TimeStep, Trajectory};
