use thiserror::Error;

/// Errors raised by grid operators, kernels, potentials and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value encountered in {op}")]
    NonFinite { op: &'static str },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("unsupported dimension {0} (expected 1 or 2)")]
    Dimension(usize),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("inverse transform left an imaginary residue of {residue:e} (limit {limit:e})")]
    ImaginaryResidue { residue: f64, limit: f64 },

    #[error("kernel radius {eta} is under-resolved (needs eta >= {min} = 4 cells)")]
    Resolution { eta: f64, min: f64 },

    #[error("kernel radius {eta} wraps around the torus (needs eta < L/2 = {max})")]
    Support { eta: f64, max: f64 },

    #[error("kernel symbol equals one at nonzero mode {mode:?}; the nonlocal Poincare inequality fails on this grid")]
    SingularKernel { mode: Vec<i64> },

    #[error("invalid potential: {0}")]
    Potential(String),

    #[error("integrand of phi_delta is negative ({value:e}) at rho = {rho}; 1/eta^2 + F'' must stay nonnegative")]
    Ellipticity { rho: f64, value: f64 },

    #[error("time step {dt:e} exceeds the stability bound {limit:e}")]
    StepSize { dt: f64, limit: f64 },

    #[error("solution diverged (non-finite state) at t = {time}")]
    Divergence { time: f64 },

    #[error("density dropped to {min:e} at t = {time}")]
    Positivity { min: f64, time: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("snapshot parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
