use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite values in {0}")]
    NonFinite(&'static str),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("tail mass {mass:.3e} in the outer 10% annulus exceeds {tol:.1e}; the field wraps around the box")]
    TailMass { mass: f64, tol: f64 },

    #[error("under-resolved field: spectral mass {mass:.3e} above 2/3 Nyquist exceeds {tol:.1e}")]
    Unresolved { mass: f64, tol: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("{quantity} drift {drift:.3e} exceeds {tol:.1e} at t = {time}; integration unreliable")]
    ConservationDrift {
        quantity: &'static str,
        drift: f64,
        tol: f64,
        time: f64,
    },

    #[error("Petviashvili iteration did not converge in {iterations} iterations (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("Petviashvili iteration diverged: stabilizing factor {0:.3e} left [1e-8, 1e8]")]
    Diverged(f64),

    #[error("boost |v| = {v:.4} exceeds the grid: needs |v|/2 <= {limit:.4} (at least {min_modes} modes in x)")]
    BoostTooLarge { v: f64, limit: f64, min_modes: usize },

    #[error("fit failed: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
