//! Numerical laboratory for the half-wave Schrodinger equation
//! `i u_t + u_xx - |D_y| u = mu |u|^{p-1} u` on a periodic box.

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod groundstate;
pub mod spectral;
pub mod transforms;

pub use error::{LabError, Result};
pub use spectral::{make_grid, Field, GridSpec, SobolevIndex};
