//! Periodic grids, transforms, Fourier multipliers and the norm functionals.

pub mod fft;
pub(crate) mod field;
mod grid;
mod norms;

pub use field::{apply_multiplier, apply_real_multiplier, resample, AffineMap, Field};
pub use grid::{make_grid, GridSpec, MIN_MODES};
pub use norms::{
    boosted_sobolev_norm, boosted_sobolev_norm_with, derivative, energy, energy_with_dispersion,
    gn_ratio, mass, sobolev_norm, weighted_norm_hkk, weighted_norm_hkk_with_tol, Boost,
    Quadrature, SobolevIndex, MAX_HKK_ORDER, TAIL_TOL,
};
