use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Uniform periodic discretization of the box `[-Lx, Lx) x [-Ly, Ly)`.
///
/// Physical samples sit at `x_i = -Lx + i * 2Lx/Nx`; the frequency lattice is
/// `pi * k / Lx` for `k = -Nx/2 .. Nx/2 - 1` (stored in FFT order).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    half_width_x: f64,
    half_width_y: f64,
    modes_x: usize,
    modes_y: usize,
}

pub const MIN_MODES: usize = 16;

/// Validating constructor.
pub fn make_grid(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<GridSpec> {
    GridSpec::new(lx, ly, nx, ny)
}

impl GridSpec {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0) {
            return Err(LabError::InvalidGrid(format!(
                "box half-widths must be positive and finite, got Lx = {lx}, Ly = {ly}"
            )));
        }
        for (axis, n) in [("x", nx), ("y", ny)] {
            if n % 2 != 0 {
                return Err(LabError::InvalidGrid(format!(
                    "mode count along {axis} must be even, got {n}"
                )));
            }
            if n < MIN_MODES {
                return Err(LabError::InvalidGrid(format!(
                    "mode count along {axis} must be at least {MIN_MODES}, got {n}"
                )));
            }
            if !n.is_power_of_two() {
                return Err(LabError::InvalidGrid(format!(
                    "mode count along {axis} must be a power of two, got {n}"
                )));
            }
        }
        Ok(Self {
            half_width_x: lx,
            half_width_y: ly,
            modes_x: nx,
            modes_y: ny,
        })
    }

    /// Square grid `[-l, l)^2` with `n x n` modes.
    pub fn square(l: f64, n: usize) -> Result<Self> {
        Self::new(l, l, n, n)
    }

    pub fn lx(&self) -> f64 {
        self.half_width_x
    }

    pub fn ly(&self) -> f64 {
        self.half_width_y
    }

    pub fn nx(&self) -> usize {
        self.modes_x
    }

    pub fn ny(&self) -> usize {
        self.modes_y
    }

    pub fn len(&self) -> usize {
        self.modes_x * self.modes_y
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width_x / self.modes_x as f64
    }

    pub fn dy(&self) -> f64 {
        2.0 * self.half_width_y / self.modes_y as f64
    }

    /// Physical cell area `dx * dy`.
    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    /// Frequency cell area `(pi/Lx)(pi/Ly)`.
    pub fn spectral_cell(&self) -> f64 {
        PI * PI / (self.half_width_x * self.half_width_y)
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half_width_x * self.half_width_y
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.half_width_x + i as f64 * self.dx()
    }

    pub fn y(&self, j: usize) -> f64 {
        -self.half_width_y + j as f64 * self.dy()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.modes_x).map(|i| self.x(i)).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        (0..self.modes_y).map(|j| self.y(j)).collect()
    }

    /// Signed wavenumber index of FFT slot `k` along x.
    pub fn kx(&self, k: usize) -> i64 {
        signed_index(k, self.modes_x)
    }

    pub fn ky(&self, l: usize) -> i64 {
        signed_index(l, self.modes_y)
    }

    /// Angular frequency `xi` of FFT slot `k`.
    pub fn xi(&self, k: usize) -> f64 {
        PI * self.kx(k) as f64 / self.half_width_x
    }

    pub fn eta(&self, l: usize) -> f64 {
        PI * self.ky(l) as f64 / self.half_width_y
    }

    pub fn xis(&self) -> Vec<f64> {
        (0..self.modes_x).map(|k| self.xi(k)).collect()
    }

    pub fn etas(&self) -> Vec<f64> {
        (0..self.modes_y).map(|l| self.eta(l)).collect()
    }

    /// Largest representable |xi| (attained at `k = -Nx/2`).
    pub fn nyquist_x(&self) -> f64 {
        PI * (self.modes_x / 2) as f64 / self.half_width_x
    }

    pub fn nyquist_y(&self) -> f64 {
        PI * (self.modes_y / 2) as f64 / self.half_width_y
    }

    /// Frequency lattice spacing along x, `pi / Lx`.
    pub fn dxi(&self) -> f64 {
        PI / self.half_width_x
    }

    pub fn deta(&self) -> f64 {
        PI / self.half_width_y
    }

    /// Same mode counts, half-widths multiplied by `(sx, sy)`.
    pub fn scaled(&self, sx: f64, sy: f64) -> Result<Self> {
        Self::new(
            self.half_width_x * sx,
            self.half_width_y * sy,
            self.modes_x,
            self.modes_y,
        )
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.modes_y + j
    }
}

fn signed_index(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_box_has_integer_frequencies() {
        let g = make_grid(PI, PI, 16, 16).unwrap();
        assert!((g.dx() - 2.0 * PI / 16.0).abs() < 1e-15);
        assert!((g.dy() - 2.0 * PI / 16.0).abs() < 1e-15);
        let mut ks: Vec<i64> = (0..16).map(|k| g.xi(k).round() as i64).collect();
        ks.sort();
        assert_eq!(ks, (-8..8).collect::<Vec<_>>());
        for k in 0..16 {
            assert!((g.xi(k) - g.xi(k).round()).abs() < 1e-12);
        }
    }

    #[test]
    fn largest_positive_frequency() {
        let g = make_grid(20.0, 20.0, 256, 256).unwrap();
        let max_pos = g.xis().into_iter().fold(f64::MIN, f64::max);
        // pi * 127 / 20
        assert!((max_pos - PI * 127.0 / 20.0).abs() < 1e-12);
        assert!((max_pos - 19.949_113_350_295_186).abs() < 1e-9);
        assert!((g.nyquist_x() - PI * 128.0 / 20.0).abs() < 1e-12);
        // Largest |xi| in the lattice is the Nyquist slot k = -N/2.
        let max_abs = g.xis().into_iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        assert!((max_abs - 20.106_192_982_974_676).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(make_grid(PI, PI, 15, 16).is_err());
        assert!(make_grid(PI, PI, 16, 15).is_err());
        assert!(make_grid(PI, PI, 8, 16).is_err());
        assert!(make_grid(PI, PI, 24, 16).is_err());
        assert!(make_grid(0.0, PI, 16, 16).is_err());
        assert!(make_grid(PI, -1.0, 16, 16).is_err());
        assert!(make_grid(f64::NAN, 1.0, 16, 16).is_err());
    }

    #[test]
    fn sample_points_are_box_centered() {
        let g = make_grid(2.0, 3.0, 16, 32).unwrap();
        assert_eq!(g.x(0), -2.0);
        assert!((g.x(8)).abs() < 1e-15);
        assert!((g.y(16)).abs() < 1e-15);
        assert!((g.area() - 24.0).abs() < 1e-12);
    }
}
