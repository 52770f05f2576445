//! Two-dimensional FFTs over row-major `(nx, ny)` buffers.
//!
//! Plans come from a thread-local planner, so concurrent callers never share
//! scratch space.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const BLOCK: usize = 16;
    for rb in (0..rows).step_by(BLOCK) {
        for cb in (0..cols).step_by(BLOCK) {
            for r in rb..(rb + BLOCK).min(rows) {
                for c in cb..(cb + BLOCK).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

fn fft2(data: &mut [Complex64], nx: usize, ny: usize, inverse: bool) {
    debug_assert_eq!(data.len(), nx * ny);
    // rows (contiguous along y)
    plan(ny, inverse).process(data);
    let mut t = vec![Complex64::new(0.0, 0.0); data.len()];
    transpose(data, &mut t, nx, ny);
    plan(nx, inverse).process(&mut t);
    transpose(&t, data, ny, nx);
}

/// Unnormalized forward DFT, `F_kl = sum_ij f_ij e^{-2 pi i (ik/Nx + jl/Ny)}`.
pub fn forward(data: &mut [Complex64], nx: usize, ny: usize) {
    fft2(data, nx, ny, false);
}

/// Inverse DFT including the `1/(Nx Ny)` factor.
pub fn inverse(data: &mut [Complex64], nx: usize, ny: usize) {
    fft2(data, nx, ny, true);
    let s = 1.0 / (nx * ny) as f64;
    for v in data.iter_mut() {
        *v *= s;
    }
}
