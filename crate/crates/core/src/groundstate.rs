//! Standing-wave profiles `-Q_xx + |D_y| Q + beta Q = |Q|^{p-1} Q` by
//! Petviashvili iteration.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::spectral::{fft, resample, AffineMap, Field, GridSpec, SobolevIndex};

#[derive(Debug, Clone)]
pub struct GroundStateResult {
    pub profile: Field,
    pub beta: f64,
    pub p: f64,
    pub residual: f64,
    pub iterations: usize,
    /// Final stabilizing factor `M_n`; tends to 1 at the fixed point.
    pub stabilizer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PetviashviliOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PetviashviliOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 500,
        }
    }
}

/// `e^{-(beta x^2 + beta |y|)}`.
pub fn default_seed(grid: GridSpec, beta: f64) -> Field {
    Field::from_real_fn(grid, |x, y| (-(beta * x * x + beta * y.abs())).exp())
}

fn check_range(p: f64, beta: f64) -> Result<()> {
    if !(p > 1.0 && p < 5.0) {
        return Err(LabError::InvalidParameter(format!(
            "ground states need 1 < p < 5, got p = {p}"
        )));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(LabError::InvalidParameter(format!(
            "beta must be positive, got {beta}"
        )));
    }
    Ok(())
}

fn symbol(grid: &GridSpec, beta: f64) -> Vec<f64> {
    let etas = grid.etas();
    grid.xis()
        .iter()
        .flat_map(|&xi| etas.iter().map(move |&eta| xi * xi + eta.abs() + beta))
        .collect()
}

fn power_nonlinearity(values: &[Complex64], p: f64) -> Vec<Complex64> {
    values
        .iter()
        .map(|&v| {
            let r = v.norm();
            if r < 1e-300 {
                Complex64::new(0.0, 0.0)
            } else {
                v * r.powf(p - 1.0)
            }
        })
        .collect()
}

/// `||L Q - |Q|^{p-1} Q||_{L^2} / ||Q||_{L^2}` with `L = -dx^2 + |D_y| + beta`.
pub fn groundstate_residual(q: &Field, beta: f64, p: f64) -> f64 {
    let g = *q.grid();
    let l = symbol(&g, beta);
    let mut nl = power_nonlinearity(q.values(), p);
    fft::forward(&mut nl, g.nx(), g.ny());
    let qs = q.spectrum();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..g.len() {
        num += (qs[i] * l[i] - nl[i]).norm_sqr();
        den += qs[i].norm_sqr();
    }
    if den == 0.0 {
        f64::INFINITY
    } else {
        (num / den).sqrt()
    }
}

/// Iterates `Q <- M^{p/(p-1)} L^{-1}(|Q|^{p-1} Q)` with
/// `M = <L Q, Q> / <|Q|^{p-1} Q, Q>` until the residual falls below `tol`.
pub fn petviashvili(
    p: f64,
    beta: f64,
    grid: GridSpec,
    opts: &PetviashviliOptions,
    seed: Option<&Field>,
) -> Result<GroundStateResult> {
    check_range(p, beta)?;
    let (nx, ny) = (grid.nx(), grid.ny());
    let l = symbol(&grid, beta);
    let gamma = p / (p - 1.0);
    let mut q = match seed {
        Some(s) => {
            if *s.grid() != grid {
                return Err(LabError::GridMismatch);
            }
            s.ensure_finite("seed")?;
            s.values().to_vec()
        }
        None => default_seed(grid, beta).into_values(),
    };
    let mut residual = f64::INFINITY;
    let mut m = f64::NAN;

    for iter in 1..=opts.max_iter {
        let mut qh = q.clone();
        fft::forward(&mut qh, nx, ny);
        let mut nh = power_nonlinearity(&q, p);
        fft::forward(&mut nh, nx, ny);

        let mut lqq = 0.0;
        let mut nqq = 0.0;
        for i in 0..qh.len() {
            lqq += l[i] * qh[i].norm_sqr();
            nqq += (nh[i] * qh[i].conj()).re;
        }
        m = lqq / nqq;
        if !(1e-8..=1e8).contains(&m) || !m.is_finite() {
            return Err(LabError::Diverged(m));
        }
        let factor = m.powf(gamma);
        for i in 0..qh.len() {
            qh[i] = factor * nh[i] / l[i];
        }
        fft::inverse(&mut qh, nx, ny);
        q = qh;

        residual = groundstate_residual(&Field::from_values_unchecked(grid, q.clone()), beta, p);
        if !residual.is_finite() {
            return Err(LabError::NonFinite("Petviashvili iterate"));
        }
        if residual <= opts.tol {
            let profile = normalize_phase(Field::from_values_unchecked(grid, q));
            return Ok(GroundStateResult {
                profile,
                beta,
                p,
                residual,
                iterations: iter,
                stabilizer: m,
            });
        }
    }
    let _ = m;
    Err(LabError::NotConverged {
        iterations: opts.max_iter,
        residual,
    })
}

/// Multiplies by the unimodular constant that makes the spatial mean real
/// and positive.
fn normalize_phase(f: Field) -> Field {
    let mean: Complex64 = f.values().iter().sum();
    if mean.norm() == 0.0 {
        return f;
    }
    let rot = mean.conj() / mean.norm();
    f.scale(rot)
}

/// `Q_beta(x, y) = beta^{1/(p-1)} Q_1(sqrt(beta) x, beta y)` on the grid of
/// `q1` scaled by `(1/sqrt(beta), 1/beta)`, where the map is exact on samples.
pub fn rescale_groundstate(q1: &Field, beta: f64, p: f64) -> Result<Field> {
    check_range(p, beta)?;
    q1.ensure_finite("profile")?;
    let grid = q1.grid().scaled(1.0 / beta.sqrt(), 1.0 / beta)?;
    Field::from_values(grid, q1.scale_re(beta.powf(1.0 / (p - 1.0))).into_values())
}

/// [`rescale_groundstate`] onto an arbitrary grid by spectral resampling;
/// `tol` bounds the mass lost to the box or band of `target`.
pub fn rescale_groundstate_onto(
    q1: &Field,
    beta: f64,
    p: f64,
    target: GridSpec,
    tol: f64,
) -> Result<Field> {
    check_range(p, beta)?;
    let map = AffineMap::scaling(beta.powf(1.0 / (p - 1.0)), beta.sqrt(), beta);
    resample(q1, target, &map, tol)
}

/// `sum W(xi, eta) f_hat conj(g_hat)` over the frequency lattice.
pub fn hs_inner_product(f: &Field, g: &Field, idx: SobolevIndex) -> Result<Complex64> {
    f.same_grid(g)?;
    idx.validate()?;
    f.ensure_finite("left field")?;
    g.ensure_finite("right field")?;
    let grid = f.grid();
    let (fs, gs) = (f.spectrum(), g.spectrum());
    let etas = grid.etas();
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, xi) in grid.xis().into_iter().enumerate() {
        for (l, &eta) in etas.iter().enumerate() {
            let i = grid.index(k, l);
            let w = idx.weight(xi, eta);
            if w != 0.0 {
                acc += fs[i] * gs[i].conj() * w;
            }
        }
    }
    Ok(acc * (grid.cell_area() / grid.len() as f64))
}
