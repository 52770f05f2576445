use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;

use super::fft;
use super::grid::GridSpec;
use crate::error::{LabError, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Complex samples of a function on a [`GridSpec`].
///
/// Values are stored row-major with x as the slow index. The raw DFT of the
/// samples is computed lazily and cached; fields are immutable once built.
#[derive(Debug, Clone)]
pub struct Field {
    grid: GridSpec,
    values: Vec<Complex64>,
    spectrum: OnceLock<Vec<Complex64>>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.values == other.values
    }
}

impl Field {
    pub fn zeros(grid: GridSpec) -> Self {
        Self::from_values_unchecked(grid, vec![ZERO; grid.len()])
    }

    pub fn from_values(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LabError::InvalidParameter(format!(
                "expected {} samples for a {}x{} grid, got {}",
                grid.len(),
                grid.nx(),
                grid.ny(),
                values.len()
            )));
        }
        Ok(Self::from_values_unchecked(grid, values))
    }

    pub(crate) fn from_values_unchecked(grid: GridSpec, values: Vec<Complex64>) -> Self {
        Self {
            grid,
            values,
            spectrum: OnceLock::new(),
        }
    }

    /// Samples `f(x, y)` at every grid point.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let xs = grid.xs();
        let ys = grid.ys();
        let mut values = Vec::with_capacity(grid.len());
        for &x in &xs {
            for &y in &ys {
                values.push(f(x, y));
            }
        }
        Self::from_values_unchecked(grid, values)
    }

    pub fn from_real_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_fn(grid, |x, y| Complex64::new(f(x, y), 0.0))
    }

    /// Builds a field from raw DFT coefficients (FFT order).
    pub fn from_spectrum(grid: GridSpec, spectrum: Vec<Complex64>) -> Result<Self> {
        if spectrum.len() != grid.len() {
            return Err(LabError::InvalidParameter(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                spectrum.len()
            )));
        }
        let mut values = spectrum.clone();
        fft::inverse(&mut values, grid.nx(), grid.ny());
        let spec = OnceLock::new();
        let _ = spec.set(spectrum);
        Ok(Self {
            grid,
            values,
            spectrum: spec,
        })
    }

    /// Builds a field from samples of its continuous Fourier transform
    /// `(1/2pi) \int f e^{-i(x xi + y eta)}` on the grid's frequency lattice.
    pub fn from_continuous_spectrum(grid: GridSpec, fhat: Vec<Complex64>) -> Result<Self> {
        if fhat.len() != grid.len() {
            return Err(LabError::InvalidParameter(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                fhat.len()
            )));
        }
        let scale = 2.0 * PI / grid.cell_area();
        let mut raw = fhat;
        for k in 0..grid.nx() {
            let sx = parity(grid.kx(k));
            for l in 0..grid.ny() {
                raw[grid.index(k, l)] *= scale * sx * parity(grid.ky(l));
            }
        }
        Self::from_spectrum(grid, raw)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.grid.index(i, j)]
    }

    /// Raw (unnormalized) DFT of the samples, FFT order.
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum.get_or_init(|| {
            let mut s = self.values.clone();
            fft::forward(&mut s, self.grid.nx(), self.grid.ny());
            s
        })
    }

    /// Continuous Fourier transform `f_hat(xi_k, eta_l)` approximated by the
    /// Riemann sum over the samples; on the lattice this is a phase-corrected
    /// rescaling of the DFT.
    pub fn continuous_spectrum(&self) -> Vec<Complex64> {
        let g = &self.grid;
        let scale = g.cell_area() / (2.0 * PI);
        let raw = self.spectrum();
        let mut out = Vec::with_capacity(raw.len());
        for k in 0..g.nx() {
            let sx = parity(g.kx(k));
            for l in 0..g.ny() {
                out.push(raw[g.index(k, l)] * (scale * sx * parity(g.ky(l))));
            }
        }
        out
    }

    /// Riemann-sum Fourier transform at arbitrary frequencies, returned as a
    /// `xis.len() x etas.len()` row-major matrix. Separable, `O(N^3)`.
    pub fn spectrum_at(&self, xis: &[f64], etas: &[f64]) -> Vec<Complex64> {
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let (na, nb) = (xis.len(), etas.len());
        let ys = g.ys();
        let xs = g.xs();

        let ey: Vec<Complex64> = etas
            .iter()
            .flat_map(|&eta| ys.iter().map(move |&y| Complex64::from_polar(1.0, -eta * y)))
            .collect();
        // partial[i][b] = sum_j f_ij e^{-i eta_b y_j}
        let mut partial = vec![ZERO; nx * nb];
        partial
            .par_chunks_mut(nb)
            .enumerate()
            .for_each(|(i, row)| {
                let f = &self.values[i * ny..(i + 1) * ny];
                for (b, out) in row.iter_mut().enumerate() {
                    let e = &ey[b * ny..(b + 1) * ny];
                    *out = f.iter().zip(e).map(|(a, b)| a * b).sum();
                }
            });

        let scale = g.cell_area() / (2.0 * PI);
        let mut out = vec![ZERO; na * nb];
        out.par_chunks_mut(nb).enumerate().for_each(|(a, row)| {
            let xi = xis[a];
            for (i, &x) in xs.iter().enumerate() {
                let e = Complex64::from_polar(scale, -xi * x);
                let p = &partial[i * nb..(i + 1) * nb];
                for (o, v) in row.iter_mut().zip(p) {
                    *o += e * v;
                }
            }
        });
        out
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub(crate) fn ensure_finite(&self, what: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(LabError::NonFinite(what))
        }
    }

    /// Quadrature `L^2` norm `(sum |f|^2 dx dy)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_area()).sqrt()
    }

    /// `L^2` norm via discrete Plancherel on the spectral side.
    pub fn spectral_l2_norm(&self) -> f64 {
        let s: f64 = self.spectrum().iter().map(|v| v.norm_sqr()).sum();
        (s * self.grid.cell_area() / self.grid.len() as f64).sqrt()
    }

    /// Quadrature `L^q` norm.
    pub fn lq_norm(&self, q: f64) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm().powf(q)).sum();
        (s * self.grid.cell_area()).powf(1.0 / q)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// `L^2` inner product `\int f conj(g)`.
    pub fn inner(&self, other: &Field) -> Result<Complex64> {
        self.same_grid(other)?;
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum();
        Ok(s * self.grid.cell_area())
    }

    pub fn same_grid(&self, other: &Field) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(LabError::GridMismatch)
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Field {
        Field::from_values_unchecked(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, c: Complex64) -> Field {
        self.map(|v| v * c)
    }

    pub fn scale_re(&self, c: f64) -> Field {
        self.map(|v| v * c)
    }

    pub fn conj(&self) -> Field {
        self.map(|v| v.conj())
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn zip_with(
        &self,
        other: &Field,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Field> {
        self.same_grid(other)?;
        Ok(Field::from_values_unchecked(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    /// Relative `L^2` distance `||self - other|| / ||other||`.
    pub fn rel_l2_distance(&self, other: &Field) -> Result<f64> {
        let d = self.sub(other)?.l2_norm();
        let n = other.l2_norm();
        Ok(if n == 0.0 { d } else { d / n })
    }

    /// Fraction of the `L^2` mass in the outer 10% frame of the box
    /// (`|x| > 0.9 Lx` or `|y| > 0.9 Ly`).
    pub fn annulus_mass_fraction(&self) -> f64 {
        let g = &self.grid;
        let (cx, cy) = (0.9 * g.lx(), 0.9 * g.ly());
        let mut outer = 0.0;
        let mut total = 0.0;
        for i in 0..g.nx() {
            let xo = g.x(i).abs() > cx;
            for j in 0..g.ny() {
                let m = self.values[g.index(i, j)].norm_sqr();
                total += m;
                if xo || g.y(j).abs() > cy {
                    outer += m;
                }
            }
        }
        if total == 0.0 {
            0.0
        } else {
            outer / total
        }
    }

    pub fn check_tail(&self, tol: f64) -> Result<()> {
        let mass = self.annulus_mass_fraction();
        if mass > tol {
            Err(LabError::TailMass { mass, tol })
        } else {
            Ok(())
        }
    }

    /// Fraction of spectral mass in modes with `|k_x| > Nx/3` or `|k_y| > Ny/3`.
    pub fn spectral_tail_fraction(&self) -> f64 {
        let g = &self.grid;
        let s = self.spectrum();
        let mut outer = 0.0;
        let mut total = 0.0;
        for k in 0..g.nx() {
            let ko = outside_two_thirds(g.kx(k), g.nx());
            for l in 0..g.ny() {
                let m = s[g.index(k, l)].norm_sqr();
                total += m;
                if ko || outside_two_thirds(g.ky(l), g.ny()) {
                    outer += m;
                }
            }
        }
        if total == 0.0 {
            0.0
        } else {
            outer / total
        }
    }

    pub fn check_resolved(&self, tol: f64) -> Result<()> {
        let mass = self.spectral_tail_fraction();
        if mass > tol {
            Err(LabError::Unresolved { mass, tol })
        } else {
            Ok(())
        }
    }
}

pub(crate) fn parity(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

pub(crate) fn outside_two_thirds(k: i64, n: usize) -> bool {
    3 * k.unsigned_abs() as usize > n
}

/// Multiplies the spectrum by `symbol(xi, eta)`.
pub fn apply_multiplier(f: &Field, symbol: impl Fn(f64, f64) -> Complex64) -> Result<Field> {
    f.ensure_finite("field")?;
    let g = *f.grid();
    let xis = g.xis();
    let etas = g.etas();
    let mut out = f.spectrum().to_vec();
    for (k, &xi) in xis.iter().enumerate() {
        for (l, &eta) in etas.iter().enumerate() {
            let m = symbol(xi, eta);
            if !(m.re.is_finite() && m.im.is_finite()) {
                return Err(LabError::NonFinite("multiplier symbol"));
            }
            out[g.index(k, l)] *= m;
        }
    }
    Field::from_spectrum(g, out)
}

/// Real-valued symbol convenience wrapper around [`apply_multiplier`].
pub fn apply_real_multiplier(f: &Field, symbol: impl Fn(f64, f64) -> f64) -> Result<Field> {
    apply_multiplier(f, |xi, eta| Complex64::new(symbol(xi, eta), 0.0))
}

/// Affine change of variables `g(x, y) = A e^{i kappa x} f(alpha (x + c), beta y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub amplitude: Complex64,
    pub alpha: f64,
    pub beta: f64,
    pub shift_x: f64,
    pub carrier: f64,
}

impl AffineMap {
    pub fn scaling(amplitude: f64, alpha: f64, beta: f64) -> Self {
        Self {
            amplitude: Complex64::new(amplitude, 0.0),
            alpha,
            beta,
            shift_x: 0.0,
            carrier: 0.0,
        }
    }
}

/// Band `[-nyq, nyq)` of the FFT-ordered lattice.
#[inline]
pub(crate) fn in_band(freq: f64, nyq: f64) -> bool {
    freq >= -nyq - 1e-9 && freq < nyq - 1e-9
}

/// Samples `map(src)` on `target` by spectral interpolation: the target
/// spectrum is the continuous transform of the band-limited source evaluated
/// at the mapped frequencies,
/// `g_hat(xi, eta) = A/(alpha beta) e^{i(xi - kappa)c} f_hat((xi - kappa)/alpha, eta/beta)`.
///
/// `tol` bounds both the source mass lying outside the preimage of the target
/// box and the source spectral mass that falls outside the target band.
pub fn resample(src: &Field, target: GridSpec, map: &AffineMap, tol: f64) -> Result<Field> {
    src.ensure_finite("source field")?;
    if !(map.alpha > 0.0 && map.beta > 0.0) {
        return Err(LabError::InvalidParameter(
            "resampling scales must be positive".into(),
        ));
    }
    let sg = *src.grid();

    // Source mass outside the preimage of the target box.
    let x_lo = map.alpha * (-target.lx() + map.shift_x);
    let x_hi = map.alpha * (target.lx() + map.shift_x);
    let y_hi = map.beta * target.ly();
    let mut total = 0.0;
    let mut lost = 0.0;
    for i in 0..sg.nx() {
        let x = sg.x(i);
        let xo = x < x_lo - 1e-12 * sg.lx() || x > x_hi + 1e-12 * sg.lx();
        for j in 0..sg.ny() {
            let m = src.values()[sg.index(i, j)].norm_sqr();
            total += m;
            if xo || sg.y(j).abs() > y_hi + 1e-12 * sg.ly() {
                lost += m;
            }
        }
    }
    if total > 0.0 && lost / total > tol {
        return Err(LabError::TailMass {
            mass: lost / total,
            tol,
        });
    }

    // Source spectral mass that lands outside the target band.
    let spec = src.spectrum();
    let mut band_total = 0.0;
    let mut band_lost = 0.0;
    let (nyq_tx, nyq_ty) = (target.nyquist_x(), target.nyquist_y());
    for k in 0..sg.nx() {
        let xi_t = map.alpha * sg.xi(k) + map.carrier;
        let xo = !in_band(xi_t, nyq_tx);
        for l in 0..sg.ny() {
            let m = spec[sg.index(k, l)].norm_sqr();
            band_total += m;
            let eta_t = map.beta * sg.eta(l);
            if xo || !in_band(eta_t, nyq_ty) {
                band_lost += m;
            }
        }
    }
    if band_total > 0.0 && band_lost / band_total > tol {
        return Err(LabError::Unresolved {
            mass: band_lost / band_total,
            tol,
        });
    }

    // Preimage frequencies; anything beyond the source band is exactly zero
    // for the band-limited interpolant.
    let nyq_sx = sg.nyquist_x();
    let nyq_sy = sg.nyquist_y();
    let src_xis: Vec<f64> = target
        .xis()
        .iter()
        .map(|&xi| (xi - map.carrier) / map.alpha)
        .collect();
    let src_etas: Vec<f64> = target.etas().iter().map(|&eta| eta / map.beta).collect();
    let inside_x: Vec<usize> = (0..src_xis.len())
        .filter(|&a| in_band(src_xis[a], nyq_sx))
        .collect();
    let inside_y: Vec<usize> = (0..src_etas.len())
        .filter(|&b| in_band(src_etas[b], nyq_sy))
        .collect();
    let sub_xis: Vec<f64> = inside_x.iter().map(|&a| src_xis[a]).collect();
    let sub_etas: Vec<f64> = inside_y.iter().map(|&b| src_etas[b]).collect();
    let sub = src.spectrum_at(&sub_xis, &sub_etas);

    let pre = map.amplitude / (map.alpha * map.beta);
    let mut fhat = vec![ZERO; target.len()];
    for (ia, &a) in inside_x.iter().enumerate() {
        let xi = target.xi(a);
        let phase = Complex64::from_polar(1.0, (xi - map.carrier) * map.shift_x);
        for (ib, &b) in inside_y.iter().enumerate() {
            fhat[target.index(a, b)] = pre * phase * sub[ia * sub_etas.len() + ib];
        }
    }
    Field::from_continuous_spectrum(target, fhat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::grid::make_grid;

    fn gaussian(grid: GridSpec) -> Field {
        Field::from_real_fn(grid, |x, y| (-(x * x + y * y) / 2.0).exp())
    }

    #[test]
    fn continuous_spectrum_of_gaussian() {
        // FT of e^{-(x^2+y^2)/2} with the 1/(2 pi) convention is e^{-(xi^2+eta^2)/2}.
        let g = make_grid(12.0, 12.0, 64, 64).unwrap();
        let f = gaussian(g);
        let s = f.continuous_spectrum();
        for k in 0..g.nx() {
            for l in 0..g.ny() {
                let (xi, eta) = (g.xi(k), g.eta(l));
                let exact = (-(xi * xi + eta * eta) / 2.0).exp();
                assert!((s[g.index(k, l)] - exact).norm() < 1e-12, "{xi} {eta}");
            }
        }
        let off = f.spectrum_at(&[0.3, -1.7], &[0.05, 2.2]);
        for (a, &xi) in [0.3f64, -1.7].iter().enumerate() {
            for (b, &eta) in [0.05f64, 2.2].iter().enumerate() {
                let exact = (-(xi * xi + eta * eta) / 2.0).exp();
                assert!((off[a * 2 + b] - exact).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn continuous_spectrum_round_trip() {
        let g = make_grid(6.0, 9.0, 32, 64).unwrap();
        let f = Field::from_fn(g, |x, y| {
            Complex64::new((-(x * x) - 0.5 * y * y).exp(), x * (-(x * x + y * y)).exp())
        });
        let back = Field::from_continuous_spectrum(g, f.continuous_spectrum()).unwrap();
        assert!(back.rel_l2_distance(&f).unwrap() < 1e-13);
    }

    #[test]
    fn multiplier_identity_and_eigenfunction() {
        let g = make_grid(PI, PI, 16, 16).unwrap();
        let f = Field::from_fn(g, |_, y| Complex64::from_polar(1.0, 5.0 * y));
        let id = apply_real_multiplier(&f, |_, _| 1.0).unwrap();
        assert!(id.rel_l2_distance(&f).unwrap() < 1e-14);
        let d = apply_real_multiplier(&f, |_, eta| eta.abs()).unwrap();
        assert!(d.rel_l2_distance(&f.scale_re(5.0)).unwrap() < 1e-13);
    }

    #[test]
    fn multiplier_composition_matches_product_symbol() {
        let g = make_grid(PI, PI, 16, 16).unwrap();
        let f = Field::from_fn(g, |x, y| Complex64::from_polar(1.0, 3.0 * x + 4.0 * y));
        let two_step = apply_real_multiplier(
            &apply_real_multiplier(&f, |xi, _| -xi * xi).unwrap(),
            |_, eta| eta.abs(),
        )
        .unwrap();
        let one_step = apply_real_multiplier(&f, |xi, eta| -xi * xi * eta.abs()).unwrap();
        assert!(two_step.rel_l2_distance(&one_step).unwrap() < 1e-13);
        // Additive combination: (-xi^2 + |eta|) on e^{i(3x+4y)} gives -5 f.
        let sum = apply_real_multiplier(&f, |xi, eta| -xi * xi + eta.abs()).unwrap();
        assert!(sum.rel_l2_distance(&f.scale_re(-5.0)).unwrap() < 1e-13);
    }

    #[test]
    fn multiplier_rejects_non_finite_symbol() {
        let g = make_grid(PI, PI, 16, 16).unwrap();
        let f = gaussian(g);
        assert!(apply_real_multiplier(&f, |xi, _| 1.0 / xi).is_err());
    }

    #[test]
    fn resample_matches_closed_form_scaling() {
        let g = make_grid(10.0, 10.0, 64, 64).unwrap();
        let f = gaussian(g);
        let map = AffineMap::scaling(3.0, 2.0, 1.5);
        let g = make_grid(10.0, 10.0, 128, 128).unwrap();
        let out = resample(&f, g, &map, 1e-10).unwrap();
        let exact = Field::from_real_fn(g, |x, y| {
            3.0 * (-((2.0 * x).powi(2) + (1.5 * y).powi(2)) / 2.0).exp()
        });
        assert!(out.rel_l2_distance(&exact).unwrap() < 1e-10);
    }

    #[test]
    fn resample_boost_and_shift() {
        let g = make_grid(10.0, 10.0, 128, 64).unwrap();
        let f = gaussian(g);
        // carrier on the lattice: kappa = -pi * 6 / 10
        let kappa = -PI * 6.0 / 10.0;
        let map = AffineMap {
            amplitude: Complex64::new(0.0, 1.0),
            alpha: 1.2,
            beta: 0.8,
            shift_x: 0.7,
            carrier: kappa,
        };
        let out = resample(&f, g, &map, 1e-10).unwrap();
        let exact = Field::from_fn(g, |x, y| {
            let u = 1.2 * (x + 0.7);
            let v = 0.8 * y;
            Complex64::new(0.0, 1.0)
                * Complex64::from_polar(1.0, kappa * x)
                * (-(u * u + v * v) / 2.0).exp()
        });
        assert!(out.rel_l2_distance(&exact).unwrap() < 1e-10);
    }

    #[test]
    fn resample_reports_truncation() {
        let g = make_grid(10.0, 10.0, 64, 64).unwrap();
        let f = gaussian(g);
        // alpha = 0.2 needs source data out to |x| = 50, beyond what survives
        // in the target box.
        let stretched = resample(&f, g, &AffineMap::scaling(1.0, 0.2, 1.0), 1e-10);
        assert!(matches!(stretched, Err(LabError::TailMass { .. })));
        // alpha = 20 squeezes the spectrum past the target band.
        let squeezed = resample(&f, g, &AffineMap::scaling(1.0, 20.0, 1.0), 1e-10);
        assert!(matches!(squeezed, Err(LabError::Unresolved { .. })));
    }
}
