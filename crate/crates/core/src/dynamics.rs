//! Exact nonlinear flow, Strang splitting for the small-dispersion and full
//! equations, and the Lemma 1 error functional.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::spectral::field::outside_two_thirds;
use crate::spectral::{
    apply_multiplier, energy_with_dispersion, fft, mass, weighted_norm_hkk_with_tol, Field,
    GridSpec,
};

/// Every construction parameter of the solution families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub p: f64,
    pub mu: f64,
    pub nu: f64,
    pub a: f64,
    pub lambda: f64,
    pub v: f64,
    pub k: usize,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            p: 3.0,
            mu: 1.0,
            nu: 0.1,
            a: 1.0,
            lambda: 0.1,
            v: 0.0,
            k: 2,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(LabError::InvalidParameter(format!(
                "p must exceed 1, got {}",
                self.p
            )));
        }
        if self.mu != 1.0 && self.mu != -1.0 {
            return Err(LabError::InvalidParameter(format!(
                "mu must be +1 or -1, got {}",
                self.mu
            )));
        }
        if !(self.nu >= 0.0 && self.nu <= 1.0) {
            return Err(LabError::InvalidParameter(format!(
                "nu must lie in [0, 1], got {}",
                self.nu
            )));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(LabError::InvalidParameter(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if !self.a.is_finite() || !self.v.is_finite() {
            return Err(LabError::InvalidParameter("a and v must be finite".into()));
        }
        Ok(())
    }
}

/// Which equation the integrator advances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    /// `i phi_t + nu^2 phi_xx - nu^2 |D_y| phi = mu |phi|^{p-1} phi`
    #[default]
    SmallDispersion,
    /// `i u_t + u_xx - |D_y| u = mu |u|^{p-1} u`
    Full,
}

impl Equation {
    pub fn dispersion(&self, params: &ModelParams) -> f64 {
        match self {
            Equation::SmallDispersion => params.nu * params.nu,
            Equation::Full => 1.0,
        }
    }
}

/// `phi0 e^{-i mu t |phi0|^{p-1}}`, pointwise.
pub fn ode_flow(phi0: &Field, t: f64, p: f64, mu: f64) -> Field {
    phi0.map(|v| nonlinear_phase(v, t, p, mu))
}

#[inline]
fn nonlinear_phase(v: Complex64, t: f64, p: f64, mu: f64) -> Complex64 {
    let r = v.norm();
    if r < 1e-300 {
        return v;
    }
    let theta = -mu * t * if p == 3.0 { r * r } else { r.powf(p - 1.0) };
    v * Complex64::from_polar(1.0, theta)
}

/// `e^{-i t nu^2 (xi^2 + |eta|)}` applied on the spectral side.
pub fn linear_propagator(f: &Field, t: f64, nu: f64) -> Result<Field> {
    propagate_linear(f, t, nu * nu)
}

fn propagate_linear(f: &Field, t: f64, c: f64) -> Result<Field> {
    if c == 0.0 || t == 0.0 {
        return Ok(f.clone());
    }
    apply_multiplier(f, |xi, eta| {
        Complex64::from_polar(1.0, -t * c * (xi * xi + eta.abs()))
    })
}

/// Switches for the Strang step; both on by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitOptions {
    /// Zero modes beyond 2/3 Nyquist after each nonlinear substep.
    pub dealias: bool,
    /// Include the nonlinear substeps.
    pub nonlinear: bool,
}

impl Default for SplitOptions {
    fn default() -> Self {
        Self {
            dealias: true,
            nonlinear: true,
        }
    }
}

/// Stepper holding the precomputed linear multiplier for one `(grid, dt, c)`.
struct Stepper {
    grid: GridSpec,
    p: f64,
    mu: f64,
    dt: f64,
    c: f64,
    opts: SplitOptions,
    // linear multiplier, with the dealiasing mask folded in when active
    multiplier: Vec<Complex64>,
    mask: Vec<bool>,
}

impl Stepper {
    fn new(grid: GridSpec, dt: f64, c: f64, params: &ModelParams, opts: SplitOptions) -> Self {
        let mut multiplier = Vec::with_capacity(grid.len());
        let mut mask = Vec::with_capacity(grid.len());
        for k in 0..grid.nx() {
            let xi = grid.xi(k);
            let kx_out = outside_two_thirds(grid.kx(k), grid.nx());
            for l in 0..grid.ny() {
                let eta = grid.eta(l);
                let cut = kx_out || outside_two_thirds(grid.ky(l), grid.ny());
                mask.push(cut);
                multiplier.push(Complex64::from_polar(1.0, -dt * c * (xi * xi + eta.abs())));
            }
        }
        Self {
            grid,
            p: params.p,
            mu: params.mu,
            dt,
            c,
            opts,
            multiplier,
            mask,
        }
    }

    /// Truncation is only meaningful when a nonlinear substep precedes it and
    /// the linear substep couples modes; with `c = 0` the scheme is pointwise
    /// exact and truncation would only add error.
    fn truncating(&self) -> bool {
        self.opts.dealias && self.opts.nonlinear && self.c != 0.0
    }

    fn half_nonlinear(&self, u: &mut [Complex64]) {
        if self.opts.nonlinear {
            let h = 0.5 * self.dt;
            for v in u.iter_mut() {
                *v = nonlinear_phase(*v, h, self.p, self.mu);
            }
        }
    }

    fn truncate(&self, u: &mut [Complex64]) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        fft::forward(u, nx, ny);
        for (v, &cut) in u.iter_mut().zip(&self.mask) {
            if cut {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        fft::inverse(u, nx, ny);
    }

    fn step(&self, u: &mut [Complex64]) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let trunc = self.truncating();
        self.half_nonlinear(u);
        if self.c != 0.0 {
            fft::forward(u, nx, ny);
            for ((v, m), &cut) in u.iter_mut().zip(&self.multiplier).zip(&self.mask) {
                *v = if trunc && cut {
                    Complex64::new(0.0, 0.0)
                } else {
                    *v * m
                };
            }
            fft::inverse(u, nx, ny);
        }
        self.half_nonlinear(u);
        if trunc {
            self.truncate(u);
        }
    }
}

/// One Strang step of the small-dispersion equation (`nu = params.nu`):
/// half nonlinear flow, full linear flow, half nonlinear flow.
pub fn step_strang(f: &Field, dt: f64, params: &ModelParams) -> Result<Field> {
    step_strang_with(f, dt, params, Equation::SmallDispersion, SplitOptions::default())
}

pub fn step_strang_with(
    f: &Field,
    dt: f64,
    params: &ModelParams,
    equation: Equation,
    opts: SplitOptions,
) -> Result<Field> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(LabError::InvalidParameter(format!(
            "time step must be positive, got {dt}"
        )));
    }
    params.validate()?;
    f.ensure_finite("initial datum")?;
    let stepper = Stepper::new(*f.grid(), dt, equation.dispersion(params), params, opts);
    let mut u = f.values().to_vec();
    stepper.step(&mut u);
    Ok(Field::from_values_unchecked(*f.grid(), u))
}

/// Mass and energy after one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservationRecord {
    pub time: f64,
    pub mass: f64,
    pub energy: f64,
}

/// Integration controls for [`evolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub equation: Equation,
    pub split: SplitOptions,
    /// Output times in `(0, T]`; `T` is always included.
    pub checkpoints: Vec<f64>,
    /// Relative spectral mass allowed beyond 2/3 Nyquist in the initial datum.
    pub resolution_tol: f64,
    pub mass_tol: f64,
    /// Energy drift relative to `max(|E0|, mass-scale floor)`.
    pub energy_tol: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            equation: Equation::SmallDispersion,
            split: SplitOptions::default(),
            checkpoints: Vec::new(),
            resolution_tol: 1e-8,
            mass_tol: 1e-6,
            energy_tol: 1e-6,
        }
    }
}

impl EvolveOptions {
    pub fn full() -> Self {
        Self {
            equation: Equation::Full,
            ..Self::default()
        }
    }
}

/// States at output times plus the per-step conservation log.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Field>,
    pub params: ModelParams,
    pub equation: Equation,
    pub conservation_log: Vec<ConservationRecord>,
}

impl Trajectory {
    pub fn final_state(&self) -> &Field {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    pub fn state_at(&self, t: f64) -> Option<&Field> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
            .map(|i| &self.states[i])
    }

    /// Largest relative mass deviation from the initial value.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.conservation_log[0].mass;
        self.conservation_log
            .iter()
            .map(|r| (r.mass - m0).abs() / m0.max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }

    /// Largest relative energy deviation from the initial value.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.conservation_log[0].energy;
        self.conservation_log
            .iter()
            .map(|r| (r.energy - e0).abs() / e0.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

/// Integrates from `f0` to `T` with nominal step `dt`; each segment between
/// checkpoints uses `ceil(len/dt)` equal steps.
pub fn evolve(
    f0: &Field,
    t_final: f64,
    dt: f64,
    params: &ModelParams,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    params.validate()?;
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(LabError::InvalidParameter(format!(
            "final time must be positive, got {t_final}"
        )));
    }
    if !(dt > 0.0 && dt <= t_final * (1.0 + 1e-12)) {
        return Err(LabError::InvalidParameter(format!(
            "time step must satisfy 0 < dt <= T, got dt = {dt}, T = {t_final}"
        )));
    }
    f0.ensure_finite("initial datum")?;
    f0.check_resolved(opts.resolution_tol)?;

    let mut outputs: Vec<f64> = opts
        .checkpoints
        .iter()
        .copied()
        .filter(|&t| t > 0.0 && t < t_final * (1.0 - 1e-12))
        .collect();
    outputs.push(t_final);
    outputs.sort_by(|a, b| a.total_cmp(b));
    outputs.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let c = opts.equation.dispersion(params);
    let grid = *f0.grid();
    let record = |u: &Field, time: f64| ConservationRecord {
        time,
        mass: mass(u),
        energy: energy_with_dispersion(u, params.p, params.mu, c),
    };

    let mut log = vec![record(f0, 0.0)];
    let (m0, e0) = (log[0].mass, log[0].energy);
    let mut times = vec![0.0];
    let mut states = vec![f0.clone()];
    let mut u = f0.values().to_vec();
    let mut t = 0.0;
    let mut stepper: Option<Stepper> = None;

    for &target in &outputs {
        let span = target - t;
        let n = ((span / dt) - 1e-9).ceil().max(1.0) as usize;
        let h = span / n as f64;
        let reuse = stepper.as_ref().is_some_and(|s| (s.dt - h).abs() <= 1e-14 * h);
        if !reuse {
            stepper = Some(Stepper::new(grid, h, c, params, opts.split));
        }
        let st = stepper.as_ref().expect("stepper initialized above");
        for i in 0..n {
            st.step(&mut u);
            let now = if i + 1 == n { target } else { t + (i + 1) as f64 * h };
            let field = Field::from_values_unchecked(grid, u.clone());
            field.ensure_finite("evolved state")?;
            let r = record(&field, now);
            let mass_drift = (r.mass - m0).abs() / m0.max(f64::MIN_POSITIVE);
            if mass_drift > opts.mass_tol {
                return Err(LabError::ConservationDrift {
                    quantity: "mass",
                    drift: mass_drift,
                    tol: opts.mass_tol,
                    time: now,
                });
            }
            let energy_drift = (r.energy - e0).abs() / e0.abs().max(f64::MIN_POSITIVE);
            if energy_drift > opts.energy_tol {
                return Err(LabError::ConservationDrift {
                    quantity: "energy",
                    drift: energy_drift,
                    tol: opts.energy_tol,
                    time: now,
                });
            }
            log.push(r);
        }
        t = target;
        times.push(target);
        states.push(Field::from_values_unchecked(grid, u.clone()));
    }

    Ok(Trajectory {
        times,
        states,
        params: *params,
        equation: opts.equation,
        conservation_log: log,
    })
}

/// Controls for [`lemma1_error`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Options {
    pub dt: f64,
    /// Annulus tail tolerance for the difference `phi - phi0`. The `|D_y|`
    /// flow gives the difference algebraic `1/y^2` tails, so this is looser
    /// than the tolerance applied to the evolved state itself.
    pub diff_tail_tol: f64,
    pub state_tail_tol: f64,
    pub evolve: EvolveOptions,
}

impl Default for Lemma1Options {
    fn default() -> Self {
        Self {
            dt: 0.01,
            diff_tail_tol: 1e-3,
            state_tail_tol: 1e-6,
            evolve: EvolveOptions::default(),
        }
    }
}

/// `|| phi^{(a,nu)}(t) - phi^{(0)}(t) ||_{H^{k,k}}` for each `t` in `t_list`.
pub fn lemma1_error(
    a: f64,
    w: &Field,
    nu: f64,
    k: usize,
    t_list: &[f64],
    params: &ModelParams,
    opts: &Lemma1Options,
) -> Result<Vec<f64>> {
    let params = ModelParams {
        nu,
        a,
        k,
        ..*params
    };
    params.validate()?;
    let phi0 = w.scale_re(a);
    let positive: Vec<f64> = t_list.iter().copied().filter(|&t| t > 0.0).collect();
    if t_list.iter().any(|t| *t < 0.0 || !t.is_finite()) {
        return Err(LabError::InvalidParameter(
            "Lemma 1 times must be finite and non-negative".into(),
        ));
    }
    let traj = if positive.is_empty() {
        None
    } else {
        let t_max = positive.iter().copied().fold(0.0, f64::max);
        let evolve_opts = EvolveOptions {
            checkpoints: positive.clone(),
            ..opts.evolve.clone()
        };
        Some(evolve(&phi0, t_max, opts.dt.min(t_max), &params, &evolve_opts)?)
    };
    t_list
        .iter()
        .map(|&t| {
            if t == 0.0 {
                return Ok(0.0);
            }
            let traj = traj.as_ref().expect("positive times imply a trajectory");
            let phi = traj
                .state_at(t)
                .expect("every requested time is a checkpoint");
            phi.check_tail(opts.state_tail_tol)?;
            let reference = ode_flow(&phi0, t, params.p, params.mu);
            let diff = phi.sub(&reference)?;
            weighted_norm_hkk_with_tol(&diff, k, opts.diff_tail_tol)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;
    use std::f64::consts::PI;

    fn gaussian(g: GridSpec) -> Field {
        Field::from_real_fn(g, |x, y| (-(x * x + y * y) / 2.0).exp())
    }

    #[test]
    fn ode_flow_examples() {
        let g = make_grid(PI, PI, 16, 16).unwrap();
        let two = Field::from_real_fn(g, |_, _| 2.0);
        let out = ode_flow(&two, PI / 4.0, 3.0, 1.0);
        for v in out.values() {
            assert!((v - Complex64::new(-2.0, 0.0)).norm() < 1e-14);
        }
        let z = Field::zeros(g);
        assert_eq!(ode_flow(&z, 3.0, 2.5, -1.0), z);
        let f = gaussian(g);
        assert_eq!(ode_flow(&f, 0.0, 3.0, 1.0), f);
        let out = ode_flow(&f, 1.3, 4.5, -1.0);
        for (a, b) in out.values().iter().zip(f.values()) {
            assert!((a.norm() - b.norm()).abs() < 1e-15);
        }
    }

    #[test]
    fn linear_propagator_examples() {
        let g = make_grid(PI, PI, 16, 16).unwrap();
        let f = Field::from_fn(g, |x, y| Complex64::from_polar(1.0, 2.0 * x + 3.0 * y));
        let out = linear_propagator(&f, 1.0, 1.0).unwrap();
        let expect = f.scale(Complex64::from_polar(1.0, -7.0));
        assert!(out.rel_l2_distance(&expect).unwrap() < 1e-13);
        assert_eq!(linear_propagator(&f, 2.0, 0.0).unwrap(), f);
        let h = gaussian(make_grid(8.0, 8.0, 32, 32).unwrap());
        let a = linear_propagator(&linear_propagator(&h, 0.3, 0.7).unwrap(), 0.5, 0.7).unwrap();
        let b = linear_propagator(&h, 0.8, 0.7).unwrap();
        assert!(a.rel_l2_distance(&b).unwrap() < 1e-13);
        assert!((a.l2_norm() - h.l2_norm()).abs() < 1e-12 * h.l2_norm());
    }

    #[test]
    fn strang_degenerate_cases() {
        let g = make_grid(8.0, 8.0, 32, 32).unwrap();
        let f = gaussian(g).scale(Complex64::new(1.0, 0.5));
        let params = ModelParams {
            nu: 0.0,
            ..ModelParams::default()
        };
        let s = step_strang(&f, 0.1, &params).unwrap();
        assert!(s.rel_l2_distance(&ode_flow(&f, 0.1, 3.0, 1.0)).unwrap() < 1e-15);

        let params = ModelParams::default();
        let lin = step_strang_with(
            &f,
            0.1,
            &params,
            Equation::SmallDispersion,
            SplitOptions {
                dealias: true,
                nonlinear: false,
            },
        )
        .unwrap();
        let expect = linear_propagator(&f, 0.1, params.nu).unwrap();
        assert!(lin.rel_l2_distance(&expect).unwrap() < 1e-14);
        assert!(step_strang(&f, 0.0, &params).is_err());
    }

    #[test]
    fn single_step_evolve_matches_step() {
        let g = make_grid(8.0, 8.0, 64, 64).unwrap();
        let f = gaussian(g);
        let params = ModelParams::default();
        let tr = evolve(&f, 0.05, 0.05, &params, &EvolveOptions::default()).unwrap();
        let s = step_strang(&f, 0.05, &params).unwrap();
        assert_eq!(tr.states.len(), 2);
        assert!(tr.final_state().rel_l2_distance(&s).unwrap() < 1e-15);
        assert_eq!(tr.states[0], f);
    }

    #[test]
    fn zero_dispersion_matches_ode_at_checkpoints() {
        let g = make_grid(8.0, 8.0, 32, 32).unwrap();
        let f = gaussian(g);
        let params = ModelParams {
            nu: 0.0,
            ..ModelParams::default()
        };
        let opts = EvolveOptions {
            checkpoints: vec![0.25, 0.5],
            ..EvolveOptions::default()
        };
        let tr = evolve(&f, 1.0, 0.01, &params, &opts).unwrap();
        assert_eq!(tr.times, vec![0.0, 0.25, 0.5, 1.0]);
        for (t, s) in tr.times.iter().zip(&tr.states) {
            let exact = ode_flow(&f, *t, 3.0, 1.0);
            assert!(s.rel_l2_distance(&exact).unwrap() < 1e-13, "t = {t}");
        }
    }

    #[test]
    fn gauge_covariance() {
        let g = make_grid(10.0, 10.0, 64, 64).unwrap();
        let f = gaussian(g);
        let rot = Complex64::from_polar(1.0, 0.9);
        let params = ModelParams {
            nu: 0.3,
            ..ModelParams::default()
        };
        let opts = EvolveOptions {
            energy_tol: 1e-4,
            ..EvolveOptions::default()
        };
        let a = evolve(&f, 0.5, 0.05, &params, &opts).unwrap();
        let b = evolve(&f.scale(rot), 0.5, 0.05, &params, &opts).unwrap();
        let d = b.final_state().rel_l2_distance(&a.final_state().scale(rot)).unwrap();
        assert!(d < 1e-13, "{d}");
    }

    #[test]
    fn small_dispersion_mass_conservation() {
        let g = make_grid(12.0, 12.0, 128, 128).unwrap();
        let f = gaussian(g);
        let params = ModelParams {
            nu: 0.05,
            ..ModelParams::default()
        };
        let tr = evolve(&f, 1.0, 0.01, &params, &EvolveOptions::default()).unwrap();
        assert!(tr.mass_drift() <= 1e-9, "{}", tr.mass_drift());
    }

    #[test]
    fn rejects_unresolved_data() {
        let g = make_grid(PI, PI, 16, 16).unwrap();
        let f = Field::from_fn(g, |x, _| Complex64::from_polar(1.0, 7.0 * x));
        let err = evolve(&f, 1.0, 0.1, &ModelParams::default(), &EvolveOptions::default());
        assert!(matches!(err, Err(LabError::Unresolved { .. })));
    }

    #[test]
    fn lemma1_zero_time_and_small_nu() {
        let g = make_grid(12.0, 12.0, 128, 128).unwrap();
        let w = gaussian(g);
        let params = ModelParams::default();
        let opts = Lemma1Options::default();
        let e = lemma1_error(1.0, &w, 0.1, 1, &[0.0, 0.5], &params, &opts).unwrap();
        assert_eq!(e[0], 0.0);
        let e2 = lemma1_error(1.0, &w, 0.05, 1, &[0.0, 0.5], &params, &opts).unwrap();
        assert!(e2[1] < e[1]);
        let e0 = lemma1_error(1.0, &w, 0.0, 1, &[0.5], &params, &opts).unwrap();
        assert!(e0[0] < 1e-12);
    }
}
