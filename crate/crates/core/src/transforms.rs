//! Scaling, Galilean boost and the parameter recipes of the ill-posedness
//! constructions.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::ModelParams;
use crate::error::{LabError, Result};
use crate::spectral::{resample, AffineMap, Field, GridSpec, MIN_MODES, TAIL_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criticality {
    Subcritical,
    Critical,
    Supercritical,
}

/// Scaling-critical regularity `3/2 - 2/(p-1)`.
pub fn critical_regularity(p: f64) -> f64 {
    1.5 - 2.0 / (p - 1.0)
}

/// Sign of `s1 + 2 s2 - (3/2 - 2/(p-1))`, with `|.| <= 1e-12` counted as critical.
pub fn classify_criticality(p: f64, s1: f64, s2: f64) -> Result<Criticality> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(LabError::InvalidParameter(format!(
            "p must exceed 1, got {p}"
        )));
    }
    if !(s1.is_finite() && s2.is_finite()) {
        return Err(LabError::InvalidParameter(
            "regularity exponents must be finite".into(),
        ));
    }
    let gap = s1 + 2.0 * s2 - critical_regularity(p);
    Ok(if gap.abs() <= 1e-12 {
        Criticality::Critical
    } else if gap < 0.0 {
        Criticality::Supercritical
    } else {
        Criticality::Subcritical
    })
}

/// `u_lambda(t, x, y) = lambda^{-2/(p-1)} u(t/lambda^2, x/lambda, y/lambda^2)`,
/// resampled on the same grid. Returns the field and the rescaled time
/// `lambda^2 t`.
pub fn scale_solution(u: &Field, time: f64, lambda: f64, p: f64) -> Result<(Field, f64)> {
    scale_solution_with_tol(u, time, lambda, p, TAIL_TOL)
}

pub fn scale_solution_with_tol(
    u: &Field,
    time: f64,
    lambda: f64,
    p: f64,
    tol: f64,
) -> Result<(Field, f64)> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(LabError::InvalidParameter(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if !(p > 1.0) {
        return Err(LabError::InvalidParameter(format!(
            "p must exceed 1, got {p}"
        )));
    }
    if lambda == 1.0 {
        return Ok((u.clone(), time));
    }
    let map = AffineMap::scaling(
        lambda.powf(-2.0 / (p - 1.0)),
        1.0 / lambda,
        1.0 / (lambda * lambda),
    );
    let out = resample(u, *u.grid(), &map, tol)?;
    Ok((out, lambda * lambda * time))
}

/// Nearest `v` with `v/2` on the grid's x-frequency lattice, so that the
/// carrier `e^{-i v x / 2}` is periodic on the box.
pub fn round_boost(v: f64, grid: &GridSpec) -> f64 {
    let step = grid.dxi();
    2.0 * step * (v / (2.0 * step)).round()
}

/// Largest `|v|` whose carrier `v/2` stays within 2/3 of the x-Nyquist
/// frequency of `grid`.
pub fn max_boost(grid: &GridSpec) -> f64 {
    2.0 * (2.0 / 3.0) * grid.nyquist_x()
}

/// Samples
/// `u(t, x, y) = lambda^{-2/(p-1)} e^{-i v x/2} e^{-i v^2 t/4} phi((nu/lambda)(x + v t), (nu/lambda)^2 y)`
/// on `target`, where `phi` is given at the rescaled time `t/lambda^2`.
///
/// `params.v` is rounded with [`round_boost`] first.
pub fn build_profile(phi: &Field, params: &ModelParams, t: f64, target: GridSpec) -> Result<Field> {
    build_profile_with_tol(phi, params, t, target, TAIL_TOL)
}

pub fn build_profile_with_tol(
    phi: &Field,
    params: &ModelParams,
    t: f64,
    target: GridSpec,
    tol: f64,
) -> Result<Field> {
    params.validate()?;
    if !(params.nu > 0.0) {
        return Err(LabError::InvalidParameter(format!(
            "nu must be positive to build a profile, got {}",
            params.nu
        )));
    }
    let v = round_boost(params.v, &target);
    let limit = max_boost(&target);
    if v.abs() > limit {
        return Err(LabError::BoostTooLarge {
            v: v.abs(),
            limit,
            min_modes: required_modes(v, target.lx()),
        });
    }
    let (nu, lambda, p) = (params.nu, params.lambda, params.p);
    let r = nu / lambda;
    let map = AffineMap {
        amplitude: Complex64::from_polar(lambda.powf(-2.0 / (p - 1.0)), -v * v * t / 4.0),
        alpha: r,
        beta: r * r,
        shift_x: v * t,
        carrier: -v / 2.0,
    };
    resample(phi, target, &map, tol)
}

/// `u(0) = a lambda^{-2/(p-1)} e^{-i v x/2} w((nu/lambda) x, (nu/lambda)^2 y)`.
pub fn initial_profile(a: f64, w: &Field, params: &ModelParams, target: GridSpec) -> Result<Field> {
    build_profile(&w.scale_re(a), params, 0.0, target)
}

fn required_modes(v: f64, lx: f64) -> usize {
    // need |v|/2 <= (2/3) pi (N/2) / Lx
    let n = (1.5 * v.abs() * lx / PI).ceil() as usize;
    n.next_power_of_two().max(MIN_MODES)
}

/// Output of [`inflation_parameters`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InflationParams {
    pub lambda: f64,
    pub sigma: f64,
    pub delta: f64,
}

/// `delta = ln eps / ln nu`, `sigma = (3/2 - s1 - 2 s2 + delta)/(3/2 - 2/(p-1) - s1 - 2 s2)`,
/// `lambda = nu^sigma`.
pub fn inflation_parameters(p: f64, s1: f64, s2: f64, eps: f64, nu: f64) -> Result<InflationParams> {
    if classify_criticality(p, s1, s2)? != Criticality::Supercritical {
        return Err(LabError::InvalidParameter(format!(
            "norm inflation needs supercritical indices, got p = {p}, s1 = {s1}, s2 = {s2}"
        )));
    }
    if s1 < 0.0 || s2 < 0.0 || (s1 == 0.0 && s2 == 0.0) {
        return Err(LabError::InvalidParameter(
            "this recipe needs s1, s2 >= 0, not both zero".into(),
        ));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(LabError::InvalidParameter(format!(
            "eps must lie in (0, 1), got {eps}"
        )));
    }
    if !(nu > 0.0 && nu < 1.0) {
        return Err(LabError::InvalidParameter(format!(
            "nu must lie in (0, 1), got {nu}"
        )));
    }
    let delta = eps.ln() / nu.ln();
    let sc = s1 + 2.0 * s2;
    let sigma = (1.5 - sc + delta) / (critical_regularity(p) - sc);
    Ok(InflationParams {
        lambda: nu.powf(sigma),
        sigma,
        delta,
    })
}

/// Output of [`decoherence_parameters`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceParams {
    pub lambda: f64,
    pub v: f64,
    pub sigma: f64,
}

/// `|v| = nu^{(1/s1)(3/2 (1 - sigma) + 2 sigma/(p-1))} eps^{1/s1}` with
/// `lambda = nu^sigma`, so that `lambda^{-2/(p-1)} (lambda/nu)^{3/2} |v|^{s1} = eps`.
pub fn decoherence_parameters(p: f64, s1: f64, eps: f64, nu: f64, sigma: f64) -> Result<DecoherenceParams> {
    if !(s1 < 0.0) {
        return Err(LabError::InvalidParameter(format!(
            "decoherence recipe needs s1 < 0, got {s1}"
        )));
    }
    if !(p > 1.0) {
        return Err(LabError::InvalidParameter(format!(
            "p must exceed 1, got {p}"
        )));
    }
    if !(eps > 0.0 && nu > 0.0 && nu < 1.0) {
        return Err(LabError::InvalidParameter(format!(
            "need eps > 0 and 0 < nu < 1, got eps = {eps}, nu = {nu}"
        )));
    }
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(LabError::InvalidParameter(format!(
            "sigma must lie in (0, 1), got {sigma}"
        )));
    }
    let expo = (1.5 * (1.0 - sigma) + 2.0 * sigma / (p - 1.0)) / s1;
    Ok(DecoherenceParams {
        lambda: nu.powf(sigma),
        v: nu.powf(expo) * eps.powf(1.0 / s1),
        sigma,
    })
}

/// Exponent of `nu` in the remainder `(lambda/nu)^{-k} |v|^{-s1-k}`, as a
/// function of `sigma`.
pub fn remainder_exponent(p: f64, s1: f64, k: f64, sigma: f64) -> f64 {
    let base = k - 3.0 * (s1 + k) / (2.0 * s1);
    let slope = (s1 + k) / s1 * critical_regularity(p) - k;
    base + slope * sigma
}

/// `min(0.1, sigma*)` where `sigma*` is the largest sigma keeping the
/// remainder exponent at least 0.05.
pub fn default_decoherence_sigma(p: f64, s1: f64, k: f64) -> f64 {
    let base = remainder_exponent(p, s1, k, 0.0);
    let slope = remainder_exponent(p, s1, k, 1.0) - base;
    let cap = if slope < 0.0 {
        (base - 0.05) / -slope
    } else {
        f64::INFINITY
    };
    cap.min(0.1)
}
