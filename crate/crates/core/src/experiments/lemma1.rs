use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::profile::{grid_from, ProfileSpec, Shape};
use super::report::{loglog_slope, ExperimentReport};
use crate::dynamics::{lemma1_error, Lemma1Options, ModelParams};
use crate::error::{LabError, Result};
use crate::spectral::Field;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Lemma1Config {
    pub p: f64,
    pub mu: f64,
    pub a: f64,
    pub k: usize,
    pub nu_sweep: Vec<f64>,
    pub times: Vec<f64>,
    pub dt: f64,
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    pub w_shape: Shape,
    pub w_amplitude: f64,
    pub w_width: f64,
    pub w_l2: Option<f64>,
    /// Stored field used as `w` instead of the analytic profile; resolved by the caller.
    pub w_file: Option<String>,
    /// Times must satisfy `t <= window_c1 |ln nu|^window_c2`.
    pub window_c1: f64,
    pub window_c2: f64,
    pub diff_tail_tol: f64,
    pub state_tail_tol: f64,
    pub slope_threshold: f64,
    /// Allowed relative increase of the error from the largest to the smallest nu.
    pub monotone_tol: f64,
}

impl Default for Lemma1Config {
    fn default() -> Self {
        let o = Lemma1Options::default();
        Self {
            p: 3.0,
            mu: 1.0,
            a: 1.0,
            k: 2,
            nu_sweep: vec![0.1, 0.05, 0.025],
            times: vec![0.0, 0.5, 1.0],
            dt: o.dt,
            lx: 12.0,
            ly: 12.0,
            nx: 128,
            ny: 128,
            w_shape: Shape::Gaussian,
            w_amplitude: 1.0,
            w_width: 1.0,
            w_l2: None,
            w_file: None,
            window_c1: 1.0,
            window_c2: 1.0,
            diff_tail_tol: o.diff_tail_tol,
            state_tail_tol: o.state_tail_tol,
            slope_threshold: 0.9,
            monotone_tol: 0.0,
        }
    }
}

impl Lemma1Config {
    pub fn profile(&self) -> ProfileSpec {
        ProfileSpec {
            shape: self.w_shape,
            amplitude: self.w_amplitude,
            width: self.w_width,
            l2: self.w_l2,
        }
    }
}

/// Lemma 1 error `||phi^{(a,nu)}(t) - phi^{(0)}(t)||_{H^{k,k}}` over a nu sweep.
pub fn run_lemma1(cfg: &Lemma1Config, w: Option<&Field>) -> Result<ExperimentReport> {
    if cfg.nu_sweep.is_empty() || cfg.times.is_empty() {
        return Err(LabError::InvalidParameter(
            "nu_sweep and times must be non-empty".into(),
        ));
    }
    for &nu in &cfg.nu_sweep {
        if !(nu > 0.0 && nu < 1.0) {
            return Err(LabError::InvalidParameter(format!(
                "nu must lie in (0, 1), got {nu}"
            )));
        }
        let window = cfg.window_c1 * nu.ln().abs().powf(cfg.window_c2);
        if let Some(&t) = cfg.times.iter().find(|&&t| t > window) {
            return Err(LabError::InvalidParameter(format!(
                "t = {t} exceeds the window {window:.4} for nu = {nu}"
            )));
        }
    }
    let w = match w {
        Some(f) => f.clone(),
        None => cfg.profile().build(grid_from(cfg.lx, cfg.ly, cfg.nx, cfg.ny)?)?,
    };
    let params = ModelParams {
        p: cfg.p,
        mu: cfg.mu,
        a: cfg.a,
        k: cfg.k,
        ..ModelParams::default()
    };
    let opts = Lemma1Options {
        dt: cfg.dt,
        diff_tail_tol: cfg.diff_tail_tol,
        state_tail_tol: cfg.state_tail_tol,
        ..Lemma1Options::default()
    };

    let errors: Vec<Vec<f64>> = cfg
        .nu_sweep
        .par_iter()
        .map(|&nu| lemma1_error(cfg.a, &w, nu, cfg.k, &cfg.times, &params, &opts))
        .collect::<Result<_>>()?;

    let mut report = ExperimentReport::new("lemma1", cfg)?;
    for (nu, errs) in cfg.nu_sweep.iter().zip(&errors) {
        let pts = cfg.times.iter().copied().zip(errs.iter().copied()).collect();
        report.push_series(format!("err_nu{nu}"), pts);
    }
    let mut times = cfg.times.clone();
    times.sort_by(f64::total_cmp);
    times.dedup();
    for &t in &times {
        let ti = cfg.times.iter().position(|&s| s == t).expect("time from list");
        let pts: Vec<(f64, f64)> = cfg
            .nu_sweep
            .iter()
            .zip(&errors)
            .map(|(&nu, e)| (nu, e[ti]))
            .collect();
        let name = format!("err_t{t}");
        report.push_series(name.clone(), pts.clone());
        if t == 0.0 || pts.len() < 2 {
            continue;
        }
        let slope = loglog_slope(&pts)?;
        report.fitted_exponents.push((format!("slope_t{t}"), slope));
        report.check(&format!("slope_t{t}"), slope, "slope_threshold", false, Some(&name));
        let series = report.series(&name).expect("just pushed");
        let (first, last) = (series.points[0].1, series.points[pts.len() - 1].1);
        report.check(
            &format!("monotone_t{t}"),
            first / last - 1.0,
            "monotone_tol",
            true,
            Some(&name),
        );
    }
    if cfg.nu_sweep.len() < 2 {
        report
            .notes
            .push("single nu: no slope fit, raw errors only".into());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Lemma1Config {
        Lemma1Config {
            lx: 10.0,
            ly: 10.0,
            nx: 64,
            ny: 64,
            times: vec![0.0, 0.2],
            dt: 0.02,
            diff_tail_tol: 0.1,
            state_tail_tol: 1e-3,
            ..Lemma1Config::default()
        }
    }

    #[test]
    fn single_nu_has_no_fit() {
        let cfg = Lemma1Config {
            nu_sweep: vec![0.1],
            ..small()
        };
        let r = run_lemma1(&cfg, None).unwrap();
        assert!(r.fitted_exponents.is_empty());
        assert!(r.verdicts.is_empty());
        assert!(r.series("err_nu0.1").is_some());
        r.validate().unwrap();
    }

    #[test]
    fn zero_time_row_vanishes() {
        let cfg = Lemma1Config {
            nu_sweep: vec![0.1, 0.05],
            ..small()
        };
        let r = run_lemma1(&cfg, None).unwrap();
        assert!(r.series("err_t0").unwrap().values().iter().all(|&e| e == 0.0));
        assert!(r.exponent("slope_t0.2").is_some());
        r.validate().unwrap();
    }

    #[test]
    fn rejects_times_outside_window() {
        let cfg = Lemma1Config {
            times: vec![5.0],
            ..small()
        };
        assert!(run_lemma1(&cfg, None).is_err());
    }
}
