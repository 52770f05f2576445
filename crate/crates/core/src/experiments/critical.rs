use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::profile::grid_from;
use super::report::ExperimentReport;
use crate::error::{LabError, Result};
use crate::groundstate::{
    groundstate_residual, hs_inner_product, petviashvili, rescale_groundstate,
    rescale_groundstate_onto, PetviashviliOptions,
};
use crate::spectral::field::in_band;
use crate::spectral::{sobolev_norm, Field, SobolevIndex};
use crate::transforms::{classify_criticality, Criticality};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriticalConfig {
    pub p: f64,
    pub mu: f64,
    pub s1: f64,
    pub s2: f64,
    pub n_sweep: Vec<usize>,
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    /// Petviashvili tolerance for `Q_1`.
    pub tol: f64,
    pub max_iter: usize,
    /// Largest residual accepted for a supplied `Q_1`.
    pub q1_residual_tol: f64,
    pub q1_file: Option<String>,
    /// Mass allowed outside the box or band when rescaling `Q_1`.
    pub tail_tol: f64,
    pub tol_pct: f64,
    pub expansion_tol: f64,
    /// Upper bound on `d0(n_{i+1}) / d0(n_i)`; strict.
    pub d0_ratio_max: f64,
}

impl Default for CriticalConfig {
    fn default() -> Self {
        Self {
            p: 3.0,
            mu: -1.0,
            s1: 0.5,
            s2: 0.0,
            n_sweep: vec![2, 4, 8, 16],
            lx: 40.0,
            ly: 40.0,
            nx: 512,
            ny: 512,
            tol: 1e-8,
            max_iter: 500,
            q1_residual_tol: 1e-6,
            q1_file: None,
            tail_tol: 1e-4,
            tol_pct: 5.0,
            expansion_tol: 1e-8,
            d0_ratio_max: 1.0,
        }
    }
}

/// Distances between the standing waves `e^{i beta_j t} Q_{beta_j}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMetrics {
    /// `||Q_{beta1} - Q_{beta2}||`
    pub d0: f64,
    /// `||e^{i beta1 t} Q_{beta1} - e^{i beta2 t} Q_{beta2}||^2`
    pub d_squared: f64,
    pub norm_a: f64,
    pub norm_b: f64,
    pub inner: Complex64,
}

/// Both profiles live on the grid of `q1` scaled for `beta1`, where
/// `Q_{beta1}` is exact; `Q_{beta2}` is resampled onto it.
pub fn standing_wave_distance(
    q1: &Field,
    p: f64,
    beta1: f64,
    beta2: f64,
    t: f64,
    idx: SobolevIndex,
    tail_tol: f64,
) -> Result<PairMetrics> {
    let qa = rescale_groundstate(q1, beta1, p)?;
    let qb = rescale_groundstate_onto(q1, beta2, p, *qa.grid(), tail_tol)?;
    let d0 = sobolev_norm(&qa.sub(&qb)?, idx)?;
    let norm_a = sobolev_norm(&qa, idx)?.powi(2);
    let norm_b = sobolev_norm(&qb, idx)?.powi(2);
    let inner = hs_inner_product(&qa, &qb, idx)?;
    let phase = Complex64::from_polar(1.0, (beta1 - beta2) * t);
    Ok(PairMetrics {
        d0,
        d_squared: norm_a + norm_b - 2.0 * (phase * inner).re,
        norm_a,
        norm_b,
        inner,
    })
}

/// The three terms of `||Q_{beta1} - Q_{beta2}||^2` evaluated on the lattice of
/// `Q_1` with `r = beta1/beta2`:
/// `||Q_1||^2`, `r^{3 - 2/(p-1)} sum W |Q1_hat(sqrt(r) xi, r eta)|^2` and
/// `2 r^{3/2 - 1/(p-1)} Re sum W Q1_hat(xi, eta) conj Q1_hat(sqrt(r) xi, r eta)`.
pub fn expansion_terms(
    q1: &Field,
    p: f64,
    beta1: f64,
    beta2: f64,
    idx: SobolevIndex,
) -> Result<[f64; 3]> {
    let g = *q1.grid();
    let r = beta1 / beta2;
    let sr = r.sqrt();
    let (nyq_x, nyq_y) = (g.nyquist_x(), g.nyquist_y());
    let xis = g.xis();
    let etas = g.etas();
    let ix: Vec<usize> = (0..g.nx()).filter(|&k| in_band(sr * xis[k], nyq_x)).collect();
    let iy: Vec<usize> = (0..g.ny()).filter(|&l| in_band(r * etas[l], nyq_y)).collect();
    let sx: Vec<f64> = ix.iter().map(|&k| sr * xis[k]).collect();
    let sy: Vec<f64> = iy.iter().map(|&l| r * etas[l]).collect();
    let mapped = q1.spectrum_at(&sx, &sy);
    let own = q1.continuous_spectrum();
    let cell = g.spectral_cell();

    let t1 = sobolev_norm(q1, idx)?.powi(2);
    let mut t2 = 0.0;
    let mut cross = Complex64::new(0.0, 0.0);
    for (a, &k) in ix.iter().enumerate() {
        for (b, &l) in iy.iter().enumerate() {
            let w = idx.weight(xis[k], etas[l]);
            if w == 0.0 {
                continue;
            }
            let m = mapped[a * iy.len() + b];
            t2 += w * m.norm_sqr();
            cross += own[g.index(k, l)] * m.conj() * w;
        }
    }
    let b = beta2 / beta1;
    let t2 = b.powf(2.0 / (p - 1.0) - 3.0) * t2 * cell;
    let t3 = 2.0 * b.powf(1.0 / (p - 1.0) - 1.5) * cross.re * cell;
    Ok([t1, t2, t3])
}

/// Standing-wave decoherence on the critical line, evaluated from `Q_1`
/// without time stepping.
pub fn run_critical_decoherence(
    cfg: &CriticalConfig,
    q1: Option<&Field>,
) -> Result<ExperimentReport> {
    if cfg.mu != -1.0 {
        return Err(LabError::InvalidParameter(format!(
            "standing waves need mu = -1, got {}",
            cfg.mu
        )));
    }
    if !(cfg.p > 1.0 && cfg.p < 5.0) {
        return Err(LabError::InvalidParameter(format!(
            "need 1 < p < 5, got {}",
            cfg.p
        )));
    }
    if cfg.s1 < 0.0 || cfg.s2 < 0.0 || classify_criticality(cfg.p, cfg.s1, cfg.s2)? != Criticality::Critical {
        return Err(LabError::InvalidParameter(format!(
            "(s1, s2) = ({}, {}) is not a non-negative critical index for p = {}",
            cfg.s1, cfg.s2, cfg.p
        )));
    }
    if cfg.n_sweep.is_empty() || cfg.n_sweep.contains(&0) {
        return Err(LabError::InvalidParameter(
            "n_sweep must be non-empty with n >= 1".into(),
        ));
    }
    let mut notes = Vec::new();
    let q1 = match q1 {
        Some(q) => {
            let res = groundstate_residual(q, 1.0, cfg.p);
            if !(res <= cfg.q1_residual_tol) {
                return Err(LabError::NotConverged {
                    iterations: 0,
                    residual: res,
                });
            }
            notes.push(format!("supplied Q_1 with residual {res:.3e}"));
            q.clone()
        }
        None => {
            let grid = grid_from(cfg.lx, cfg.ly, cfg.nx, cfg.ny)?;
            let opts = PetviashviliOptions {
                tol: cfg.tol,
                max_iter: cfg.max_iter,
            };
            let gs = petviashvili(cfg.p, 1.0, grid, &opts, None)?;
            notes.push(format!(
                "Q_1 solved: {} iterations, residual {:.3e}, stabilizer {:.12}",
                gs.iterations, gs.residual, gs.stabilizer
            ));
            gs.profile
        }
    };
    let idx = SobolevIndex::homogeneous(cfg.s1, cfg.s2);
    let q1_norm = sobolev_norm(&q1, idx)?.powi(2);

    let mut ns = cfg.n_sweep.clone();
    ns.sort_unstable();
    ns.dedup();
    let results: Vec<Result<(PairMetrics, [f64; 3])>> = ns
        .par_iter()
        .map(|&n| {
            let (b1, b2) = ((n + 1) as f64, n as f64);
            let t = (2 * n + 1) as f64 * std::f64::consts::PI;
            let m = standing_wave_distance(&q1, cfg.p, b1, b2, t, idx, cfg.tail_tol)?;
            let terms = expansion_terms(&q1, cfg.p, b1, b2, idx)?;
            Ok((m, terms))
        })
        .collect();
    let mut rows = Vec::with_capacity(ns.len());
    for (i, res) in results.into_iter().enumerate() {
        match res {
            Ok(row) => rows.push((ns[i], row)),
            Err(e @ (LabError::TailMass { .. } | LabError::Unresolved { .. })) => {
                let usable = if i == 0 { "none".to_string() } else { ns[i - 1].to_string() };
                return Err(LabError::InvalidParameter(format!(
                    "rescaling Q_1 fails at n = {}: {e}; largest usable n on this grid: {usable}",
                    ns[i]
                )));
            }
            Err(e) => return Err(e),
        }
    }

    let mut report = ExperimentReport::new("critical-decohere", cfg)?;
    report.notes = notes;
    let col = |f: &dyn Fn(&PairMetrics, &[f64; 3]) -> f64| {
        rows.iter()
            .map(|(n, (m, t))| (*n as f64, f(m, t)))
            .collect::<Vec<_>>()
    };
    report.push_series("d0", col(&|m, _| m.d0));
    report.push_series("d_squared_ratio", col(&|m, _| m.d_squared / q1_norm));
    report.push_series("norm_ratio_a", col(&|m, _| m.norm_a / q1_norm));
    report.push_series("norm_ratio_b", col(&|m, _| m.norm_b / q1_norm));
    report.push_series("expansion_d0_squared", col(&|_, t| t[0] + t[1] - t[2]));
    report.push_series(
        "expansion_error",
        col(&|m, t| {
            let direct = [m.norm_a, m.norm_b, 2.0 * m.inner.re];
            (0..3)
                .map(|i| (t[i] - direct[i]).abs() / direct[i].abs().max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max)
        }),
    );

    let d0 = report.series("d0").expect("pushed").values();
    if d0.len() >= 2 {
        let worst = d0
            .windows(2)
            .map(|w| w[1] / w[0])
            .fold(f64::NEG_INFINITY, f64::max);
        let threshold = report.threshold("d0_ratio_max");
        report.verdicts.push(super::report::Verdict {
            name: "d0_decreasing".into(),
            passed: worst < threshold,
            measured: worst,
            threshold,
            threshold_key: "d0_ratio_max".into(),
            source: Some("d0".into()),
        });
    }
    let ratio = report.series("d_squared_ratio").expect("pushed").points.clone();
    let last = ratio.last().expect("non-empty sweep").1;
    report.check(
        "limit_four",
        100.0 * (last - 4.0).abs() / 4.0,
        "tol_pct",
        true,
        Some("d_squared_ratio"),
    );
    let err = report
        .series("expansion_error")
        .expect("pushed")
        .values()
        .into_iter()
        .fold(0.0, f64::max);
    report.check(
        "expansion",
        err,
        "expansion_tol",
        true,
        Some("expansion_error"),
    );
    report.notes.push(format!("||Q_1||^2 = {q1_norm:.12e}"));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;

    fn q1() -> Field {
        let g = make_grid(20.0, 20.0, 128, 128).unwrap();
        petviashvili(3.0, 1.0, g, &PetviashviliOptions::default(), None)
            .unwrap()
            .profile
    }

    #[test]
    fn equal_betas_have_zero_distance() {
        let q = q1();
        let idx = SobolevIndex::homogeneous(0.5, 0.0);
        let m = standing_wave_distance(&q, 3.0, 3.0, 3.0, 0.0, idx, 1e-2).unwrap();
        assert!(m.d0 <= 1e-10 * m.norm_a.sqrt());
        assert!(m.d_squared.abs() <= 1e-10 * m.norm_a);
    }

    #[test]
    fn half_period_phase_is_minus_one() {
        for n in [2usize, 4, 8, 16] {
            let ph = Complex64::from_polar(1.0, (2 * n + 1) as f64 * std::f64::consts::PI);
            assert!((ph + 1.0).norm() < 1e-13);
        }
    }

    #[test]
    fn expansion_matches_direct() {
        let q = q1();
        let idx = SobolevIndex::homogeneous(0.5, 0.0);
        let m = standing_wave_distance(&q, 3.0, 3.0, 2.0, 0.0, idx, 1e-2).unwrap();
        let t = expansion_terms(&q, 3.0, 3.0, 2.0, idx).unwrap();
        assert!((t[0] - m.norm_a).abs() <= 1e-10 * m.norm_a);
        assert!((t[1] - m.norm_b).abs() <= 1e-10 * m.norm_b);
        assert!((t[2] - 2.0 * m.inner.re).abs() <= 1e-10 * m.inner.re.abs());
        assert!((t[0] + t[1] - t[2] - m.d0 * m.d0).abs() <= 1e-9 * m.norm_a);
    }

    #[test]
    fn rejects_off_critical_indices() {
        let cfg = CriticalConfig {
            s1: 1.0,
            ..CriticalConfig::default()
        };
        assert!(run_critical_decoherence(&cfg, None).is_err());
        let cfg = CriticalConfig {
            mu: 1.0,
            ..CriticalConfig::default()
        };
        assert!(run_critical_decoherence(&cfg, None).is_err());
    }

    #[test]
    fn small_sweep_report() {
        let cfg = CriticalConfig {
            lx: 20.0,
            ly: 20.0,
            nx: 128,
            ny: 128,
            n_sweep: vec![2, 4],
            tail_tol: 1e-2,
            ..CriticalConfig::default()
        };
        let r = run_critical_decoherence(&cfg, None).unwrap();
        r.validate().unwrap();
        assert!(r.verdict("d0_decreasing").unwrap().passed);
        assert!(r.verdict("expansion").unwrap().passed);
    }
}
