use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Named `(abscissa, value)` list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: impl Into<String>, mut points: Vec<(f64, f64)>) -> Self {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self {
            name: name.into(),
            points,
        }
    }

    pub fn abscissas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    /// Key of `threshold` in the config snapshot.
    pub threshold_key: String,
    /// Series the measurement was taken from, if any.
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment_id: String,
    pub config_snapshot: serde_json::Value,
    pub series: Vec<Series>,
    pub fitted_exponents: Vec<(String, f64)>,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn new(experiment_id: impl Into<String>, config: &impl Serialize) -> Result<Self> {
        let config_snapshot = serde_json::to_value(config)
            .map_err(|e| LabError::InvalidParameter(format!("config not serializable: {e}")))?;
        Ok(Self {
            experiment_id: experiment_id.into(),
            config_snapshot,
            series: Vec::new(),
            fitted_exponents: Vec::new(),
            verdicts: Vec::new(),
            notes: Vec::new(),
        })
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn exponent(&self, name: &str) -> Option<f64> {
        self.fitted_exponents
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub(crate) fn push_series(&mut self, name: impl Into<String>, points: Vec<(f64, f64)>) {
        self.series.push(Series::new(name, points));
    }

    pub(crate) fn threshold(&self, key: &str) -> f64 {
        self.config_snapshot
            .get(key)
            .and_then(|v| v.as_f64())
            .unwrap_or(f64::NAN)
    }

    /// Records `measured >= threshold` (or `<=` when `at_most`).
    pub(crate) fn check(
        &mut self,
        name: &str,
        measured: f64,
        key: &str,
        at_most: bool,
        source: Option<&str>,
    ) {
        let threshold = self.threshold(key);
        let passed = if at_most {
            measured <= threshold
        } else {
            measured >= threshold
        };
        self.verdicts.push(Verdict {
            name: name.into(),
            passed: passed && measured.is_finite(),
            measured,
            threshold,
            threshold_key: key.into(),
            source: source.map(str::to_owned),
        });
    }

    /// Checks the structural invariants: strictly increasing abscissas and
    /// verdict thresholds that exist in the snapshot.
    pub fn validate(&self) -> Result<()> {
        for s in &self.series {
            if s.points.windows(2).any(|w| !(w[0].0 < w[1].0)) {
                return Err(LabError::InvalidParameter(format!(
                    "series {} has non-increasing abscissas",
                    s.name
                )));
            }
        }
        for v in &self.verdicts {
            if self.config_snapshot.get(&v.threshold_key).is_none() {
                return Err(LabError::InvalidParameter(format!(
                    "verdict {} references missing key {}",
                    v.name, v.threshold_key
                )));
            }
        }
        Ok(())
    }
}

/// Least-squares slope of `ln y` against `ln x`; needs at least two points.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(LabError::Fit(format!(
            "need at least 2 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(LabError::Fit(
            "log-log fit needs positive abscissas and values".into(),
        ));
    }
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(LabError::Fit("abscissas are all equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Log-log slope of the points of `series` with abscissa in `[t_min, t_max]`.
pub fn growth_exponent(series: &[(f64, f64)], window: (f64, f64)) -> Result<f64> {
    let (lo, hi) = window;
    let pts: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(t, _)| t >= lo && t <= hi)
        .collect();
    if pts.len() < 3 {
        return Err(LabError::Fit(format!(
            "need at least 3 points in [{lo}, {hi}], got {}",
            pts.len()
        )));
    }
    if pts.iter().any(|&(_, v)| !(v > 0.0)) {
        return Err(LabError::Fit("growth fit needs positive values".into()));
    }
    loglog_slope(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_examples() {
        let sq: Vec<(f64, f64)> = (1..=10).map(|t| (t as f64, (t * t) as f64)).collect();
        assert!((growth_exponent(&sq, (1.0, 10.0)).unwrap() - 2.0).abs() < 1e-12);
        let c: Vec<(f64, f64)> = (1..=5).map(|t| (t as f64, 3.0)).collect();
        assert!(growth_exponent(&c, (0.0, 10.0)).unwrap().abs() < 1e-12);
        assert!(growth_exponent(&sq, (1.0, 2.0)).is_err());
        let neg = vec![(1.0, 1.0), (2.0, -1.0), (3.0, 2.0)];
        assert!(growth_exponent(&neg, (0.0, 5.0)).is_err());
    }

    #[test]
    fn report_validation() {
        #[derive(Serialize)]
        struct Cfg {
            limit: f64,
        }
        let mut r = ExperimentReport::new("x", &Cfg { limit: 2.0 }).unwrap();
        r.push_series("s", vec![(2.0, 1.0), (1.0, 0.5)]);
        r.check("ok", 3.0, "limit", false, Some("s"));
        assert!(r.validate().is_ok());
        assert!(r.passed());
        r.check("bad", 3.0, "limit", true, None);
        assert!(!r.passed());
        r.check("missing", 1.0, "nope", false, None);
        assert!(r.validate().is_err());
        r.series.push(Series {
            name: "dup".into(),
            points: vec![(1.0, 1.0), (1.0, 2.0)],
        });
        assert!(r.validate().is_err());
    }
}
