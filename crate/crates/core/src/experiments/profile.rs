use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::spectral::{make_grid, Field, GridSpec};

/// Analytic initial profiles `w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// `A e^{-(x^2 + y^2)/(2 s^2)}`
    #[default]
    Gaussian,
    /// `A (1 - x^2/s^2) e^{-(x^2 + y^2)/(2 s^2)}`, zero mean in x.
    MexicanHat,
}

/// Profile selection shared by the experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub shape: Shape,
    pub amplitude: f64,
    pub width: f64,
    /// When set, rescale so that `||w||_{L^2}` equals this value.
    pub l2: Option<f64>,
}

impl ProfileSpec {
    pub fn build(&self, grid: GridSpec) -> Result<Field> {
        if !(self.width > 0.0) || !self.amplitude.is_finite() {
            return Err(LabError::InvalidParameter(format!(
                "profile needs positive width and finite amplitude, got width = {}, amplitude = {}",
                self.width, self.amplitude
            )));
        }
        let (a, s2) = (self.amplitude, self.width * self.width);
        let w = match self.shape {
            Shape::Gaussian => {
                Field::from_real_fn(grid, |x, y| a * (-(x * x + y * y) / (2.0 * s2)).exp())
            }
            Shape::MexicanHat => Field::from_real_fn(grid, |x, y| {
                a * (1.0 - x * x / s2) * (-(x * x + y * y) / (2.0 * s2)).exp()
            }),
        };
        match self.l2 {
            Some(target) => {
                let n = w.l2_norm();
                if n == 0.0 {
                    return Err(LabError::Degenerate("profile vanishes on the grid".into()));
                }
                Ok(w.scale_re(target / n))
            }
            None => Ok(w),
        }
    }
}

pub(crate) fn grid_from(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<GridSpec> {
    make_grid(lx, ly, nx, ny)
}
