//! Benchmark fixtures.

use hwlab::dynamics::ModelParams;
use hwlab::{make_grid, Field};

/// `e^{-(x^2 + y^2)/2}` on `[-10, 10)^2` with `n x n` modes.
pub fn gaussian(n: usize) -> Field {
    let g = make_grid(10.0, 10.0, n, n).expect("power-of-two grid");
    Field::from_real_fn(g, |x, y| (-(x * x + y * y) / 2.0).exp())
}

pub fn cubic_params() -> ModelParams {
    ModelParams {
        p: 3.0,
        mu: 1.0,
        nu: 0.1,
        ..ModelParams::default()
    }
}
