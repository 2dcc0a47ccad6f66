//! Fixed inputs for the solver benchmarks.

use skorokhod_core::sim::{brownian_path, BrownianSpec};
use skorokhod_core::{PiecewisePath, ReflectionMatrix};

/// Seeded Brownian driver started at the origin.
pub fn driver(d: usize, steps: usize, seed: u64) -> PiecewisePath {
    brownian_path(&BrownianSpec {
        x0: vec![0.0; d],
        horizon: 1.0,
        steps,
        seed,
    })
    .expect("valid Brownian spec")
}

/// `R = I - Q` with `Q` the cyclic shift scaled by `-rho`, so `rho(|Q|) = rho`.
pub fn cyclic(d: usize, rho: f64) -> ReflectionMatrix {
    let rows: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else if j == (i + 1) % d { rho } else { 0.0 }).collect())
        .collect();
    let rows: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    ReflectionMatrix::from_rows(&rows).expect("unit diagonal")
}
