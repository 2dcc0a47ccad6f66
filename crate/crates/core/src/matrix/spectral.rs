//! Spectral radii and Perron vectors of non-negative matrices.
//!
//! The radius of a non-negative matrix is the largest radius over its
//! irreducible diagonal blocks, so the matrix is first split into strongly
//! connected components. Each irreducible block is handled by a shifted power
//! iteration whose Collatz-Wielandt quotients bracket the Perron root from both
//! sides; the bracket width is the convergence certificate.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::classes::strongly_connected_components;
use super::ReflectionMatrix;
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 200_000;
const BRACKET_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    /// Spectral radius of `|Q|`.
    pub rho: f64,
    /// Left Perron vector of `|Q|` normalized to sum 1; uniform when `Q = 0`,
    /// absent when `|Q|` is reducible and nonzero.
    pub perron_y: Option<Vec<f64>>,
    pub rho_qplus: f64,
    pub rho_p: f64,
}

impl SpectralData {
    /// Weights for the `|.|_*` norm on `d` components, falling back to
    /// uniform weights when no Perron vector exists.
    pub fn norm_weights(&self, d: usize) -> Vec<f64> {
        match &self.perron_y {
            Some(y) => y.clone(),
            None => vec![1.0 / d as f64; d],
        }
    }
}

pub fn spectral_data(m: &ReflectionMatrix) -> Result<SpectralData> {
    let d = m.dim();
    let rho = spectral_radius(m.abs_q())?;
    let perron_y = if m.is_q_zero() {
        Some(vec![1.0 / d as f64; d])
    } else if is_irreducible(m.abs_q()) {
        Some(perron_left(m.abs_q())?.1)
    } else {
        None
    };
    Ok(SpectralData {
        rho,
        perron_y,
        rho_qplus: spectral_radius(m.q_plus())?,
        rho_p: spectral_radius(m.p())?,
    })
}

/// A 1x1 matrix counts as irreducible only with a nonzero entry.
pub fn is_irreducible(a: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    if n == 1 {
        return a[(0, 0)] != 0.0;
    }
    strongly_connected_components(n, |i, j| a[(i, j)] != 0.0).len() == 1
}

/// Spectral radius of a non-negative square matrix.
pub fn spectral_radius(a: &DMatrix<f64>) -> Result<f64> {
    check_nonnegative(a)?;
    let n = a.nrows();
    let mut rho: f64 = 0.0;
    for class in strongly_connected_components(n, |i, j| a[(i, j)] != 0.0) {
        let block_rho = if class.len() == 1 {
            a[(class[0], class[0])]
        } else {
            let k = class.len();
            let block = DMatrix::from_fn(k, k, |i, j| a[(class[i], class[j])]);
            perron_iteration(&block)?.0
        };
        rho = rho.max(block_rho);
    }
    Ok(rho)
}

/// Perron root and strictly positive left eigenvector (`y^T A = rho y^T`,
/// entries summing to 1) of an irreducible non-negative matrix.
pub fn perron_left(a: &DMatrix<f64>) -> Result<(f64, Vec<f64>)> {
    check_nonnegative(a)?;
    if !is_irreducible(a) {
        return Err(Error::Domain("Perron vector requires an irreducible matrix".into()));
    }
    if a.nrows() == 1 {
        return Ok((a[(0, 0)], vec![1.0]));
    }
    let (rho, y) = perron_iteration(&a.transpose())?;
    Ok((rho, y.iter().copied().collect()))
}

fn check_nonnegative(a: &DMatrix<f64>) -> Result<()> {
    if !a.is_square() || a.nrows() == 0 {
        return Err(Error::Dimension("expected a non-empty square matrix".into()));
    }
    if a.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::Domain("expected a finite non-negative matrix".into()));
    }
    Ok(())
}

/// Right Perron pair of an irreducible block of size >= 2.
///
/// Iterates `x <- (A + c I) x` with `c` the current upper Collatz-Wielandt
/// bound; any positive shift keeps the Perron vector as the fixed direction
/// and makes the iteration primitive. `min_i (Ax)_i / x_i <= rho <= max_i
/// (Ax)_i / x_i` holds for every positive `x`.
fn perron_iteration(a: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let n = a.nrows();
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut gap = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let ax = a * &x;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
        for i in 0..n {
            let ratio = ax[i] / x[i];
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        gap = hi - lo;
        if gap <= BRACKET_TOL * hi {
            x /= x.sum();
            return Ok((0.5 * (lo + hi), x));
        }
        x = ax + &x * hi;
        x /= x.sum();
    }
    Err(Error::SpectralConvergence {
        residual: gap,
        iterations: MAX_ITERATIONS,
    })
}
