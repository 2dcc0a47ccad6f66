use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::matrix::ReflectionMatrix;
use crate::path::PiecewisePath;

use super::DEFAULT_EPS_WALL;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationTolerances {
    /// Max absolute violation of `g = f + R m` at breakpoints.
    pub equation: f64,
    /// How far below zero `g` may dip.
    pub orthant: f64,
    /// A step counts as "away from the wall" when `g_j` stays above this.
    pub eps_wall: f64,
    /// Absolute allowance added to `eps_wall * total_variation` when
    /// checking complementarity, for iterates that are only near a fixed point.
    pub defect_floor: f64,
}

impl Default for ValidationTolerances {
    fn default() -> Self {
        Self {
            equation: 1e-10,
            orthant: 1e-10,
            eps_wall: DEFAULT_EPS_WALL,
            defect_floor: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub equation_residual: f64,
    pub min_g: f64,
    pub m_starts_at_zero: bool,
    pub m_monotone: bool,
    /// Per component: total increase of `m_j` over steps on which `g_j`
    /// stays above `eps_wall`.
    pub complementarity_defect: Vec<f64>,
    pub total_variation: Vec<f64>,
    pub tolerances: ValidationTolerances,
    pub passed: bool,
    pub failures: Vec<String>,
}

pub fn validate(
    matrix: &ReflectionMatrix,
    f: &PiecewisePath,
    g: &PiecewisePath,
    m: &PiecewisePath,
    eps_wall: f64,
) -> Result<ValidationReport> {
    let tolerances = ValidationTolerances {
        eps_wall,
        ..ValidationTolerances::default()
    };
    validate_with(matrix, f, g, m, &tolerances)
}

/// Checks a candidate solution `(g, m)` for driver `f` on their common grid.
pub fn validate_with(
    matrix: &ReflectionMatrix,
    f: &PiecewisePath,
    g: &PiecewisePath,
    m: &PiecewisePath,
    tol: &ValidationTolerances,
) -> Result<ValidationReport> {
    f.check_grid(g, "g")?;
    f.check_grid(m, "m")?;
    let d = f.dim();
    let n = f.len();

    let mut equation_residual: f64 = 0.0;
    let mut push = vec![0.0; d];
    for k in 0..n {
        matrix.apply_r(m.value(k), &mut push);
        for j in 0..d {
            let lhs = g.value(k)[j];
            let rhs = f.value(k)[j] + push[j];
            equation_residual = equation_residual.max((lhs - rhs).abs());
        }
    }

    let min_g = g.values_flat().iter().copied().fold(f64::INFINITY, f64::min);
    let m_starts_at_zero = m.first().iter().all(|&v| v == 0.0);
    let mut m_monotone = true;
    let mut defect = vec![0.0; d];
    let mut variation = vec![0.0; d];
    for k in 1..n {
        for j in 0..d {
            let dm = m.value(k)[j] - m.value(k - 1)[j];
            if dm < 0.0 {
                m_monotone = false;
            }
            let rise = dm.max(0.0);
            variation[j] += dm.abs();
            let floor = g.value(k)[j].min(g.value(k - 1)[j]);
            if floor > tol.eps_wall {
                defect[j] += rise;
            }
        }
    }

    let mut failures = Vec::new();
    if !(equation_residual <= tol.equation) {
        failures.push(format!(
            "Skorokhod equation residual {equation_residual:e} exceeds {:e}",
            tol.equation
        ));
    }
    if !(min_g >= -tol.orthant) {
        failures.push(format!("g leaves the orthant (min {min_g:e})"));
    }
    if !m_starts_at_zero {
        failures.push("m does not start at 0".into());
    }
    if !m_monotone {
        failures.push("m is not non-decreasing".into());
    }
    for j in 0..d {
        if !(defect[j] <= tol.eps_wall * variation[j] + tol.defect_floor) {
            failures.push(format!(
                "component {j} pushes away from the wall (defect {:e}, total variation {:e})",
                defect[j], variation[j]
            ));
        }
    }

    Ok(ValidationReport {
        equation_residual,
        min_g,
        m_starts_at_zero,
        m_monotone,
        complementarity_defect: defect,
        total_variation: variation,
        tolerances: *tol,
        passed: failures.is_empty(),
        failures,
    })
}
