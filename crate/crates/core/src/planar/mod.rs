//! Two-dimensional reflection matrices `R = [[1, a1], [a2, 1]]`.

mod counterexample;

pub use counterexample::{build_counterexample, BlockTable, CounterexampleBundle, BLOCK_FRACTIONS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::ReflectionMatrix;
use crate::path::{MonotonePath, PiecewisePath};
use crate::solver::{validate, SkorokhodSolution, DEFAULT_EPS_WALL};

/// Tolerance on `|a1 a2| - 1` for the critical cases.
pub const CRITICAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CaseId {
    Subcritical,
    CriticalOpposite,
    CriticalPositive,
    SuperOpposite,
    SuperPositive,
    NotCompletelyS,
}

impl CaseId {
    pub fn description(self) -> &'static str {
        match self {
            CaseId::Subcritical => "|a1 a2| < 1: contraction regime, unique solution",
            CaseId::CriticalOpposite => "|a1 a2| = 1 with opposite signs",
            CaseId::CriticalPositive => {
                "|a1 a2| = 1 with both positive: g is unique, m need not be"
            }
            CaseId::SuperOpposite => "|a1 a2| > 1 with opposite signs: uniqueness fails",
            CaseId::SuperPositive => {
                "|a1 a2| > 1 with both positive: some continuous driver has two solutions"
            }
            CaseId::NotCompletelyS => "|a1 a2| >= 1 with both negative: R is not completely-S",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarCase {
    pub a1: f64,
    pub a2: f64,
    #[serde(rename = "case")]
    pub case_id: CaseId,
    pub description: String,
    /// Set when `|a1 a2|` is within tolerance of 1 without being exactly 1.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub warning: Option<String>,
}

pub fn classify(a1: f64, a2: f64) -> PlanarCase {
    let product = (a1 * a2).abs();
    let critical = (product - 1.0).abs() <= CRITICAL_TOL;
    let negative = |a: f64| a < 0.0;
    let both_negative = negative(a1) && negative(a2);
    let opposite = negative(a1) != negative(a2);

    let case_id = if !critical && product < 1.0 {
        CaseId::Subcritical
    } else if both_negative {
        CaseId::NotCompletelyS
    } else if critical {
        if opposite {
            CaseId::CriticalOpposite
        } else {
            CaseId::CriticalPositive
        }
    } else if opposite {
        CaseId::SuperOpposite
    } else {
        CaseId::SuperPositive
    };
    let warning = (critical && product != 1.0).then(|| {
        format!("|a1 a2| = {product} treated as 1 (tolerance {CRITICAL_TOL:e})")
    });
    PlanarCase {
        a1,
        a2,
        case_id,
        description: case_id.description().to_string(),
        warning,
    }
}

/// The problem `(S, f~)` with `S = [[1, C a1], [a2 / C, 1]]`, `f~_1 = f_1`,
/// `f~_2 = f_2 / C`. Solutions map by dividing second components by `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledProblem {
    pub a1: f64,
    pub a2: f64,
    pub driver: PiecewisePath,
}

pub fn scaling_transform(a1: f64, a2: f64, c: f64, f: &PiecewisePath) -> Result<ScaledProblem> {
    check_scale(c)?;
    Ok(ScaledProblem {
        a1: c * a1,
        a2: a2 / c,
        driver: scale_second(f, c)?,
    })
}

fn check_scale(c: f64) -> Result<()> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Domain(format!("scale C must be positive, got {c}")));
    }
    Ok(())
}

/// Divides the second component by `c`.
pub fn scale_second(path: &PiecewisePath, c: f64) -> Result<PiecewisePath> {
    map_second(path, c, |v| v / c)
}

/// Multiplies the second component by `c`.
pub fn unscale_second(path: &PiecewisePath, c: f64) -> Result<PiecewisePath> {
    map_second(path, c, |v| v * c)
}

fn map_second(path: &PiecewisePath, c: f64, op: impl Fn(f64) -> f64) -> Result<PiecewisePath> {
    check_scale(c)?;
    if path.dim() != 2 {
        return Err(Error::Dimension(format!(
            "planar transforms need dimension 2, got {}",
            path.dim()
        )));
    }
    let values = path
        .rows()
        .flat_map(|row| [row[0], op(row[1])])
        .collect();
    PiecewisePath::from_flat(2, path.times().to_vec(), values)
}

/// `(g, m) -> (g~, m~)` for the scaled problem.
pub fn scale_solution(
    g: &PiecewisePath,
    m: &MonotonePath,
    c: f64,
) -> Result<(PiecewisePath, MonotonePath)> {
    Ok((scale_second(g, c)?, MonotonePath::try_from(scale_second(m, c)?)?))
}

/// Inverse of [`scale_solution`].
pub fn unscale_solution(
    g: &PiecewisePath,
    m: &MonotonePath,
    c: f64,
) -> Result<(PiecewisePath, MonotonePath)> {
    Ok((unscale_second(g, c)?, MonotonePath::try_from(unscale_second(m, c)?)?))
}

/// Closed-form solution for `a1 = a2 = 1`.
///
/// In the rotated frame `u1 = (1, 1)/sqrt2`, `u2 = (1, -1)/sqrt2` the push
/// `R m = (m1 + m2)(1, 1)` only moves the `u1` coordinate, and the orthant is
/// the wedge `x_u1 >= |x_u2|`. So `g_u2 = f_u2` and `g_u1` is the
/// one-dimensional reflection of `f_u1` above the moving barrier `|f_u2|`.
/// Only `m1 + m2` enters `g`. Each increment is charged to the component
/// whose wall is reached at the end of the step, split evenly at the corner,
/// where any other split is equally valid.
pub fn critical_oracle(f: &PiecewisePath) -> Result<CriticalSolution> {
    if f.dim() != 2 {
        return Err(Error::Dimension(format!(
            "critical oracle needs dimension 2, got {}",
            f.dim()
        )));
    }
    if f.first().iter().any(|&v| v < 0.0) {
        return Err(Error::Domain("driving path must start in the orthant".into()));
    }
    let root2 = std::f64::consts::SQRT_2;
    let mut running: f64 = 0.0;
    let mut total = 0.0;
    let mut split = [0.0, 0.0];
    let mut m = Vec::with_capacity(f.len() * 2);
    for row in f.rows() {
        let f_u1 = (row[0] + row[1]) / root2;
        let f_u2 = (row[0] - row[1]) / root2;
        running = running.max(f_u2.abs() - f_u1);
        // g_u1 - f_u1 = sqrt2 (m1 + m2)
        let next = running / root2;
        let rise = next - total;
        if rise > 0.0 {
            // g_u2 > 0 means g1 > g2, so the second wall is the one reached
            match f_u2.partial_cmp(&0.0) {
                Some(std::cmp::Ordering::Greater) => split[1] += rise,
                Some(std::cmp::Ordering::Less) => split[0] += rise,
                _ => {
                    split[0] += 0.5 * rise;
                    split[1] += 0.5 * rise;
                }
            }
            total = next;
        }
        m.extend(split);
    }
    let m = MonotonePath::try_from(PiecewisePath::from_flat(2, f.times().to_vec(), m)?)?;
    let matrix = ReflectionMatrix::planar(1.0, 1.0);
    finish_planar(&matrix, f, m)
}

/// Critical-case oracle for any `a1 > 0, a2 > 0, a1 a2 = 1`, via the scaling
/// `C = 1 / a1` that maps `R` to `[[1, 1], [1, 1]]`.
pub fn solve_critical(a1: f64, a2: f64, f: &PiecewisePath) -> Result<CriticalSolution> {
    let case = classify(a1, a2);
    if case.case_id != CaseId::CriticalPositive {
        return Err(Error::Regime(format!(
            "critical oracle applies to a1 > 0, a2 > 0, a1 a2 = 1; ({a1}, {a2}) is {:?}",
            case.case_id
        )));
    }
    let c = 1.0 / a1;
    let scaled = scaling_transform(a1, a2, c, f)?;
    let unit = critical_oracle(&scaled.driver)?;
    let m = MonotonePath::try_from(unscale_second(&unit.solution.m, c)?)?;
    finish_planar(&ReflectionMatrix::planar(a1, a2), f, m)
}

fn finish_planar(
    matrix: &ReflectionMatrix,
    f: &PiecewisePath,
    m: MonotonePath,
) -> Result<CriticalSolution> {
    let mut g = Vec::with_capacity(f.len() * 2);
    let mut push = [0.0; 2];
    for (f_row, m_row) in f.rows().zip(m.rows()) {
        matrix.apply_r(m_row, &mut push);
        g.extend([f_row[0] + push[0], f_row[1] + push[1]]);
    }
    let g = PiecewisePath::from_flat(2, f.times().to_vec(), g)?;
    let validation = validate(matrix, f, &g, &m, DEFAULT_EPS_WALL)?;
    Ok(CriticalSolution {
        solution: SkorokhodSolution {
            complementarity_defect: validation.complementarity_defect.clone(),
            g,
            m,
            residual: 0.0,
            iterations: 0,
            validation,
        },
        m_split: "m1 + m2 is unique; increments at the corner are split evenly".into(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalSolution {
    #[serde(flatten)]
    pub solution: SkorokhodSolution,
    pub m_split: String,
}
