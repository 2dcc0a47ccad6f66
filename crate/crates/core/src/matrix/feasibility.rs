//! Completely-S verification by linear programming.
//!
//! For a principal submatrix `R_S` the primal program
//!
//! ```text
//! maximize t  subject to  R_S x >= t 1,  x >= 0,  sum(x) <= 1
//! ```
//!
//! has a positive optimum exactly when some `x >= 0` has `R_S x > 0`. When it
//! does not, the dual program `minimize z subject to R_S^T y <= z 1, y >= 0,
//! sum(y) = 1` yields `y >= 0`, `y != 0` with `y^T R_S <= 0`, the alternative
//! that rules out any such `x`.

use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use super::ReflectionMatrix;
use crate::error::{Error, Result};

/// Optimal slack above which a submatrix is declared an S-matrix.
pub const S_THRESHOLD: f64 = 1e-9;

/// Largest dimension for which all `2^d - 1` principal submatrices are enumerated.
pub const MAX_ENUMERATION_DIM: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetVerdict {
    pub subset: Vec<usize>,
    pub is_s: bool,
    /// Optimal `t` of the primal program.
    pub slack: f64,
    /// `x >= 0` with `R_S x > 0`, present when `is_s`.
    pub witness: Option<Vec<f64>>,
    /// `y >= 0` summing to 1 with `y^T R_S <= 0`, present otherwise.
    pub certificate: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletelySReport {
    pub completely_s: bool,
    pub subsets: Vec<SubsetVerdict>,
}

impl CompletelySReport {
    /// First subset that fails, if any.
    pub fn first_failure(&self) -> Option<&SubsetVerdict> {
        self.subsets.iter().find(|v| !v.is_s)
    }
}

pub fn is_completely_s(m: &ReflectionMatrix) -> Result<CompletelySReport> {
    let d = m.dim();
    if d > MAX_ENUMERATION_DIM {
        return Err(Error::Dimension(format!(
            "completely-S enumeration is capped at d = {MAX_ENUMERATION_DIM}, got {d}"
        )));
    }
    let subsets = (1u32..(1 << d))
        .map(|mask| {
            let subset: Vec<usize> = (0..d).filter(|&i| mask & (1 << i) != 0).collect();
            s_matrix_test(m, &subset)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CompletelySReport {
        completely_s: subsets.iter().all(|v| v.is_s),
        subsets,
    })
}

/// Decides whether the principal submatrix of `R` on `subset` is an S-matrix.
pub fn s_matrix_test(m: &ReflectionMatrix, subset: &[usize]) -> Result<SubsetVerdict> {
    let k = subset.len();
    let r = |i: usize, j: usize| m.r()[(subset[i], subset[j])];
    let bound = 1.0 + (0..k)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .map(|(i, j)| r(i, j).abs())
        .fold(0.0, f64::max);
    let fail = |message: String| Error::Feasibility {
        subset: subset.to_vec(),
        message,
    };

    let mut primal = Problem::new(OptimizationDirection::Maximize);
    let x: Vec<_> = (0..k).map(|_| primal.add_var(0.0, (0.0, 1.0))).collect();
    let t = primal.add_var(1.0, (-bound, bound));
    for i in 0..k {
        let mut row = LinearExpr::empty();
        for j in 0..k {
            row.add(x[j], r(i, j));
        }
        row.add(t, -1.0);
        primal.add_constraint(row, ComparisonOp::Ge, 0.0);
    }
    primal.add_constraint(
        x.iter().map(|&v| (v, 1.0)).collect::<LinearExpr>(),
        ComparisonOp::Le,
        1.0,
    );
    let solution = primal
        .solve()
        .map_err(|e| fail(e.to_string()))?
        .into_solution()
        .map_err(|_| fail("primal solve interrupted".into()))?;
    let slack = solution.var_value(t);

    if slack > S_THRESHOLD {
        let witness: Vec<f64> = x.iter().map(|&v| solution.var_value(v).max(0.0)).collect();
        let min_image = (0..k)
            .map(|i| (0..k).map(|j| r(i, j) * witness[j]).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        if !(min_image > 0.0) {
            return Err(fail(format!(
                "primal optimum {slack:e} but witness gives min (R x)_i = {min_image:e}"
            )));
        }
        return Ok(SubsetVerdict {
            subset: subset.to_vec(),
            is_s: true,
            slack,
            witness: Some(witness),
            certificate: None,
        });
    }

    let mut dual = Problem::new(OptimizationDirection::Minimize);
    let y: Vec<_> = (0..k).map(|_| dual.add_var(0.0, (0.0, 1.0))).collect();
    let z = dual.add_var(1.0, (-bound, bound));
    for j in 0..k {
        let mut col = LinearExpr::empty();
        for i in 0..k {
            col.add(y[i], r(i, j));
        }
        col.add(z, -1.0);
        dual.add_constraint(col, ComparisonOp::Le, 0.0);
    }
    dual.add_constraint(
        y.iter().map(|&v| (v, 1.0)).collect::<LinearExpr>(),
        ComparisonOp::Eq,
        1.0,
    );
    let solution = dual
        .solve()
        .map_err(|e| fail(e.to_string()))?
        .into_solution()
        .map_err(|_| fail("dual solve interrupted".into()))?;
    let certificate: Vec<f64> = y.iter().map(|&v| solution.var_value(v).max(0.0)).collect();
    Ok(SubsetVerdict {
        subset: subset.to_vec(),
        is_s: false,
        slack,
        witness: None,
        certificate: Some(certificate),
    })
}
