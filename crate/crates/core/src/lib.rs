//! Skorokhod problem in the nonnegative orthant with oblique reflection
//! matrix `R = I - Q`: given a driving path `f` with `f(0) >= 0`, find a
//! non-decreasing pushing path `m` with `m(0) = 0` such that `g = f + R m`
//! stays in the orthant and `m_j` only increases while `g_j = 0`.
//!
//! Paths are continuous and piecewise linear; all operators act exactly on
//! their breakpoints.

pub mod error;
pub mod matrix;
pub mod path;
pub mod planar;
pub mod sim;
pub mod solver;

pub use error::{Error, Result};
pub use matrix::{analyze, AnalysisReport, MatrixFile, ReflectionMatrix};
pub use path::{MonotonePath, PiecewisePath};
pub use planar::{classify, CaseId, PlanarCase};
pub use solver::{
    apply_t, apply_u, solve, validate, SkorokhodProblem, SkorokhodSolution, SolveOptions,
    ValidationReport,
};
