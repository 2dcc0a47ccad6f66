//! Two distinct solutions for `R = [[1, gamma], [1, 1]]`, `gamma > 1`.
//!
//! The driver is built from blocks on `[2^-n, 2^(1-n)]`, `n = 0..=depth`.
//! Block `n` scales by `c = gamma^-n`; in local time `s` (a fraction of the
//! block length) the first solution pushes on the first wall over `[0, 1/4]`,
//! the second on the second wall over `[5/8, 3/4]`. Both enter every block at
//! the corner-adjacent states `g = (0, c)` and `g_bar = (c, c)` and leave it at
//! `(0, gamma c)` and `(gamma c, gamma c)`. Below `2^-depth` a closing piece
//! starts both solutions at the origin. Each pushing path carries the exact
//! tail `sum_{k > n} gamma^-k = gamma^-n / (gamma - 1)` from the blocks
//! beyond the truncation depth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::ReflectionMatrix;
use crate::path::{MonotonePath, PiecewisePath};
use crate::solver::{validate, ValidationReport, DEFAULT_EPS_WALL};

/// Breakpoints of a block as fractions of its length.
pub const BLOCK_FRACTIONS: [f64; 6] = [0.0, 0.25, 0.5, 0.625, 0.75, 1.0];

/// Values of block `n` at [`BLOCK_FRACTIONS`], before the tail offsets.
/// `f` and the pushing paths are relative to the block start.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTable {
    pub n: u32,
    pub f: [[f64; 2]; 6],
    pub g: [[f64; 2]; 6],
    pub g_bar: [[f64; 2]; 6],
    pub m: [[f64; 2]; 6],
    pub m_bar: [[f64; 2]; 6],
}

impl BlockTable {
    pub fn new(gamma: f64, n: u32) -> Self {
        let c = gamma.powi(-(n as i32));
        let up = gamma * c;
        Self {
            n,
            f: [
                [0.0, 0.0],
                [-c, 0.0],
                [up - c, 0.0],
                [up - c, -c],
                [up - c, -2.0 * c],
                [-c, up - 2.0 * c],
            ],
            g: [[0.0, c], [0.0, 2.0 * c], [up, 2.0 * c], [up, c], [up, 0.0], [0.0, up]],
            g_bar: [[c, c], [0.0, c], [up, c], [up, 0.0], [2.0 * up, 0.0], [up, up]],
            m: [[0.0, 0.0], [c, 0.0], [c, 0.0], [c, 0.0], [c, 0.0], [c, 0.0]],
            m_bar: [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, c], [0.0, c]],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CounterexampleBundle {
    pub gamma: f64,
    pub depth: u32,
    pub f: PiecewisePath,
    pub g: PiecewisePath,
    pub g_bar: PiecewisePath,
    pub m: MonotonePath,
    pub m_bar: MonotonePath,
}

impl CounterexampleBundle {
    pub fn matrix(&self) -> ReflectionMatrix {
        ReflectionMatrix::planar(self.gamma, 1.0)
    }

    /// Validation reports for `(g, m)` and `(g_bar, m_bar)`.
    pub fn validate(&self) -> Result<(ValidationReport, ValidationReport)> {
        let matrix = self.matrix();
        Ok((
            validate(&matrix, &self.f, &self.g, &self.m, DEFAULT_EPS_WALL)?,
            validate(&matrix, &self.f, &self.g_bar, &self.m_bar, DEFAULT_EPS_WALL)?,
        ))
    }

    pub fn sup_gap(&self) -> Result<f64> {
        self.g.sup_distance(&self.g_bar)
    }
}

pub fn build_counterexample(gamma: f64, depth: u32) -> Result<CounterexampleBundle> {
    if !(gamma > 1.0) || !gamma.is_finite() {
        return Err(Error::Domain(format!("gamma must exceed 1, got {gamma}")));
    }
    if depth > 1000 {
        return Err(Error::Domain(format!("depth {depth} underflows the time grid")));
    }
    let scale = |n: u32| gamma.powi(-(n as i32));
    // tails[n] = sum_{k > n} gamma^-k, accumulated so that consecutive
    // blocks agree exactly where the pushing paths are flat
    let mut tails = vec![0.0; depth as usize + 1];
    tails[depth as usize] = scale(depth) / (gamma - 1.0);
    for n in (0..depth as usize).rev() {
        tails[n] = tails[n + 1] + scale(n as u32 + 1);
    }
    let tail = |n: u32| tails[n as usize];

    let mut times = Vec::new();
    let mut cols: [Vec<f64>; 5] = Default::default();
    let mut push = |t: f64, rows: [[f64; 2]; 5]| {
        times.push(t);
        for (col, row) in cols.iter_mut().zip(rows) {
            col.extend(row);
        }
    };

    let start = 0.5_f64.powi(depth as i32);
    let c = tail(depth);
    let top = scale(depth);
    push(0.0, [[0.0; 2]; 5]);
    push(
        0.5 * start,
        [[-c, -c], [0.0, 0.0], [top, 0.0], [c, 0.0], [0.0, c]],
    );
    push(
        start,
        [[-c, (gamma - 2.0) * c], [0.0, top], [top, top], [c, 0.0], [0.0, c]],
    );

    for n in (0..=depth).rev() {
        let block = BlockTable::new(gamma, n);
        let origin = 0.5_f64.powi(n as i32);
        let t0 = tail(n);
        let f_base = [-t0, (gamma - 2.0) * t0];
        for k in 1..BLOCK_FRACTIONS.len() {
            let offset = |v: [f64; 2], base: [f64; 2]| [v[0] + base[0], v[1] + base[1]];
            push(
                origin + origin * BLOCK_FRACTIONS[k],
                [
                    offset(block.f[k], f_base),
                    block.g[k],
                    block.g_bar[k],
                    offset(block.m[k], [t0, 0.0]),
                    offset(block.m_bar[k], [0.0, t0]),
                ],
            );
        }
    }

    let [f, g, g_bar, m, m_bar] = cols.map(|values| PiecewisePath::from_flat(2, times.clone(), values));
    Ok(CounterexampleBundle {
        gamma,
        depth,
        f: f?,
        g: g?,
        g_bar: g_bar?,
        m: MonotonePath::try_from(m?)?,
        m_bar: MonotonePath::try_from(m_bar?)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_tables_satisfy_the_equation() {
        for gamma in [2.0, 3.0, 1.5] {
            let r = ReflectionMatrix::planar(gamma, 1.0);
            for n in 0..4 {
                let b = BlockTable::new(gamma, n);
                let mut pushed = [0.0; 2];
                for k in 0..6 {
                    for (g, m) in [(&b.g, &b.m), (&b.g_bar, &b.m_bar)] {
                        r.apply_r(&m[k], &mut pushed);
                        for j in 0..2 {
                            let rhs = g[0][j] + b.f[k][j] + pushed[j];
                            assert!((g[k][j] - rhs).abs() < 1e-14, "gamma {gamma} n {n} k {k}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn consecutive_blocks_connect() {
        let gamma = 2.0;
        for n in 0..5 {
            let inner = BlockTable::new(gamma, n + 1);
            let outer = BlockTable::new(gamma, n);
            assert_eq!(inner.g[5], outer.g[0]);
            assert_eq!(inner.g_bar[5], outer.g_bar[0]);
        }
    }

    #[test]
    fn gamma_two_gives_distinct_valid_solutions() {
        let bundle = build_counterexample(2.0, 12).unwrap();
        let (a, b) = bundle.validate().unwrap();
        assert!(a.passed, "{:?}", a.failures);
        assert!(b.passed, "{:?}", b.failures);
        assert!(a.equation_residual < 1e-12 && b.equation_residual < 1e-12);
        assert_eq!(a.complementarity_defect, vec![0.0, 0.0]);
        assert_eq!(b.complementarity_defect, vec![0.0, 0.0]);
        assert_eq!(bundle.f.first(), &[0.0, 0.0]);
        assert_eq!(bundle.f.horizon(), 2.0);
        assert!(bundle.sup_gap().unwrap() >= 1.0);
    }

    #[test]
    fn block_zero_values_in_global_time() {
        let gamma: f64 = 2.0;
        let bundle = build_counterexample(gamma, 6).unwrap();
        assert_eq!(bundle.g.eval(1.5).unwrap(), vec![2.0, 2.0]);
        assert_eq!(bundle.g_bar.eval(1.75).unwrap(), vec![4.0, 0.0]);
        assert_eq!(bundle.g.eval(2.0).unwrap(), vec![0.0, 2.0]);
        assert_eq!(bundle.g_bar.eval(2.0).unwrap(), vec![2.0, 2.0]);
        // f(2) = sum over all blocks of (-gamma^-n, (gamma - 2) gamma^-n)
        let total = gamma / (gamma - 1.0);
        let f_end = bundle.f.eval(2.0).unwrap();
        assert!((f_end[0] + total).abs() < 1e-15);
        assert!(f_end[1].abs() < 1e-15);
    }

    #[test]
    fn other_gammas_validate() {
        for gamma in [1.25, 3.0, 10.0] {
            let bundle = build_counterexample(gamma, 8).unwrap();
            let (a, b) = bundle.validate().unwrap();
            assert!(a.passed && b.passed, "gamma {gamma}: {:?} {:?}", a.failures, b.failures);
            assert!(bundle.sup_gap().unwrap() >= gamma.powi(-8));
        }
    }

    #[test]
    fn rejects_gamma_at_most_one() {
        assert!(matches!(build_counterexample(1.0, 3), Err(Error::Domain(_))));
        assert!(matches!(build_counterexample(f64::NAN, 3), Err(Error::Domain(_))));
    }
}
