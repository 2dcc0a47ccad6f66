//! Static analysis of the reflection matrix `R`.
//!
//! Everything downstream works with the unit-diagonal form of `R` and the
//! matrices derived from it: `Q = I - R`, its entrywise absolute value `|Q|`,
//! its entrywise positive part `Q+` and the averaged matrix `P = Q+/2 + I/2`.

mod classes;
mod feasibility;
mod report;
mod spectral;

pub use classes::{decompose, strongly_connected_components, ClassDecomposition};
pub use feasibility::{
    is_completely_s, s_matrix_test, CompletelySReport, SubsetVerdict, MAX_ENUMERATION_DIM,
    S_THRESHOLD,
};
pub use report::{analyze, AnalysisReport};
pub use spectral::{
    is_irreducible, perron_left, spectral_data, spectral_radius, SpectralData,
};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Matrix file layout: `{"R": [[...], ...]}`, row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixFile {
    #[serde(rename = "R")]
    pub r: Vec<Vec<f64>>,
}

impl MatrixFile {
    pub fn to_dmatrix(&self) -> Result<DMatrix<f64>> {
        let d = self.r.len();
        if d == 0 {
            return Err(Error::Dimension("matrix must be non-empty".into()));
        }
        if let Some(row) = self.r.iter().find(|row| row.len() != d) {
            return Err(Error::Dimension(format!(
                "matrix must be square: {d} rows but a row of length {}",
                row.len()
            )));
        }
        Ok(DMatrix::from_fn(d, d, |i, j| self.r[i][j]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixFile", into = "MatrixFile")]
pub struct ReflectionMatrix {
    r: DMatrix<f64>,
    q: DMatrix<f64>,
    abs_q: DMatrix<f64>,
    q_plus: DMatrix<f64>,
    p: DMatrix<f64>,
}

impl TryFrom<MatrixFile> for ReflectionMatrix {
    type Error = Error;

    fn try_from(file: MatrixFile) -> Result<Self> {
        normalize(&file.to_dmatrix()?)
    }
}

impl From<ReflectionMatrix> for MatrixFile {
    fn from(m: ReflectionMatrix) -> Self {
        let d = m.dim();
        MatrixFile {
            r: (0..d).map(|i| (0..d).map(|j| m.r[(i, j)]).collect()).collect(),
        }
    }
}

/// Rescales column `j` by `1 / R_jj`, which amounts to measuring the `j`-th
/// pushing process in units of `R_jj`.
pub fn normalize(raw: &DMatrix<f64>) -> Result<ReflectionMatrix> {
    if !raw.is_square() || raw.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "reflection matrix must be square and non-empty, got {}x{}",
            raw.nrows(),
            raw.ncols()
        )));
    }
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("reflection matrix has non-finite entries".into()));
    }
    let d = raw.nrows();
    if let Some(index) = (0..d).find(|&i| !(raw[(i, i)] > 0.0)) {
        return Err(Error::Normalization {
            index,
            value: raw[(index, index)],
        });
    }
    let r = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            1.0
        } else {
            raw[(i, j)] / raw[(j, j)]
        }
    });
    Ok(ReflectionMatrix::from_unit_diagonal(r))
}

impl ReflectionMatrix {
    fn from_unit_diagonal(r: DMatrix<f64>) -> Self {
        let d = r.nrows();
        let q = DMatrix::from_fn(d, d, |i, j| if i == j { 0.0 } else { -r[(i, j)] });
        let abs_q = q.map(f64::abs);
        let q_plus = q.map(|v| v.max(0.0));
        let p = DMatrix::from_fn(d, d, |i, j| {
            0.5 * q_plus[(i, j)] + if i == j { 0.5 } else { 0.0 }
        });
        Self {
            r,
            q,
            abs_q,
            q_plus,
            p,
        }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        MatrixFile {
            r: rows.iter().map(|r| r.to_vec()).collect(),
        }
        .try_into()
    }

    pub fn identity(d: usize) -> Self {
        Self::from_unit_diagonal(DMatrix::identity(d, d))
    }

    /// `R = [[1, a1], [a2, 1]]`.
    pub fn planar(a1: f64, a2: f64) -> Self {
        Self::from_unit_diagonal(DMatrix::from_row_slice(2, 2, &[1.0, a1, a2, 1.0]))
    }

    pub fn dim(&self) -> usize {
        self.r.nrows()
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn abs_q(&self) -> &DMatrix<f64> {
        &self.abs_q
    }

    pub fn q_plus(&self) -> &DMatrix<f64> {
        &self.q_plus
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn is_q_zero(&self) -> bool {
        self.q.iter().all(|&v| v == 0.0)
    }

    /// The principal submatrix on `indices` (in the given order).
    pub fn principal(&self, indices: &[usize]) -> Self {
        let k = indices.len();
        Self::from_unit_diagonal(DMatrix::from_fn(k, k, |i, j| {
            self.r[(indices[i], indices[j])]
        }))
    }

    /// `R x` for a vector `x` of length `d`.
    pub fn apply_r(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        for i in 0..d {
            out[i] = (0..d).map(|k| self.r[(i, k)] * x[k]).sum();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_normalizes_to_zero_q() {
        let m = normalize(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!(m.r(), &DMatrix::identity(2, 2));
        assert!(m.is_q_zero());
        assert_eq!(m.p(), &(DMatrix::identity(2, 2) * 0.5));
    }

    #[test]
    fn divides_columns_by_diagonal() {
        let m = normalize(&DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        assert_eq!(m.r(), &DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]));

        let raw = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, -3.0, 2.0, 0.5, 6.0, 1.0, 1.0, 3.0]);
        let m = normalize(&raw).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.r()[(i, j)], raw[(i, j)] / raw[(j, j)]);
            }
            assert_eq!(m.r()[(i, i)], 1.0);
        }
    }

    #[test]
    fn unit_diagonal_input_is_unchanged() {
        let gamma = 1.7;
        let m = ReflectionMatrix::from_rows(&[&[1.0, gamma], &[1.0, 1.0]]).unwrap();
        assert_eq!(m.r()[(0, 1)], gamma);
        // Q = I - R elementwise
        for i in 0..2 {
            for j in 0..2 {
                let id = if i == j { 1.0 } else { 0.0 };
                assert_eq!(m.q()[(i, j)], id - m.r()[(i, j)]);
            }
        }
        assert_eq!(m.q(), &DMatrix::from_row_slice(2, 2, &[0.0, -gamma, -1.0, 0.0]));
    }

    #[test]
    fn derived_matrices_are_consistent() {
        let m = ReflectionMatrix::from_rows(&[&[1.0, -0.3, 0.2], &[0.4, 1.0, -1.5], &[0.0, 2.0, 1.0]])
            .unwrap();
        for (i, j) in (0..3).flat_map(|i| (0..3).map(move |j| (i, j))) {
            let q = m.q()[(i, j)];
            assert_eq!(m.abs_q()[(i, j)], q.abs());
            assert_eq!(m.q_plus()[(i, j)], q.max(0.0));
            assert!(m.abs_q()[(i, j)] >= m.q_plus()[(i, j)]);
            let id = if i == j { 0.5 } else { 0.0 };
            assert_eq!(m.p()[(i, j)], 0.5 * m.q_plus()[(i, j)] + id);
        }
    }

    #[test]
    fn rejects_non_positive_diagonal() {
        let raw = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -2.0]);
        match normalize(&raw) {
            Err(Error::Normalization { index, value }) => {
                assert_eq!(index, 1);
                assert_eq!(value, -2.0);
            }
            other => panic!("unexpected {other:?}"),
        }
        let raw = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 1.0]);
        assert!(matches!(normalize(&raw), Err(Error::Normalization { index: 0, .. })));
    }

    #[test]
    fn json_round_trip() {
        let m: ReflectionMatrix = serde_json::from_str(r#"{"R": [[2, 1], [1, 4]]}"#).unwrap();
        assert_eq!(m.r(), &DMatrix::from_row_slice(2, 2, &[1.0, 0.25, 0.5, 1.0]));
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(text, r#"{"R":[[1.0,0.25],[0.5,1.0]]}"#);
        assert!(serde_json::from_str::<ReflectionMatrix>(r#"{"R": [[1, 2]]}"#).is_err());
    }

    #[test]
    fn principal_submatrix_keeps_order() {
        let m = ReflectionMatrix::from_rows(&[&[1.0, 2.0, 3.0], &[4.0, 1.0, 6.0], &[7.0, 8.0, 1.0]])
            .unwrap();
        let sub = m.principal(&[2, 0]);
        assert_eq!(sub.r(), &DMatrix::from_row_slice(2, 2, &[1.0, 7.0, 3.0, 1.0]));
    }
}
