//! Continuous piecewise-linear paths in `R^d` on a finite horizon `[0, T]`.
//!
//! A path is stored as its breakpoints and the values there; between two
//! breakpoints it is the straight segment joining them. Every operator the
//! solver applies (linear maps, positive parts, running suprema) has its
//! extremes at breakpoints on such paths, so grid values are exact.

use std::io::Write;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// On-disk layout: `{"d": 2, "times": [...], "values": [[...], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct PathFile {
    d: usize,
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PathFile", into = "PathFile")]
pub struct PiecewisePath {
    dim: usize,
    times: Vec<f64>,
    /// Row-major: breakpoint `k` occupies `values[k * dim..(k + 1) * dim]`.
    values: Vec<f64>,
}

impl TryFrom<PathFile> for PiecewisePath {
    type Error = Error;

    fn try_from(file: PathFile) -> Result<Self> {
        let path = PiecewisePath::new(file.times, file.values)?;
        if path.dim != file.d {
            return Err(Error::Dimension(format!(
                "declared d = {} but values have {} components",
                file.d, path.dim
            )));
        }
        Ok(path)
    }
}

impl From<PiecewisePath> for PathFile {
    fn from(path: PiecewisePath) -> Self {
        let values = path.rows().map(<[f64]>::to_vec).collect();
        PathFile {
            d: path.dim,
            times: path.times,
            values,
        }
    }
}

impl PiecewisePath {
    pub fn new(times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        let dim = values.first().map(Vec::len).unwrap_or(0);
        if values.iter().any(|v| v.len() != dim) {
            return Err(Error::Dimension(
                "all path values must have the same length".into(),
            ));
        }
        Self::from_flat(dim, times, values.concat())
    }

    pub fn from_flat(dim: usize, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Dimension("path dimension must be positive".into()));
        }
        if times.len() < 2 {
            return Err(Error::Domain("a path needs at least two breakpoints".into()));
        }
        if values.len() != times.len() * dim {
            return Err(Error::Dimension(format!(
                "{} breakpoints of dimension {dim} need {} values, got {}",
                times.len(),
                times.len() * dim,
                values.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(Error::Domain(format!(
                "paths start at time 0, got {}",
                times[0]
            )));
        }
        if let Some(w) = times.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(Error::Domain(format!(
                "breakpoints must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        if values.iter().chain(&times).any(|v| !v.is_finite()) {
            return Err(Error::Domain("path contains non-finite numbers".into()));
        }
        Ok(Self { dim, times, values })
    }

    /// A path that is constant zero on the grid `times`.
    pub fn zeros(dim: usize, times: Vec<f64>) -> Result<Self> {
        let n = times.len();
        Self::from_flat(dim, times, vec![0.0; n * dim])
    }

    /// Samples `f` at each time of `times`.
    pub fn from_fn(dim: usize, times: Vec<f64>, mut f: impl FnMut(f64) -> Vec<f64>) -> Result<Self> {
        let mut values = Vec::with_capacity(times.len() * dim);
        for &t in &times {
            let v = f(t);
            if v.len() != dim {
                return Err(Error::Dimension(format!(
                    "sampler returned {} components, expected {dim}",
                    v.len()
                )));
            }
            values.extend(v);
        }
        Self::from_flat(dim, times, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of breakpoints.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("paths have at least two breakpoints")
    }

    pub fn value(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn values_flat(&self) -> &[f64] {
        &self.values
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    /// Values of component `j` at every breakpoint.
    pub fn component(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows().map(move |row| row[j])
    }

    pub fn first(&self) -> &[f64] {
        self.value(0)
    }

    pub fn last(&self) -> &[f64] {
        self.value(self.len() - 1)
    }

    /// Linear interpolation at `t`, exact at breakpoints.
    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        if !(0.0..=self.horizon()).contains(&t) {
            return Err(Error::Domain(format!(
                "t = {t} outside [0, {}]",
                self.horizon()
            )));
        }
        match self.times.binary_search_by(|s| s.total_cmp(&t)) {
            Ok(k) => Ok(self.value(k).to_vec()),
            Err(k) => {
                let (t0, t1) = (self.times[k - 1], self.times[k]);
                let w = (t - t0) / (t1 - t0);
                Ok(self
                    .value(k - 1)
                    .iter()
                    .zip(self.value(k))
                    .map(|(a, b)| a + w * (b - a))
                    .collect())
            }
        }
    }

    /// `sup_s sum_i y_i |f_i(s)|`. Each `|f_i|` is convex on a segment, so the
    /// supremum over the whole path is attained at a breakpoint.
    pub fn star_norm(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.dim {
            return Err(Error::Dimension(format!(
                "weight vector has length {}, path has dimension {}",
                y.len(),
                self.dim
            )));
        }
        Ok(weighted_sup(&self.values, y))
    }

    /// `sum_i y_i sup_s |f_i(s)|`. Equivalent to [`Self::star_norm`] and never
    /// smaller; `T` is non-expansive in this norm whenever `rho(|Q|) <= 1`,
    /// which can fail for `star_norm` when components peak at different times.
    pub fn component_sup_norm(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.dim {
            return Err(Error::Dimension(format!(
                "weight vector has length {}, path has dimension {}",
                y.len(),
                self.dim
            )));
        }
        let mut sup = vec![0.0_f64; self.dim];
        for row in self.values.chunks_exact(self.dim) {
            for (s, v) in sup.iter_mut().zip(row) {
                *s = s.max(v.abs());
            }
        }
        Ok(sup.iter().zip(y).map(|(s, w)| w * s).sum())
    }

    /// Largest absolute entry over all breakpoints and components.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Per-component `max - min` over `[s, t]`.
    pub fn oscillation(&self, s: f64, t: f64) -> Result<Vec<f64>> {
        if !(s < t) {
            return Err(Error::Domain(format!("oscillation needs s < t, got [{s}, {t}]")));
        }
        let mut lo = self.eval(s)?;
        let mut hi = lo.clone();
        let mut absorb = |v: &[f64]| {
            for j in 0..v.len() {
                lo[j] = lo[j].min(v[j]);
                hi[j] = hi[j].max(v[j]);
            }
        };
        absorb(&self.eval(t)?);
        for (k, &tk) in self.times.iter().enumerate() {
            if tk > s && tk < t {
                absorb(self.value(k));
            }
        }
        Ok(hi.iter().zip(&lo).map(|(h, l)| h - l).collect())
    }

    pub fn same_grid(&self, other: &PiecewisePath) -> bool {
        self.times == other.times
    }

    pub(crate) fn check_grid(&self, other: &PiecewisePath, what: &str) -> Result<()> {
        if !self.same_grid(other) {
            return Err(Error::Grid(format!("{what} is not on the driving path's grid")));
        }
        if self.dim != other.dim {
            return Err(Error::Dimension(format!(
                "{what} has dimension {}, expected {}",
                other.dim, self.dim
            )));
        }
        Ok(())
    }

    /// Componentwise combination `op(self, other)` on a shared grid.
    pub fn zip_with(&self, other: &PiecewisePath, op: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_grid(other, "operand")?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| op(a, b))
            .collect();
        Ok(Self {
            dim: self.dim,
            times: self.times.clone(),
            values,
        })
    }

    pub fn sub(&self, other: &PiecewisePath) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn map(&self, op: impl Fn(f64) -> f64) -> Self {
        Self {
            dim: self.dim,
            times: self.times.clone(),
            values: self.values.iter().map(|&v| op(v)).collect(),
        }
    }

    /// Max over breakpoints of the largest componentwise difference.
    pub fn sup_distance(&self, other: &PiecewisePath) -> Result<f64> {
        Ok(self.sub(other)?.sup_norm())
    }

    /// Keeps the listed components, in the given order.
    pub fn select(&self, components: &[usize]) -> Result<Self> {
        if let Some(&bad) = components.iter().find(|&&j| j >= self.dim) {
            return Err(Error::Dimension(format!(
                "component {bad} out of range for dimension {}",
                self.dim
            )));
        }
        let values = self
            .rows()
            .flat_map(|row| components.iter().map(move |&j| row[j]))
            .collect();
        Self::from_flat(components.len(), self.times.clone(), values)
    }

    /// Re-samples onto `grid`, which must cover the same horizon.
    pub fn resample(&self, grid: &[f64]) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len() * self.dim);
        for &t in grid {
            values.extend(self.eval(t)?);
        }
        Self::from_flat(self.dim, grid.to_vec(), values)
    }

    /// Writes `t,x1,...,xd` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain((1..=self.dim).map(|j| format!("x{j}")))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for (t, row) in self.times.iter().zip(self.rows()) {
            let mut line = t.to_string();
            for v in row {
                line.push(',');
                line.push_str(&v.to_string());
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

pub(crate) fn weighted_sup(values: &[f64], y: &[f64]) -> f64 {
    values
        .chunks_exact(y.len())
        .map(|row| row.iter().zip(y).map(|(v, w)| w * v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Puts every path on the union of all breakpoint sets.
pub fn refine_to_common_grid(paths: &[PiecewisePath]) -> Result<Vec<PiecewisePath>> {
    let Some(first) = paths.first() else {
        return Ok(Vec::new());
    };
    let horizon = first.horizon();
    if let Some(p) = paths.iter().find(|p| p.horizon() != horizon) {
        return Err(Error::Domain(format!(
            "horizon mismatch: {} vs {horizon}",
            p.horizon()
        )));
    }
    let mut grid: Vec<f64> = paths.iter().flat_map(|p| p.times.iter().copied()).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    paths.iter().map(|p| p.resample(&grid)).collect()
}

/// A path whose components are non-decreasing and which starts at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PiecewisePath", into = "PiecewisePath")]
pub struct MonotonePath(PiecewisePath);

impl TryFrom<PiecewisePath> for MonotonePath {
    type Error = Error;

    fn try_from(path: PiecewisePath) -> Result<Self> {
        if path.first().iter().any(|&v| v != 0.0) {
            return Err(Error::Domain("monotone path must start at 0".into()));
        }
        for j in 0..path.dim {
            let mut prev = 0.0;
            for (k, v) in path.component(j).enumerate() {
                if v < prev {
                    return Err(Error::Domain(format!(
                        "component {j} decreases at breakpoint {k} ({prev} -> {v})"
                    )));
                }
                prev = v;
            }
        }
        Ok(Self(path))
    }
}

impl From<MonotonePath> for PiecewisePath {
    fn from(path: MonotonePath) -> Self {
        path.0
    }
}

impl Deref for MonotonePath {
    type Target = PiecewisePath;

    fn deref(&self) -> &PiecewisePath {
        &self.0
    }
}

impl MonotonePath {
    pub fn zeros(dim: usize, times: Vec<f64>) -> Result<Self> {
        Ok(Self(PiecewisePath::zeros(dim, times)?))
    }

    pub fn as_path(&self) -> &PiecewisePath {
        &self.0
    }

    pub fn into_path(self) -> PiecewisePath {
        self.0
    }

    /// Total increase of each component over the horizon.
    pub fn total_variation(&self) -> Vec<f64> {
        self.0.last().to_vec()
    }

    /// Wraps values already known to be monotone (produced by running maxima).
    pub(crate) fn from_trusted(path: PiecewisePath) -> Self {
        debug_assert!(MonotonePath::try_from(path.clone()).is_ok());
        Self(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(times: &[f64], values: &[&[f64]]) -> PiecewisePath {
        PiecewisePath::new(times.to_vec(), values.iter().map(|v| v.to_vec()).collect()).unwrap()
    }

    #[test]
    fn eval_interpolates_and_hits_breakpoints() {
        let p = path(&[0.0, 1.0], &[&[0.0, 0.0], &[2.0, 2.0]]);
        assert_eq!(p.eval(0.5).unwrap(), vec![1.0, 1.0]);
        assert_eq!(p.eval(0.0).unwrap(), vec![0.0, 0.0]);
        assert_eq!(p.eval(1.0).unwrap(), vec![2.0, 2.0]);
        assert!(matches!(p.eval(1.5), Err(Error::Domain(_))));
        assert!(matches!(p.eval(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn rejects_malformed_paths() {
        assert!(PiecewisePath::new(vec![0.0, 0.0], vec![vec![1.0], vec![1.0]]).is_err());
        assert!(PiecewisePath::new(vec![0.5, 1.0], vec![vec![1.0], vec![1.0]]).is_err());
        assert!(PiecewisePath::new(vec![0.0, 1.0], vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(PiecewisePath::new(vec![0.0], vec![vec![1.0]]).is_err());
    }

    #[test]
    fn star_norm_examples() {
        let zero = PiecewisePath::zeros(2, vec![0.0, 1.0]).unwrap();
        assert_eq!(zero.star_norm(&[0.5, 0.5]).unwrap(), 0.0);

        let p = path(&[0.0, 1.0, 2.0], &[&[0.0], &[-3.0], &[2.0]]);
        assert_eq!(p.star_norm(&[1.0]).unwrap(), 3.0);

        let q = path(&[0.0, 1.0], &[&[1.0, 1.0], &[-2.0, 2.0]]);
        assert_eq!(q.star_norm(&[0.5, 0.5]).unwrap(), 2.0);
        // dense sampling never exceeds the breakpoint value
        let dense = (0..=1000)
            .map(|i| {
                let v = q.eval(i as f64 / 1000.0).unwrap();
                0.5 * v[0].abs() + 0.5 * v[1].abs()
            })
            .fold(0.0, f64::max);
        assert!((dense - 2.0).abs() < 1e-12);

        assert!(matches!(q.star_norm(&[1.0]), Err(Error::Dimension(_))));
    }

    #[test]
    fn oscillation_examples() {
        let c = path(&[0.0, 1.0, 2.0], &[&[3.0], &[3.0], &[3.0]]);
        assert_eq!(c.oscillation(0.0, 2.0).unwrap(), vec![0.0]);

        let p = path(&[0.0, 1.0, 2.0], &[&[0.0], &[1.0], &[-1.0]]);
        assert_eq!(p.oscillation(0.0, 2.0).unwrap(), vec![2.0]);
        assert_eq!(p.oscillation(0.5, 1.5).unwrap(), vec![1.0]);

        let m = path(&[0.0, 1.0, 2.0], &[&[0.0], &[1.0], &[4.0]]);
        assert_eq!(m.oscillation(0.5, 1.5).unwrap(), vec![2.5 - 0.5]);

        assert!(matches!(p.oscillation(1.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn refine_examples() {
        let a = path(&[0.0, 1.0, 2.0], &[&[0.0], &[5.0], &[1.0]]);
        let b = path(&[0.0, 2.0], &[&[0.0], &[4.0]]);
        assert_eq!(refine_to_common_grid(&[a.clone()]).unwrap(), vec![a.clone()]);
        assert_eq!(
            refine_to_common_grid(&[a.clone(), a.clone()]).unwrap(),
            vec![a.clone(), a.clone()]
        );
        let out = refine_to_common_grid(&[a.clone(), b]).unwrap();
        assert_eq!(out[0], a);
        assert_eq!(out[1].times(), &[0.0, 1.0, 2.0]);
        assert_eq!(out[1].value(1), &[2.0]);

        let c = path(&[0.0, 3.0], &[&[0.0], &[4.0]]);
        assert!(matches!(refine_to_common_grid(&[a, c]), Err(Error::Domain(_))));
    }

    #[test]
    fn monotone_invariants() {
        let ok = path(&[0.0, 1.0, 2.0], &[&[0.0], &[1.0], &[1.0]]);
        assert!(MonotonePath::try_from(ok).is_ok());
        let dips = path(&[0.0, 1.0, 2.0], &[&[0.0], &[1.0], &[0.999]]);
        assert!(MonotonePath::try_from(dips).is_err());
        let offset = path(&[0.0, 1.0], &[&[0.1], &[1.0]]);
        assert!(MonotonePath::try_from(offset).is_err());
    }

    #[test]
    fn json_layout() {
        let p = path(&[0.0, 1.0], &[&[1.0, 2.0], &[3.0, 4.0]]);
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(text, r#"{"d":2,"times":[0.0,1.0],"values":[[1.0,2.0],[3.0,4.0]]}"#);
        let back: PiecewisePath = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
        let bad = r#"{"d":3,"times":[0.0,1.0],"values":[[1.0,2.0],[3.0,4.0]]}"#;
        assert!(serde_json::from_str::<PiecewisePath>(bad).is_err());
    }

    #[test]
    fn csv_layout() {
        let p = path(&[0.0, 0.5], &[&[1.0, -2.0], &[3.0, 4.25]]);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,x1,x2\n0,1,-2\n0.5,3,4.25\n");
    }
}
