//! Fixed-point solver for the Skorokhod problem `g = f + R m` in the orthant.
//!
//! The pushing path `m` is a fixed point of
//!
//! ```text
//! (T h)_j(t) = sup_{s <= t} ( sum_k Q_jk h_k(s) - f_j(s) )^+
//! ```
//!
//! and is reached by averaged iteration `m <- (m + T m) / 2`, which converges
//! whenever `T` is non-expansive in the Perron-weighted norm, including the
//! critical case `rho(|Q|) = 1` where `T` is not a contraction. Reducible
//! matrices are solved class by class along the influence graph.

mod validate;

pub use validate::{validate, validate_with, ValidationReport, ValidationTolerances};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{
    decompose, is_completely_s, is_irreducible, spectral_data, ReflectionMatrix, SpectralData,
    MAX_ENUMERATION_DIM,
};
use crate::path::{weighted_sup, MonotonePath, PiecewisePath};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 200_000;
/// Slack on `rho(|Q|) <= 1` absorbing eigenvalue round-off.
pub const RHO_SLACK: f64 = 1e-9;
pub const DEFAULT_EPS_WALL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Stop once successive iterates differ by less than `tol` in `|.|_*` and
    /// the fixed-point residual is below `10 * tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Starting iterate; the zero path when `None`.
    pub initial: Option<MonotonePath>,
    pub eps_wall: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            initial: None,
            eps_wall: DEFAULT_EPS_WALL,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SkorokhodProblem {
    matrix: ReflectionMatrix,
    driver: PiecewisePath,
    spectral: SpectralData,
}

impl SkorokhodProblem {
    /// Checks `f(0) >= 0`, `rho(|Q|) <= 1` and, up to the enumeration cap,
    /// that `R` is completely-S.
    pub fn new(matrix: ReflectionMatrix, driver: PiecewisePath) -> Result<Self> {
        Self::build(matrix, driver, false)
    }

    /// Like [`SkorokhodProblem::new`] but accepts `rho(|Q|) > 1`, where the
    /// iteration carries no convergence guarantee.
    pub fn allow_supercritical(matrix: ReflectionMatrix, driver: PiecewisePath) -> Result<Self> {
        Self::build(matrix, driver, true)
    }

    fn build(matrix: ReflectionMatrix, driver: PiecewisePath, supercritical_ok: bool) -> Result<Self> {
        if matrix.dim() != driver.dim() {
            return Err(Error::Dimension(format!(
                "matrix is {0}x{0} but the driving path has dimension {1}",
                matrix.dim(),
                driver.dim()
            )));
        }
        if let Some(j) = driver.first().iter().position(|&v| v < 0.0) {
            return Err(Error::Domain(format!(
                "driving path must start in the orthant, component {j} is {}",
                driver.first()[j]
            )));
        }
        let spectral = spectral_data(&matrix)?;
        if spectral.rho > 1.0 + RHO_SLACK && !supercritical_ok {
            return Err(Error::Regime(format!(
                "rho(|Q|) = {} exceeds 1; pass the supercritical override to iterate anyway",
                spectral.rho
            )));
        }
        if matrix.dim() <= MAX_ENUMERATION_DIM {
            let report = is_completely_s(&matrix)?;
            if let Some(bad) = report.first_failure() {
                return Err(Error::Regime(format!(
                    "R is not completely-S: principal submatrix on {:?} admits no x >= 0 with R x > 0",
                    bad.subset
                )));
            }
        }
        Ok(Self {
            matrix,
            driver,
            spectral,
        })
    }

    /// Sub-problems of a checked problem inherit its regime.
    fn unchecked(matrix: ReflectionMatrix, driver: PiecewisePath) -> Result<Self> {
        let spectral = spectral_data(&matrix)?;
        Ok(Self {
            matrix,
            driver,
            spectral,
        })
    }

    pub fn matrix(&self) -> &ReflectionMatrix {
        &self.matrix
    }

    pub fn driver(&self) -> &PiecewisePath {
        &self.driver
    }

    pub fn spectral(&self) -> &SpectralData {
        &self.spectral
    }

    pub fn is_supercritical(&self) -> bool {
        self.spectral.rho > 1.0 + RHO_SLACK
    }

    fn weights(&self) -> Vec<f64> {
        self.spectral.norm_weights(self.matrix.dim())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkorokhodSolution {
    pub g: PiecewisePath,
    pub m: MonotonePath,
    /// `|T m - m|_*` at termination.
    pub residual: f64,
    pub iterations: usize,
    pub complementarity_defect: Vec<f64>,
    pub validation: ValidationReport,
}

/// Row-major copy of `Q` for the inner loops.
struct Kernel {
    d: usize,
    q: Vec<f64>,
}

impl Kernel {
    fn new(q: &DMatrix<f64>) -> Self {
        let d = q.nrows();
        Self {
            d,
            q: (0..d).flat_map(|j| (0..d).map(move |k| (j, k))).map(|(j, k)| q[(j, k)]).collect(),
        }
    }

    /// `out = T h` on the grid of `f`; both are row-major with `d` columns.
    fn apply_t(&self, f: &[f64], h: &[f64], out: &mut [f64]) {
        let d = self.d;
        let mut running = vec![0.0_f64; d];
        for ((f_row, h_row), out_row) in f
            .chunks_exact(d)
            .zip(h.chunks_exact(d))
            .zip(out.chunks_exact_mut(d))
        {
            for j in 0..d {
                let q_row = &self.q[j * d..(j + 1) * d];
                let push: f64 = q_row.iter().zip(h_row).map(|(a, b)| a * b).sum();
                running[j] = running[j].max(push - f_row[j]);
                out_row[j] = running[j];
            }
        }
    }
}

struct Iterate {
    m: Vec<f64>,
    residual: f64,
    iterations: usize,
}

/// Averaged iteration `m <- (m + T m) / 2` from `m0`.
fn iterate(
    kernel: &Kernel,
    f: &[f64],
    weights: &[f64],
    m0: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<Iterate> {
    let mut m = m0;
    let mut tm = vec![0.0; m.len()];
    let mut diff = vec![0.0; m.len()];
    kernel.apply_t(f, &m, &mut tm);
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        for ((mi, &ti), di) in m.iter_mut().zip(&tm).zip(diff.iter_mut()) {
            let next = 0.5 * *mi + 0.5 * ti;
            *di = next - *mi;
            *mi = next;
        }
        let step = weighted_sup(&diff, weights);
        kernel.apply_t(f, &m, &mut tm);
        if step < tol {
            for ((di, &ti), &mi) in diff.iter_mut().zip(&tm).zip(&m) {
                *di = ti - mi;
            }
            residual = weighted_sup(&diff, weights);
            if residual < 10.0 * tol {
                return Ok(Iterate {
                    m,
                    residual,
                    iterations: it,
                });
            }
        } else {
            residual = 2.0 * step;
        }
    }
    Err(Error::Convergence {
        residual,
        iterations: max_iter,
        class: None,
    })
}

fn check_operands(f: &PiecewisePath, h: &PiecewisePath, matrix: &ReflectionMatrix) -> Result<()> {
    if f.dim() != matrix.dim() {
        return Err(Error::Dimension(format!(
            "driving path has dimension {}, matrix is {}x{}",
            f.dim(),
            matrix.dim(),
            matrix.dim()
        )));
    }
    f.check_grid(h, "iterate")?;
    if f.first().iter().any(|&v| v < 0.0) {
        return Err(Error::Domain("driving path must start in the orthant".into()));
    }
    Ok(())
}

/// `(T h)_j(t) = max over breakpoints s <= t of (Q h(s) - f(s))_j^+`.
pub fn apply_t(matrix: &ReflectionMatrix, f: &PiecewisePath, h: &MonotonePath) -> Result<MonotonePath> {
    check_operands(f, h, matrix)?;
    let mut out = vec![0.0; f.values_flat().len()];
    Kernel::new(matrix.q()).apply_t(f.values_flat(), h.values_flat(), &mut out);
    let path = PiecewisePath::from_flat(f.dim(), f.times().to_vec(), out)?;
    Ok(MonotonePath::from_trusted(path))
}

/// `U h = (h + T h) / 2`.
pub fn apply_u(matrix: &ReflectionMatrix, f: &PiecewisePath, h: &MonotonePath) -> Result<MonotonePath> {
    let th = apply_t(matrix, f, h)?;
    let avg = h.zip_with(&th, |a, b| 0.5 * a + 0.5 * b)?;
    Ok(MonotonePath::from_trusted(avg))
}

fn initial_iterate(prob: &SkorokhodProblem, options: &SolveOptions) -> Result<Vec<f64>> {
    match &options.initial {
        Some(h) => {
            prob.driver.check_grid(h, "initial iterate")?;
            Ok(h.values_flat().to_vec())
        }
        None => Ok(vec![0.0; prob.driver.values_flat().len()]),
    }
}

/// Solves a problem with `Q = 0` or `|Q|` irreducible by averaged iteration
/// from the zero path (or `options.initial`).
pub fn solve_irreducible(prob: &SkorokhodProblem, options: &SolveOptions) -> Result<SkorokhodSolution> {
    if !prob.matrix.is_q_zero() && !is_irreducible(prob.matrix.abs_q()) {
        return Err(Error::Regime(
            "|Q| is reducible; use the class cascade instead".into(),
        ));
    }
    solve_direct(prob, options)
}

/// Whole-system averaged iteration without the irreducibility requirement.
/// For reducible `|Q|` the stopping norm uses uniform weights.
pub fn solve_direct(prob: &SkorokhodProblem, options: &SolveOptions) -> Result<SkorokhodSolution> {
    let kernel = Kernel::new(prob.matrix.q());
    let weights = prob.weights();
    let out = iterate(
        &kernel,
        prob.driver.values_flat(),
        &weights,
        initial_iterate(prob, options)?,
        options.tol,
        options.max_iter,
    )?;
    assemble(prob, out.m, out.residual, out.iterations, &weights, options)
}

/// Solves class by class along the influence graph. Each class sees the
/// driving path plus the pushes of the classes solved before it.
pub fn solve(prob: &SkorokhodProblem, options: &SolveOptions) -> Result<SkorokhodSolution> {
    let decomposition = decompose(&prob.matrix);
    if decomposition.classes.len() == 1 {
        return solve_direct(prob, options);
    }
    let d = prob.matrix.dim();
    let n = prob.driver.len();
    let f = prob.driver.values_flat();
    let r = prob.matrix.r();
    let initial = initial_iterate(prob, options)?;
    let mut m = vec![0.0; n * d];
    let mut iterations = 0;

    for &class in &decomposition.solve_order {
        let members = &decomposition.classes[class];
        let k = members.len();
        let outside: Vec<usize> = (0..d).filter(|i| !members.contains(i)).collect();
        let mut driver = Vec::with_capacity(n * k);
        let mut start = Vec::with_capacity(n * k);
        for row in 0..n {
            for &j in members {
                let pushed: f64 = outside.iter().map(|&l| r[(j, l)] * m[row * d + l]).sum();
                driver.push(f[row * d + j] + pushed);
                start.push(initial[row * d + j]);
            }
        }
        let sub = SkorokhodProblem::unchecked(
            prob.matrix.principal(members),
            PiecewisePath::from_flat(k, prob.driver.times().to_vec(), driver)?,
        )?;
        let out = iterate(
            &Kernel::new(sub.matrix.q()),
            sub.driver.values_flat(),
            &sub.weights(),
            start,
            options.tol,
            options.max_iter,
        )
        .map_err(|e| e.in_class(class))?;
        iterations += out.iterations;
        for row in 0..n {
            for (a, &j) in members.iter().enumerate() {
                m[row * d + j] = out.m[row * k + a];
            }
        }
    }

    let weights = prob.weights();
    let mut tm = vec![0.0; m.len()];
    Kernel::new(prob.matrix.q()).apply_t(f, &m, &mut tm);
    let diff: Vec<f64> = tm.iter().zip(&m).map(|(a, b)| a - b).collect();
    let residual = weighted_sup(&diff, &weights);
    assemble(prob, m, residual, iterations, &weights, options)
}

fn assemble(
    prob: &SkorokhodProblem,
    m: Vec<f64>,
    residual: f64,
    iterations: usize,
    weights: &[f64],
    options: &SolveOptions,
) -> Result<SkorokhodSolution> {
    let d = prob.matrix.dim();
    let times = prob.driver.times().to_vec();
    let mut g = prob.driver.values_flat().to_vec();
    let mut push = vec![0.0; d];
    for (g_row, m_row) in g.chunks_exact_mut(d).zip(m.chunks_exact(d)) {
        prob.matrix.apply_r(m_row, &mut push);
        for (gi, pi) in g_row.iter_mut().zip(&push) {
            *gi += pi;
        }
    }
    let g = PiecewisePath::from_flat(d, times.clone(), g)?;
    let m = MonotonePath::from_trusted(PiecewisePath::from_flat(d, times, m)?);

    // At a near fixed point g_j >= m_j - (T m)_j >= -residual / y_j.
    let min_weight = weights.iter().copied().fold(f64::INFINITY, f64::min);
    let slack = residual / min_weight;
    let tolerances = ValidationTolerances {
        orthant: ValidationTolerances::default().orthant + slack,
        eps_wall: options.eps_wall,
        defect_floor: 1e-10 + 10.0 * slack,
        ..ValidationTolerances::default()
    };
    let validation = validate_with(&prob.matrix, &prob.driver, &g, &m, &tolerances)?;
    Ok(SkorokhodSolution {
        complementarity_defect: validation.complementarity_defect.clone(),
        g,
        m,
        residual,
        iterations,
        validation,
    })
}
