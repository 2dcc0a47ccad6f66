//! Brownian drivers and the restart-invariance experiment.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::ReflectionMatrix;
use crate::path::{MonotonePath, PiecewisePath};
use crate::planar::{classify, PlanarCase};
use crate::solver::{solve, SkorokhodProblem, SolveOptions};

/// Restarts whose `g` paths agree to this sup-distance count as one solution.
pub const AGREEMENT_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrownianSpec {
    pub x0: Vec<f64>,
    pub horizon: f64,
    pub steps: usize,
    pub seed: u64,
}

/// Standard normals by the Box-Muller transform on ChaCha20 uniforms, both
/// outputs of each pair used in order.
struct Gaussian {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl Gaussian {
    fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 - u lies in (0, 1], keeping the logarithm finite
        let u1 = 1.0 - self.rng.random::<f64>();
        let u2 = self.rng.random::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        let (sin, cos) = (TAU * u2).sin_cos();
        self.spare = Some(r * sin);
        r * cos
    }
}

/// `x0 + W` sampled on a uniform grid, `W` a standard Brownian motion.
pub fn brownian_path(spec: &BrownianSpec) -> Result<PiecewisePath> {
    let d = spec.x0.len();
    if d == 0 {
        return Err(Error::Dimension("x0 is empty".into()));
    }
    if spec.x0.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::Domain(format!("x0 must lie in the orthant, got {:?}", spec.x0)));
    }
    if spec.steps == 0 || !(spec.horizon > 0.0) || !spec.horizon.is_finite() {
        return Err(Error::Domain(format!(
            "need steps >= 1 and a positive horizon, got {} and {}",
            spec.steps, spec.horizon
        )));
    }
    let dt = spec.horizon / spec.steps as f64;
    let scale = dt.sqrt();
    let mut normal = Gaussian::new(spec.seed);
    let times: Vec<f64> = (0..=spec.steps).map(|k| k as f64 * dt).collect();
    let mut values = Vec::with_capacity(times.len() * d);
    values.extend_from_slice(&spec.x0);
    for k in 1..=spec.steps {
        for j in 0..d {
            values.push(values[(k - 1) * d + j] + scale * normal.next());
        }
    }
    PiecewisePath::from_flat(d, times, values)
}

/// Random starting iterate for restart `index`; restart 0 is the zero path.
pub fn random_monotone(times: &[f64], d: usize, scale: f64, seed: u64, index: u64) -> Result<MonotonePath> {
    if index == 0 {
        return MonotonePath::zeros(d, times.to_vec());
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut values = vec![0.0; d];
    let mut level = vec![0.0; d];
    for _ in 1..times.len() {
        for l in level.iter_mut() {
            *l += rng.random::<f64>();
        }
        values.extend_from_slice(&level);
    }
    let total = level.iter().copied().fold(0.0, f64::max).max(1.0);
    let values = values.into_iter().map(|v| scale * v / total).collect();
    MonotonePath::try_from(PiecewisePath::from_flat(d, times.to_vec(), values)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    /// Every restart converged, validated, and produced the same `g`.
    Pass,
    /// Converged restarts disagree, or some restart failed.
    Fail,
    /// `rho(|Q|) > 1`: the iteration carries no guarantee, so agreement
    /// between restarts proves nothing.
    NoGuarantee,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub restart: usize,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
    pub validation_passed: bool,
    pub complementarity_defect: Option<Vec<f64>>,
    /// `g` at the horizon.
    pub g_final: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub note: String,
    pub seed: u64,
    pub rho: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub case_2d: Option<PlanarCase>,
    pub runs: Vec<RunSummary>,
    /// Over pairs of converged restarts; `None` with fewer than two.
    pub max_pairwise_g_distance: Option<f64>,
    pub agreement_tol: f64,
    pub verdict: Verdict,
}

const NOTE: &str = "restart invariance on one sampled path: agreement of the computed \
solutions is a numerical shadow of pathwise uniqueness, not a proof of the almost-sure statement";

/// Solves with `restarts` starting iterates (the zero path plus random
/// monotone paths) and compares the resulting `g`. Restarts run in parallel;
/// results are keyed by restart index.
pub fn uniqueness_experiment(
    matrix: &ReflectionMatrix,
    driver: &PiecewisePath,
    restarts: usize,
    seed: u64,
    options: &SolveOptions,
    allow_supercritical: bool,
) -> Result<ExperimentReport> {
    if restarts == 0 {
        return Err(Error::Domain("need at least one restart".into()));
    }
    let problem = if allow_supercritical {
        SkorokhodProblem::allow_supercritical(matrix.clone(), driver.clone())?
    } else {
        SkorokhodProblem::new(matrix.clone(), driver.clone())?
    };
    let scale = driver.sup_norm().max(1.0);

    let outcomes: Vec<(RunSummary, Option<PiecewisePath>)> = (0..restarts)
        .into_par_iter()
        .map(|restart| {
            let initial = random_monotone(driver.times(), driver.dim(), scale, seed, restart as u64)?;
            let opts = SolveOptions {
                initial: Some(initial),
                ..options.clone()
            };
            Ok(match solve(&problem, &opts) {
                Ok(sol) => (
                    RunSummary {
                        restart,
                        converged: true,
                        iterations: sol.iterations,
                        residual: sol.residual,
                        validation_passed: sol.validation.passed,
                        complementarity_defect: Some(sol.complementarity_defect.clone()),
                        g_final: Some(sol.g.last().to_vec()),
                        error: None,
                    },
                    Some(sol.g),
                ),
                Err(err @ Error::Convergence { residual, iterations, .. }) => (
                    RunSummary {
                        restart,
                        converged: false,
                        iterations,
                        residual,
                        validation_passed: false,
                        complementarity_defect: None,
                        g_final: None,
                        error: Some(err.to_string()),
                    },
                    None,
                ),
                Err(err) => return Err(err),
            })
        })
        .collect::<Result<_>>()?;

    let paths: Vec<&PiecewisePath> = outcomes.iter().filter_map(|(_, g)| g.as_ref()).collect();
    let mut max_distance: Option<f64> = None;
    for a in 0..paths.len() {
        for b in a + 1..paths.len() {
            let dist = paths[a].sup_distance(paths[b])?;
            max_distance = Some(max_distance.map_or(dist, |m| m.max(dist)));
        }
    }
    let runs: Vec<RunSummary> = outcomes.into_iter().map(|(run, _)| run).collect();

    let all_good = runs.iter().all(|r| r.converged && r.validation_passed);
    let verdict = if problem.is_supercritical() {
        Verdict::NoGuarantee
    } else if all_good && max_distance.is_none_or(|m| m < AGREEMENT_TOL) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let case_2d = (matrix.dim() == 2).then(|| classify(matrix.r()[(0, 1)], matrix.r()[(1, 0)]));
    Ok(ExperimentReport {
        note: NOTE.into(),
        seed,
        rho: problem.spectral().rho,
        case_2d,
        runs,
        max_pairwise_g_distance: max_distance,
        agreement_tol: AGREEMENT_TOL,
        verdict,
    })
}
