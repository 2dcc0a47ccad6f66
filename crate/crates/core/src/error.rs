use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("diagonal entry {index} is {value}, expected a strictly positive value")]
    Normalization { index: usize, value: f64 },

    #[error("eigen-iteration did not converge after {iterations} iterations (residual {residual:e})")]
    SpectralConvergence { residual: f64, iterations: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("linear feasibility program failed for subset {subset:?}: {message}")]
    Feasibility { subset: Vec<usize>, message: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid mismatch: {0}")]
    Grid(String),

    /// The fixed-point iteration ran out of budget. `class` is set when the
    /// failure happened inside a cascade step.
    #[error(
        "no convergence after {iterations} iterations (residual {residual:e}){}",
        class.map(|c| format!(" in class {c}")).unwrap_or_default()
    )]
    Convergence {
        residual: f64,
        iterations: usize,
        class: Option<usize>,
    },

    #[error("outside the supported regime: {0}")]
    Regime(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn in_class(self, index: usize) -> Self {
        match self {
            Error::Convergence {
                residual,
                iterations,
                ..
            } => Error::Convergence {
                residual,
                iterations,
                class: Some(index),
            },
            other => other,
        }
    }
}
