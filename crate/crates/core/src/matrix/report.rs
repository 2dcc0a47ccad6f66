use serde::{Deserialize, Serialize};

use super::{decompose, is_completely_s, spectral_data, ReflectionMatrix, MAX_ENUMERATION_DIM};
use crate::error::Result;
use crate::planar::{classify, PlanarCase};

/// JSON summary produced by `analyze`. Indices are zero-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub rho: f64,
    pub rho_qplus: f64,
    pub rho_p: f64,
    pub perron_y: Option<Vec<f64>>,
    /// `None` above the enumeration cap.
    #[serde(rename = "completely_S")]
    pub completely_s: Option<bool>,
    pub classes: Vec<Vec<usize>>,
    pub solve_order: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub case_2d: Option<PlanarCase>,
}

pub fn analyze(m: &ReflectionMatrix) -> Result<AnalysisReport> {
    let spectral = spectral_data(m)?;
    let completely_s = if m.dim() <= MAX_ENUMERATION_DIM {
        Some(is_completely_s(m)?.completely_s)
    } else {
        None
    };
    let classes = decompose(m);
    let case_2d = (m.dim() == 2).then(|| classify(m.r()[(0, 1)], m.r()[(1, 0)]));
    Ok(AnalysisReport {
        rho: spectral.rho,
        rho_qplus: spectral.rho_qplus,
        rho_p: spectral.rho_p,
        perron_y: spectral.perron_y,
        completely_s,
        classes: classes.classes,
        solve_order: classes.solve_order,
        case_2d,
    })
}
