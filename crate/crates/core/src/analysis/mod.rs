//! Post-processing of trajectories: synchronization time, divergence of
//! nearby trajectories, empirical convergence order, and the instability
//! onset order of an equilibrium.

mod convergence;
mod mittag_leffler;

pub use convergence::{
    convergence_order, power_law_convergence, ConvergenceReport, PowerLawForm, PowerLawProblem,
};
pub use mittag_leffler::{mittag_leffler, predicted_error, ML_DOMAIN};

use std::f64::consts::FRAC_2_PI;

use serde::Serialize;
use thiserror::Error;

use crate::control::{eigen3, is_zero_eigenvalue};
use crate::matrix::{self, Matrix3};
use crate::solver::{SolveError, Trajectory};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("order {value} is outside (0, 1]")]
    InvalidOrder { value: f64 },
    #[error("argument {z} is outside the supported Mittag-Leffler domain |z| <= 30")]
    DomainExceeded { z: f64 },
    #[error("Mittag-Leffler series lost precision at q = {q}, z = {z} (error estimate {estimate:e}, value {value:e})")]
    PrecisionLoss { q: f64, z: f64, estimate: f64, value: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("trajectory has no synchronization error columns")]
    MissingErrors,
    #[error("trajectories are not on the same grid")]
    GridMismatch,
    #[error("trajectories start at the same state")]
    ZeroInitialSeparation,
    #[error("matrix has a zero eigenvalue; its argument is undefined")]
    DegenerateEigenvalue,
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyncSummary {
    /// First grid time from which `max_i |e_i| < tol` holds for good.
    pub sync_time: Option<f64>,
    pub final_errors: [f64; 3],
    pub tol: f64,
}

/// Earliest grid time after which the max-norm error stays below `tol`.
pub fn sync_time(traj: &Trajectory, tol: f64) -> Result<SyncSummary, AnalysisError> {
    if !(tol > 0.0) {
        return Err(AnalysisError::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    let errors = traj.errors.as_ref().ok_or(AnalysisError::MissingErrors)?;
    let last = *errors.last().ok_or(AnalysisError::MissingErrors)?;
    // NaN compares false, so it counts as an excursion.
    let within = |e: &[f64; 3]| e.iter().all(|v| v.abs() < tol);
    let first_ok = match errors.iter().rposition(|e| !within(e)) {
        None => Some(0),
        Some(j) if j + 1 < errors.len() => Some(j + 1),
        Some(_) => None,
    };
    Ok(SyncSummary {
        sync_time: first_ok.map(|j| traj.times[j]),
        final_errors: last,
        tol,
    })
}

/// `max_t ‖a(t) - b(t)‖ / ‖a(0) - b(0)‖`, Euclidean norm.
pub fn divergence_factor(a: &Trajectory, b: &Trajectory) -> Result<f64, AnalysisError> {
    if a.len() != b.len() || a.dim != b.dim || a.h.to_bits() != b.h.to_bits() || a.is_empty() {
        return Err(AnalysisError::GridMismatch);
    }
    let dist = |x: &[f64], y: &[f64]| -> f64 {
        x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
    };
    let d0 = dist(a.state(0), b.state(0));
    if d0 == 0.0 {
        return Err(AnalysisError::ZeroInitialSeparation);
    }
    let max = a.states().zip(b.states()).map(|(x, y)| dist(x, y)).fold(0.0, f64::max);
    Ok(max / d0)
}

/// Largest order for which the equilibrium with Jacobian `j` is still
/// Matignon stable: `q* = (2/π) min |arg λ|`, clamped to `[0, 2]`.
///
/// Instability for `q > q*` is necessary for chaos, not sufficient.
pub fn chaos_threshold(j: &Matrix3) -> Result<f64, AnalysisError> {
    if !matrix::is_finite(j) {
        return Err(AnalysisError::InvalidArgument("matrix has non-finite entries".into()));
    }
    let eig = eigen3(j);
    if eig.iter().any(|l| is_zero_eigenvalue(*l, j)) {
        return Err(AnalysisError::DegenerateEigenvalue);
    }
    let min_arg = eig.iter().map(|l| l.arg().abs()).fold(f64::INFINITY, f64::min);
    Ok((FRAC_2_PI * min_arg).clamp(0.0, 2.0))
}
