//! Empirical convergence order under step halving.

use serde::Serialize;

use super::AnalysisError;
use crate::solver::{integrate, MemoryWindow, SolverConfig};
use crate::special::gamma;
use crate::system::{FnField, VectorField};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    /// Strictly halving step sizes.
    pub step_sizes: Vec<f64>,
    /// Max-norm terminal errors, one per step size.
    pub errors: Vec<f64>,
    /// `log2(E_k / E_{k+1})` for consecutive levels.
    pub orders: Vec<f64>,
}

impl ConvergenceReport {
    pub fn from_errors(step_sizes: Vec<f64>, errors: Vec<f64>) -> Result<Self, AnalysisError> {
        if step_sizes.len() < 2 || step_sizes.len() != errors.len() {
            return Err(AnalysisError::InvalidArgument(
                "need at least two levels with one error per step size".into(),
            ));
        }
        for w in step_sizes.windows(2) {
            if !(w[0] > 0.0 && (w[0] / w[1] - 2.0).abs() < 1e-12) {
                return Err(AnalysisError::InvalidArgument(format!(
                    "step sizes must halve: {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        let orders = errors.windows(2).map(|e| (e[0] / e[1]).log2()).collect();
        Ok(Self { step_sizes, errors, orders })
    }
}

/// Integrates at `h0, h0/2, ...` (`levels` runs) to `t_end` and compares the
/// terminal state against `exact(t_end)`.
pub fn convergence_order<F, E>(
    field: &F,
    orders: &[f64],
    y0: &[f64],
    t_end: f64,
    exact: E,
    h0: f64,
    levels: usize,
) -> Result<ConvergenceReport, AnalysisError>
where
    F: VectorField + ?Sized,
    E: Fn(f64) -> Vec<f64>,
{
    if levels < 2 {
        return Err(AnalysisError::InvalidArgument(format!("levels must be >= 2, got {levels}")));
    }
    let target = exact(t_end);
    let mut step_sizes = Vec::with_capacity(levels);
    let mut errors = Vec::with_capacity(levels);
    let mut h = h0;
    for _ in 0..levels {
        let cfg = SolverConfig::for_horizon(h, t_end, MemoryWindow::FullHistory)?;
        let traj = integrate(field, orders, y0, &cfg)?;
        let last = traj.last_state().expect("trajectory holds the initial state");
        let err = last.iter().zip(&target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        step_sizes.push(h);
        errors.push(err);
        h /= 2.0;
    }
    ConvergenceReport::from_errors(step_sizes, errors)
}

/// Which right-hand side carries the exact solution `y = t⁴`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerLawForm {
    /// `D^q y = Γ(5)/Γ(5-q) t^(4-q)`. The right-hand side ignores `y`, so the
    /// scheme reduces to product-trapezoid quadrature and converges at
    /// second order for every `q`.
    Forcing,
    /// `D^q y = Γ(5)/Γ(5-q) t^(4-q) + t⁴ - y`. Same solution, but the
    /// predictor error now feeds the corrector, which exposes the
    /// `min(2, 1+q)` order of the predictor–corrector pair.
    Coupled,
}

/// Scalar test problem on `[0, 1]` with `y(0) = 0` and exact solution `t⁴`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawProblem {
    pub q: f64,
    pub form: PowerLawForm,
}

impl PowerLawProblem {
    pub const T_END: f64 = 1.0;

    pub fn field(&self) -> impl VectorField {
        let (q, form) = (self.q, self.form);
        let c = gamma(5.0) / gamma(5.0 - q);
        FnField::new(1, move |t: f64, y: &[f64], dy: &mut [f64]| {
            let forcing = c * t.powf(4.0 - q);
            dy[0] = match form {
                PowerLawForm::Forcing => forcing,
                PowerLawForm::Coupled => forcing + t.powi(4) - y[0],
            };
        })
    }

    /// Order the predictor–corrector is expected to reach on this problem.
    pub fn expected_order(&self) -> f64 {
        match self.form {
            PowerLawForm::Forcing => 2.0,
            PowerLawForm::Coupled => (1.0 + self.q).min(2.0),
        }
    }
}

pub fn power_law_convergence(
    problem: PowerLawProblem,
    h0: f64,
    levels: usize,
) -> Result<ConvergenceReport, AnalysisError> {
    let field = problem.field();
    convergence_order(
        &field,
        &[problem.q],
        &[0.0],
        PowerLawProblem::T_END,
        |t| vec![t.powi(4)],
        h0,
        levels,
    )
}
