//! Master–slave synchronization of the financial (master) and Volta (slave)
//! systems by nonlinear control.
//!
//! The synchronization error is `e = slave - master`. Two controllers are
//! provided:
//!
//! * [`Controller::Literal`] transcribes the published control law term by
//!   term, with linear feedback `v = A e`.
//! * [`Controller::Exact`] cancels the vector-field mismatch outright,
//!   `u = F(master) - G(slave) + diag(λ) e`, which leaves the error with the
//!   linear dynamics `D^q e = diag(λ) e`.
//!
//! The literal law does not reduce the error system to `D^q e = -e` in
//! general: subtracting the master equations from the slave equations yields
//! bilinear terms it does not cancel, so its first error component keeps a
//! residual drive. Both are kept so the two can be compared numerically.

mod eigen;
mod stability;

pub use eigen::{characteristic_residual, eigen3};
pub use stability::{is_zero_eigenvalue, matignon_check, StabilityReport};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{self, Matrix3};
use crate::solver::Trajectory;
use crate::system::{financial_rhs, volta_rhs, FinancialParams, State3, VectorField, VoltaParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("gain matrix has a non-finite entry at ({row}, {col})")]
    NonFiniteGain { row: usize, col: usize },
    #[error("error-dynamics rate λ{index} = {value} must be negative")]
    InvalidGain { index: usize, value: f64 },
}

/// Constant feedback matrix `A` in `v = A e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainMatrix(Matrix3);

impl GainMatrix {
    pub fn new(entries: Matrix3) -> Result<Self, ControlError> {
        for (row, r) in entries.iter().enumerate() {
            if let Some(col) = r.iter().position(|v| !v.is_finite()) {
                return Err(ControlError::NonFiniteGain { row, col });
            }
        }
        Ok(Self(entries))
    }

    pub fn entries(&self) -> &Matrix3 {
        &self.0
    }
}

/// The gain that turns the linear error part into `-I`:
/// `[[0, a, -1], [b, 0, 0], [1, 0, -1 - c]]`.
pub fn gain_matrix_default(p: &VoltaParams) -> GainMatrix {
    GainMatrix([[0.0, p.a, -1.0], [p.b, 0.0, 0.0], [1.0, 0.0, -1.0 - p.c]])
}

/// Linear part of the error system before feedback.
pub fn error_base_matrix(p: &VoltaParams) -> Matrix3 {
    [[-1.0, -p.a, 1.0], [-p.b, -1.0, 0.0], [-1.0, 0.0, p.c]]
}

/// Closed-loop error matrix `base(p) + A`.
pub fn closed_loop_error_matrix(gain: &GainMatrix, p: &VoltaParams) -> Matrix3 {
    matrix::add(&error_base_matrix(p), gain.entries())
}

/// The published nonlinear control law with `v = A (slave - master)`.
pub fn control_literal(
    master: &State3,
    slave: &State3,
    fp: &FinancialParams,
    vp: &VoltaParams,
    gain: &GainMatrix,
) -> [f64; 3] {
    let [x1, y1, z1] = master.0;
    let [x2, y2, z2] = slave.0;
    let v = matrix::mul_vec(gain.entries(), &slave.sub(master).0);
    [
        -(fp.alpha - 1.0) * x1 + (x1 + vp.a) * y1 + (1.0 + y2) + v[0],
        -(fp.beta - 1.0) * y1 + (vp.b - x1) * x1 + x2 * z2 + 1.0 + v[1],
        -(y2 + 1.0) * x2 - (vp.c + fp.gamma) * z1 - 1.0 + v[2],
    ]
}

fn check_rates(lambda: &[f64; 3]) -> Result<(), ControlError> {
    match lambda.iter().position(|l| !(*l < 0.0)) {
        Some(i) => Err(ControlError::InvalidGain { index: i + 1, value: lambda[i] }),
        None => Ok(()),
    }
}

/// Exact-cancellation control: `u = F(master) - G(slave) + diag(λ) e`.
pub fn control_exact(
    master: &State3,
    slave: &State3,
    fp: &FinancialParams,
    vp: &VoltaParams,
    lambda: &[f64; 3],
) -> Result<[f64; 3], ControlError> {
    check_rates(lambda)?;
    Ok(exact_unchecked(master, slave, fp, vp, lambda))
}

fn exact_unchecked(
    master: &State3,
    slave: &State3,
    fp: &FinancialParams,
    vp: &VoltaParams,
    lambda: &[f64; 3],
) -> [f64; 3] {
    let f = financial_rhs(master, fp).0;
    let g = volta_rhs(slave, vp).0;
    let e = slave.sub(master).0;
    [
        f[0] - g[0] + lambda[0] * e[0],
        f[1] - g[1] + lambda[1] * e[1],
        f[2] - g[2] + lambda[2] * e[2],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerMode {
    Literal,
    Exact,
}

/// A controller together with its tuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Controller {
    Literal { gain: GainMatrix },
    Exact { lambda: [f64; 3] },
}

impl Controller {
    pub fn exact(lambda: [f64; 3]) -> Result<Self, ControlError> {
        check_rates(&lambda)?;
        Ok(Controller::Exact { lambda })
    }

    pub fn literal(gain: GainMatrix) -> Self {
        Controller::Literal { gain }
    }

    pub fn mode(&self) -> ControllerMode {
        match self {
            Controller::Literal { .. } => ControllerMode::Literal,
            Controller::Exact { .. } => ControllerMode::Exact,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledState {
    pub master: State3,
    pub slave: State3,
}

impl CoupledState {
    pub fn from_slice(y: &[f64]) -> Self {
        Self {
            master: State3([y[0], y[1], y[2]]),
            slave: State3([y[3], y[4], y[5]]),
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        let (m, s) = (self.master.0, self.slave.0);
        [m[0], m[1], m[2], s[0], s[1], s[2]]
    }

    /// `slave - master`.
    pub fn error(&self) -> State3 {
        self.slave.sub(&self.master)
    }
}

/// Derivative of the coupled state: free master, controlled slave.
pub fn coupled_rhs(
    state: &CoupledState,
    controller: &Controller,
    fp: &FinancialParams,
    vp: &VoltaParams,
) -> [f64; 6] {
    let f = financial_rhs(&state.master, fp).0;
    let g = volta_rhs(&state.slave, vp).0;
    let u = control_input(state, controller, fp, vp);
    [f[0], f[1], f[2], g[0] + u[0], g[1] + u[1], g[2] + u[2]]
}

fn control_input(
    state: &CoupledState,
    controller: &Controller,
    fp: &FinancialParams,
    vp: &VoltaParams,
) -> [f64; 3] {
    match controller {
        Controller::Literal { gain } => control_literal(&state.master, &state.slave, fp, vp, gain),
        // rates were validated when the controller was built
        Controller::Exact { lambda } => exact_unchecked(&state.master, &state.slave, fp, vp, lambda),
    }
}

/// The six dimensional master–slave system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterSlave {
    pub financial: FinancialParams,
    pub volta: VoltaParams,
    pub controller: Controller,
}

impl MasterSlave {
    pub fn new(financial: FinancialParams, volta: VoltaParams, controller: Controller) -> Self {
        Self { financial, volta, controller }
    }

    pub fn control(&self, state: &CoupledState) -> [f64; 3] {
        control_input(state, &self.controller, &self.financial, &self.volta)
    }

    /// Matrix of the linear error dynamics this controller is designed to impose.
    pub fn closed_loop_matrix(&self) -> Matrix3 {
        match &self.controller {
            Controller::Literal { gain } => closed_loop_error_matrix(gain, &self.volta),
            Controller::Exact { lambda } => matrix::diag(*lambda),
        }
    }

    /// Fills the error and control columns of a coupled trajectory.
    pub fn annotate(&self, traj: &mut Trajectory) {
        assert_eq!(traj.dim, 6, "annotate expects a coupled trajectory");
        let (errors, controls): (Vec<_>, Vec<_>) = traj
            .states()
            .map(|y| {
                let s = CoupledState::from_slice(y);
                (s.error().0, self.control(&s))
            })
            .unzip();
        traj.errors = Some(errors);
        traj.controls = Some(controls);
    }
}

impl VectorField for MasterSlave {
    fn dim(&self) -> usize {
        6
    }

    fn eval(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let s = CoupledState::from_slice(y);
        dy.copy_from_slice(&coupled_rhs(&s, &self.controller, &self.financial, &self.volta));
    }
}
