//! The two chaotic systems, their Jacobians and the financial equilibria.
//!
//! Financial system (interest rate `x`, investment demand `y`, price index `z`):
//!
//! ```text
//! D^q1 x = z + (y - α) x
//! D^q2 y = 1 - β y - x²
//! D^q3 z = -x - γ z
//! ```
//!
//! Volta system:
//!
//! ```text
//! D^q1 x = -x - a y - z y
//! D^q2 y = -y - b x - x z
//! D^q3 z = c z + x y + 1
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::MasterSlave;
use crate::matrix::Matrix3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("fractional order q{index} = {value} is outside (0, 1]")]
    InvalidOrder { index: usize, value: f64 },
    #[error("degenerate parameters: {0}")]
    DegenerateParameters(&'static str),
    #[error("state component {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
}

/// Checks a single Caputo order.
pub fn check_order(index: usize, q: f64) -> Result<f64, SystemError> {
    if q > 0.0 && q <= 1.0 {
        Ok(q)
    } else {
        Err(SystemError::InvalidOrder { index, value: q })
    }
}

/// Per-component Caputo orders, each in (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FractionalOrders([f64; 3]);

impl FractionalOrders {
    pub fn new(q: [f64; 3]) -> Result<Self, SystemError> {
        for (i, &qi) in q.iter().enumerate() {
            check_order(i + 1, qi)?;
        }
        Ok(Self(q))
    }

    pub fn commensurate(q: f64) -> Result<Self, SystemError> {
        Self::new([q; 3])
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }

    pub fn is_commensurate(&self) -> bool {
        self.0[0] == self.0[1] && self.0[1] == self.0[2]
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::MIN, f64::max)
    }
}

/// A point in a three dimensional state space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State3(pub [f64; 3]);

impl State3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self([x, y, z])
    }

    /// Rejects states with NaN or infinite components.
    pub fn checked(v: [f64; 3]) -> Result<Self, SystemError> {
        match v.iter().position(|c| !c.is_finite()) {
            Some(index) => Err(SystemError::NonFinite { index, value: v[index] }),
            None => Ok(Self(v)),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    /// Componentwise `self - other`.
    pub fn sub(&self, other: &State3) -> State3 {
        State3([self.0[0] - other.0[0], self.0[1] - other.0[1], self.0[2] - other.0[2]])
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FinancialParams {
    /// Saving amount.
    pub alpha: f64,
    /// Cost per investment.
    pub beta: f64,
    /// Elasticity of demand.
    pub gamma: f64,
}

impl Default for FinancialParams {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 0.1, gamma: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VoltaParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for VoltaParams {
    fn default() -> Self {
        Self { a: 19.0, b: 11.0, c: 0.73 }
    }
}

pub fn financial_rhs(s: &State3, p: &FinancialParams) -> State3 {
    let [x, y, z] = s.0;
    State3([z + (y - p.alpha) * x, 1.0 - p.beta * y - x * x, -x - p.gamma * z])
}

pub fn volta_rhs(s: &State3, p: &VoltaParams) -> State3 {
    let [x, y, z] = s.0;
    State3([-x - p.a * y - z * y, -y - p.b * x - x * z, p.c * z + x * y + 1.0])
}

pub fn financial_jacobian(s: &State3, p: &FinancialParams) -> Matrix3 {
    let [x, y, _] = s.0;
    [
        [y - p.alpha, x, 1.0],
        [-2.0 * x, -p.beta, 0.0],
        [-1.0, 0.0, -p.gamma],
    ]
}

pub fn volta_jacobian(s: &State3, p: &VoltaParams) -> Matrix3 {
    let [x, y, z] = s.0;
    [
        [-1.0, -p.a - z, -y],
        [-p.b - z, -1.0, -x],
        [y, x, p.c],
    ]
}

/// All real equilibria of the financial system.
///
/// The `x = 0` branch `(0, 1/β, 0)` always exists; when `1 - β(α + 1/γ) > 0`
/// the symmetric pair `(±r, α + 1/γ, ∓r/γ)` with `r = √(1 - β(α + 1/γ))` is
/// appended, positive `x` first.
pub fn financial_equilibria(p: &FinancialParams) -> Result<Vec<State3>, SystemError> {
    if p.beta == 0.0 {
        return Err(SystemError::DegenerateParameters("beta must be non-zero"));
    }
    if p.gamma == 0.0 {
        return Err(SystemError::DegenerateParameters("gamma must be non-zero"));
    }
    let mut out = vec![State3::new(0.0, 1.0 / p.beta, 0.0)];
    let y = p.alpha + 1.0 / p.gamma;
    let disc = 1.0 - p.beta * y;
    if disc > 0.0 {
        let r = disc.sqrt();
        out.push(State3::new(r, y, -r / p.gamma));
        out.push(State3::new(-r, y, r / p.gamma));
    }
    Ok(out)
}

/// A vector field `dy/dt^q = f(t, y)` of fixed dimension.
pub trait VectorField {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]);
}

impl<T: VectorField + ?Sized> VectorField for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        (**self).eval(t, y, dy)
    }
}

/// Adapts a closure into a [`VectorField`]; handy for scalar test problems.
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> VectorField for FnField<F>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        (self.f)(t, y, dy)
    }
}

/// The closed set of systems this crate integrates.
#[derive(Debug, Clone, PartialEq)]
pub enum SystemDef {
    Financial(FinancialParams),
    Volta(VoltaParams),
    /// `f ≡ 0` in the given dimension.
    Zero(usize),
    /// Six-dimensional master (financial) / slave (Volta) pair under control.
    Coupled(MasterSlave),
}

impl SystemDef {
    pub fn name(&self) -> &'static str {
        match self {
            SystemDef::Financial(_) => "financial",
            SystemDef::Volta(_) => "volta",
            SystemDef::Zero(_) => "zero",
            SystemDef::Coupled(_) => "coupled",
        }
    }

    /// Analytic Jacobian for the three dimensional systems.
    pub fn jacobian(&self, s: &State3) -> Option<Matrix3> {
        match self {
            SystemDef::Financial(p) => Some(financial_jacobian(s, p)),
            SystemDef::Volta(p) => Some(volta_jacobian(s, p)),
            SystemDef::Zero(3) => Some(crate::matrix::ZERO),
            _ => None,
        }
    }
}

fn as_state(y: &[f64]) -> State3 {
    State3([y[0], y[1], y[2]])
}

impl VectorField for SystemDef {
    fn dim(&self) -> usize {
        match self {
            SystemDef::Financial(_) | SystemDef::Volta(_) => 3,
            SystemDef::Zero(d) => *d,
            SystemDef::Coupled(_) => 6,
        }
    }

    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        match self {
            SystemDef::Financial(p) => dy.copy_from_slice(&financial_rhs(&as_state(y), p).0),
            SystemDef::Volta(p) => dy.copy_from_slice(&volta_rhs(&as_state(y), p).0),
            SystemDef::Zero(_) => dy.fill(0.0),
            SystemDef::Coupled(ms) => ms.eval(t, y, dy),
        }
    }
}
