//! Matignon's stability test for linear fractional systems `D^q x = M x`:
//! asymptotically stable when every eigenvalue satisfies `|arg λ| > q π / 2`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::Serialize;

use super::eigen3;
use crate::matrix::{self, Matrix3};
use crate::system::FractionalOrders;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    /// Sorted by real, then imaginary part; serialized as `[re, im]`.
    pub eigenvalues: [Complex64; 3],
    /// `min |arg λ|` over the spectrum, principal argument in (-π, π].
    pub min_arg: f64,
    /// `q_i π / 2` for each order.
    pub thresholds: [f64; 3],
    pub satisfied_per_order: [bool; 3],
    pub satisfied: bool,
    pub note: Option<String>,
}

/// True when `λ` is indistinguishable from zero relative to the matrix scale.
pub fn is_zero_eigenvalue(lambda: Complex64, m: &Matrix3) -> bool {
    lambda.norm() <= 1e-12 * matrix::max_abs(m).max(1.0)
}

pub fn matignon_check(m: &Matrix3, orders: &FractionalOrders) -> StabilityReport {
    let eigenvalues = eigen3(m);
    let degenerate = eigenvalues.iter().any(|l| is_zero_eigenvalue(*l, m));
    let min_arg = if degenerate {
        0.0
    } else {
        eigenvalues.iter().map(|l| l.arg().abs()).fold(f64::INFINITY, f64::min)
    };
    let q = orders.as_array();
    let thresholds = q.map(|qi| qi * FRAC_PI_2);
    let satisfied_per_order = thresholds.map(|th| !degenerate && min_arg > th);
    StabilityReport {
        eigenvalues,
        min_arg,
        thresholds,
        satisfied_per_order,
        satisfied: satisfied_per_order.iter().all(|&s| s),
        note: degenerate
            .then(|| "zero eigenvalue: argument undefined, criterion not satisfied".to_string()),
    }
}
