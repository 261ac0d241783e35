//! Fractional Adams–Bashforth–Moulton predictor–corrector for Caputo systems.
//!
//! For a component with order `q`, step `h` and history `f_j = f(t_j, y_j)`:
//!
//! ```text
//! predictor  yP_{n+1} = y0 + h^q / Γ(q+1) · Σ_j b_{j,n+1} f_j
//! corrector  y_{n+1}  = y0 + h^q / Γ(q+2) · [ f(t_{n+1}, yP_{n+1}) + Σ_j a_{j,n+1} f_j ]
//! ```
//!
//! One corrector evaluation per step (PECE). Every component carries its own
//! order, so incommensurate systems are handled component by component, each
//! history sum using only that component's derivative values.

mod weights;

pub use weights::{weights_a, weights_b};

use serde::Serialize;
use thiserror::Error;

use crate::special::gamma;
use crate::system::VectorField;
use weights::{corrector_first, WeightTable};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("fractional order q{index} = {value} is outside (0, 1]")]
    InvalidOrder { index: usize, value: f64 },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: field has {field}, orders {orders}, initial state {initial}")]
    DimensionMismatch { field: usize, orders: usize, initial: usize },
    #[error("initial state is not finite")]
    NonFiniteInitial,
    #[error("state became non-finite at step {step}")]
    NonFiniteState { step: usize, partial: Box<Trajectory> },
}

/// How much of the history convolution is retained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryWindow {
    #[default]
    FullHistory,
    /// Keep only the most recent `k` history points (short-memory principle).
    LastK(usize),
}

impl MemoryWindow {
    /// First history index that enters the sums for step `n -> n+1`.
    fn first_index(&self, n: usize) -> usize {
        match *self {
            MemoryWindow::FullHistory => 0,
            MemoryWindow::LastK(k) => (n + 1).saturating_sub(k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    pub h: f64,
    pub n_steps: usize,
    pub memory: MemoryWindow,
}

impl SolverConfig {
    pub fn new(h: f64, n_steps: usize) -> Result<Self, SolveError> {
        Self::with_memory(h, n_steps, MemoryWindow::FullHistory)
    }

    pub fn with_memory(h: f64, n_steps: usize, memory: MemoryWindow) -> Result<Self, SolveError> {
        let cfg = Self { h, n_steps, memory };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Step count `round(t_end / h)`.
    pub fn for_horizon(h: f64, t_end: f64, memory: MemoryWindow) -> Result<Self, SolveError> {
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(SolveError::InvalidConfig(format!("t_end must be positive, got {t_end}")));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(SolveError::InvalidConfig(format!("h must be positive, got {h}")));
        }
        Self::with_memory(h, (t_end / h).round() as usize, memory)
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(SolveError::InvalidConfig(format!("h must be positive, got {}", self.h)));
        }
        if self.n_steps == 0 {
            return Err(SolveError::InvalidConfig("n_steps must be at least 1".into()));
        }
        if self.memory == MemoryWindow::LastK(0) {
            return Err(SolveError::InvalidConfig("memory window k must be at least 1".into()));
        }
        Ok(())
    }

    pub fn t_end(&self) -> f64 {
        self.n_steps as f64 * self.h
    }
}

/// A solution on the uniform grid `t_j = j h`, states stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub h: f64,
    pub dim: usize,
    pub times: Vec<f64>,
    states: Vec<f64>,
    /// Synchronization errors `slave - master`, one row per grid point.
    pub errors: Option<Vec<[f64; 3]>>,
    /// Control inputs applied to the slave, one row per grid point.
    pub controls: Option<Vec<[f64; 3]>>,
}

impl Trajectory {
    pub fn new(h: f64, dim: usize) -> Self {
        Self { h, dim, times: Vec::new(), states: Vec::new(), errors: None, controls: None }
    }

    pub fn push(&mut self, state: &[f64]) {
        debug_assert_eq!(state.len(), self.dim);
        self.times.push(self.times.len() as f64 * self.h);
        self.states.extend_from_slice(state);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, j: usize) -> &[f64] {
        &self.states[j * self.dim..(j + 1) * self.dim]
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.states.chunks_exact(self.dim)
    }

    pub fn last_state(&self) -> Option<&[f64]> {
        self.states.chunks_exact(self.dim).last()
    }

    /// Values of one component along the grid.
    pub fn component(&self, i: usize) -> Vec<f64> {
        self.states().map(|s| s[i]).collect()
    }
}

/// Dot product with the weight row read backwards (weight lag 0 meets the
/// newest history entry). Four partial sums, combined in fixed order.
#[inline]
fn lagged_dot(history: &[f64], lag_weights: &[f64]) -> f64 {
    debug_assert_eq!(history.len(), lag_weights.len());
    let n = history.len();
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let j = 4 * c;
        for l in 0..4 {
            acc[l] += history[j + l] * lag_weights[n - 1 - (j + l)];
        }
    }
    let mut tail = 0.0;
    for j in 4 * chunks..n {
        tail += history[j] * lag_weights[n - 1 - j];
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail
}

/// Integrates `D^{q_i} y_i = f_i(t, y)` from `y0` over `cfg.n_steps` steps.
///
/// On blow-up the error carries the trajectory up to the last finite state.
pub fn integrate<F>(
    field: &F,
    orders: &[f64],
    y0: &[f64],
    cfg: &SolverConfig,
) -> Result<Trajectory, SolveError>
where
    F: VectorField + ?Sized,
{
    cfg.validate()?;
    let d = field.dim();
    if orders.len() != d || y0.len() != d {
        return Err(SolveError::DimensionMismatch {
            field: d,
            orders: orders.len(),
            initial: y0.len(),
        });
    }
    for (i, &q) in orders.iter().enumerate() {
        if !(q > 0.0 && q <= 1.0) {
            return Err(SolveError::InvalidOrder { index: i + 1, value: q });
        }
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(SolveError::NonFiniteInitial);
    }

    // One weight table per distinct order.
    let mut tables: Vec<WeightTable> = Vec::new();
    let mut table_of = Vec::with_capacity(d);
    for &q in orders {
        let idx = match tables.iter().position(|t| t.q.to_bits() == q.to_bits()) {
            Some(i) => i,
            None => {
                tables.push(WeightTable::new(q));
                tables.len() - 1
            }
        };
        table_of.push(idx);
    }
    let h = cfg.h;
    let pred_scale: Vec<f64> = orders.iter().map(|&q| h.powf(q) / gamma(q + 1.0)).collect();
    let corr_scale: Vec<f64> = orders.iter().map(|&q| h.powf(q) / gamma(q + 2.0)).collect();

    let n_steps = cfg.n_steps;
    let mut traj = Trajectory::new(h, d);
    traj.times.reserve(n_steps + 1);
    traj.states.reserve((n_steps + 1) * d);
    traj.push(y0);

    // Derivative history, one column per component.
    let mut hist: Vec<Vec<f64>> = vec![Vec::with_capacity(n_steps + 1); d];
    let mut f = vec![0.0; d];
    field.eval(0.0, y0, &mut f);
    for i in 0..d {
        hist[i].push(f[i]);
    }

    let mut y_pred = vec![0.0; d];
    let mut f_pred = vec![0.0; d];
    let mut corr_hist = vec![0.0; d];
    let mut y_next = vec![0.0; d];

    for n in 0..n_steps {
        let lo = cfg.memory.first_index(n);
        let max_lag = n - lo;
        for t in tables.iter_mut() {
            t.ensure(max_lag);
        }
        for i in 0..d {
            let tab = &tables[table_of[i]];
            let col = &hist[i][lo..=n];
            y_pred[i] = y0[i] + pred_scale[i] * lagged_dot(col, &tab.b[..=max_lag]);
            corr_hist[i] = if lo == 0 {
                corrector_first(tab.q, n) * hist[i][0] + lagged_dot(&hist[i][1..=n], &tab.a[..n])
            } else {
                lagged_dot(col, &tab.a[..=max_lag])
            };
        }
        let t_next = (n + 1) as f64 * h;
        field.eval(t_next, &y_pred, &mut f_pred);
        for i in 0..d {
            y_next[i] = y0[i] + corr_scale[i] * (f_pred[i] + corr_hist[i]);
        }
        if y_next.iter().any(|v| !v.is_finite()) {
            return Err(SolveError::NonFiniteState { step: n + 1, partial: Box::new(traj) });
        }
        traj.push(&y_next);
        field.eval(t_next, &y_next, &mut f);
        for i in 0..d {
            hist[i].push(f[i]);
        }
    }
    Ok(traj)
}

/// Integer-order (`q = 1`) predictor–corrector written on the integral form
/// `y(t) = y0 + ∫ f`: left-rectangle (Euler) predictor, trapezoidal corrector,
/// running sums instead of weight tables. Used as an equivalence oracle for
/// [`integrate`] with unit orders.
pub fn integrate_classical_pece<F>(
    field: &F,
    y0: &[f64],
    cfg: &SolverConfig,
) -> Result<Trajectory, SolveError>
where
    F: VectorField + ?Sized,
{
    cfg.validate()?;
    let d = field.dim();
    if y0.len() != d {
        return Err(SolveError::DimensionMismatch { field: d, orders: d, initial: y0.len() });
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(SolveError::NonFiniteInitial);
    }
    let h = cfg.h;
    let mut traj = Trajectory::new(h, d);
    traj.push(y0);

    let mut f = vec![0.0; d];
    field.eval(0.0, y0, &mut f);
    let f0 = f.clone();
    // rect = Σ_{j<=n} f_j
    let mut rect = f.clone();
    let mut y_pred = vec![0.0; d];
    let mut f_pred = vec![0.0; d];
    let mut y_next = vec![0.0; d];
    for n in 0..cfg.n_steps {
        for i in 0..d {
            y_pred[i] = y0[i] + h * rect[i];
        }
        let t_next = (n + 1) as f64 * h;
        field.eval(t_next, &y_pred, &mut f_pred);
        for i in 0..d {
            // trapezoid: h/2 (f_0 + 2 Σ_{1..n} f_j + fP) = h (rect - f_0/2 + fP/2)
            y_next[i] = y0[i] + h * (rect[i] - 0.5 * f0[i] + 0.5 * f_pred[i]);
        }
        if y_next.iter().any(|v| !v.is_finite()) {
            return Err(SolveError::NonFiniteState { step: n + 1, partial: Box::new(traj) });
        }
        traj.push(&y_next);
        field.eval(t_next, &y_next, &mut f);
        for i in 0..d {
            rect[i] += f[i];
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{FnField, SystemDef};
    use proptest::prelude::*;

    fn decay() -> FnField<impl Fn(f64, &[f64], &mut [f64])> {
        FnField::new(1, |_t, y: &[f64], dy: &mut [f64]| dy[0] = -y[0])
    }

    #[test]
    fn zero_field_is_constant() {
        let y0 = [5.0, -1.0, 2.0];
        let cfg = SolverConfig::new(0.1, 50).unwrap();
        let traj = integrate(&SystemDef::Zero(3), &[0.3, 0.7, 1.0], &y0, &cfg).unwrap();
        assert_eq!(traj.len(), 51);
        assert!(traj.states().all(|s| s == y0));
        let classical = integrate_classical_pece(&SystemDef::Zero(3), &y0, &cfg).unwrap();
        assert!(classical.states().all(|s| s == y0));
    }

    #[test]
    fn grid_is_uniform_and_starts_at_initial_state() {
        let cfg = SolverConfig::new(0.0005, 40).unwrap();
        let y0 = [2.0, -1.0, 1.0];
        let traj =
            integrate(&SystemDef::Financial(Default::default()), &[0.99; 3], &y0, &cfg).unwrap();
        assert_eq!(traj.state(0), &y0);
        assert_eq!(traj.times[0], 0.0);
        for (j, t) in traj.times.iter().enumerate() {
            assert_eq!(*t, j as f64 * 0.0005);
        }
    }

    #[test]
    fn power_law_forcing_reaches_t4() {
        let q = 0.5;
        let c = gamma(5.0) / gamma(5.0 - q);
        let field = FnField::new(1, move |t, _y: &[f64], dy: &mut [f64]| dy[0] = c * t.powf(4.0 - q));
        let cfg = SolverConfig::new(1.0 / 64.0, 64).unwrap();
        let traj = integrate(&field, &[q], &[0.0], &cfg).unwrap();
        let end = traj.last_state().unwrap()[0];
        assert!((end - 1.0).abs() < 5e-3, "y(1) = {end}");
    }

    #[test]
    fn unit_order_decay() {
        let cfg = SolverConfig::new(0.01, 100).unwrap();
        let traj = integrate(&decay(), &[1.0], &[1.0], &cfg).unwrap();
        let end = traj.last_state().unwrap()[0];
        assert!((end - (-1.0f64).exp()).abs() < 1e-3);
        let classical = integrate_classical_pece(&decay(), &[1.0], &cfg).unwrap();
        assert!((classical.last_state().unwrap()[0] - (-1.0f64).exp()).abs() < 1e-3);
        for (a, b) in traj.states().zip(classical.states()) {
            assert!((a[0] - b[0]).abs() <= 1e-12);
        }
    }

    #[test]
    fn first_step_on_constant_field() {
        for &q in &[0.1, 0.5, 0.99, 1.0] {
            let c = 3.7;
            let field = FnField::new(1, move |_t, _y: &[f64], dy: &mut [f64]| dy[0] = c);
            let h = 0.01;
            let traj = integrate(&field, &[q], &[1.5], &SolverConfig::new(h, 1).unwrap()).unwrap();
            let expect = 1.5 + c * h.powf(q) / gamma(q + 1.0);
            assert!((traj.state(1)[0] - expect).abs() < 1e-14, "q = {q}");
        }
    }

    #[test]
    fn short_memory_with_full_window_is_bit_identical() {
        let sys = SystemDef::Volta(Default::default());
        let y0 = [8.0, 2.0, 3.0];
        let full = SolverConfig::new(0.001, 300).unwrap();
        let window = SolverConfig::with_memory(0.001, 300, MemoryWindow::LastK(301)).unwrap();
        let a = integrate(&sys, &[0.98, 0.99, 0.97], &y0, &full).unwrap();
        let b = integrate(&sys, &[0.98, 0.99, 0.97], &y0, &window).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn short_memory_truncates() {
        let sys = SystemDef::Financial(Default::default());
        let y0 = [2.0, -1.0, 1.0];
        let full = SolverConfig::new(0.01, 200).unwrap();
        let window = SolverConfig::with_memory(0.01, 200, MemoryWindow::LastK(50)).unwrap();
        let a = integrate(&sys, &[0.9; 3], &y0, &full).unwrap();
        let b = integrate(&sys, &[0.9; 3], &y0, &window).unwrap();
        // identical while the window still covers the whole history
        assert_eq!(a.state(49), b.state(49));
        assert_ne!(a.state(200), b.state(200));
    }

    #[test]
    fn incommensurate_components_use_their_own_order() {
        // Decoupled components: each must match the scalar run with its own order.
        let field = FnField::new(2, |_t, y: &[f64], dy: &mut [f64]| {
            dy[0] = -y[0];
            dy[1] = -2.0 * y[1];
        });
        let cfg = SolverConfig::new(0.01, 100).unwrap();
        let both = integrate(&field, &[0.6, 0.9], &[1.0, 2.0], &cfg).unwrap();
        let first = integrate(
            &FnField::new(1, |_t, y: &[f64], dy: &mut [f64]| dy[0] = -y[0]),
            &[0.6],
            &[1.0],
            &cfg,
        )
        .unwrap();
        let second = integrate(
            &FnField::new(1, |_t, y: &[f64], dy: &mut [f64]| dy[0] = -2.0 * y[0]),
            &[0.9],
            &[2.0],
            &cfg,
        )
        .unwrap();
        for j in 0..both.len() {
            assert_eq!(both.state(j)[0], first.state(j)[0]);
            assert_eq!(both.state(j)[1], second.state(j)[0]);
        }
    }

    #[test]
    fn blow_up_returns_prefix() {
        let field = FnField::new(1, |_t, y: &[f64], dy: &mut [f64]| dy[0] = y[0] * y[0]);
        let cfg = SolverConfig::new(0.1, 1000).unwrap();
        match integrate(&field, &[1.0], &[10.0], &cfg) {
            Err(SolveError::NonFiniteState { step, partial }) => {
                assert_eq!(partial.len(), step);
                assert!(partial.states().all(|s| s[0].is_finite()));
            }
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = SolverConfig::new(0.1, 10).unwrap();
        assert!(matches!(
            integrate(&decay(), &[0.0], &[1.0], &cfg),
            Err(SolveError::InvalidOrder { index: 1, .. })
        ));
        assert!(matches!(
            integrate(&decay(), &[0.5, 0.5], &[1.0], &cfg),
            Err(SolveError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            integrate(&decay(), &[0.5], &[f64::NAN], &cfg),
            Err(SolveError::NonFiniteInitial)
        ));
        assert!(SolverConfig::new(0.0, 10).is_err());
        assert!(SolverConfig::new(0.1, 0).is_err());
        assert!(SolverConfig::with_memory(0.1, 10, MemoryWindow::LastK(0)).is_err());
        assert!(SolverConfig::for_horizon(0.1, -1.0, MemoryWindow::FullHistory).is_err());
        assert_eq!(SolverConfig::for_horizon(0.0005, 10.0, MemoryWindow::FullHistory).unwrap().n_steps, 20_000);
    }

    #[test]
    fn deterministic() {
        let sys = SystemDef::Financial(Default::default());
        let cfg = SolverConfig::new(0.005, 400).unwrap();
        let a = integrate(&sys, &[0.99; 3], &[2.0, -1.0, 1.0], &cfg).unwrap();
        let b = integrate(&sys, &[0.99; 3], &[2.0, -1.0, 1.0], &cfg).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn classical_limit_on_smooth_fields(
            k1 in -2.0..2.0f64, k2 in -2.0..2.0f64, w in 0.0..3.0f64,
            y0 in -2.0..2.0f64, z0 in -2.0..2.0f64,
        ) {
            let field = FnField::new(2, move |t, y: &[f64], dy: &mut [f64]| {
                dy[0] = k1 * y[0] + (w * t).sin() * y[1];
                dy[1] = k2 * y[1] - 0.3 * y[0] * y[0] / (1.0 + y[1] * y[1]);
            });
            let cfg = SolverConfig::new(0.01, 150).unwrap();
            let a = integrate(&field, &[1.0, 1.0], &[y0, z0], &cfg).unwrap();
            let b = integrate_classical_pece(&field, &[y0, z0], &cfg).unwrap();
            for (sa, sb) in a.states().zip(b.states()) {
                for i in 0..2 {
                    prop_assert!((sa[i] - sb[i]).abs() <= 1e-12 * (1.0 + sb[i].abs()));
                }
            }
        }
    }
}
