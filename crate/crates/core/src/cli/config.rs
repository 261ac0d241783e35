//! Experiment configuration: TOML schema, command-line overrides and
//! validation into runnable settings.
//!
//! Every field has a default, so an empty file (or no file) describes the
//! reference experiment: financial master at `(2, -1, 1)`, Volta slave at
//! `(8, 2, 3)`, commensurate order 0.99, step 0.0005, exact-cancellation
//! control with `λ = -1` and synchronization tolerance `1e-3`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{gain_matrix_default, Controller, ControllerMode, GainMatrix, MasterSlave};
use crate::matrix::Matrix3;
use crate::solver::{MemoryWindow, SolverConfig};
use crate::system::{
    financial_equilibria, financial_jacobian, volta_jacobian, FinancialParams, FractionalOrders,
    State3, SystemDef, VoltaParams,
};

pub const DEFAULT_H: f64 = 0.0005;
pub const DEFAULT_ORDER: f64 = 0.99;
pub const DEFAULT_TOL: f64 = 1e-3;
pub const SYNC_T_END: f64 = 10.0;
pub const SIMULATE_T_END: f64 = 50.0;
pub const FINANCIAL_INITIAL: [f64; 3] = [2.0, -1.0, 1.0];
pub const VOLTA_INITIAL: [f64; 3] = [8.0, 2.0, 3.0];

/// Invalid configuration; the message names the offending field.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

fn bad(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError { field: field.into(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Simulate,
    Synchronize,
    Stability,
}

/// Either one order shared by all components or one per component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OrdersSpec {
    Commensurate(f64),
    PerComponent([f64; 3]),
}

impl OrdersSpec {
    pub fn as_array(&self) -> [f64; 3] {
        match *self {
            OrdersSpec::Commensurate(q) => [q; 3],
            OrdersSpec::PerComponent(q) => q,
        }
    }
}

impl Default for OrdersSpec {
    fn default() -> Self {
        OrdersSpec::Commensurate(DEFAULT_ORDER)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub h: f64,
    /// Defaults to 10 for `synchronize` and 50 for `simulate`.
    pub t_end: Option<f64>,
    /// `"full"` or `"last:<k>"`.
    pub memory: String,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self { h: DEFAULT_H, t_end: None, memory: "full".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    /// `"financial"`, `"volta"` or `"zero"`.
    pub system: String,
    /// Defaults to `(2, -1, 1)` for the financial and zero systems and
    /// `(8, 2, 3)` for Volta.
    pub initial: Option<[f64; 3]>,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self { system: "financial".into(), initial: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynchronizeSection {
    pub master_initial: [f64; 3],
    pub slave_initial: [f64; 3],
    pub mode: ControllerMode,
    /// Error-dynamics rates, exact mode only. Defaults to `[-1, -1, -1]`.
    pub lambda: Option<[f64; 3]>,
    /// Feedback gain, literal mode only. Defaults to the gain that makes the
    /// linear error part `-I`.
    pub gain: Option<Matrix3>,
    pub tol: f64,
}

impl Default for SynchronizeSection {
    fn default() -> Self {
        Self {
            master_initial: FINANCIAL_INITIAL,
            slave_initial: VOLTA_INITIAL,
            mode: ControllerMode::Exact,
            lambda: None,
            gain: None,
            tol: DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilitySection {
    /// `"closed_loop"`, `"financial_jacobian"`, `"volta_jacobian"` or `"matrix"`.
    pub source: String,
    /// Jacobian evaluation point.
    pub state: Option<[f64; 3]>,
    /// Index into the financial equilibria `(0, 1/β, 0)`, `(+r, .., ..)`, `(-r, .., ..)`.
    pub equilibrium: Option<usize>,
    pub matrix: Option<Matrix3>,
}

impl Default for StabilitySection {
    fn default() -> Self {
        Self { source: "closed_loop".into(), state: None, equilibrium: None, matrix: None }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub orders: OrdersSpec,
    /// Commensurate orders to run side by side; empty means a single run at `orders`.
    pub order_sweep: Vec<f64>,
    pub financial: FinancialParams,
    pub volta: VoltaParams,
    pub solver: SolverSection,
    pub simulate: SimulateSection,
    pub synchronize: SynchronizeSection,
    pub stability: StabilitySection,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub h: Option<f64>,
    pub t_end: Option<f64>,
    pub orders: Option<String>,
    pub mode: Option<String>,
    pub memory: Option<String>,
}

pub fn load(path: Option<&Path>) -> Result<ExperimentConfig, ConfigError> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| bad("config", format!("cannot read {}: {e}", p.display())))?;
            parse(&text)
        }
    }
}

pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
    toml::from_str(text).map_err(|e| bad("config", e.to_string().trim_end().to_string()))
}

pub fn parse_memory(s: &str) -> Result<MemoryWindow, ConfigError> {
    let s = s.trim();
    if s == "full" {
        return Ok(MemoryWindow::FullHistory);
    }
    match s.strip_prefix("last:").map(str::parse::<usize>) {
        Some(Ok(k)) if k > 0 => Ok(MemoryWindow::LastK(k)),
        _ => Err(bad("solver.memory", format!("expected \"full\" or \"last:<k>\" with k >= 1, got {s:?}"))),
    }
}

pub fn format_memory(m: MemoryWindow) -> String {
    match m {
        MemoryWindow::FullHistory => "full".into(),
        MemoryWindow::LastK(k) => format!("last:{k}"),
    }
}

fn parse_orders(s: &str) -> Result<OrdersSpec, ConfigError> {
    let parts: Result<Vec<f64>, _> = s.split(',').map(|p| p.trim().parse::<f64>()).collect();
    match parts {
        Ok(v) if v.len() == 1 => Ok(OrdersSpec::Commensurate(v[0])),
        Ok(v) if v.len() == 3 => Ok(OrdersSpec::PerComponent([v[0], v[1], v[2]])),
        _ => Err(bad("orders", format!("expected q or q1,q2,q3, got {s:?}"))),
    }
}

fn check_finite(field: &str, v: &[f64]) -> Result<(), ConfigError> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(bad(format!("{field}[{i}]"), "must be finite")),
        None => Ok(()),
    }
}

fn check_matrix(field: &str, m: &Matrix3) -> Result<(), ConfigError> {
    for (i, row) in m.iter().enumerate() {
        check_finite(&format!("{field}[{i}]"), row)?;
    }
    Ok(())
}

fn check_orders(field: &str, q: [f64; 3]) -> Result<FractionalOrders, ConfigError> {
    for (i, &qi) in q.iter().enumerate() {
        if !(qi > 0.0 && qi <= 1.0) {
            return Err(bad(format!("{field}[{i}]"), format!("{qi} is outside (0, 1]")));
        }
    }
    FractionalOrders::new(q).map_err(|e| bad(field, e.to_string()))
}

/// Source of the matrix examined by the `stability` command.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSource {
    ClosedLoop,
    FinancialJacobian(State3),
    VoltaJacobian(State3),
    Explicit,
}

/// A fully validated experiment.
#[derive(Debug, Clone)]
pub struct Plan {
    /// The configuration with every default made explicit, as echoed in reports.
    pub config: ExperimentConfig,
    /// Orders of each run (several when sweeping).
    pub runs: Vec<FractionalOrders>,
    pub solver: SolverConfig,
    pub system: SystemDef,
    pub initial: Vec<f64>,
    pub tol: f64,
    pub matrix: Matrix3,
    pub matrix_source: MatrixSource,
}

impl ExperimentConfig {
    pub fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        if let Some(h) = o.h {
            self.solver.h = h;
        }
        if let Some(t) = o.t_end {
            self.solver.t_end = Some(t);
        }
        if let Some(q) = &o.orders {
            self.orders = parse_orders(q)?;
            self.order_sweep.clear();
        }
        if let Some(m) = &o.mode {
            self.synchronize.mode = match m.as_str() {
                "literal" => ControllerMode::Literal,
                "exact" => ControllerMode::Exact,
                other => return Err(bad("mode", format!("expected literal or exact, got {other:?}"))),
            };
        }
        if let Some(m) = &o.memory {
            self.solver.memory = m.clone();
        }
        Ok(())
    }

    /// Validates every field relevant to `cmd` and fills in defaults.
    pub fn resolve(mut self, cmd: CommandKind) -> Result<Plan, ConfigError> {
        check_finite("financial", &[self.financial.alpha, self.financial.beta, self.financial.gamma])?;
        check_finite("volta", &[self.volta.a, self.volta.b, self.volta.c])?;

        let base_orders = check_orders("orders", self.orders.as_array())?;
        self.orders = OrdersSpec::PerComponent(base_orders.as_array());
        let mut runs = Vec::new();
        for (i, &q) in self.order_sweep.iter().enumerate() {
            if !(q > 0.0 && q <= 1.0) {
                return Err(bad(format!("order_sweep[{i}]"), format!("{q} is outside (0, 1]")));
            }
            runs.push(check_orders("order_sweep", [q; 3])?);
        }
        if runs.is_empty() {
            runs.push(base_orders);
        }

        let h = self.solver.h;
        if !(h.is_finite() && h > 0.0) {
            return Err(bad("solver.h", format!("must be positive, got {h}")));
        }
        let default_t_end = if cmd == CommandKind::Simulate { SIMULATE_T_END } else { SYNC_T_END };
        let t_end = self.solver.t_end.unwrap_or(default_t_end);
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(bad("solver.t_end", format!("must be positive, got {t_end}")));
        }
        if t_end / h < 0.5 {
            return Err(bad("solver.t_end", format!("{t_end} is shorter than half a step of {h}")));
        }
        self.solver.t_end = Some(t_end);
        let memory = parse_memory(&self.solver.memory)?;
        self.solver.memory = format_memory(memory);
        let solver = SolverConfig::for_horizon(h, t_end, memory)
            .map_err(|e| bad("solver", e.to_string()))?;

        let sync = &mut self.synchronize;
        check_finite("synchronize.master_initial", &sync.master_initial)?;
        check_finite("synchronize.slave_initial", &sync.slave_initial)?;
        if !(sync.tol > 0.0 && sync.tol.is_finite()) {
            return Err(bad("synchronize.tol", format!("must be positive, got {}", sync.tol)));
        }
        let controller = match sync.mode {
            ControllerMode::Exact => {
                if sync.gain.is_some() {
                    return Err(bad("synchronize.gain", "only valid with mode = \"literal\""));
                }
                let lambda = *sync.lambda.get_or_insert([-1.0; 3]);
                for (i, &l) in lambda.iter().enumerate() {
                    if !(l < 0.0 && l.is_finite()) {
                        return Err(bad(format!("synchronize.lambda[{i}]"), format!("must be negative, got {l}")));
                    }
                }
                Controller::exact(lambda).map_err(|e| bad("synchronize.lambda", e.to_string()))?
            }
            ControllerMode::Literal => {
                if sync.lambda.is_some() {
                    return Err(bad("synchronize.lambda", "only valid with mode = \"exact\""));
                }
                let gain = *sync.gain.get_or_insert(*gain_matrix_default(&self.volta).entries());
                check_matrix("synchronize.gain", &gain)?;
                Controller::literal(GainMatrix::new(gain).map_err(|e| bad("synchronize.gain", e.to_string()))?)
            }
        };
        let ms = MasterSlave::new(self.financial, self.volta, controller);

        let (system, initial) = match cmd {
            CommandKind::Synchronize | CommandKind::Stability => {
                let (m, s) = (self.synchronize.master_initial, self.synchronize.slave_initial);
                (SystemDef::Coupled(ms), vec![m[0], m[1], m[2], s[0], s[1], s[2]])
            }
            CommandKind::Simulate => {
                let (system, default_ic) = match self.simulate.system.as_str() {
                    "financial" => (SystemDef::Financial(self.financial), FINANCIAL_INITIAL),
                    "volta" => (SystemDef::Volta(self.volta), VOLTA_INITIAL),
                    "zero" => (SystemDef::Zero(3), FINANCIAL_INITIAL),
                    other => {
                        return Err(bad(
                            "simulate.system",
                            format!("unknown system {other:?}; expected financial, volta or zero"),
                        ))
                    }
                };
                let ic = *self.simulate.initial.get_or_insert(default_ic);
                check_finite("simulate.initial", &ic)?;
                (system, ic.to_vec())
            }
        };

        let (matrix, matrix_source) = if cmd == CommandKind::Stability {
            self.resolve_matrix(&ms)?
        } else {
            (ms.closed_loop_matrix(), MatrixSource::ClosedLoop)
        };

        let tol = self.synchronize.tol;
        Ok(Plan { config: self, runs, solver, system, initial, tol, matrix, matrix_source })
    }

    fn resolve_matrix(&mut self, ms: &MasterSlave) -> Result<(Matrix3, MatrixSource), ConfigError> {
        let st = &mut self.stability;
        let source = st.source.clone();
        if st.state.is_some() && st.equilibrium.is_some() {
            return Err(bad("stability.equilibrium", "give either state or equilibrium, not both"));
        }
        if st.equilibrium.is_some() && source != "financial_jacobian" {
            return Err(bad("stability.equilibrium", "only valid with source = \"financial_jacobian\""));
        }
        if st.matrix.is_some() && source != "matrix" {
            return Err(bad("stability.matrix", "only valid with source = \"matrix\""));
        }
        if st.state.is_some() && !(source == "financial_jacobian" || source == "volta_jacobian") {
            return Err(bad("stability.state", "only valid with a Jacobian source"));
        }
        if let Some(s) = &st.state {
            check_finite("stability.state", s)?;
        }
        match source.as_str() {
            "closed_loop" => Ok((ms.closed_loop_matrix(), MatrixSource::ClosedLoop)),
            "financial_jacobian" => {
                let state = match st.state {
                    Some(s) => State3(s),
                    None => {
                        let idx = *st.equilibrium.get_or_insert(1);
                        let eq = financial_equilibria(&self.financial)
                            .map_err(|e| bad("financial", e.to_string()))?;
                        *eq.get(idx).ok_or_else(|| {
                            bad(
                                "stability.equilibrium",
                                format!("index {idx} out of range; {} equilibria exist", eq.len()),
                            )
                        })?
                    }
                };
                Ok((financial_jacobian(&state, &self.financial), MatrixSource::FinancialJacobian(state)))
            }
            "volta_jacobian" => {
                let s = st.state.ok_or_else(|| bad("stability.state", "required for volta_jacobian"))?;
                let state = State3(s);
                Ok((volta_jacobian(&state, &self.volta), MatrixSource::VoltaJacobian(state)))
            }
            "matrix" => {
                let m = st.matrix.ok_or_else(|| bad("stability.matrix", "required for source = \"matrix\""))?;
                check_matrix("stability.matrix", &m)?;
                Ok((m, MatrixSource::Explicit))
            }
            other => Err(bad(
                "stability.source",
                format!("unknown source {other:?}; expected closed_loop, financial_jacobian, volta_jacobian or matrix"),
            )),
        }
    }
}
