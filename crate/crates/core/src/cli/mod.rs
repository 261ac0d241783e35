//! `fracsync` command-line front end.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid configuration (nothing is
//! written), 3 a run blew up (partial CSV kept, flagged in the report),
//! 4 a convergence self-test order fell outside its band.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{self, ConvergenceReport, PowerLawForm, PowerLawProblem, SyncSummary};
use crate::control::{matignon_check, StabilityReport};
use crate::matrix::Matrix3;
use crate::solver::{integrate, SolveError, Trajectory};
use crate::system::{FractionalOrders, SystemDef};
use config::{CommandKind, ExperimentConfig, MatrixSource, Overrides, Plan};
use output::{write_json, write_trajectory_csv, SIMULATE_HEADER, SYNCHRONIZE_HEADER};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NON_FINITE: i32 = 3;
pub const EXIT_BAND: i32 = 4;

/// Instability onset order reported for the financial system's saddle equilibria.
pub const REFERENCE_THRESHOLD: f64 = 0.8436;
pub const REFERENCE_TOLERANCE: f64 = 0.02;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "fracsync", version, about = "Fractional-order chaotic systems and their synchronization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate a single system and write `t,x,y,z`.
    Simulate(RunArgs),
    /// Drive the Volta slave onto the financial master and write states,
    /// errors and control inputs.
    Synchronize(RunArgs),
    /// Eigenvalues, Matignon condition and instability onset order of a matrix.
    Stability(RunArgs),
    /// Step-halving self-test of the integrator on problems with exact solution t^4.
    Convergence(ConvergenceArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML experiment file; every field is optional.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Step size.
    #[arg(long)]
    h: Option<f64>,
    /// Integration horizon.
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// Orders as `q` or `q1,q2,q3`; replaces any order sweep.
    #[arg(long)]
    orders: Option<String>,
    /// Controller for `synchronize`.
    #[arg(long, value_parser = ["literal", "exact"])]
    mode: Option<String>,
    /// History kept by the integrator: `full` or `last:<k>`. Full history
    /// costs O(N²) in the step count; `last:<k>` bounds it to O(N k) for
    /// long horizons at some accuracy loss.
    #[arg(long)]
    memory: Option<String>,
}

#[derive(Debug, Args)]
struct ConvergenceArgs {
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Config(config::ConfigError),
    Io(std::io::Error),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<config::ConfigError> for Failure {
    fn from(e: config::ConfigError) -> Self {
        Failure::Config(e)
    }
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let started = Instant::now();
    let (name, out, result) = match cli.command {
        Command::Simulate(a) => ("simulate", a.out.clone(), run_trajectory(&a, CommandKind::Simulate)),
        Command::Synchronize(a) => ("synchronize", a.out.clone(), run_trajectory(&a, CommandKind::Synchronize)),
        Command::Stability(a) => ("stability", a.out.clone(), run_stability(&a)),
        Command::Convergence(a) => ("convergence", a.out.clone(), run_convergence(&a.out)),
    };
    match result {
        Ok(code) => {
            // Wall-clock time stays out of the report so reports are byte-stable.
            let elapsed = started.elapsed().as_secs_f64();
            eprintln!("{name}: finished in {elapsed:.3} s");
            if let Err(e) = std::fs::write(out.join(format!("{name}_timing.txt")), format!("{elapsed}\n")) {
                eprintln!("error: cannot write timing file: {e}");
                return EXIT_IO;
            }
            code
        }
        Err(Failure::Config(e)) => {
            eprintln!("error: invalid configuration: {e}");
            EXIT_CONFIG
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            EXIT_IO
        }
    }
}

fn plan_from(args: &RunArgs, cmd: CommandKind) -> Result<Plan, config::ConfigError> {
    let mut cfg = config::load(args.config.as_deref())?;
    cfg.apply(&Overrides {
        h: args.h,
        t_end: args.t_end,
        orders: args.orders.clone(),
        mode: args.mode.clone(),
        memory: args.memory.clone(),
    })?;
    cfg.resolve(cmd)
}

#[derive(Debug, Serialize)]
struct SolverStats {
    h: f64,
    memory: String,
    steps_requested: usize,
    steps_completed: usize,
}

#[derive(Debug, Serialize)]
struct RunEntry {
    orders: [f64; 3],
    csv: String,
    status: &'static str,
    failed_at_step: Option<usize>,
    solver: SolverStats,
    sync: Option<SyncSummary>,
    final_max_error: Option<f64>,
    final_below_tol: Option<bool>,
    closed_loop_stability: Option<StabilityReport>,
}

#[derive(Debug, Serialize)]
struct RunReport<'a> {
    command: &'static str,
    version: &'static str,
    config: &'a ExperimentConfig,
    runs: Vec<RunEntry>,
}

fn csv_name(cmd: &str, orders: &FractionalOrders, sweep: bool) -> String {
    if sweep {
        format!("{cmd}_q{}.csv", orders.as_array()[0])
    } else {
        format!("{cmd}.csv")
    }
}

fn run_one(plan: &Plan, orders: FractionalOrders, out: &Path, cmd: CommandKind) -> std::io::Result<RunEntry> {
    let q = orders.as_array();
    let field_orders: Vec<f64> = match cmd {
        CommandKind::Synchronize => [q, q].concat(),
        _ => q.to_vec(),
    };
    let (traj, failed_at_step) = integrate_annotated(&plan.system, &field_orders, &plan.initial, &plan.solver)
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    let (name, header) = match cmd {
        CommandKind::Synchronize => ("synchronize", SYNCHRONIZE_HEADER),
        _ => ("simulate", SIMULATE_HEADER),
    };
    let csv = csv_name(name, &orders, plan.runs.len() > 1);
    let mut entry = RunEntry {
        orders: q,
        csv: csv.clone(),
        status: if failed_at_step.is_some() { "non_finite" } else { "ok" },
        failed_at_step,
        solver: SolverStats {
            h: plan.solver.h,
            memory: config::format_memory(plan.solver.memory),
            steps_requested: plan.solver.n_steps,
            steps_completed: traj.len() - 1,
        },
        sync: None,
        final_max_error: None,
        final_below_tol: None,
        closed_loop_stability: None,
    };
    if let SystemDef::Coupled(ms) = &plan.system {
        let summary = analysis::sync_time(&traj, plan.tol).map_err(|e| std::io::Error::other(e.to_string()))?;
        let max_err = summary.final_errors.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        entry.final_max_error = Some(max_err);
        entry.final_below_tol = Some(max_err < plan.tol);
        entry.sync = Some(summary);
        entry.closed_loop_stability = Some(matignon_check(&ms.closed_loop_matrix(), &orders));
    }
    write_trajectory_csv(&out.join(&csv), header, &traj)?;
    Ok(entry)
}

fn describe(entry: &RunEntry) -> String {
    let q = entry.orders;
    let mut s = format!("q = ({}, {}, {}): {} of {} steps", q[0], q[1], q[2], entry.solver.steps_completed, entry.solver.steps_requested);
    if let Some(step) = entry.failed_at_step {
        s += &format!(", non-finite state at step {step}");
    }
    if let Some(sync) = &entry.sync {
        match sync.sync_time {
            Some(t) => s += &format!(", synchronized (tol {}) from t = {t}", sync.tol),
            None => s += &format!(", not synchronized within tol {}", sync.tol),
        }
    }
    s
}

fn run_trajectory(args: &RunArgs, cmd: CommandKind) -> Result<i32, Failure> {
    let plan = plan_from(args, cmd)?;
    std::fs::create_dir_all(&args.out)?;
    let out = args.out.as_path();

    let results: Vec<std::io::Result<RunEntry>> = if plan.runs.len() == 1 {
        vec![run_one(&plan, plan.runs[0], out, cmd)]
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = plan
                .runs
                .iter()
                .map(|&orders| {
                    let plan = &plan;
                    s.spawn(move || run_one(plan, orders, out, cmd))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("run thread panicked")).collect()
        })
    };
    let runs = results.into_iter().collect::<std::io::Result<Vec<_>>>()?;

    let name = if cmd == CommandKind::Synchronize { "synchronize" } else { "simulate" };
    for r in &runs {
        println!("{name}: {}", describe(r));
    }
    let blew_up = runs.iter().any(|r| r.failed_at_step.is_some());
    let report = RunReport { command: name, version: VERSION, config: &plan.config, runs };
    write_json(&out.join(format!("{name}_report.json")), &report)?;
    Ok(if blew_up { EXIT_NON_FINITE } else { EXIT_OK })
}

#[derive(Debug, Serialize)]
struct ReferenceComparison {
    reference: f64,
    tolerance: f64,
    difference: f64,
    agrees: bool,
}

#[derive(Debug, Serialize)]
struct StabilityOutput<'a> {
    command: &'static str,
    version: &'static str,
    config: &'a ExperimentConfig,
    matrix_source: &'static str,
    state: Option<[f64; 3]>,
    matrix: Matrix3,
    stability: StabilityReport,
    chaos_threshold: Option<f64>,
    chaos_threshold_note: Option<String>,
    reference: Option<ReferenceComparison>,
}

fn run_stability(args: &RunArgs) -> Result<i32, Failure> {
    let plan = plan_from(args, CommandKind::Stability)?;
    let orders = FractionalOrders::new(plan.config.orders.as_array())
        .expect("orders validated during resolution");
    std::fs::create_dir_all(&args.out)?;

    let stability = matignon_check(&plan.matrix, &orders);
    let (threshold, note) = match analysis::chaos_threshold(&plan.matrix) {
        Ok(q) => (Some(q), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let (source, state) = match &plan.matrix_source {
        MatrixSource::ClosedLoop => ("closed_loop", None),
        MatrixSource::FinancialJacobian(s) => ("financial_jacobian", Some(s.0)),
        MatrixSource::VoltaJacobian(s) => ("volta_jacobian", Some(s.0)),
        MatrixSource::Explicit => ("matrix", None),
    };
    let reference = match (&plan.matrix_source, threshold) {
        (MatrixSource::FinancialJacobian(_), Some(q)) => Some(ReferenceComparison {
            reference: REFERENCE_THRESHOLD,
            tolerance: REFERENCE_TOLERANCE,
            difference: q - REFERENCE_THRESHOLD,
            agrees: (q - REFERENCE_THRESHOLD).abs() <= REFERENCE_TOLERANCE,
        }),
        _ => None,
    };

    println!("stability: source {source}");
    for l in &stability.eigenvalues {
        println!("  eigenvalue {} {:+}i", l.re, l.im);
    }
    println!("  min |arg| = {}, Matignon condition satisfied: {}", stability.min_arg, stability.satisfied);
    if let Some(n) = &stability.note {
        println!("  note: {n}");
    }
    match threshold {
        Some(q) => println!("  instability onset order q* = {q}"),
        None => println!("  instability onset order undefined: {}", note.as_deref().unwrap_or("")),
    }
    if let Some(r) = &reference {
        println!(
            "  reference onset {} (±{}): difference {:+}, {}",
            r.reference,
            r.tolerance,
            r.difference,
            if r.agrees { "agrees" } else { "DISAGREES" }
        );
    }

    let report = StabilityOutput {
        command: "stability",
        version: VERSION,
        config: &plan.config,
        matrix_source: source,
        state,
        matrix: plan.matrix,
        stability,
        chaos_threshold: threshold,
        chaos_threshold_note: note,
        reference,
    };
    write_json(&args.out.join("stability_report.json"), &report)?;
    Ok(EXIT_OK)
}

pub const CONVERGENCE_H0: f64 = 1.0 / 32.0;
pub const CONVERGENCE_LEVELS: usize = 4;
pub const CONVERGENCE_BAND: f64 = 0.2;
pub const CONVERGENCE_CASES: [(f64, f64); 3] = [(0.5, 1.5), (0.8, 1.8), (1.0, 2.0)];

#[derive(Debug, Serialize)]
struct ConvergenceCase {
    q: f64,
    form: PowerLawForm,
    expected_order: f64,
    /// Whether this case counts toward the exit status.
    gated: bool,
    within_band: bool,
    report: ConvergenceReport,
}

#[derive(Debug, Serialize)]
struct ConvergenceOutput {
    command: &'static str,
    version: &'static str,
    h0: f64,
    levels: usize,
    band: f64,
    cases: Vec<ConvergenceCase>,
}

fn run_convergence(out: &Path) -> Result<i32, Failure> {
    std::fs::create_dir_all(out)?;
    let mut cases = Vec::new();
    for form in [PowerLawForm::Coupled, PowerLawForm::Forcing] {
        for (q, coupled_expected) in CONVERGENCE_CASES {
            let problem = PowerLawProblem { q, form };
            let report = analysis::power_law_convergence(problem, CONVERGENCE_H0, CONVERGENCE_LEVELS)
                .map_err(|e| std::io::Error::other(e.to_string()))?;
            let expected = match form {
                PowerLawForm::Coupled => coupled_expected,
                PowerLawForm::Forcing => problem.expected_order(),
            };
            let within_band = report.orders.iter().all(|p| (p - expected).abs() <= CONVERGENCE_BAND);
            cases.push(ConvergenceCase {
                q,
                form,
                expected_order: expected,
                gated: form == PowerLawForm::Coupled,
                within_band,
                report,
            });
        }
    }
    println!("convergence: h0 = {CONVERGENCE_H0}, {CONVERGENCE_LEVELS} levels, band ±{CONVERGENCE_BAND}");
    for c in &cases {
        let orders: Vec<String> = c.report.orders.iter().map(|p| format!("{p:.4}")).collect();
        println!(
            "  {:<8} q = {:<4} expected {:<4} orders [{}] {}{}",
            match c.form {
                PowerLawForm::Coupled => "coupled",
                PowerLawForm::Forcing => "forcing",
            },
            c.q,
            c.expected_order,
            orders.join(", "),
            if c.within_band { "ok" } else { "OUT OF BAND" },
            if c.gated { "" } else { " (informational)" }
        );
    }
    let failed = cases.iter().any(|c| c.gated && !c.within_band);
    let report = ConvergenceOutput {
        command: "convergence",
        version: VERSION,
        h0: CONVERGENCE_H0,
        levels: CONVERGENCE_LEVELS,
        band: CONVERGENCE_BAND,
        cases,
    };
    write_json(&out.join("convergence_report.json"), &report)?;
    Ok(if failed { EXIT_BAND } else { EXIT_OK })
}

/// Integrates, annotating coupled trajectories; blow-ups return the partial run.
pub fn integrate_annotated(
    system: &SystemDef,
    orders: &[f64],
    initial: &[f64],
    solver: &crate::solver::SolverConfig,
) -> Result<(Trajectory, Option<usize>), SolveError> {
    let (mut traj, failed) = match integrate(system, orders, initial, solver) {
        Ok(t) => (t, None),
        Err(SolveError::NonFiniteState { step, partial }) => (*partial, Some(step)),
        Err(e) => return Err(e),
    };
    if let SystemDef::Coupled(ms) = system {
        ms.annotate(&mut traj);
    }
    Ok((traj, failed))
}
