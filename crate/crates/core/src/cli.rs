//! Command-line driver: centralized vs. cold- and warm-started APP runs on
//! one instance, with a comparison table, JSON report, convergence traces and
//! schedule exports.

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::app::{run_app, AppConfig, AppError, InitMode};
use crate::case::{load_case, load_scenario, validate_reserve, CaseError, GridCase, ScenarioData};
use crate::decomposition::{split_horizon, split_plan_json};
use crate::dispatch::{solve_centralized, DispatchSchedule, EdError, FeasibilityReport};
use crate::network::{build_network, NetworkError};
use crate::qp::QpStatus;
use crate::synthetic::generate_synthetic_case;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Centralized,
    AppCold,
    AppWarm,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    Centralized,
    AppCold,
    AppWarm,
}

impl RunMode {
    fn label(self) -> &'static str {
        match self {
            RunMode::Centralized => "centralized",
            RunMode::AppCold => "app-cold",
            RunMode::AppWarm => "app-warm",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "timesplit", version, about = "Time-decomposed economic dispatch benchmark")]
pub struct Cli {
    /// Case file (JSON).
    #[arg(long, requires = "profile", conflicts_with = "synthetic")]
    pub case: Option<PathBuf>,
    /// Scenario file (CSV).
    #[arg(long, requires = "case")]
    pub profile: Option<PathBuf>,
    /// Generate a synthetic instance with this many buses.
    #[arg(long, value_name = "N_BUSES")]
    pub synthetic: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 168)]
    pub horizon: usize,
    #[arg(long, value_enum, default_value_t = Mode::All)]
    pub mode: Mode,
    #[arg(long, default_value_t = 7)]
    pub subhorizons: usize,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Convergence tolerance on boundary mismatch, MW.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
    /// JSON report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Convergence trace CSV (APP modes).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Schedule CSV.
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    /// Write the shift-factor matrix as CSV.
    #[arg(long = "dump-sf", value_name = "PATH")]
    pub dump_sf: Option<PathBuf>,
    /// Write the sub-horizon split plan as JSON.
    #[arg(long = "dump-split", value_name = "PATH")]
    pub dump_split: Option<PathBuf>,
    /// Write the instance's case file (useful with --synthetic).
    #[arg(long = "export-case", value_name = "PATH")]
    pub export_case: Option<PathBuf>,
    /// Write the instance's scenario CSV.
    #[arg(long = "export-profile", value_name = "PATH")]
    pub export_profile: Option<PathBuf>,
    /// Include wall-clock times in the JSON report.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("no instance: pass --case/--profile or --synthetic")]
    NoInstance,
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error("network: {0}")]
    Network(#[from] NetworkError),
    #[error("centralized dispatch failed: {0}")]
    Dispatch(#[from] EdError),
    #[error("{mode} failed: {source}")]
    App {
        mode: &'static str,
        #[source]
        source: AppError,
    },
    #[error("cannot write {path}: {message}")]
    Output { path: String, message: String },
    #[error("invalid ED_THREADS value `{0}`")]
    Threads(String),
}

fn output_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Output { path: path.display().to_string(), message: e.to_string() }
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceInfo {
    pub source: String,
    pub buses: usize,
    pub branches: usize,
    pub units: usize,
    pub loads: usize,
    pub intervals: usize,
    pub subhorizons: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub mode: RunMode,
    pub total_cost_usd: f64,
    /// `None` for the centralized solve.
    pub iterations: Option<usize>,
    /// `100 (cost - cost_centralized) / cost_centralized`, when a centralized
    /// run is part of the same invocation.
    pub relative_error_pct: Option<f64>,
    pub converged: bool,
    pub status: QpStatus,
    pub max_mismatch_mw: Option<f64>,
    pub max_boundary_ramp_excess_mw: Option<f64>,
    pub violations: FeasibilityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
    pub trace_path: Option<String>,
    pub schedule_path: Option<String>,
    #[serde(skip)]
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub instance: InstanceInfo,
    pub runs: Vec<RunReport>,
}

/// Entry point; returns the process exit code.
pub fn cli_main<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let threads = match std::env::var("ED_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Some(n),
            _ => {
                eprintln!("error: {}", CliError::Threads(v));
                return 1;
            }
        },
        Err(_) => None,
    };
    match run(&cli, threads) {
        Ok(report) => {
            print!("{}", render_table(&report));
            if report.runs.iter().any(|r| !r.converged) {
                eprintln!("warning: at least one APP run did not converge");
                2
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn load_instance(cli: &Cli) -> Result<(GridCase, ScenarioData, String), CliError> {
    match (&cli.case, &cli.profile, cli.synthetic) {
        (Some(case_path), Some(profile_path), None) => {
            let case = load_case(case_path)?;
            let scenario = load_scenario(profile_path, &case)?;
            Ok((case, scenario, format!("{} + {}", case_path.display(), profile_path.display())))
        }
        (None, None, Some(n)) => {
            let (case, scenario) = generate_synthetic_case(n, cli.seed, cli.horizon)?;
            Ok((case, scenario, format!("synthetic n_buses={n} seed={} horizon={}", cli.seed, cli.horizon)))
        }
        _ => Err(CliError::NoInstance),
    }
}

fn suffixed(path: &Path, tag: &str, multiple: bool) -> PathBuf {
    if !multiple {
        return path.to_path_buf();
    }
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{tag}"),
    };
    path.with_file_name(name)
}

fn write_schedule(path: &Path, schedule: &DispatchSchedule, case: &GridCase) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| output_err(path, e))?;
    schedule.write_csv(case, BufWriter::new(file)).map_err(|e| output_err(path, e))
}

/// Runs the requested modes and writes all requested artifacts.
pub fn run(cli: &Cli, threads: Option<usize>) -> Result<BenchReport, CliError> {
    let (case, scenario, source) = load_instance(cli)?;
    let network = build_network(&case)?;

    if let Some(path) = &cli.export_case {
        case.save(path)?;
    }
    if let Some(path) = &cli.export_profile {
        scenario.save(&case, path)?;
    }
    if let Some(path) = &cli.dump_sf {
        let file = File::create(path).map_err(|e| output_err(path, e))?;
        network.write_sf_csv(&case, BufWriter::new(file)).map_err(|e| output_err(path, e))?;
    }

    // Validate the split up front so bad flags fail before any solve.
    let wants_app = cli.mode != Mode::Centralized;
    let subs = if cli.subhorizons == 1 || !(wants_app || cli.dump_split.is_some()) {
        None
    } else {
        Some(
            split_horizon(scenario.n_intervals, cli.subhorizons)
                .map_err(|e| CliError::App { mode: "decomposition", source: e.into() })?,
        )
    };
    if let (Some(path), Some(subs)) = (&cli.dump_split, &subs) {
        std::fs::write(path, split_plan_json(subs)).map_err(|e| output_err(path, e))?;
    }

    let reserve = validate_reserve(&case, &scenario);
    if !reserve.passed {
        return Err(CliError::Dispatch(EdError::Reserve(reserve.failing_intervals())));
    }

    let modes: Vec<RunMode> = match cli.mode {
        Mode::Centralized => vec![RunMode::Centralized],
        Mode::AppCold => vec![RunMode::AppCold],
        Mode::AppWarm => vec![RunMode::AppWarm],
        Mode::All => vec![RunMode::Centralized, RunMode::AppCold, RunMode::AppWarm],
    };
    let multiple_schedules = modes.len() > 1;
    let multiple_traces = modes.iter().filter(|m| **m != RunMode::Centralized).count() > 1;

    let mut runs = Vec::new();
    for mode in modes {
        let schedule_path = cli.schedule.as_ref().map(|p| suffixed(p, mode.label(), multiple_schedules));
        let run = match mode {
            RunMode::Centralized => {
                let start = Instant::now();
                let schedule = solve_centralized(&case, &network, &scenario, &Default::default())?;
                let elapsed = start.elapsed().as_secs_f64();
                if let Some(p) = &schedule_path {
                    write_schedule(p, &schedule, &case)?;
                }
                RunReport {
                    mode,
                    total_cost_usd: schedule.production_cost,
                    iterations: None,
                    relative_error_pct: None,
                    converged: schedule.status == QpStatus::Optimal,
                    status: schedule.status,
                    max_mismatch_mw: None,
                    max_boundary_ramp_excess_mw: None,
                    violations: schedule.feasibility.clone(),
                    wall_time_s: None,
                    trace_path: None,
                    schedule_path: schedule_path.map(|p| p.display().to_string()),
                    elapsed_s: elapsed,
                }
            }
            RunMode::AppCold | RunMode::AppWarm => {
                let init = if mode == RunMode::AppCold { InitMode::Cold } else { InitMode::Warm };
                let mut config = AppConfig::for_case(&case, init);
                if let Some(v) = cli.rho {
                    config.rho = v;
                }
                if let Some(v) = cli.gamma {
                    config.gamma = v;
                }
                if let Some(v) = cli.alpha {
                    config.alpha = v;
                }
                if let Some(v) = cli.eps {
                    config.eps = v;
                }
                if let Some(v) = cli.max_iter {
                    config.max_iter = v;
                }
                config.threads = threads;
                let outcome = run_app(&case, &network, &scenario, cli.subhorizons, &config)
                    .map_err(|source| CliError::App { mode: mode.label(), source })?;
                let trace_path = cli.trace.as_ref().map(|p| suffixed(p, mode.label(), multiple_traces));
                if let Some(p) = &trace_path {
                    let file = File::create(p).map_err(|e| output_err(p, e))?;
                    outcome
                        .trace
                        .write_csv(outcome.states.len(), BufWriter::new(file))
                        .map_err(|e| output_err(p, e))?;
                }
                if let Some(p) = &schedule_path {
                    write_schedule(p, &outcome.schedule, &case)?;
                }
                RunReport {
                    mode,
                    total_cost_usd: outcome.schedule.production_cost,
                    iterations: Some(outcome.reported_iterations),
                    relative_error_pct: None,
                    converged: outcome.converged,
                    status: outcome.schedule.status,
                    max_mismatch_mw: Some(outcome.trace.rows.last().map_or(0.0, |r| r.max_mismatch)),
                    max_boundary_ramp_excess_mw: Some(
                        outcome.boundary_ramp_excess.iter().copied().fold(0.0, f64::max),
                    ),
                    violations: outcome.schedule.feasibility.clone(),
                    wall_time_s: None,
                    trace_path: trace_path.map(|p| p.display().to_string()),
                    schedule_path: schedule_path.map(|p| p.display().to_string()),
                    elapsed_s: outcome.wall_time_s,
                }
            }
        };
        runs.push(run);
    }

    if let Some(reference) = runs.iter().find(|r| r.mode == RunMode::Centralized).map(|r| r.total_cost_usd) {
        for r in runs.iter_mut() {
            r.relative_error_pct = Some(if r.mode == RunMode::Centralized {
                0.0
            } else {
                100.0 * (r.total_cost_usd - reference) / reference
            });
        }
    }
    if cli.timing {
        for r in runs.iter_mut() {
            r.wall_time_s = Some(r.elapsed_s);
        }
    }

    let report = BenchReport {
        instance: InstanceInfo {
            source,
            buses: case.buses.len(),
            branches: case.branches.len(),
            units: case.n_units(),
            loads: case.loads.len(),
            intervals: scenario.n_intervals,
            subhorizons: cli.subhorizons,
        },
        runs,
    };
    if let Some(path) = &cli.out {
        let json = serde_json::to_string_pretty(&report).map_err(|e| output_err(path, e))?;
        std::fs::write(path, json + "\n").map_err(|e| output_err(path, e))?;
    }
    Ok(report)
}

/// Aligned text table with one row per run.
pub fn render_table(report: &BenchReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:>16} {:>10} {:>18} {:>17} {:>10}",
        "Case", "Total cost ($)", "Iteration", "Relative Error %", "Overall time (s)", "Converged"
    );
    for r in &report.runs {
        let iters = r.iterations.map_or("-".to_string(), |k| k.to_string());
        let err = r.relative_error_pct.map_or("-".to_string(), |e| format!("{e:.4e}"));
        let _ = writeln!(
            out,
            "{:<12} {:>16.4e} {:>10} {:>18} {:>17.3} {:>10}",
            r.mode.label(),
            r.total_cost_usd,
            iters,
            err,
            r.elapsed_s,
            if r.converged { "yes" } else { "no" }
        );
    }
    out
}
