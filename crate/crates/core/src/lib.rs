//! Multi-interval DC economic dispatch with time decomposition.
//!
//! The scheduling horizon is split into equal sub-horizons linked by coupling
//! intervals; sub-horizon dispatch problems are solved in parallel and
//! coordinated with the auxiliary problem principle until the shared
//! boundary-hour outputs agree. A centralized solve of the whole horizon is
//! available as the reference.

pub mod app;
pub mod case;
pub mod cli;
pub mod decomposition;
pub mod dispatch;
pub mod network;
pub mod qp;
pub mod synthetic;

pub use app::{run_app, AppConfig, AppOutcome, BoundaryState, ConvergenceTrace, InitMode};
pub use case::{load_case, load_scenario, validate_reserve, GridCase, ScenarioData};
pub use dispatch::{check_feasibility, evaluate_cost, solve_centralized, DispatchSchedule};
pub use network::{build_network, line_flows, NetworkModel};
pub use qp::{solve_qp, QpOptions, QpSolution, QpStatus, QuadraticProgram};
pub use synthetic::{generate_synthetic_case, SyntheticConfig};
