//! Coordination of sub-horizon dispatch problems with the auxiliary problem
//! principle (APP).
//!
//! Every boundary between sub-horizons `n` and `n + 1` owns two copies of the
//! shared variables: `phi_left`, the coupling-hour outputs chosen by `n`, and
//! `phi_right`, the first-hour outputs chosen by `n + 1`. Each iteration
//! solves all augmented subproblems in parallel, exchanges the shared values,
//! and updates the boundary multipliers
//!
//! ```text
//! lambda <- lambda + alpha (phi_right - phi_left)
//! ```
//!
//! Subproblem `n` adds, for its right boundary,
//! `rho/2 |Φ - phi_left*|² + gamma Φᵀ(phi_left* - phi_right*) - lambdaᵀΦ`
//! and, for its left boundary,
//! `rho/2 |Φ - phi_right*|² + gamma Φᵀ(phi_right* - phi_left*) + lambdaᵀΦ`,
//! where starred values come from the previous iteration. The multiplier
//! signs are paired with the update above so that a persistent mismatch
//! drives the two copies together.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::case::{validate_reserve, GridCase, ScenarioData};
use crate::decomposition::{
    build_independent_spec, build_subproblem_spec, split_horizon, DecompositionError, SubHorizon,
};
use crate::dispatch::{
    assemble_ed_model, default_feasibility_tol, evaluate_cost, generation_from_x, solve_centralized, solve_spec,
    solve_with_lazy_rows, DispatchSchedule, EdError, EdModel,
};
use crate::network::NetworkModel;
use crate::qp::{QpOptions, QpStatus, QuadraticProgram};

#[derive(Debug, Error)]
pub enum AppError {
    #[error("invalid APP configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
    #[error(transparent)]
    Dispatch(#[from] EdError),
    #[error("sub-horizon {index}: {source}")]
    Subproblem {
        index: usize,
        #[source]
        source: EdError,
    },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    /// Shared variables and multipliers start at zero.
    Cold,
    /// Shared variables start from independent sub-horizon solves.
    Warm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AppConfig {
    /// Proximal weight.
    pub rho: f64,
    /// Cross-term weight.
    pub gamma: f64,
    /// Multiplier step.
    pub alpha: f64,
    /// Convergence tolerance on the boundary mismatch, MW.
    pub eps: f64,
    pub max_iter: usize,
    pub init_mode: InitMode,
    pub qp: QpOptions,
    /// Worker threads for subproblem solves; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl AppConfig {
    /// Defaults scaled to the case's cost curvature: `rho = mean(2 a_u)`,
    /// `gamma = alpha = rho / 2`, `eps = 0.1` MW, 200 iterations.
    ///
    /// The coupling-hour copy carries no cost, so only the proximal term
    /// holds it in place; `gamma = rho` lets the iteration diverge there.
    pub fn for_case(case: &GridCase, init_mode: InitMode) -> Self {
        let curvature = case.generators.iter().map(|g| 2.0 * g.cost_a).sum::<f64>() / case.n_units().max(1) as f64;
        // Purely linear costs have no curvature to scale against.
        let rho = if curvature > 0.0 { curvature } else { 0.01 };
        AppConfig {
            rho,
            gamma: rho / 2.0,
            alpha: rho / 2.0,
            eps: 0.1,
            max_iter: 200,
            init_mode,
            qp: QpOptions::default(),
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<(), AppError> {
        let positive = [("rho", self.rho), ("gamma", self.gamma), ("alpha", self.alpha), ("eps", self.eps)];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(AppError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iter < 1 {
            return Err(AppError::Config("max_iter must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(AppError::Config("thread count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Shared variables and multiplier of the boundary between sub-horizons
/// `index` and `index + 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryState {
    pub index: usize,
    /// Coupling-hour outputs of the left sub-horizon, MW.
    pub phi_left: Vec<f64>,
    /// First-hour outputs of the right sub-horizon, MW.
    pub phi_right: Vec<f64>,
    /// $/MW per unit.
    pub lambda: Vec<f64>,
    pub iteration: usize,
}

impl BoundaryState {
    pub fn zero(index: usize, n_units: usize) -> Self {
        BoundaryState {
            index,
            phi_left: vec![0.0; n_units],
            phi_right: vec![0.0; n_units],
            lambda: vec![0.0; n_units],
            iteration: 0,
        }
    }

    /// `max_u |phi_left - phi_right|`, MW.
    pub fn mismatch(&self) -> f64 {
        self.phi_left
            .iter()
            .zip(&self.phi_right)
            .fold(0.0_f64, |m, (l, r)| m.max((l - r).abs()))
    }
}

/// Adds the proximal, cross and multiplier terms of every boundary touching
/// `sub` to its base QP.
///
/// `states` holds all boundary states indexed by boundary. Only `rho` and
/// `gamma` are read from `config`.
pub fn augment_subproblem(
    base: &QuadraticProgram,
    sub: &SubHorizon,
    states: &[BoundaryState],
    config: &AppConfig,
) -> Result<QuadraticProgram, AppError> {
    let n_local = sub.len();
    let mut qp = base.clone();
    let lookup = |b: usize| {
        states
            .get(b)
            .filter(|s| s.index == b)
            .ok_or_else(|| AppError::Dimension(format!("missing state for boundary {b}")))
    };

    let mut apply = |state: &BoundaryState, local_t: usize, own_prev: &[f64], other_prev: &[f64], lambda_sign: f64| {
        let n_units = state.lambda.len();
        if n_units == 0 || qp.n_vars() != n_local * n_units || own_prev.len() != n_units || other_prev.len() != n_units {
            return Err(AppError::Dimension(format!(
                "boundary {} carries {} units; sub-horizon {} QP has {} variables over {} intervals",
                state.index,
                n_units,
                sub.index,
                qp.n_vars(),
                n_local
            )));
        }
        for u in 0..n_units {
            let i = local_t * n_units + u;
            qp.hessian_diag[i] += config.rho;
            qp.linear[i] += -config.rho * own_prev[u] + config.gamma * (own_prev[u] - other_prev[u])
                + lambda_sign * state.lambda[u];
        }
        Ok(())
    };

    if let Some(b) = sub.right_boundary {
        let s = lookup(b)?;
        apply(s, n_local - 1, &s.phi_left, &s.phi_right, -1.0)?;
    }
    if let Some(b) = sub.left_boundary {
        let s = lookup(b)?;
        apply(s, 0, &s.phi_right, &s.phi_left, 1.0)?;
    }
    Ok(qp)
}

/// Multiplier step on a solved boundary: `lambda += alpha (phi_right - phi_left)`.
pub fn update_multipliers(state: &BoundaryState, alpha: f64) -> BoundaryState {
    let mut next = state.clone();
    for ((lam, l), r) in next.lambda.iter_mut().zip(&state.phi_left).zip(&state.phi_right) {
        *lam += alpha * (r - l);
    }
    next.iteration += 1;
    next
}

/// `(max mismatch <= eps, max mismatch)` over all boundaries and units.
pub fn check_convergence(states: &[BoundaryState], eps: f64) -> (bool, f64) {
    let max = states.iter().map(BoundaryState::mismatch).fold(0.0_f64, f64::max);
    (max <= eps, max)
}

/// Starting point of the APP loop.
#[derive(Debug, Clone)]
pub struct Initialization {
    pub states: Vec<BoundaryState>,
    /// Real-interval generation of each sub-horizon from the independent
    /// solves (warm mode only).
    pub independent: Option<Vec<Vec<Vec<f64>>>>,
}

/// Cold: zero shared variables and multipliers. Warm: solve every sub-horizon
/// without its coupling hour or left ramp link, then seed `phi_left` with the
/// left sub-horizon's last real hour and `phi_right` with the right
/// sub-horizon's first hour.
pub fn initialize(
    mode: InitMode,
    subs: &[SubHorizon],
    case: &GridCase,
    network: &NetworkModel,
    scenario: &ScenarioData,
    config: &AppConfig,
) -> Result<Initialization, AppError> {
    let n_units = case.n_units();
    let n_boundaries = subs.len().saturating_sub(1);
    let mut states: Vec<BoundaryState> = (0..n_boundaries).map(|b| BoundaryState::zero(b, n_units)).collect();
    match mode {
        InitMode::Cold => Ok(Initialization { states, independent: None }),
        InitMode::Warm => {
            let pool = worker_pool(config.threads)?;
            let solved: Result<Vec<Vec<Vec<f64>>>, AppError> = in_pool(pool.as_ref(), || {
                subs.par_iter()
                    .map(|sub| {
                        let spec = build_independent_spec(sub, case, network, scenario);
                        solve_spec(&spec, &config.qp)
                            .map(|(g, _)| g)
                            .map_err(|source| AppError::Subproblem { index: sub.index, source })
                    })
                    .collect()
            });
            let solved = solved?;
            for (b, state) in states.iter_mut().enumerate() {
                let left = &solved[b];
                let right = &solved[b + 1];
                state.phi_left = left.iter().map(|row| *row.last().expect("non-empty")).collect();
                state.phi_right = right.iter().map(|row| row[0]).collect();
            }
            Ok(Initialization { states, independent: Some(solved) })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    /// 0 is the warm initialization step; APP iterations start at 1.
    pub iter: usize,
    pub max_mismatch: f64,
    pub boundary_mismatch: Vec<f64>,
    /// Cost of the consolidated real-interval schedule, $.
    pub cost: f64,
    /// Seconds since the start of the run.
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConvergenceTrace {
    pub rows: Vec<TraceRow>,
}

impl ConvergenceTrace {
    /// CSV with `iter,max_mismatch_mw,cost_usd,boundary_<b>_mismatch_mw...`.
    /// Wall time is left out so traces are reproducible byte for byte.
    pub fn write_csv<W: Write>(&self, n_boundaries: usize, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["iter".to_string(), "max_mismatch_mw".to_string(), "cost_usd".to_string()];
        header.extend((1..=n_boundaries).map(|b| format!("boundary_{b}_mismatch_mw")));
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.iter.to_string(), row.max_mismatch.to_string(), row.cost.to_string()];
            rec.extend(row.boundary_mismatch.iter().map(|m| m.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct AppOutcome {
    /// Consolidated full-horizon schedule (real intervals of every sub-horizon).
    pub schedule: DispatchSchedule,
    pub trace: ConvergenceTrace,
    pub states: Vec<BoundaryState>,
    pub converged: bool,
    /// Number of augmented solve rounds performed.
    pub app_iterations: usize,
    /// Iterations as reported: APP rounds, plus one for a warm initialization.
    pub reported_iterations: usize,
    /// Per boundary, worst ramp excess (MW) between the last real hour on the
    /// left and the first hour on the right in the consolidated schedule.
    pub boundary_ramp_excess: Vec<f64>,
    pub wall_time_s: f64,
}

fn worker_pool(threads: Option<usize>) -> Result<Option<rayon::ThreadPool>, AppError> {
    threads
        .map(|n| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| AppError::Pool(e.to_string()))
        })
        .transpose()
}

fn in_pool<R: Send>(pool: Option<&rayon::ThreadPool>, f: impl FnOnce() -> R + Send) -> R {
    match pool {
        Some(p) => p.install(f),
        None => f(),
    }
}

/// Real-interval generation of all sub-horizons laid end to end.
fn consolidate(subs: &[SubHorizon], per_sub: &[Vec<Vec<f64>>], n_units: usize) -> Vec<Vec<f64>> {
    (0..n_units)
        .map(|u| {
            subs.iter()
                .zip(per_sub)
                .flat_map(|(sub, gen)| gen[u][..sub.real.len()].iter().copied())
                .collect()
        })
        .collect()
}

fn boundary_ramp_excess(subs: &[SubHorizon], generation: &[Vec<f64>], case: &GridCase) -> Vec<f64> {
    subs.iter()
        .skip(1)
        .map(|sub| {
            let t = sub.real.start;
            case.generators
                .iter()
                .zip(generation)
                .map(|(g, row)| {
                    let delta = row[t] - row[t - 1];
                    (delta - g.ramp_up).max(-delta - g.ramp_down).max(0.0)
                })
                .fold(0.0_f64, f64::max)
        })
        .collect()
}

struct Round {
    generation: Vec<Vec<Vec<f64>>>,
    status: QpStatus,
}

/// Runs the APP loop on `n_sub` equal sub-horizons.
///
/// With `n_sub == 1` there are no boundaries and the centralized solve is
/// returned unchanged.
pub fn run_app(
    case: &GridCase,
    network: &NetworkModel,
    scenario: &ScenarioData,
    n_sub: usize,
    config: &AppConfig,
) -> Result<AppOutcome, AppError> {
    config.validate()?;
    let started = Instant::now();
    scenario.check_against(case).map_err(|e| AppError::Dimension(e.to_string()))?;
    let reserve = validate_reserve(case, scenario);
    if !reserve.passed {
        return Err(EdError::Reserve(reserve.failing_intervals()).into());
    }

    if n_sub == 1 {
        let schedule = solve_centralized(case, network, scenario, &config.qp)?;
        return Ok(AppOutcome {
            schedule,
            trace: ConvergenceTrace::default(),
            states: Vec::new(),
            converged: true,
            app_iterations: 0,
            reported_iterations: 0,
            boundary_ramp_excess: Vec::new(),
            wall_time_s: started.elapsed().as_secs_f64(),
        });
    }

    let subs = split_horizon(scenario.n_intervals, n_sub)?;
    let n_units = case.n_units();
    let pool = worker_pool(config.threads)?;

    let bases: Vec<EdModel> = subs
        .iter()
        .map(|sub| assemble_ed_model(&build_subproblem_spec(sub, case, network, scenario)))
        .collect::<Result<_, _>>()?;
    // Lazy rows found binding so far, per sub-horizon.
    let mut active: Vec<Vec<usize>> = vec![Vec::new(); subs.len()];

    let init = initialize(config.init_mode, &subs, case, network, scenario, config)?;
    let mut states = init.states;
    let mut trace = ConvergenceTrace::default();
    let ones = vec![1.0; scenario.n_intervals];

    if let Some(independent) = &init.independent {
        let generation = consolidate(&subs, independent, n_units);
        let (_, max) = check_convergence(&states, config.eps);
        trace.rows.push(TraceRow {
            iter: 0,
            max_mismatch: max,
            boundary_mismatch: states.iter().map(BoundaryState::mismatch).collect(),
            cost: evaluate_cost(&generation, case, &ones),
            wall_time_s: started.elapsed().as_secs_f64(),
        });
    }

    let mut best: Option<(f64, Round)> = None;
    let mut converged = false;
    let mut app_iterations = 0;

    for k in 1..=config.max_iter {
        let solved = in_pool(pool.as_ref(), || {
            subs.par_iter()
                .zip(&bases)
                .zip(active.par_iter_mut())
                .map(|((sub, base), active)| {
                    let qp = augment_subproblem(&base.qp, sub, &states, config)?;
                    let sol = solve_with_lazy_rows(&qp, &base.lazy_rows, active, &config.qp).map_err(|e| {
                        AppError::Subproblem {
                            index: sub.index,
                            source: EdError::Solver(e),
                        }
                    })?;
                    if sol.status == QpStatus::Infeasible {
                        return Err(AppError::Subproblem {
                            index: sub.index,
                            source: EdError::Infeasible(sol.infeasible_kinds),
                        });
                    }
                    Ok((generation_from_x(&sol.x, n_units), sol.status))
                })
                .collect::<Result<Vec<_>, AppError>>()
        });
        let solved = solved?;
        app_iterations = k;

        // Exchange shared values, then step the multipliers.
        for state in states.iter_mut() {
            let b = state.index;
            let left = &solved[b].0;
            let right = &solved[b + 1].0;
            state.phi_left = left.iter().map(|row| *row.last().expect("coupling hour")).collect();
            state.phi_right = right.iter().map(|row| row[0]).collect();
            *state = update_multipliers(state, config.alpha);
        }

        let (done, max) = check_convergence(&states, config.eps);
        let status = solved
            .iter()
            .map(|(_, s)| *s)
            .find(|s| *s != QpStatus::Optimal)
            .unwrap_or(QpStatus::Optimal);
        let generation_per_sub: Vec<Vec<Vec<f64>>> = solved.into_iter().map(|(g, _)| g).collect();
        let generation = consolidate(&subs, &generation_per_sub, n_units);
        trace.rows.push(TraceRow {
            iter: k,
            max_mismatch: max,
            boundary_mismatch: states.iter().map(BoundaryState::mismatch).collect(),
            cost: evaluate_cost(&generation, case, &ones),
            wall_time_s: started.elapsed().as_secs_f64(),
        });

        let round = Round { generation: generation_per_sub, status };
        if best.as_ref().is_none_or(|(m, _)| max < *m) || done {
            best = Some((max, round));
        }
        if done {
            converged = true;
            break;
        }
    }

    let (_, round) = best.expect("at least one iteration");
    let generation = consolidate(&subs, &round.generation, n_units);
    let excess = boundary_ramp_excess(&subs, &generation, case);
    let schedule = DispatchSchedule::from_generation(
        case,
        network,
        scenario,
        0,
        generation,
        round.status,
        default_feasibility_tol(case),
    );
    let warm_step = usize::from(config.init_mode == InitMode::Warm);

    Ok(AppOutcome {
        schedule,
        trace,
        states,
        converged,
        app_iterations,
        reported_iterations: app_iterations + warm_step,
        boundary_ramp_excess: excess,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispatch::tests::{single_bus, unit};
    use crate::network::build_network;

    fn zero_config() -> AppConfig {
        AppConfig {
            rho: 0.0,
            gamma: 0.0,
            alpha: 0.0,
            eps: 0.1,
            max_iter: 1,
            init_mode: InitMode::Cold,
            qp: QpOptions::default(),
            threads: None,
        }
    }

    fn one_unit_sub(right: bool) -> SubHorizon {
        SubHorizon {
            index: if right { 0 } else { 1 },
            real: if right { 0..1 } else { 1..3 },
            coupling: right.then_some(1),
            left_boundary: (!right).then_some(0),
            right_boundary: right.then_some(0),
        }
    }

    #[test]
    fn zero_coefficients_leave_qp_unchanged() {
        let mut base = QuadraticProgram::new(4);
        base.hessian_diag = vec![0.2, 0.4, 0.2, 0.4];
        base.linear = vec![1.0, 2.0, 3.0, 4.0];
        let sub = SubHorizon { index: 0, real: 0..1, coupling: Some(1), left_boundary: None, right_boundary: Some(0) };
        let mut state = BoundaryState::zero(0, 2);
        state.phi_left = vec![10.0, 20.0];
        state.phi_right = vec![11.0, 19.0];
        let out = augment_subproblem(&base, &sub, &[state], &zero_config()).unwrap();
        assert_eq!(out, base);
    }

    #[test]
    fn proximal_term_expansion() {
        let base = QuadraticProgram::new(2);
        let mut cfg = zero_config();
        cfg.rho = 2.0;
        let mut state = BoundaryState::zero(0, 1);
        state.phi_left = vec![10.0];
        let out = augment_subproblem(&base, &one_unit_sub(true), &[state], &cfg).unwrap();
        // (rho/2)(Φ - 10)^2 = Φ^2 - 20Φ + const on the coupling-hour variable.
        assert_eq!(out.hessian_diag, vec![0.0, 2.0]);
        assert_eq!(out.linear, vec![0.0, -20.0]);
    }

    #[test]
    fn multiplier_signs_per_role() {
        let base = QuadraticProgram::new(2);
        let mut state = BoundaryState::zero(0, 1);
        state.lambda = vec![5.0];
        let right_role = augment_subproblem(&base, &one_unit_sub(true), &[state.clone()], &zero_config()).unwrap();
        assert_eq!(right_role.linear, vec![0.0, -5.0]);
        let left_role = augment_subproblem(&base, &one_unit_sub(false), &[state], &zero_config()).unwrap();
        assert_eq!(left_role.linear, vec![5.0, 0.0]);
    }

    #[test]
    fn cross_term() {
        let base = QuadraticProgram::new(2);
        let mut cfg = zero_config();
        cfg.gamma = 0.5;
        let mut state = BoundaryState::zero(0, 1);
        state.phi_left = vec![10.0];
        state.phi_right = vec![4.0];
        let left_sub = augment_subproblem(&base, &one_unit_sub(true), &[state.clone()], &cfg).unwrap();
        assert_eq!(left_sub.linear[1], 3.0);
        let right_sub = augment_subproblem(&base, &one_unit_sub(false), &[state], &cfg).unwrap();
        assert_eq!(right_sub.linear[0], -3.0);
    }

    #[test]
    fn augmentation_rejects_wrong_unit_count() {
        let base = QuadraticProgram::new(3);
        let state = BoundaryState::zero(0, 2);
        assert!(matches!(
            augment_subproblem(&base, &one_unit_sub(true), &[state], &zero_config()),
            Err(AppError::Dimension(_))
        ));
        assert!(augment_subproblem(&QuadraticProgram::new(2), &one_unit_sub(true), &[], &zero_config()).is_err());
    }

    #[test]
    fn multiplier_update_arithmetic() {
        let mut s = BoundaryState::zero(0, 2);
        s.phi_left = vec![1.0, 5.0];
        s.phi_right = vec![5.0, 3.0];
        let next = update_multipliers(&s, 0.5);
        assert_eq!(next.lambda, vec![2.0, -1.0]);
        assert_eq!(next.iteration, 1);
        let twice = update_multipliers(&next, 0.5);
        assert_eq!(twice.lambda, vec![4.0, -2.0]);

        let mut flat = BoundaryState::zero(0, 2);
        flat.phi_left = vec![3.0, 3.0];
        flat.phi_right = vec![3.0, 3.0];
        flat.lambda = vec![1.5, -0.5];
        assert_eq!(update_multipliers(&flat, 0.7).lambda, flat.lambda);
    }

    #[test]
    fn convergence_rule_is_inclusive() {
        let eps = 0.1;
        let mut s = BoundaryState::zero(0, 2);
        assert_eq!(check_convergence(&[s.clone()], eps), (true, 0.0));
        s.phi_left = vec![0.0, 2.0 * eps];
        assert_eq!(check_convergence(&[s.clone()], eps), (false, 2.0 * eps));
        s.phi_left = vec![0.0, eps];
        assert_eq!(check_convergence(&[s], eps), (true, eps));
    }

    #[test]
    fn config_validation() {
        let case = single_bus(vec![unit("g", 0.1, 10.0, 0.0, 100.0, 50.0)]);
        let cfg = AppConfig::for_case(&case, InitMode::Warm);
        assert!((cfg.rho - 0.2).abs() < 1e-15);
        assert_eq!(cfg.gamma, cfg.rho / 2.0);
        assert_eq!(cfg.alpha, cfg.rho / 2.0);
        assert!(cfg.validate().is_ok());
        assert!(zero_config().validate().is_err());
        let mut bad = cfg.clone();
        bad.max_iter = 0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn cold_init_is_zero() {
        let case = single_bus(vec![unit("g1", 0.1, 10.0, 0.0, 100.0, 50.0), unit("g2", 0.1, 20.0, 0.0, 100.0, 50.0)]);
        let net = build_network(&case).unwrap();
        let sc = ScenarioData::new(vec![vec![50.0; 4]], vec![0.0; 4]).unwrap();
        let subs = split_horizon(4, 2).unwrap();
        let cfg = AppConfig::for_case(&case, InitMode::Cold);
        let init = initialize(InitMode::Cold, &subs, &case, &net, &sc, &cfg).unwrap();
        assert!(init.independent.is_none());
        assert_eq!(init.states, vec![BoundaryState::zero(0, 2)]);
    }
}
