//! Multi-interval economic dispatch: QP assembly, centralized solve, cost
//! evaluation and feasibility checking.
//!
//! Decision variables are unit outputs in MW, ordered interval-major:
//! variable `t * n_units + u` is unit `u` at the `t`-th interval of the window.
//! Network constraints are written through shift factors, so there are no
//! angle variables; nodal conservation holds by construction and is only
//! checked.

use std::io::Write;
use std::ops::Range;

use serde::Serialize;
use thiserror::Error;

use crate::case::{validate_reserve, GridCase, ScenarioData};
use crate::network::{flows_unchecked, NetworkModel};
use crate::qp::{
    solve_qp, ConstraintKind, LinearRow, QpError, QpOptions, QpSolution, QpStatus, QuadraticProgram, VarLabel,
};

#[derive(Debug, Error)]
pub enum EdError {
    #[error("reserve requirement not met at intervals {0:?}")]
    Reserve(Vec<usize>),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("dispatch is infeasible (constraint classes involved: {})", kinds_list(.0))]
    Infeasible(Vec<ConstraintKind>),
    #[error("QP solver: {0}")]
    Solver(#[from] QpError),
}

fn kinds_list(kinds: &[ConstraintKind]) -> String {
    if kinds.is_empty() {
        return "unknown".into();
    }
    kinds.iter().map(|k| format!("{k:?}").to_lowercase()).collect::<Vec<_>>().join(", ")
}

/// Previous-interval outputs that the first interval must ramp from.
/// `None` entries leave that unit's first interval unconstrained.
#[derive(Debug, Clone, PartialEq)]
pub struct RampAnchor(pub Vec<Option<f64>>);

impl RampAnchor {
    /// Anchor from the case's `p_initial` values, if any unit declares one.
    pub fn from_initial(case: &GridCase) -> Option<RampAnchor> {
        let values: Vec<Option<f64>> = case.generators.iter().map(|g| g.p_initial).collect();
        values.iter().any(Option::is_some).then_some(RampAnchor(values))
    }
}

/// Which constraint families are assembled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintSet {
    pub flows: bool,
    pub ramps: bool,
    /// Drop flow rows that cannot bind under balance and output limits.
    pub screen_flows: bool,
}

impl Default for ConstraintSet {
    fn default() -> Self {
        ConstraintSet { flows: true, ramps: true, screen_flows: true }
    }
}

/// An ED problem over a contiguous window of intervals.
#[derive(Debug, Clone)]
pub struct EdProblemSpec<'a> {
    pub case: &'a GridCase,
    pub network: &'a NetworkModel,
    /// Global index (0-based) of the first interval in the window.
    pub first_interval: usize,
    /// `demand[t][load]` for each interval of the window, MW.
    pub demand: Vec<Vec<f64>>,
    /// Production-cost weight per interval.
    pub weights: Vec<f64>,
    pub ramp_anchor: Option<RampAnchor>,
    pub constraints: ConstraintSet,
}

impl<'a> EdProblemSpec<'a> {
    /// Window over `intervals` of the scenario with unit weights. The case's
    /// `p_initial` anchors the window only when it starts the horizon.
    pub fn for_window(
        case: &'a GridCase,
        network: &'a NetworkModel,
        scenario: &ScenarioData,
        intervals: Range<usize>,
    ) -> Self {
        let ramp_anchor = if intervals.start == 0 { RampAnchor::from_initial(case) } else { None };
        EdProblemSpec {
            case,
            network,
            first_interval: intervals.start,
            demand: intervals.clone().map(|t| scenario.demand_at(t)).collect(),
            weights: vec![1.0; intervals.len()],
            ramp_anchor,
            constraints: ConstraintSet::default(),
        }
    }

    pub fn n_intervals(&self) -> usize {
        self.demand.len()
    }

    pub fn intervals(&self) -> Range<usize> {
        self.first_interval..self.first_interval + self.n_intervals()
    }

    pub fn var(&self, unit: usize, local_t: usize) -> usize {
        local_t * self.case.n_units() + unit
    }
}

/// ED QP with the branch-flow and inter-interval ramp rows held apart.
///
/// Only a small share of these rows bind at an optimum, so solves start from
/// a subset and add violated rows on demand (see [`solve_with_lazy_rows`]).
/// Ramp rows link consecutive intervals; leaving slack ones out keeps the
/// dense per-interval flow blocks from filling in across the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct EdModel {
    /// Objective, bounds, balance and anchored first-interval ramp rows.
    pub qp: QuadraticProgram,
    /// Flow rows that survived screening, then ramp rows between consecutive
    /// intervals, in `A x <= b` form.
    pub lazy_rows: Vec<LinearRow>,
}

impl EdModel {
    /// The complete QP with every lazy row present.
    pub fn full_qp(&self) -> QuadraticProgram {
        let mut qp = self.qp.clone();
        let rest = std::mem::take(&mut qp.inequalities);
        qp.inequalities = self.lazy_rows.iter().cloned().chain(rest).collect();
        qp
    }
}

/// Assembles the ED QP of `spec` with all rows inline.
pub fn assemble_ed_qp(spec: &EdProblemSpec) -> Result<QuadraticProgram, EdError> {
    assemble_ed_model(spec).map(|m| m.full_qp())
}

/// Assembles the ED QP of `spec` with flow and ramp rows kept separate.
pub fn assemble_ed_model(spec: &EdProblemSpec) -> Result<EdModel, EdError> {
    let case = spec.case;
    let net = spec.network;
    let n_u = case.n_units();
    let n_t = spec.n_intervals();
    let n_loads = case.loads.len();

    if spec.weights.len() != n_t {
        return Err(EdError::Dimension(format!("{} weights for {n_t} intervals", spec.weights.len())));
    }
    if let Some(row) = spec.demand.iter().find(|row| row.len() != n_loads) {
        return Err(EdError::Dimension(format!("demand row has {} loads, case has {n_loads}", row.len())));
    }
    if let Some(anchor) = &spec.ramp_anchor {
        if anchor.0.len() != n_u {
            return Err(EdError::Dimension(format!("ramp anchor has {} units, case has {n_u}", anchor.0.len())));
        }
    }
    if net.gen_shift.ncols() != n_u || net.load_shift.ncols() != n_loads || net.n_branches() != case.branches.len() {
        return Err(EdError::Dimension("network model does not match the case".into()));
    }

    let n = n_u * n_t;
    let mut qp = QuadraticProgram::new(n);
    qp.labels = (0..n_t)
        .flat_map(|t| (0..n_u).map(move |u| VarLabel { unit: u, interval: spec.first_interval + t }))
        .collect();

    for t in 0..n_t {
        let w = spec.weights[t];
        for (u, g) in case.generators.iter().enumerate() {
            let i = spec.var(u, t);
            qp.hessian_diag[i] = 2.0 * g.cost_a * w;
            qp.linear[i] = g.cost_b * w;
            qp.offset += g.cost_c * w;
            qp.lower[i] = g.p_min;
            qp.upper[i] = g.p_max;
        }
    }

    for t in 0..n_t {
        let total: f64 = spec.demand[t].iter().sum();
        let coeffs = (0..n_u).map(|u| (spec.var(u, t), 1.0)).collect();
        qp.equalities.push(LinearRow::new(coeffs, total, ConstraintKind::Balance));
    }

    let mut lazy_rows = Vec::new();
    if spec.constraints.flows {
        let screen = spec.constraints.screen_flows.then(|| FlowScreen::new(spec));
        for t in 0..n_t {
            let demand = &spec.demand[t];
            for l in 0..net.n_branches() {
                let load_term: f64 = (0..n_loads).map(|d| net.load_shift[(l, d)] * demand[d]).sum();
                let limit = net.flow_limits[l];
                let (need_upper, need_lower) = match &screen {
                    Some(s) => s.needed(l, t, load_term, limit),
                    None => (true, true),
                };
                let coeffs: Vec<(usize, f64)> = (0..n_u)
                    .filter(|&u| net.gen_shift[(l, u)] != 0.0)
                    .map(|u| (spec.var(u, t), net.gen_shift[(l, u)]))
                    .collect();
                // SF p - load_term <= limit  and  -(SF p - load_term) <= limit
                if need_upper {
                    lazy_rows.push(LinearRow::new(coeffs.clone(), limit + load_term, ConstraintKind::Flow));
                }
                if need_lower {
                    let neg = coeffs.iter().map(|&(j, a)| (j, -a)).collect();
                    lazy_rows.push(LinearRow::new(neg, limit - load_term, ConstraintKind::Flow));
                }
            }
        }
    }

    if spec.constraints.ramps {
        if let Some(anchor) = &spec.ramp_anchor {
            for (u, g) in case.generators.iter().enumerate() {
                if let Some(prev) = anchor.0[u] {
                    let i = spec.var(u, 0);
                    qp.inequalities.push(LinearRow::new(vec![(i, 1.0)], prev + g.ramp_up, ConstraintKind::Ramp));
                    qp.inequalities.push(LinearRow::new(vec![(i, -1.0)], g.ramp_down - prev, ConstraintKind::Ramp));
                }
            }
        }
        for t in 1..n_t {
            for (u, g) in case.generators.iter().enumerate() {
                let (prev, cur) = (spec.var(u, t - 1), spec.var(u, t));
                // A rate covering the whole output range never binds.
                let range = g.p_max - g.p_min;
                if g.ramp_up < range {
                    lazy_rows.push(LinearRow::new(vec![(cur, 1.0), (prev, -1.0)], g.ramp_up, ConstraintKind::Ramp));
                }
                if g.ramp_down < range {
                    lazy_rows.push(LinearRow::new(vec![(prev, 1.0), (cur, -1.0)], g.ramp_down, ConstraintKind::Ramp));
                }
            }
        }
    }

    Ok(EdModel { qp, lazy_rows })
}

/// Relative slack under which an enforced lazy row is kept for the next solve.
const NEAR_BINDING: f64 = 0.02;

/// Solves `qp` subject additionally to every row of `candidates`, adding
/// candidate rows only once they are violated.
///
/// `active` holds indices into `candidates` that are enforced from the start.
/// On return it holds the rows that were enforced in the final round and are
/// near binding at the solution, so passing the same vector to a later solve
/// of a similar problem saves rounds. The returned solution's inequality
/// duals cover `qp`'s rows followed by the rows enforced in the final round.
pub fn solve_with_lazy_rows(
    qp: &QuadraticProgram,
    candidates: &[LinearRow],
    active: &mut Vec<usize>,
    opts: &QpOptions,
) -> Result<QpSolution, QpError> {
    if let Some(&bad) = active.iter().find(|&&i| i >= candidates.len()) {
        return Err(QpError::Dimension(format!("active row {bad} of {} candidates", candidates.len())));
    }
    let mut enforced = vec![false; candidates.len()];
    for &i in active.iter() {
        enforced[i] = true;
    }
    loop {
        let mut work = qp.clone();
        work.inequalities.extend(active.iter().map(|&i| candidates[i].clone()));
        let sol = solve_qp(&work, opts, None)?;
        if matches!(sol.status, QpStatus::Infeasible | QpStatus::Unbounded) {
            return Ok(sol);
        }
        let before = active.len();
        for (i, row) in candidates.iter().enumerate() {
            if !enforced[i] && row.dot(&sol.x) - row.rhs > opts.feas_tol * (1.0 + row.rhs.abs()) {
                enforced[i] = true;
                active.push(i);
            }
        }
        if active.len() == before {
            active.retain(|&i| candidates[i].rhs - candidates[i].dot(&sol.x) <= NEAR_BINDING * (1.0 + candidates[i].rhs.abs()));
            return Ok(sol);
        }
    }
}

/// Exact range of `SF_l · K_P p` over `{sum p = D_t, p_min <= p <= p_max}`.
///
/// This is a continuous knapsack: filling the units in order of decreasing
/// (or increasing) shift factor attains the maximum (minimum). A flow row
/// whose extreme value is within the limit can never bind and is omitted.
struct FlowScreen {
    /// Per branch, units sorted by decreasing generator shift factor.
    order: Vec<Vec<usize>>,
    /// Per interval, total demand.
    totals: Vec<f64>,
    shifts: Vec<Vec<f64>>,
    p_min: Vec<f64>,
    p_max: Vec<f64>,
}

impl FlowScreen {
    fn new(spec: &EdProblemSpec) -> Self {
        let net = spec.network;
        let n_u = spec.case.n_units();
        let shifts: Vec<Vec<f64>> = (0..net.n_branches())
            .map(|l| (0..n_u).map(|u| net.gen_shift[(l, u)]).collect())
            .collect();
        let order = shifts
            .iter()
            .map(|row| {
                let mut idx: Vec<usize> = (0..n_u).collect();
                idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
                idx
            })
            .collect();
        FlowScreen {
            order,
            totals: spec.demand.iter().map(|row| row.iter().sum()).collect(),
            shifts,
            p_min: spec.case.generators.iter().map(|g| g.p_min).collect(),
            p_max: spec.case.generators.iter().map(|g| g.p_max).collect(),
        }
    }

    fn fill(&self, l: usize, t: usize, units: impl Iterator<Item = usize>) -> Option<f64> {
        let base: f64 = self.p_min.iter().sum();
        let mut remaining = self.totals[t] - base;
        if remaining < 0.0 {
            return None;
        }
        let sf = &self.shifts[l];
        let mut value: f64 = self.p_min.iter().zip(sf).map(|(p, s)| p * s).sum();
        for u in units {
            let add = remaining.min(self.p_max[u] - self.p_min[u]);
            value += add * sf[u];
            remaining -= add;
        }
        (remaining <= 0.0).then_some(value)
    }

    /// Whether the upper and lower flow rows of branch `l` at `t` can bind.
    fn needed(&self, l: usize, t: usize, load_term: f64, limit: f64) -> (bool, bool) {
        let hi = self.fill(l, t, self.order[l].iter().copied());
        let lo = self.fill(l, t, self.order[l].iter().rev().copied());
        match (hi, lo) {
            (Some(hi), Some(lo)) => (hi - load_term > limit, -(lo - load_term) > limit),
            // Balance cannot be met within output limits; keep everything and
            // let the solver report infeasibility.
            _ => (true, true),
        }
    }
}

/// Max violation per constraint class, MW.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub tol_mw: f64,
    pub balance: f64,
    pub bounds: f64,
    pub ramp: f64,
    pub flow: f64,
    pub passed: bool,
}

impl FeasibilityReport {
    pub fn worst(&self) -> f64 {
        self.balance.max(self.bounds).max(self.ramp).max(self.flow)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispatchSchedule {
    /// Global index (0-based) of the first interval.
    pub first_interval: usize,
    /// `generation[unit][t]`, MW.
    pub generation: Vec<Vec<f64>>,
    /// `flows[branch][t]`, MW.
    pub flows: Vec<Vec<f64>>,
    /// Production cost over weight-1 intervals, $.
    pub production_cost: f64,
    pub status: QpStatus,
    pub feasibility: FeasibilityReport,
}

impl DispatchSchedule {
    pub fn n_intervals(&self) -> usize {
        self.generation.first().map_or(0, Vec::len)
    }

    pub fn intervals(&self) -> Range<usize> {
        self.first_interval..self.first_interval + self.n_intervals()
    }

    /// Builds a schedule from a generation matrix, computing flows, cost at
    /// unit weights, and a feasibility report at `tol_mw`.
    pub fn from_generation(
        case: &GridCase,
        network: &NetworkModel,
        scenario: &ScenarioData,
        first_interval: usize,
        generation: Vec<Vec<f64>>,
        status: QpStatus,
        tol_mw: f64,
    ) -> Self {
        let n_t = generation.first().map_or(0, Vec::len);
        let mut flows = vec![vec![0.0; n_t]; network.n_branches()];
        for t in 0..n_t {
            let gen: Vec<f64> = generation.iter().map(|row| row[t]).collect();
            let f = flows_unchecked(network, &gen, &scenario.demand_at(first_interval + t));
            for (l, v) in f.into_iter().enumerate() {
                flows[l][t] = v;
            }
        }
        let production_cost = evaluate_cost(&generation, case, &vec![1.0; n_t]);
        let mut schedule = DispatchSchedule {
            first_interval,
            generation,
            flows,
            production_cost,
            status,
            feasibility: FeasibilityReport {
                tol_mw,
                balance: 0.0,
                bounds: 0.0,
                ramp: 0.0,
                flow: 0.0,
                passed: true,
            },
        };
        schedule.feasibility = check_feasibility(&schedule, case, network, scenario, tol_mw);
        schedule
    }

    /// Writes `unit,interval,p_mw` rows; intervals are 1-based global indices.
    pub fn write_csv<W: Write>(&self, case: &GridCase, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["unit", "interval", "p_mw"])?;
        for (u, g) in case.generators.iter().enumerate() {
            for (t, p) in self.generation[u].iter().enumerate() {
                w.write_record([g.id.clone(), (self.first_interval + t + 1).to_string(), p.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn report(&self) -> ScheduleReport {
        ScheduleReport { cost: self.production_cost, status: self.status, violations: self.feasibility.clone() }
    }
}

/// JSON summary of a schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleReport {
    pub cost: f64,
    pub status: QpStatus,
    pub violations: FeasibilityReport,
}

/// Default feasibility tolerance: 1e-4 per-unit on the case base.
pub fn default_feasibility_tol(case: &GridCase) -> f64 {
    1e-4 * case.base_power
}

/// Splits a variable vector laid out as in [`EdProblemSpec::var`] into
/// `generation[unit][t]`.
pub fn generation_from_x(x: &[f64], n_units: usize) -> Vec<Vec<f64>> {
    let n_t = x.len().checked_div(n_units).unwrap_or(0);
    (0..n_units).map(|u| (0..n_t).map(|t| x[t * n_units + u]).collect()).collect()
}

/// Solves a single window and returns the raw generation matrix and status.
pub fn solve_spec(spec: &EdProblemSpec, opts: &QpOptions) -> Result<(Vec<Vec<f64>>, QpStatus), EdError> {
    let model = assemble_ed_model(spec)?;
    let sol = solve_with_lazy_rows(&model.qp, &model.lazy_rows, &mut Vec::new(), opts)?;
    if sol.status == QpStatus::Infeasible {
        return Err(EdError::Infeasible(sol.infeasible_kinds));
    }
    Ok((generation_from_x(&sol.x, spec.case.n_units()), sol.status))
}

/// One QP over the whole horizon.
pub fn solve_centralized(
    case: &GridCase,
    network: &NetworkModel,
    scenario: &ScenarioData,
    opts: &QpOptions,
) -> Result<DispatchSchedule, EdError> {
    scenario.check_against(case).map_err(|e| EdError::Dimension(e.to_string()))?;
    let reserve = validate_reserve(case, scenario);
    if !reserve.passed {
        return Err(EdError::Reserve(reserve.failing_intervals()));
    }
    let spec = EdProblemSpec::for_window(case, network, scenario, 0..scenario.n_intervals);
    let (generation, status) = solve_spec(&spec, opts)?;
    Ok(DispatchSchedule::from_generation(
        case,
        network,
        scenario,
        0,
        generation,
        status,
        default_feasibility_tol(case),
    ))
}

/// `sum_t w_t sum_u (a_u p^2 + b_u p + c_u)`.
pub fn evaluate_cost(generation: &[Vec<f64>], case: &GridCase, weights: &[f64]) -> f64 {
    let mut total = 0.0;
    for (t, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let hourly: f64 = case.generators.iter().zip(generation).map(|(g, row)| g.cost(row[t])).sum();
        total += w * hourly;
    }
    total
}

/// Re-evaluates the balance, bound, ramp and flow constraints of
/// `schedule` against the scenario.
pub fn check_feasibility(
    schedule: &DispatchSchedule,
    case: &GridCase,
    network: &NetworkModel,
    scenario: &ScenarioData,
    tol_mw: f64,
) -> FeasibilityReport {
    let gen = &schedule.generation;
    let n_t = schedule.n_intervals();
    let (mut balance, mut bounds, mut ramp, mut flow) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);

    for t in 0..n_t {
        let global = schedule.first_interval + t;
        let out: Vec<f64> = gen.iter().map(|row| row[t]).collect();
        let demand = scenario.demand_at(global);
        balance = balance.max((out.iter().sum::<f64>() - demand.iter().sum::<f64>()).abs());
        for (g, &p) in case.generators.iter().zip(&out) {
            bounds = bounds.max(g.p_min - p).max(p - g.p_max);
        }
        for (l, f) in flows_unchecked(network, &out, &demand).into_iter().enumerate() {
            flow = flow.max(f.abs() - network.flow_limits[l]);
        }
    }

    for (u, g) in case.generators.iter().enumerate() {
        let row = &gen[u];
        let prev0 = if schedule.first_interval == 0 { g.p_initial } else { None };
        let pairs = prev0
            .into_iter()
            .zip(row.first().copied())
            .chain(row.windows(2).map(|w| (w[0], w[1])));
        for (prev, cur) in pairs {
            ramp = ramp.max(cur - prev - g.ramp_up).max(prev - cur - g.ramp_down);
        }
    }

    let (bounds, ramp, flow) = (bounds.max(0.0), ramp.max(0.0), flow.max(0.0));
    let passed = [balance, bounds, ramp, flow].iter().all(|v| *v <= tol_mw);
    FeasibilityReport { tol_mw, balance, bounds, ramp, flow, passed }
}
