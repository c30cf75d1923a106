//! Seeded synthetic benchmark cases.
//!
//! The generator builds a random connected network, a fleet of quadratic-cost
//! units and a weekly demand shape (daily sinusoid scaled by a weekday or
//! weekend factor). A proportional "witness" dispatch is constructed for every
//! interval and ramp rates and line limits are set around it, so every
//! generated instance has at least one feasible schedule.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::case::{validate_reserve, Branch, CaseError, GridCase, Generator, Load, ScenarioData};
use crate::network::{build_network, flows_unchecked};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n_buses: usize,
    pub seed: u64,
    pub horizon: usize,
    /// Defaults to roughly 54 units per 118 buses.
    pub n_units: Option<usize>,
    /// Defaults to roughly 91 loads per 118 buses.
    pub n_loads: Option<usize>,
    /// Reserve requirement as a fraction of total demand.
    pub reserve_fraction: f64,
}

impl SyntheticConfig {
    pub fn new(n_buses: usize, seed: u64, horizon: usize) -> Self {
        SyntheticConfig { n_buses, seed, horizon, n_units: None, n_loads: None, reserve_fraction: 0.05 }
    }

    pub fn with_units(mut self, n_units: usize) -> Self {
        self.n_units = Some(n_units);
        self
    }
}

/// Case and scenario from `(n_buses, seed, horizon)` with default proportions.
pub fn generate_synthetic_case(n_buses: usize, seed: u64, horizon: usize) -> Result<(GridCase, ScenarioData), CaseError> {
    generate(&SyntheticConfig::new(n_buses, seed, horizon))
}

fn round_to(x: f64, digits: i32) -> f64 {
    let s = 10f64.powi(digits);
    (x * s).round() / s
}

fn ceil_to(x: f64, digits: i32) -> f64 {
    let s = 10f64.powi(digits);
    (x * s).ceil() / s
}

pub fn generate(cfg: &SyntheticConfig) -> Result<(GridCase, ScenarioData), CaseError> {
    let n = cfg.n_buses;
    if n < 2 {
        return Err(CaseError::Invariant(format!("synthetic case needs at least 2 buses, got {n}")));
    }
    if cfg.horizon < 2 {
        return Err(CaseError::Invariant(format!("synthetic horizon must be at least 2, got {}", cfg.horizon)));
    }
    let n_units = cfg.n_units.unwrap_or(((n as f64) * 54.0 / 118.0).round().max(1.0) as usize);
    let n_loads = cfg.n_loads.unwrap_or(((n as f64) * 91.0 / 118.0).round().max(1.0) as usize);
    if n_units == 0 || n_loads == 0 {
        return Err(CaseError::Invariant("synthetic case needs at least one unit and one load".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let buses: Vec<u32> = (1..=n as u32).collect();

    // Spanning tree with mostly local links, then extra meshing branches.
    let mut edges: Vec<(u32, u32)> = Vec::new();
    for i in 2..=n as u32 {
        let reach = (i - 1).min(3);
        let j = i - 1 - rng.gen_range(0..reach);
        edges.push((j, i));
    }
    let extra = ((n as f64) * 69.0 / 118.0).round() as usize;
    let mut attempts = 0;
    while edges.len() < n - 1 + extra && attempts < 50 * (extra + 1) {
        attempts += 1;
        let a = rng.gen_range(1..=n as u32);
        let span = rng.gen_range(2..=6u32);
        let b = a + span;
        if b > n as u32 || edges.iter().any(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a)) {
            continue;
        }
        edges.push((a, b));
    }
    let mut branches: Vec<Branch> = edges
        .iter()
        .enumerate()
        .map(|(k, &(f, t))| Branch {
            id: format!("L{}", k + 1),
            from_bus: f,
            to_bus: t,
            reactance: round_to(rng.gen_range(0.03..0.25), 4),
            flow_limit: 1.0,
        })
        .collect();

    let mut gen_buses = buses.clone();
    gen_buses.shuffle(&mut rng);
    let mut generators: Vec<Generator> = (0..n_units)
        .map(|u| {
            let large = rng.gen_bool(0.4);
            let p_max = if large { rng.gen_range(200.0..450.0) } else { rng.gen_range(50.0..150.0) };
            let (a, b) = if large {
                (rng.gen_range(0.002..0.01), rng.gen_range(12.0..22.0))
            } else {
                (rng.gen_range(0.01..0.04), rng.gen_range(20.0..40.0))
            };
            let p_max = round_to(p_max, 1);
            Generator {
                id: format!("G{}", u + 1),
                bus: gen_buses[u % n],
                p_min: round_to(p_max * rng.gen_range(0.05..0.25), 1),
                p_max,
                cost_a: round_to(a, 5),
                cost_b: round_to(b, 3),
                cost_c: round_to(rng.gen_range(100.0..600.0), 1),
                ramp_up: round_to(p_max * rng.gen_range(0.15..0.5), 1),
                ramp_down: round_to(p_max * rng.gen_range(0.15..0.5), 1),
                p_initial: None,
            }
        })
        .collect();

    let mut load_buses = buses.clone();
    load_buses.shuffle(&mut rng);
    let loads: Vec<Load> = (0..n_loads)
        .map(|d| Load { id: format!("D{}", d + 1), bus: load_buses[d % n] })
        .collect();
    let shares: Vec<f64> = {
        let raw: Vec<f64> = (0..n_loads).map(|_| rng.gen_range(0.5..1.5)).collect();
        let total: f64 = raw.iter().sum();
        raw.iter().map(|w| w / total).collect()
    };

    let capacity: f64 = generators.iter().map(|g| g.p_max).sum();
    let floor: f64 = generators.iter().map(|g| g.p_min).sum();
    let peak = 0.72 * capacity;
    let day_factor = |day: usize| match day % 7 {
        5 => 0.88,
        6 => 0.85,
        _ => 1.0,
    };
    let mut demand = vec![vec![0.0; cfg.horizon]; n_loads];
    let mut reserve = vec![0.0; cfg.horizon];
    for t in 0..cfg.horizon {
        let hour = (t % 24) as f64;
        let shape = 0.78 + 0.22 * (2.0 * std::f64::consts::PI * (hour - 9.0) / 24.0).sin();
        let total = peak * shape * day_factor(t / 24);
        for d in 0..n_loads {
            let noise = 1.0 + rng.gen_range(-0.03..0.03);
            demand[d][t] = round_to(total * shares[d] * noise, 2);
        }
        let realized: f64 = demand.iter().map(|row| row[t]).sum();
        reserve[t] = round_to(cfg.reserve_fraction * realized, 2);
    }
    let totals: Vec<f64> = (0..cfg.horizon).map(|t| demand.iter().map(|row| row[t]).sum()).collect();
    if totals.iter().any(|&d| d < floor) {
        // Lift demand so the units' minimum outputs can always be absorbed.
        let lift = floor * 1.05 / totals.iter().cloned().fold(f64::INFINITY, f64::min);
        for row in demand.iter_mut() {
            for v in row.iter_mut() {
                *v = round_to(*v * lift, 2);
            }
        }
    }

    // Witness: every unit moves proportionally to its headroom.
    let witness: Vec<Vec<f64>> = (0..cfg.horizon)
        .map(|t| {
            let total: f64 = demand.iter().map(|row| row[t]).sum();
            let frac = ((total - floor) / (capacity - floor)).clamp(0.0, 1.0);
            generators.iter().map(|g| g.p_min + frac * (g.p_max - g.p_min)).collect()
        })
        .collect();
    for (u, g) in generators.iter_mut().enumerate() {
        let worst_up = witness.windows(2).map(|w| w[1][u] - w[0][u]).fold(0.0_f64, f64::max);
        let worst_down = witness.windows(2).map(|w| w[0][u] - w[1][u]).fold(0.0_f64, f64::max);
        g.ramp_up = g.ramp_up.max(ceil_to(1.1 * worst_up, 1));
        g.ramp_down = g.ramp_down.max(ceil_to(1.1 * worst_down, 1));
    }

    let mut case = GridCase {
        base_power: 100.0,
        slack_bus: 1,
        buses,
        branches: branches.clone(),
        generators,
        loads,
    };
    let network = build_network(&case).map_err(|e| CaseError::Invariant(e.to_string()))?;
    let mut worst_flow = vec![0.0_f64; branches.len()];
    for (t, gen) in witness.iter().enumerate() {
        let d: Vec<f64> = demand.iter().map(|row| row[t]).collect();
        for (l, f) in flows_unchecked(&network, gen, &d).into_iter().enumerate() {
            worst_flow[l] = worst_flow[l].max(f.abs());
        }
    }
    for (l, br) in branches.iter_mut().enumerate() {
        let factor = if rng.gen_bool(0.2) { rng.gen_range(1.05..1.25) } else { rng.gen_range(1.5..3.0) };
        br.flow_limit = ceil_to((worst_flow[l] * factor).max(10.0), 1);
    }
    case.branches = branches;
    case.validate()?;

    let scenario = ScenarioData::new(demand, reserve)?;
    debug_assert!(validate_reserve(&case, &scenario).passed);
    Ok((case, scenario))
}
