#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use timesplit::case::{Branch, Generator, Load};
use timesplit::synthetic::{generate, SyntheticConfig};
use timesplit::{GridCase, ScenarioData};

pub fn unit(id: &str, bus: u32, a: f64, b: f64, p_max: f64, ramp: f64) -> Generator {
    Generator {
        id: id.into(),
        bus,
        p_min: 0.0,
        p_max,
        cost_a: a,
        cost_b: b,
        cost_c: 0.0,
        ramp_up: ramp,
        ramp_down: ramp,
        p_initial: None,
    }
}

pub fn single_bus(generators: Vec<Generator>) -> GridCase {
    GridCase {
        base_power: 100.0,
        slack_bus: 1,
        buses: vec![1],
        branches: vec![],
        generators,
        loads: vec![Load { id: "D1".into(), bus: 1 }],
    }
}

pub fn branch(id: &str, from: u32, to: u32, x: f64, limit: f64) -> Branch {
    Branch { id: id.into(), from_bus: from, to_bus: to, reactance: x, flow_limit: limit }
}

/// Triangle 1-2-3 with branches (1,2), (2,3), (3,1); one unit and one load
/// on every bus.
pub fn triangle(x: [f64; 3], limit: f64) -> GridCase {
    GridCase {
        base_power: 100.0,
        slack_bus: 1,
        buses: vec![1, 2, 3],
        branches: vec![branch("L12", 1, 2, x[0], limit), branch("L23", 2, 3, x[1], limit), branch("L31", 3, 1, x[2], limit)],
        generators: (1..=3).map(|b| unit(&format!("G{b}"), b, 0.01, 10.0 + b as f64, 500.0, 500.0)).collect(),
        loads: (1..=3).map(|b| Load { id: format!("D{b}"), bus: b }).collect(),
    }
}

pub fn single_load_scenario(demand: &[f64]) -> ScenarioData {
    ScenarioData::new(vec![demand.to_vec()], vec![0.0; demand.len()]).unwrap()
}

/// DC power flow by solving `B theta = P` on the full nodal susceptance
/// matrix with the slack angle pinned to zero. Injections in MW, per bus in
/// `case.buses` order; flows in MW per branch.
pub fn dc_flow_oracle(case: &GridCase, injection_mw: &[f64]) -> Vec<f64> {
    let n = case.buses.len();
    let pos = |b: u32| case.buses.iter().position(|&x| x == b).unwrap();
    let mut b = DMatrix::<f64>::zeros(n + 1, n + 1);
    for br in &case.branches {
        let (i, j) = (pos(br.from_bus), pos(br.to_bus));
        let y = 1.0 / br.reactance;
        b[(i, i)] += y;
        b[(j, j)] += y;
        b[(i, j)] -= y;
        b[(j, i)] -= y;
    }
    // Bordered system: the extra row/column pins the slack angle.
    let s = pos(case.slack_bus);
    b[(n, s)] = 1.0;
    b[(s, n)] = 1.0;
    let mut rhs = DVector::<f64>::zeros(n + 1);
    for k in 0..n {
        rhs[k] = injection_mw[k] / case.base_power;
    }
    let theta = b.lu().solve(&rhs).expect("connected network");
    case.branches
        .iter()
        .map(|br| (theta[pos(br.from_bus)] - theta[pos(br.to_bus)]) / br.reactance * case.base_power)
        .collect()
}

/// Per-bus net injection of a dispatch.
pub fn bus_injection(case: &GridCase, gen: &[f64], demand: &[f64]) -> Vec<f64> {
    let pos = |b: u32| case.buses.iter().position(|&x| x == b).unwrap();
    let mut inj = vec![0.0; case.buses.len()];
    for (g, p) in case.generators.iter().zip(gen) {
        inj[pos(g.bus)] += p;
    }
    for (l, d) in case.loads.iter().zip(demand) {
        inj[pos(l.bus)] -= d;
    }
    inj
}

/// Small random instance in the ranges of the oracle-equivalence check:
/// 2-5 buses, 2-4 units, 8-24 intervals divisible by 2-4 sub-horizons.
pub fn small_instance(seed: u64) -> (GridCase, ScenarioData, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n_buses = rng.gen_range(2..=5);
    let n_units = rng.gen_range(2..=4);
    let n_sub = rng.gen_range(2..=4);
    let per_sub_max = 24 / n_sub;
    let per_sub_min = 8usize.div_ceil(n_sub);
    let horizon = n_sub * rng.gen_range(per_sub_min..=per_sub_max);
    let mut cfg = SyntheticConfig::new(n_buses, seed, horizon).with_units(n_units);
    cfg.n_loads = Some(rng.gen_range(1..=n_buses));
    let (case, scenario) = generate(&cfg).expect("small synthetic instance");
    (case, scenario, n_sub)
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}
