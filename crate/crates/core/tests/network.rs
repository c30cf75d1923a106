mod common;

use common::{bus_injection, dc_flow_oracle, triangle};
use proptest::prelude::*;
use timesplit::network::conservation_residual;
use timesplit::synthetic::generate_synthetic_case;
use timesplit::{build_network, line_flows};

#[test]
fn triangle_splits_two_thirds_one_third() {
    let case = triangle([0.1, 0.1, 0.1], 100.0);
    let net = build_network(&case).unwrap();
    // 1 MW from bus 2 to bus 1: unit 2 produces, load 1 consumes.
    let flows = line_flows(&net, &[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0]).unwrap();
    // L12 is oriented 1->2, so the direct 2->1 transfer shows as negative.
    assert!((flows[0] + 2.0 / 3.0).abs() <= 1e-9, "{flows:?}");
    assert!((flows[1] - 1.0 / 3.0).abs() <= 1e-9);
    assert!((flows[2] - 1.0 / 3.0).abs() <= 1e-9);

    let oracle = dc_flow_oracle(&case, &[-1.0, 1.0, 0.0]);
    for (f, o) in flows.iter().zip(&oracle) {
        assert!((f - o).abs() <= 1e-9);
    }
}

#[test]
fn slack_column_is_zero_on_118_bus_case() {
    let (case, _) = generate_synthetic_case(118, 4, 24).unwrap();
    let net = build_network(&case).unwrap();
    let s = net.bus_ids.iter().position(|&b| b == case.slack_bus).unwrap();
    assert!(net.shift_factors.column(s).iter().all(|&v| v == 0.0));
}

#[test]
fn flows_match_oracle_on_118_bus_case() {
    let (case, scenario) = generate_synthetic_case(118, 4, 24).unwrap();
    let net = build_network(&case).unwrap();
    let demand = scenario.demand_at(5);
    let total: f64 = demand.iter().sum();
    let cap: f64 = case.generators.iter().map(|g| g.p_max).sum();
    let gen: Vec<f64> = case.generators.iter().map(|g| g.p_max * total / cap).collect();
    let flows = line_flows(&net, &gen, &demand).unwrap();
    let oracle = dc_flow_oracle(&case, &bus_injection(&case, &gen, &demand));
    for (f, o) in flows.iter().zip(&oracle) {
        assert!((f - o).abs() <= 1e-9 * case.base_power, "{f} vs {o}");
    }
}

fn balanced(raw_gen: &[f64], raw_load: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let total_g: f64 = raw_gen.iter().sum();
    let total_d: f64 = raw_load.iter().sum();
    let load = raw_load.iter().map(|d| d * total_g / total_d).collect();
    (raw_gen.to_vec(), load)
}

proptest! {
    #[test]
    fn triangle_flows_match_oracle(
        gen in prop::collection::vec(0.0..200.0f64, 3),
        load in prop::collection::vec(1.0..200.0f64, 3),
    ) {
        let case = triangle([0.1, 0.2, 0.15], 1000.0);
        let net = build_network(&case).unwrap();
        let (gen, load) = balanced(&gen, &load);
        let flows = line_flows(&net, &gen, &load).unwrap();
        let oracle = dc_flow_oracle(&case, &bus_injection(&case, &gen, &load));
        for (f, o) in flows.iter().zip(&oracle) {
            prop_assert!((f - o).abs() <= 1e-9 * case.base_power);
        }
    }

    #[test]
    fn conservation_residual_is_tiny(
        seed in 0u64..1000,
        weights in prop::collection::vec(0.0..1.0f64, 8),
    ) {
        let (case, scenario) = generate_synthetic_case(12, seed, 4).unwrap();
        let net = build_network(&case).unwrap();
        let demand = scenario.demand_at(0);
        let raw: Vec<f64> = (0..case.n_units()).map(|u| weights[u % weights.len()] + 0.01).collect();
        let (gen, demand) = balanced(&raw, &demand);
        let flows = line_flows(&net, &gen, &demand).unwrap();
        let residual = conservation_residual(&net, &flows, &gen, &demand);
        prop_assert!(residual.amax() <= 1e-9 * case.base_power);
    }

    #[test]
    fn reactance_scaling_leaves_sf_unchanged(k in 0.01..100.0f64) {
        let case = triangle([0.1, 0.2, 0.15], 100.0);
        let mut scaled = case.clone();
        for br in &mut scaled.branches {
            br.reactance *= k;
        }
        let a = build_network(&case).unwrap().shift_factors;
        let b = build_network(&scaled).unwrap().shift_factors;
        prop_assert!((a - b).amax() <= 1e-9);
    }

    #[test]
    fn flows_are_linear(
        x in prop::collection::vec(0.0..100.0f64, 3),
        y in prop::collection::vec(0.0..100.0f64, 3),
        alpha in -3.0..3.0f64,
        beta in -3.0..3.0f64,
    ) {
        let case = triangle([0.1, 0.2, 0.15], 100.0);
        let net = build_network(&case).unwrap();
        // Each injection is balanced by an equal load on bus 1.
        let as_pair = |g: &[f64], s: f64| {
            let gen: Vec<f64> = g.iter().map(|v| v * s).collect();
            let total: f64 = gen.iter().sum();
            (gen, vec![total, 0.0, 0.0])
        };
        let (gx, dx) = as_pair(&x, 1.0);
        let (gy, dy) = as_pair(&y, 1.0);
        let combined_g: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| alpha * a + beta * b).collect();
        let combined_d: Vec<f64> = dx.iter().zip(&dy).map(|(a, b)| alpha * a + beta * b).collect();
        let fx = line_flows(&net, &gx, &dx).unwrap();
        let fy = line_flows(&net, &gy, &dy).unwrap();
        let fz = line_flows(&net, &combined_g, &combined_d).unwrap();
        for l in 0..3 {
            prop_assert!((fz[l] - (alpha * fx[l] + beta * fy[l])).abs() <= 1e-9 * (1.0 + fz[l].abs()));
        }
    }
}
