//! DC network model: incidence matrices, shift factors (PTDF), line flows.

use std::collections::HashMap;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::case::{BusId, GridCase};

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("network is disconnected")]
    Disconnected,
    #[error("reduced susceptance matrix is singular")]
    Singular,
    #[error("injections are unbalanced by {mismatch_mw:.6} MW (tolerance {tol_mw:.3e} MW)")]
    Imbalance { mismatch_mw: f64, tol_mw: f64 },
    #[error("expected {expected} {what}, got {got}")]
    Dimension { what: &'static str, expected: usize, got: usize },
}

/// Immutable DC network model built from a [`GridCase`].
#[derive(Debug, Clone)]
pub struct NetworkModel {
    pub base_power: f64,
    pub slack_bus: BusId,
    pub bus_ids: Vec<BusId>,
    /// `[branch x bus]`, dimensionless.
    pub shift_factors: DMatrix<f64>,
    /// `[bus x generator]`, 0/1.
    pub gen_incidence: DMatrix<f64>,
    /// `[bus x load]`, 0/1.
    pub load_incidence: DMatrix<f64>,
    /// `[bus x branch]`, +1 at the from bus and -1 at the to bus.
    pub line_incidence: DMatrix<f64>,
    /// `SF * K_P`: flow on each branch per MW injected by each generator.
    pub gen_shift: DMatrix<f64>,
    /// `SF * K_D`: flow on each branch per MW consumed by each load.
    pub load_shift: DMatrix<f64>,
    /// Branch flow limits, MW.
    pub flow_limits: Vec<f64>,
}

impl NetworkModel {
    pub fn n_branches(&self) -> usize {
        self.shift_factors.nrows()
    }

    pub fn n_buses(&self) -> usize {
        self.bus_ids.len()
    }

    /// Balance tolerance for [`line_flows`]: 1e-6 per-unit.
    pub fn balance_tolerance_mw(&self) -> f64 {
        1e-6 * self.base_power
    }

    /// Net nodal injection `K_P gen - K_D demand`, MW.
    pub fn net_injection(&self, gen: &[f64], demand: &[f64]) -> DVector<f64> {
        &self.gen_incidence * DVector::from_column_slice(gen)
            - &self.load_incidence * DVector::from_column_slice(demand)
    }

    /// Writes the shift-factor matrix as CSV, one row per branch.
    pub fn write_sf_csv<W: Write>(&self, case: &GridCase, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["branch".to_string()];
        header.extend(self.bus_ids.iter().map(|b| format!("bus_{b}")));
        w.write_record(&header)?;
        for (l, br) in case.branches.iter().enumerate() {
            let mut rec = vec![br.id.clone()];
            rec.extend(self.shift_factors.row(l).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Builds incidence matrices and the shift-factor matrix against the slack bus.
///
/// With branch susceptances `b = 1/x`, the reduced nodal susceptance matrix
/// `B_r` (slack row and column removed) maps angles to injections; the flow on
/// branch `l = (f, t)` is `b_l (theta_f - theta_t)`, so the SF row is
/// `b_l (e_f - e_t)^T B_r^{-1}` padded with a zero slack column.
pub fn build_network(case: &GridCase) -> Result<NetworkModel, NetworkError> {
    if !case.is_connected() {
        return Err(NetworkError::Disconnected);
    }
    let n_bus = case.buses.len();
    let n_br = case.branches.len();
    let index: HashMap<BusId, usize> = case.buses.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    let slack = index[&case.slack_bus];

    let mut line_incidence = DMatrix::zeros(n_bus, n_br);
    for (l, br) in case.branches.iter().enumerate() {
        line_incidence[(index[&br.from_bus], l)] = 1.0;
        line_incidence[(index[&br.to_bus], l)] = -1.0;
    }
    let mut gen_incidence = DMatrix::zeros(n_bus, case.generators.len());
    for (u, g) in case.generators.iter().enumerate() {
        gen_incidence[(index[&g.bus], u)] = 1.0;
    }
    let mut load_incidence = DMatrix::zeros(n_bus, case.loads.len());
    for (d, ld) in case.loads.iter().enumerate() {
        load_incidence[(index[&ld.bus], d)] = 1.0;
    }

    // Reduced index: every bus except the slack.
    let reduced: Vec<Option<usize>> = {
        let mut next = 0;
        (0..n_bus)
            .map(|i| {
                if i == slack {
                    None
                } else {
                    next += 1;
                    Some(next - 1)
                }
            })
            .collect()
    };
    let n_red = n_bus - 1;

    let mut shift_factors = DMatrix::zeros(n_br, n_bus);
    if n_red > 0 && n_br > 0 {
        let mut b_red = DMatrix::<f64>::zeros(n_red, n_red);
        // Branch-to-bus susceptance rows, reduced columns.
        let mut b_flow = DMatrix::<f64>::zeros(n_br, n_red);
        for (l, br) in case.branches.iter().enumerate() {
            let b = 1.0 / br.reactance;
            let f = reduced[index[&br.from_bus]];
            let t = reduced[index[&br.to_bus]];
            if let Some(f) = f {
                b_red[(f, f)] += b;
                b_flow[(l, f)] = b;
            }
            if let Some(t) = t {
                b_red[(t, t)] += b;
                b_flow[(l, t)] = -b;
            }
            if let (Some(f), Some(t)) = (f, t) {
                b_red[(f, t)] -= b;
                b_red[(t, f)] -= b;
            }
        }
        // B_r is symmetric positive definite for a connected network.
        let chol = b_red.cholesky().ok_or(NetworkError::Singular)?;
        // SF_red^T = B_r^{-1} B_flow^T
        let sf_red = chol.solve(&b_flow.transpose()).transpose();
        for (i, r) in reduced.iter().enumerate() {
            if let Some(r) = *r {
                shift_factors.set_column(i, &sf_red.column(r));
            }
        }
    }

    let gen_shift = &shift_factors * &gen_incidence;
    let load_shift = &shift_factors * &load_incidence;
    Ok(NetworkModel {
        base_power: case.base_power,
        slack_bus: case.slack_bus,
        bus_ids: case.buses.clone(),
        shift_factors,
        gen_incidence,
        load_incidence,
        line_incidence,
        gen_shift,
        load_shift,
        flow_limits: case.branches.iter().map(|b| b.flow_limit).collect(),
    })
}

/// Branch flows `SF (K_P gen - K_D demand)` in MW for a balanced injection.
pub fn line_flows(model: &NetworkModel, gen: &[f64], demand: &[f64]) -> Result<Vec<f64>, NetworkError> {
    if gen.len() != model.gen_incidence.ncols() {
        return Err(NetworkError::Dimension {
            what: "generator outputs",
            expected: model.gen_incidence.ncols(),
            got: gen.len(),
        });
    }
    if demand.len() != model.load_incidence.ncols() {
        return Err(NetworkError::Dimension {
            what: "load demands",
            expected: model.load_incidence.ncols(),
            got: demand.len(),
        });
    }
    let mismatch = gen.iter().sum::<f64>() - demand.iter().sum::<f64>();
    let tol = model.balance_tolerance_mw();
    if mismatch.abs() > tol {
        return Err(NetworkError::Imbalance { mismatch_mw: mismatch, tol_mw: tol });
    }
    Ok(flows_unchecked(model, gen, demand))
}

/// Same as [`line_flows`] without the balance check; used when reporting
/// flows of schedules that may be slightly off balance.
pub(crate) fn flows_unchecked(model: &NetworkModel, gen: &[f64], demand: &[f64]) -> Vec<f64> {
    let flows = &model.gen_shift * DVector::from_column_slice(gen)
        - &model.load_shift * DVector::from_column_slice(demand);
    flows.iter().copied().collect()
}

/// `K_L P_L - (K_P gen - K_D demand)`: nodal conservation residual, MW.
pub fn conservation_residual(model: &NetworkModel, flows: &[f64], gen: &[f64], demand: &[f64]) -> DVector<f64> {
    &model.line_incidence * DVector::from_column_slice(flows) - model.net_injection(gen, demand)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::{Branch, Generator, Load};

    fn gen_at(id: &str, bus: BusId) -> Generator {
        Generator {
            id: id.into(),
            bus,
            p_min: 0.0,
            p_max: 100.0,
            cost_a: 0.1,
            cost_b: 10.0,
            cost_c: 0.0,
            ramp_up: 100.0,
            ramp_down: 100.0,
            p_initial: None,
        }
    }

    fn line(id: &str, from: BusId, to: BusId, x: f64) -> Branch {
        Branch { id: id.into(), from_bus: from, to_bus: to, reactance: x, flow_limit: 1000.0 }
    }

    fn two_bus() -> GridCase {
        GridCase {
            base_power: 100.0,
            slack_bus: 1,
            buses: vec![1, 2],
            branches: vec![line("l12", 1, 2, 0.1)],
            generators: vec![gen_at("g1", 1)],
            loads: vec![Load { id: "d2".into(), bus: 2 }],
        }
    }

    #[test]
    fn two_bus_shift_factors() {
        let net = build_network(&two_bus()).unwrap();
        assert_eq!(net.shift_factors.shape(), (1, 2));
        assert_eq!(net.shift_factors[(0, 0)], 0.0);
        assert!((net.shift_factors[(0, 1)] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_bus_flow_follows_transfer() {
        let net = build_network(&two_bus()).unwrap();
        let f = line_flows(&net, &[50.0], &[50.0]).unwrap();
        assert!((f[0] - 50.0).abs() < 1e-9);
        assert_eq!(line_flows(&net, &[0.0], &[0.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn imbalance_is_rejected() {
        let net = build_network(&two_bus()).unwrap();
        assert!(matches!(line_flows(&net, &[50.0], &[49.0]), Err(NetworkError::Imbalance { .. })));
    }

    #[test]
    fn incidence_columns() {
        let net = build_network(&two_bus()).unwrap();
        assert_eq!(net.line_incidence.column(0).iter().copied().collect::<Vec<_>>(), vec![1.0, -1.0]);
        assert_eq!(net.gen_incidence.column(0).sum(), 1.0);
        assert_eq!(net.load_incidence.column(0).sum(), 1.0);
    }

    #[test]
    fn single_bus_has_no_branches() {
        let case = GridCase {
            base_power: 100.0,
            slack_bus: 1,
            buses: vec![1],
            branches: vec![],
            generators: vec![gen_at("g1", 1)],
            loads: vec![],
        };
        let net = build_network(&case).unwrap();
        assert_eq!(net.n_branches(), 0);
        assert!(line_flows(&net, &[0.0], &[]).unwrap().is_empty());
    }
}
