//! Horizontal (time) decomposition of the scheduling horizon.
//!
//! The horizon is cut into equal sub-horizons. Every sub-horizon except the
//! last carries one extra coupling interval that duplicates the first hour of
//! its right neighbour; the unit outputs in that hour are the shared
//! variables coordinated across the boundary.

use std::ops::Range;

use serde::Serialize;
use thiserror::Error;

use crate::case::{GridCase, ScenarioData};
use crate::dispatch::{EdProblemSpec, RampAnchor};
use crate::network::NetworkModel;

#[derive(Debug, Error, PartialEq)]
pub enum DecompositionError {
    #[error("need at least 2 sub-horizons, got {0}")]
    TooFewSubHorizons(usize),
    #[error("{n_intervals} intervals cannot be split into {n_sub} equal sub-horizons")]
    NonDivisible { n_intervals: usize, n_sub: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubHorizon {
    /// 0-based position in the split.
    pub index: usize,
    /// Global 0-based indices of the intervals this sub-horizon owns.
    pub real: Range<usize>,
    /// Global index of the duplicated hour, i.e. the right neighbour's first
    /// real interval.
    pub coupling: Option<usize>,
    /// Boundary shared with the previous sub-horizon (boundary `b` joins
    /// sub-horizons `b` and `b + 1`).
    pub left_boundary: Option<usize>,
    pub right_boundary: Option<usize>,
}

impl SubHorizon {
    /// Number of intervals in the subproblem, coupling hour included.
    pub fn len(&self) -> usize {
        self.real.len() + usize::from(self.coupling.is_some())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Global interval range of the subproblem, coupling hour included.
    pub fn span(&self) -> Range<usize> {
        self.real.start..self.real.start + self.len()
    }
}

pub fn split_horizon(n_intervals: usize, n_sub: usize) -> Result<Vec<SubHorizon>, DecompositionError> {
    if n_sub < 2 {
        return Err(DecompositionError::TooFewSubHorizons(n_sub));
    }
    if !n_intervals.is_multiple_of(n_sub) || n_intervals == 0 {
        return Err(DecompositionError::NonDivisible { n_intervals, n_sub });
    }
    let width = n_intervals / n_sub;
    Ok((0..n_sub)
        .map(|n| {
            let last = n + 1 == n_sub;
            SubHorizon {
                index: n,
                real: n * width..(n + 1) * width,
                coupling: (!last).then_some((n + 1) * width),
                left_boundary: n.checked_sub(1),
                right_boundary: (!last).then_some(n),
            }
        })
        .collect())
}

/// ED window for a sub-horizon: real intervals at weight 1 plus the coupling
/// hour at weight 0, with ramping enforced across the whole window.
pub fn build_subproblem_spec<'a>(
    sub: &SubHorizon,
    case: &'a GridCase,
    network: &'a NetworkModel,
    scenario: &ScenarioData,
) -> EdProblemSpec<'a> {
    let mut spec = EdProblemSpec::for_window(case, network, scenario, sub.span());
    if sub.coupling.is_some() {
        *spec.weights.last_mut().expect("non-empty window") = 0.0;
    }
    spec
}

/// ED window over the real intervals only, ignoring the coupling hour and
/// any ramp link to the previous sub-horizon.
pub fn build_independent_spec<'a>(
    sub: &SubHorizon,
    case: &'a GridCase,
    network: &'a NetworkModel,
    scenario: &ScenarioData,
) -> EdProblemSpec<'a> {
    let mut spec = EdProblemSpec::for_window(case, network, scenario, sub.real.clone());
    spec.ramp_anchor = if sub.real.start == 0 { RampAnchor::from_initial(case) } else { None };
    spec
}

#[derive(Debug, Serialize)]
struct SplitPlanEntry {
    index: usize,
    /// 1-based, inclusive.
    first_interval: usize,
    last_interval: usize,
    coupling_interval: Option<usize>,
    left_boundary: Option<usize>,
    right_boundary: Option<usize>,
}

/// JSON description of a split with 1-based interval numbers.
pub fn split_plan_json(subs: &[SubHorizon]) -> String {
    let entries: Vec<SplitPlanEntry> = subs
        .iter()
        .map(|s| SplitPlanEntry {
            index: s.index + 1,
            first_interval: s.real.start + 1,
            last_interval: s.real.end,
            coupling_interval: s.coupling.map(|c| c + 1),
            left_boundary: s.left_boundary.map(|b| b + 1),
            right_boundary: s.right_boundary.map(|b| b + 1),
        })
        .collect();
    serde_json::to_string_pretty(&entries).expect("split plan serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispatch::tests::{single_bus, unit};
    use crate::network::build_network;

    #[test]
    fn weekly_split() {
        let subs = split_horizon(168, 7).unwrap();
        assert_eq!(subs.len(), 7);
        for s in &subs[..6] {
            assert_eq!(s.real.len(), 24);
            assert_eq!(s.len(), 25);
            assert_eq!(s.coupling, Some(s.real.end));
        }
        assert_eq!(subs[6].len(), 24);
        assert_eq!(subs[6].coupling, None);
        assert_eq!(subs[0].left_boundary, None);
        assert_eq!(subs[6].right_boundary, None);
    }

    #[test]
    fn smallest_split() {
        let subs = split_horizon(4, 2).unwrap();
        assert_eq!(subs[0].real, 0..2);
        assert_eq!(subs[0].coupling, Some(2));
        assert_eq!(subs[1].real, 2..4);
        assert_eq!(subs[1].left_boundary, Some(0));
    }

    #[test]
    fn rejects_bad_splits() {
        assert_eq!(
            split_horizon(5, 2).unwrap_err(),
            DecompositionError::NonDivisible { n_intervals: 5, n_sub: 2 }
        );
        assert!(split_horizon(4, 1).is_err());
    }

    #[test]
    fn subproblem_specs() {
        let case = single_bus(vec![unit("g", 0.1, 10.0, 0.0, 1000.0, 500.0)]);
        let net = build_network(&case).unwrap();
        let demand: Vec<f64> = (0..168).map(|t| 100.0 + t as f64).collect();
        let sc = ScenarioData::new(vec![demand], vec![0.0; 168]).unwrap();
        let subs = split_horizon(168, 7).unwrap();

        let first = build_subproblem_spec(&subs[0], &case, &net, &sc);
        assert_eq!(first.n_intervals(), 25);
        let mut expected = vec![1.0; 24];
        expected.push(0.0);
        assert_eq!(first.weights, expected);
        assert_eq!(first.demand[24], sc.demand_at(24));

        let last = build_subproblem_spec(&subs[6], &case, &net, &sc);
        assert_eq!(last.n_intervals(), 24);
        assert!(last.weights.iter().all(|&w| w == 1.0));
        assert_eq!(last.first_interval, 144);

        for pair in subs.windows(2) {
            let left = build_subproblem_spec(&pair[0], &case, &net, &sc);
            let right = build_subproblem_spec(&pair[1], &case, &net, &sc);
            assert_eq!(left.demand.last(), right.demand.first());
        }

        let mut rebuilt = Vec::new();
        for s in &subs {
            let spec = build_subproblem_spec(s, &case, &net, &sc);
            rebuilt.extend(spec.demand[..s.real.len()].iter().map(|row| row[0]));
        }
        assert_eq!(rebuilt, sc.demand[0]);
    }

    #[test]
    fn split_plan_is_one_based() {
        let plan = split_plan_json(&split_horizon(4, 2).unwrap());
        let v: serde_json::Value = serde_json::from_str(&plan).unwrap();
        assert_eq!(v[0]["first_interval"], 1);
        assert_eq!(v[0]["coupling_interval"], 3);
        assert_eq!(v[1]["coupling_interval"], serde_json::Value::Null);
    }
}
