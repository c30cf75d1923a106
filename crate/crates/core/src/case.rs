//! Grid and scenario data: types, invariant checks, and file ingestion.
//!
//! A [`GridCase`] is the static part of an instance (buses, branches,
//! generators, loads). A [`ScenarioData`] holds the per-interval demand of
//! every load plus the system reserve requirement. Both are immutable once
//! validated and are shared by reference across parallel workers.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

/// Bus identifier as it appears in case files.
pub type BusId = u32;

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path} at line {line}, column {column} (field `{field}`): {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        field: String,
        message: String,
    },
    #[error("invalid case: {0}")]
    Invariant(String),
    #[error("invalid scenario: {0}")]
    Scenario(String),
}

fn id_from_any<'de, D: Deserializer<'de>>(de: D) -> Result<String, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum AnyId {
        Str(String),
        Int(i64),
    }
    Ok(match AnyId::deserialize(de)? {
        AnyId::Str(s) => s,
        AnyId::Int(i) => i.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    #[serde(deserialize_with = "id_from_any")]
    pub id: String,
    #[serde(rename = "from")]
    pub from_bus: BusId,
    #[serde(rename = "to")]
    pub to_bus: BusId,
    /// Series reactance in per-unit.
    #[serde(rename = "x")]
    pub reactance: f64,
    #[serde(rename = "limit_mw")]
    pub flow_limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    #[serde(deserialize_with = "id_from_any")]
    pub id: String,
    pub bus: BusId,
    pub p_min: f64,
    pub p_max: f64,
    /// Quadratic cost coefficient, $/MW²h.
    #[serde(rename = "a")]
    pub cost_a: f64,
    /// Linear cost coefficient, $/MWh.
    #[serde(rename = "b")]
    pub cost_b: f64,
    /// No-load cost, $/h.
    #[serde(rename = "c")]
    pub cost_c: f64,
    /// MW per interval.
    pub ramp_up: f64,
    /// MW per interval.
    pub ramp_down: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_initial: Option<f64>,
}

impl Generator {
    /// Hourly production cost at output `p` (MW).
    pub fn cost(&self, p: f64) -> f64 {
        self.cost_a * p * p + self.cost_b * p + self.cost_c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Load {
    #[serde(deserialize_with = "id_from_any")]
    pub id: String,
    pub bus: BusId,
}

/// Static network and generator data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCase {
    #[serde(rename = "base_mva")]
    pub base_power: f64,
    pub slack_bus: BusId,
    pub buses: Vec<BusId>,
    #[serde(default)]
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
    #[serde(default)]
    pub loads: Vec<Load>,
}

impl GridCase {
    pub fn n_units(&self) -> usize {
        self.generators.len()
    }

    /// Checks every structural and numerical invariant of the case.
    pub fn validate(&self) -> Result<(), CaseError> {
        let fail = |msg: String| Err(CaseError::Invariant(msg));

        if !(self.base_power.is_finite() && self.base_power > 0.0) {
            return fail(format!("base_mva must be positive, got {}", self.base_power));
        }
        let mut bus_set = HashSet::with_capacity(self.buses.len());
        for &b in &self.buses {
            if !bus_set.insert(b) {
                return fail(format!("duplicate bus id {b}"));
            }
        }
        if !bus_set.contains(&self.slack_bus) {
            return fail(format!("slack bus {} is not in buses", self.slack_bus));
        }
        if self.generators.is_empty() {
            return fail("case must contain at least one generator".into());
        }

        check_unique_ids("branch", self.branches.iter().map(|b| b.id.as_str()))?;
        check_unique_ids("generator", self.generators.iter().map(|g| g.id.as_str()))?;
        check_unique_ids("load", self.loads.iter().map(|l| l.id.as_str()))?;

        for br in &self.branches {
            for end in [br.from_bus, br.to_bus] {
                if !bus_set.contains(&end) {
                    return fail(format!("branch {} references unknown bus {end}", br.id));
                }
            }
            if br.from_bus == br.to_bus {
                return fail(format!("branch {} connects bus {} to itself", br.id, br.from_bus));
            }
            if !(br.reactance.is_finite() && br.reactance > 0.0) {
                return fail(format!("branch {} reactance must be > 0, got {}", br.id, br.reactance));
            }
            if !(br.flow_limit.is_finite() && br.flow_limit > 0.0) {
                return fail(format!("branch {} flow limit must be > 0, got {}", br.id, br.flow_limit));
            }
        }

        for g in &self.generators {
            if !bus_set.contains(&g.bus) {
                return fail(format!("generator {} references unknown bus {}", g.id, g.bus));
            }
            let nums = [g.p_min, g.p_max, g.cost_a, g.cost_b, g.cost_c, g.ramp_up, g.ramp_down];
            if nums.iter().any(|v| !v.is_finite()) {
                return fail(format!("generator {} has a non-finite parameter", g.id));
            }
            if !(0.0 <= g.p_min && g.p_min <= g.p_max) {
                return fail(format!("generator {} violates 0 <= p_min <= p_max", g.id));
            }
            if g.cost_a < 0.0 {
                return fail(format!("generator {} has negative quadratic cost (nonconvex)", g.id));
            }
            if g.ramp_up <= 0.0 || g.ramp_down <= 0.0 {
                return fail(format!("generator {} ramp rates must be > 0", g.id));
            }
            if let Some(p0) = g.p_initial {
                if !(p0.is_finite() && g.p_min <= p0 && p0 <= g.p_max) {
                    return fail(format!("generator {} p_initial outside [p_min, p_max]", g.id));
                }
            }
        }

        for l in &self.loads {
            if !bus_set.contains(&l.bus) {
                return fail(format!("load {} references unknown bus {}", l.id, l.bus));
            }
        }

        if !self.is_connected() {
            return fail("branch graph is not connected".into());
        }
        Ok(())
    }

    /// True when every bus is reachable from the slack bus over branches.
    pub fn is_connected(&self) -> bool {
        if self.buses.is_empty() {
            return false;
        }
        let mut adj: HashMap<BusId, Vec<BusId>> = HashMap::new();
        for br in &self.branches {
            adj.entry(br.from_bus).or_default().push(br.to_bus);
            adj.entry(br.to_bus).or_default().push(br.from_bus);
        }
        let mut seen = HashSet::from([self.slack_bus]);
        let mut stack = vec![self.slack_bus];
        while let Some(b) = stack.pop() {
            for &n in adj.get(&b).map(Vec::as_slice).unwrap_or(&[]) {
                if seen.insert(n) {
                    stack.push(n);
                }
            }
        }
        self.buses.iter().all(|b| seen.contains(b))
    }

    pub fn from_json_str(text: &str, origin: &str) -> Result<Self, CaseError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let case: GridCase = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            CaseError::Parse {
                path: origin.to_string(),
                line: inner.line(),
                column: inner.column(),
                field,
                message: inner.to_string(),
            }
        })?;
        case.validate()?;
        Ok(case)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("case serialization cannot fail")
    }

    pub fn save(&self, path: &Path) -> Result<(), CaseError> {
        fs::write(path, self.to_json_string()).map_err(|source| CaseError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

fn check_unique_ids<'a>(kind: &str, ids: impl Iterator<Item = &'a str>) -> Result<(), CaseError> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(CaseError::Invariant(format!("duplicate {kind} id {id}")));
        }
    }
    Ok(())
}

/// Reads and validates a JSON case file.
pub fn load_case(case_path: &Path) -> Result<GridCase, CaseError> {
    let text = fs::read_to_string(case_path).map_err(|source| CaseError::Io {
        path: case_path.display().to_string(),
        source,
    })?;
    GridCase::from_json_str(&text, &case_path.display().to_string())
}

/// Per-interval demand of every load and the system reserve requirement.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioData {
    pub n_intervals: usize,
    /// `demand[load][interval]`, MW.
    pub demand: Vec<Vec<f64>>,
    /// `reserve[interval]`, MW.
    pub reserve: Vec<f64>,
}

impl ScenarioData {
    pub fn new(demand: Vec<Vec<f64>>, reserve: Vec<f64>) -> Result<Self, CaseError> {
        let s = ScenarioData { n_intervals: reserve.len(), demand, reserve };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), CaseError> {
        if self.reserve.len() != self.n_intervals {
            return Err(CaseError::Scenario(format!(
                "reserve has {} entries, expected {}",
                self.reserve.len(),
                self.n_intervals
            )));
        }
        for (d, row) in self.demand.iter().enumerate() {
            if row.len() != self.n_intervals {
                return Err(CaseError::Scenario(format!(
                    "load #{d} has {} intervals, expected {}",
                    row.len(),
                    self.n_intervals
                )));
            }
            if let Some(t) = row.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(CaseError::Scenario(format!(
                    "negative or non-finite demand for load #{d} at interval {}",
                    t + 1
                )));
            }
        }
        if let Some(t) = self.reserve.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(CaseError::Scenario(format!(
                "negative or non-finite reserve at interval {}",
                t + 1
            )));
        }
        Ok(())
    }

    /// Checks that the scenario's load dimension matches the case.
    pub fn check_against(&self, case: &GridCase) -> Result<(), CaseError> {
        if self.demand.len() != case.loads.len() {
            return Err(CaseError::Scenario(format!(
                "scenario has {} loads, case declares {}",
                self.demand.len(),
                case.loads.len()
            )));
        }
        Ok(())
    }

    /// Demand of every load at interval `t` (0-based).
    pub fn demand_at(&self, t: usize) -> Vec<f64> {
        self.demand.iter().map(|row| row[t]).collect()
    }

    pub fn total_demand(&self, t: usize) -> f64 {
        self.demand.iter().map(|row| row[t]).sum()
    }

    /// Writes the scenario CSV (`interval,reserve_mw,<load ids>...`).
    pub fn write_csv<W: Write>(&self, case: &GridCase, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["interval".to_string(), "reserve_mw".to_string()];
        header.extend(case.loads.iter().map(|l| l.id.clone()));
        w.write_record(&header)?;
        for t in 0..self.n_intervals {
            let mut rec = vec![(t + 1).to_string(), self.reserve[t].to_string()];
            rec.extend(self.demand.iter().map(|row| row[t].to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, case: &GridCase, path: &Path) -> Result<(), CaseError> {
        let file = fs::File::create(path).map_err(|source| CaseError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.write_csv(case, file)
            .map_err(|e| CaseError::Scenario(format!("writing {}: {e}", path.display())))
    }
}

/// Parses a scenario CSV against the loads declared by `case`.
pub fn parse_scenario(text: &str, case: &GridCase) -> Result<ScenarioData, CaseError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| CaseError::Scenario(format!("bad header: {e}")))?
        .clone();
    let col = |name: &str| header.iter().position(|h| h == name);

    let interval_col = col("interval").ok_or_else(|| CaseError::Scenario("missing `interval` column".into()))?;
    let reserve_col =
        col("reserve_mw").ok_or_else(|| CaseError::Scenario("missing `reserve_mw` column".into()))?;
    let mut load_cols = Vec::with_capacity(case.loads.len());
    for l in &case.loads {
        load_cols.push(col(&l.id).ok_or_else(|| CaseError::Scenario(format!("missing column for load {}", l.id)))?);
    }
    let known: BTreeSet<&str> = case.loads.iter().map(|l| l.id.as_str()).collect();
    if let Some(extra) = header
        .iter()
        .find(|h| *h != "interval" && *h != "reserve_mw" && !known.contains(h))
    {
        return Err(CaseError::Scenario(format!("column `{extra}` is not a declared load")));
    }

    let mut demand = vec![Vec::new(); case.loads.len()];
    let mut reserve = Vec::new();
    for (row_no, rec) in rdr.records().enumerate() {
        let line = row_no + 2;
        let rec = rec.map_err(|e| CaseError::Scenario(format!("line {line}: {e}")))?;
        let num = |c: usize| -> Result<f64, CaseError> {
            let raw = rec.get(c).unwrap_or("");
            raw.parse::<f64>().map_err(|_| {
                CaseError::Scenario(format!("line {line}, column `{}`: cannot parse `{raw}`", &header[c]))
            })
        };
        let interval: usize = rec
            .get(interval_col)
            .unwrap_or("")
            .parse()
            .map_err(|_| CaseError::Scenario(format!("line {line}: bad interval index")))?;
        if interval != reserve.len() + 1 {
            return Err(CaseError::Scenario(format!(
                "line {line}: intervals must be 1-based and contiguous, got {interval} after {}",
                reserve.len()
            )));
        }
        reserve.push(num(reserve_col)?);
        for (d, &c) in load_cols.iter().enumerate() {
            demand[d].push(num(c)?);
        }
    }
    if reserve.is_empty() {
        return Err(CaseError::Scenario("scenario has no intervals".into()));
    }
    ScenarioData::new(demand, reserve)
}

/// Reads a scenario CSV whose columns must match the case's load ids.
pub fn load_scenario(profile_path: &Path, case: &GridCase) -> Result<ScenarioData, CaseError> {
    let text = fs::read_to_string(profile_path).map_err(|source| CaseError::Io {
        path: profile_path.display().to_string(),
        source,
    })?;
    parse_scenario(&text, case).map_err(|e| match e {
        CaseError::Scenario(m) => CaseError::Scenario(format!("{}: {m}", profile_path.display())),
        other => other,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReserveCheck {
    /// 1-based interval.
    pub interval: usize,
    pub capacity_mw: f64,
    pub requirement_mw: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReserveReport {
    pub intervals: Vec<ReserveCheck>,
    pub passed: bool,
}

impl ReserveReport {
    pub fn failing_intervals(&self) -> Vec<usize> {
        self.intervals.iter().filter(|c| !c.pass).map(|c| c.interval).collect()
    }
}

impl fmt::Display for ReserveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed {
            write!(f, "reserve requirement met in all {} intervals", self.intervals.len())
        } else {
            write!(f, "reserve requirement violated at intervals {:?}", self.failing_intervals())
        }
    }
}

/// Static reserve check: all units are online, so the requirement reduces to
/// `sum(p_max) >= total demand + reserve` in every interval.
pub fn validate_reserve(case: &GridCase, scenario: &ScenarioData) -> ReserveReport {
    let capacity: f64 = case.generators.iter().map(|g| g.p_max).sum();
    let intervals: Vec<ReserveCheck> = (0..scenario.n_intervals)
        .map(|t| {
            let requirement = scenario.total_demand(t) + scenario.reserve[t];
            ReserveCheck {
                interval: t + 1,
                capacity_mw: capacity,
                requirement_mw: requirement,
                pass: capacity >= requirement,
            }
        })
        .collect();
    let passed = intervals.iter().all(|c| c.pass);
    ReserveReport { intervals, passed }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_gen_case(p_max: [f64; 2]) -> GridCase {
        let gen = |id: &str, p_max: f64| Generator {
            id: id.into(),
            bus: 1,
            p_min: 0.0,
            p_max,
            cost_a: 0.1,
            cost_b: 10.0,
            cost_c: 0.0,
            ramp_up: 1000.0,
            ramp_down: 1000.0,
            p_initial: None,
        };
        GridCase {
            base_power: 100.0,
            slack_bus: 1,
            buses: vec![1],
            branches: vec![],
            generators: vec![gen("g1", p_max[0]), gen("g2", p_max[1])],
            loads: vec![Load { id: "d1".into(), bus: 1 }],
        }
    }

    const MINIMAL: &str = r#"{
        "base_mva": 100,
        "slack_bus": 1,
        "buses": [1],
        "branches": [],
        "generators": [{"id": "g1", "bus": 1, "p_min": 0, "p_max": 100,
                        "a": 0.1, "b": 10, "c": 0, "ramp_up": 50, "ramp_down": 50}],
        "loads": [{"id": "d1", "bus": 1}]
    }"#;

    #[test]
    fn minimal_case_loads() {
        let case = GridCase::from_json_str(MINIMAL, "inline").unwrap();
        assert_eq!(case.n_units(), 1);
        assert_eq!(case.generators[0].p_initial, None);
    }

    #[test]
    fn numeric_ids_are_accepted() {
        let text = MINIMAL.replace(r#""id": "g1""#, r#""id": 7"#);
        let case = GridCase::from_json_str(&text, "inline").unwrap();
        assert_eq!(case.generators[0].id, "7");
    }

    #[test]
    fn zero_reactance_is_rejected() {
        let text = r#"{
            "base_mva": 100, "slack_bus": 1, "buses": [1, 2],
            "branches": [{"id": "l1", "from": 1, "to": 2, "x": 0.0, "limit_mw": 100}],
            "generators": [{"id": "g1", "bus": 1, "p_min": 0, "p_max": 100,
                            "a": 0.1, "b": 10, "c": 0, "ramp_up": 50, "ramp_down": 50}],
            "loads": []
        }"#;
        let err = GridCase::from_json_str(text, "inline").unwrap_err();
        assert!(matches!(&err, CaseError::Invariant(m) if m.contains("reactance")), "{err}");
    }

    #[test]
    fn parse_error_names_field_and_line() {
        let text = MINIMAL.replace(r#""p_max": 100"#, r#""p_max": "lots""#);
        match GridCase::from_json_str(&text, "inline").unwrap_err() {
            CaseError::Parse { line, field, .. } => {
                assert_eq!(line, 6);
                assert!(field.contains("generators[0].p_max"), "{field}");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn disconnected_network_is_rejected() {
        let text = r#"{
            "base_mva": 100, "slack_bus": 1, "buses": [1, 2, 3],
            "branches": [{"id": "l1", "from": 1, "to": 2, "x": 0.1, "limit_mw": 100}],
            "generators": [{"id": "g1", "bus": 1, "p_min": 0, "p_max": 100,
                            "a": 0.1, "b": 10, "c": 0, "ramp_up": 50, "ramp_down": 50}]
        }"#;
        let err = GridCase::from_json_str(text, "inline").unwrap_err();
        assert!(err.to_string().contains("not connected"));
    }

    #[test]
    fn p_initial_must_lie_within_limits() {
        let text = MINIMAL.replace(r#""ramp_down": 50"#, r#""ramp_down": 50, "p_initial": 120"#);
        assert!(GridCase::from_json_str(&text, "inline").is_err());
    }

    #[test]
    fn scenario_direct_read() {
        let case = GridCase::from_json_str(MINIMAL, "inline").unwrap();
        let s = parse_scenario("interval,reserve_mw,d1\n1,5,50\n2,5,60\n", &case).unwrap();
        assert_eq!(s.demand, vec![vec![50.0, 60.0]]);
        assert_eq!(s.reserve, vec![5.0, 5.0]);
        assert_eq!(s.n_intervals, 2);
    }

    #[test]
    fn scenario_missing_load_column() {
        let mut case = GridCase::from_json_str(MINIMAL, "inline").unwrap();
        case.loads.push(Load { id: "d2".into(), bus: 1 });
        let err = parse_scenario("interval,reserve_mw,d1\n1,0,50\n", &case).unwrap_err();
        assert!(err.to_string().contains("d2"));
    }

    #[test]
    fn scenario_rejects_negative_demand_and_gaps() {
        let case = GridCase::from_json_str(MINIMAL, "inline").unwrap();
        assert!(parse_scenario("interval,reserve_mw,d1\n1,0,-1\n", &case).is_err());
        assert!(parse_scenario("interval,reserve_mw,d1\n1,0,1\n3,0,1\n", &case).is_err());
        assert!(parse_scenario("interval,reserve_mw,d1,d9\n1,0,1,1\n", &case).is_err());
    }

    #[test]
    fn reserve_check_examples() {
        let case = two_gen_case([100.0, 80.0]);
        let ok = ScenarioData::new(vec![vec![150.0]], vec![20.0]).unwrap();
        assert!(validate_reserve(&case, &ok).passed);
        let short = ScenarioData::new(vec![vec![150.0]], vec![40.0]).unwrap();
        let report = validate_reserve(&case, &short);
        assert!(!report.passed);
        assert_eq!(report.failing_intervals(), vec![1]);
        let zero = ScenarioData::new(vec![vec![0.0; 4]], vec![0.0; 4]).unwrap();
        assert!(validate_reserve(&case, &zero).intervals.iter().all(|c| c.pass));
    }
}
