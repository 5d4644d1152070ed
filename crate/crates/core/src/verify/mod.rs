//! Experiment harness: every checkable claim as a named, seeded experiment
//! that produces a pass/fail [`ExperimentReport`].

mod experiments;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub use experiments::{crossing_survives, interpolate_bridged, line_survival};

/// Version of the report layout.
pub const SCHEMA: u32 = 1;

pub const DEFAULT_SEED: u64 = 7;

/// Every pass/fail threshold used by the suite. Fields missing from a
/// thresholds file keep their defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub version: u32,
    /// KS thresholds are `coefficient · sqrt(1/n [+ 1/m]) + grid_bias_allowance`,
    /// raised to the floor of the criterion they serve.
    pub ks_coefficient: f64,
    pub grid_bias_allowance: f64,
    pub ks_floor_law: f64,
    pub ks_floor_conditioned: f64,
    pub z_max: f64,
    pub tv_max: f64,
    pub r2_min: f64,
    pub terminal_positive_min: f64,
    pub count_shift_se: f64,
    pub min_location_fraction: f64,
    pub quadrature_tolerance: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            version: 1,
            ks_coefficient: 1.95,
            grid_bias_allowance: 0.005,
            ks_floor_law: 0.014,
            ks_floor_conditioned: 0.02,
            z_max: 3.0,
            tv_max: 0.02,
            r2_min: 0.99,
            terminal_positive_min: 0.45,
            count_shift_se: 2.0,
            min_location_fraction: 0.99,
            quadrature_tolerance: 1e-8,
        }
    }
}

impl Thresholds {
    /// One-sample KS threshold for `n` samples and its derivation.
    pub fn ks_one(&self, n: usize, floor: f64) -> (f64, String) {
        let q = self.ks_coefficient / (n as f64).sqrt();
        let t = (q + self.grid_bias_allowance).max(floor);
        (t, format!("max({floor}, {} / sqrt({n}) + {})", self.ks_coefficient, self.grid_bias_allowance))
    }

    /// Two-sample KS threshold for sample sizes `n`, `m` and its derivation.
    pub fn ks_two(&self, n: usize, m: usize, floor: f64) -> (f64, String) {
        let q = self.ks_coefficient * (1.0 / n as f64 + 1.0 / m as f64).sqrt();
        let t = (q + self.grid_bias_allowance).max(floor);
        (
            t,
            format!("max({floor}, {} * sqrt(1/{n} + 1/{m}) + {})", self.ks_coefficient, self.grid_bias_allowance),
        )
    }
}

/// How a statistic is compared with its threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `statistic < threshold`
    Below,
    /// `|statistic| < threshold`
    AbsBelow,
    /// `statistic > threshold`
    Above,
    /// `statistic >= threshold`
    AtLeast,
    /// `statistic == threshold`
    Equal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubTest {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub comparison: Comparison,
    pub derivation: String,
    pub pass: bool,
}

impl SubTest {
    pub fn new(name: impl Into<String>, statistic: f64, comparison: Comparison, threshold: f64, derivation: impl Into<String>) -> Self {
        let pass = match comparison {
            Comparison::Below => statistic < threshold,
            Comparison::AbsBelow => statistic.abs() < threshold,
            Comparison::Above => statistic > threshold,
            Comparison::AtLeast => statistic >= threshold,
            Comparison::Equal => statistic == threshold,
        };
        Self { name: name.into(), statistic, threshold, comparison, derivation: derivation.into(), pass }
    }

    /// An exact check: passes iff `ok`.
    pub fn exact(name: impl Into<String>, ok: bool, derivation: impl Into<String>) -> Self {
        Self::new(name, if ok { 1.0 } else { 0.0 }, Comparison::Equal, 1.0, derivation)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: u32,
    pub id: String,
    pub parameters: BTreeMap<String, Value>,
    pub reps: usize,
    pub grid: Option<usize>,
    pub seed: u64,
    pub thresholds_version: u32,
    pub tests: Vec<SubTest>,
    /// Reported quantities without a pass/fail verdict.
    pub estimates: BTreeMap<String, Value>,
    pub pass: bool,
    pub wall_time_s: f64,
}

impl ExperimentReport {
    pub fn test(&self, name: &str) -> Option<&SubTest> {
        self.tests.iter().find(|t| t.name == name)
    }

    /// Tests whose name starts with `prefix`.
    pub fn tests_with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a SubTest> + 'a {
        self.tests.iter().filter(move |t| t.name.starts_with(prefix))
    }

    /// JSON with sorted keys and the wall time left out: identical for
    /// identical (experiment, parameters, seed).
    pub fn canonical_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("reports serialize");
        if let Value::Object(map) = &mut v {
            map.remove("wall_time_s");
        }
        v.to_string()
    }

    pub fn to_json_value(&self) -> Value {
        serde_json::to_value(self).expect("reports serialize")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema: u32,
    pub seed: u64,
    pub thresholds: Thresholds,
    pub experiments: Vec<ExperimentReport>,
    pub pass: bool,
}

impl SuiteReport {
    pub fn get(&self, id: ExperimentId) -> Option<&ExperimentReport> {
        self.experiments.iter().find(|e| e.id == id.name())
    }

    pub fn canonical_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("reports serialize");
        if let Some(Value::Array(list)) = v.get_mut("experiments") {
            for e in list {
                if let Value::Object(map) = e {
                    map.remove("wall_time_s");
                }
            }
        }
        v.to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentId {
    Discrete,
    Samplers,
    Decomposition,
    Duality,
    VervaatLimit,
    BianeShift,
    MomentsVb,
    MeanderMoments,
    AboveDrift,
    DriftExcursion,
    NonMarkov,
    DiscreteToContinuum,
    Minorant,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 13] = [
        ExperimentId::Discrete,
        ExperimentId::Samplers,
        ExperimentId::Decomposition,
        ExperimentId::Duality,
        ExperimentId::VervaatLimit,
        ExperimentId::BianeShift,
        ExperimentId::MomentsVb,
        ExperimentId::MeanderMoments,
        ExperimentId::AboveDrift,
        ExperimentId::DriftExcursion,
        ExperimentId::NonMarkov,
        ExperimentId::DiscreteToContinuum,
        ExperimentId::Minorant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::Discrete => "discrete",
            ExperimentId::Samplers => "samplers",
            ExperimentId::Decomposition => "decomposition",
            ExperimentId::Duality => "duality",
            ExperimentId::VervaatLimit => "vervaat-limit",
            ExperimentId::BianeShift => "biane-shift",
            ExperimentId::MomentsVb => "moments-vb",
            ExperimentId::MeanderMoments => "meander-moments",
            ExperimentId::AboveDrift => "above-drift",
            ExperimentId::DriftExcursion => "drift-excursion",
            ExperimentId::NonMarkov => "non-markov",
            ExperimentId::DiscreteToContinuum => "discrete-to-continuum",
            ExperimentId::Minorant => "minorant",
        }
    }

    /// Default replicate count and grid size.
    pub fn defaults(self) -> (usize, Option<usize>) {
        match self {
            ExperimentId::Discrete | ExperimentId::DiscreteToContinuum => (0, None),
            ExperimentId::Samplers => (20_000, Some(256)),
            ExperimentId::Decomposition => (100_000, Some(4096)),
            _ => (100_000, Some(1024)),
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.replace('_', "-");
        ExperimentId::ALL
            .into_iter()
            .find(|e| e.name() == key)
            .ok_or_else(|| Error::Parse(format!("unknown experiment {s:?}")))
    }
}

/// Seed, overrides and thresholds for a run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSettings {
    pub seed: u64,
    pub reps: Option<usize>,
    pub grid: Option<usize>,
    pub thresholds: Thresholds,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self { seed: DEFAULT_SEED, reps: None, grid: None, thresholds: Thresholds::default() }
    }
}

impl RunSettings {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }
}

/// Context handed to an experiment body.
pub(crate) struct Ctx<'a> {
    pub id: ExperimentId,
    pub seed: u64,
    pub reps: usize,
    pub grid: Option<usize>,
    pub th: &'a Thresholds,
    pub parameters: BTreeMap<String, Value>,
    pub tests: Vec<SubTest>,
    pub estimates: BTreeMap<String, Value>,
}

impl Ctx<'_> {
    pub fn grid(&self) -> usize {
        self.grid.expect("experiment has a grid")
    }

    pub fn label(&self, part: &str) -> String {
        format!("{}/{part}", self.id.name())
    }

    pub fn param(&mut self, key: &str, v: impl Serialize) {
        self.parameters.insert(key.into(), serde_json::to_value(v).expect("serializable parameter"));
    }

    pub fn estimate(&mut self, key: &str, v: impl Serialize) {
        self.estimates.insert(key.into(), serde_json::to_value(v).expect("serializable estimate"));
    }

    pub fn push(&mut self, t: SubTest) {
        self.tests.push(t);
    }
}

/// Runs one experiment.
pub fn run_experiment(id: ExperimentId, settings: &RunSettings) -> Result<ExperimentReport> {
    let (reps, grid) = id.defaults();
    let reps = if reps > 0 { settings.reps.unwrap_or(reps) } else { 0 };
    let grid = grid.map(|g| settings.grid.unwrap_or(g));
    let mut ctx = Ctx {
        id,
        seed: settings.seed,
        reps,
        grid,
        th: &settings.thresholds,
        parameters: BTreeMap::new(),
        tests: Vec::new(),
        estimates: BTreeMap::new(),
    };
    let start = Instant::now();
    experiments::run(&mut ctx)?;
    let pass = !ctx.tests.is_empty() && ctx.tests.iter().all(|t| t.pass);
    Ok(ExperimentReport {
        schema: SCHEMA,
        id: id.name().into(),
        parameters: ctx.parameters,
        reps,
        grid,
        seed: settings.seed,
        thresholds_version: settings.thresholds.version,
        tests: ctx.tests,
        estimates: ctx.estimates,
        pass,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Runs the listed experiments in order.
pub fn run_suite(ids: &[ExperimentId], settings: &RunSettings) -> Result<SuiteReport> {
    let experiments = ids.iter().map(|&id| run_experiment(id, settings)).collect::<Result<Vec<_>>>()?;
    let pass = experiments.iter().all(|e| e.pass);
    Ok(SuiteReport { schema: SCHEMA, seed: settings.seed, thresholds: settings.thresholds.clone(), experiments, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_thresholds() {
        let th = Thresholds::default();
        assert_eq!(th.ks_two(100_000, 100_000, 0.014).0, 0.014);
        let (t, _) = th.ks_two(100_000, 100_000, 0.0);
        assert!((t - (1.95 * (2e-5f64).sqrt() + 0.005)).abs() < 1e-15);
        assert!(th.ks_one(1000, 0.014).0 > 0.06);
    }

    #[test]
    fn subtest_comparisons() {
        assert!(SubTest::new("a", -2.9, Comparison::AbsBelow, 3.0, "").pass);
        assert!(!SubTest::new("a", 3.0, Comparison::AbsBelow, 3.0, "").pass);
        assert!(SubTest::new("a", 0.45, Comparison::AtLeast, 0.45, "").pass);
        assert!(!SubTest::new("a", 0.99, Comparison::Above, 0.99, "").pass);
        assert!(SubTest::exact("a", true, "").pass);
    }

    #[test]
    fn ids_round_trip() {
        for id in ExperimentId::ALL {
            assert_eq!(id.name().parse::<ExperimentId>().unwrap(), id);
        }
        assert_eq!("moments_vb".parse::<ExperimentId>().unwrap(), ExperimentId::MomentsVb);
        assert!("everything".parse::<ExperimentId>().is_err());
    }

    #[test]
    fn canonical_json_drops_wall_time_and_sorts_keys() {
        let r = ExperimentReport {
            schema: SCHEMA,
            id: "x".into(),
            parameters: BTreeMap::from([("b".to_string(), Value::from(1)), ("a".to_string(), Value::from(2))]),
            reps: 1,
            grid: None,
            seed: 7,
            thresholds_version: 1,
            tests: vec![],
            estimates: BTreeMap::new(),
            pass: false,
            wall_time_s: 1.5,
        };
        let s = r.canonical_json();
        assert!(!s.contains("wall_time"));
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
        assert!(s.starts_with("{\"estimates\""));
    }
}
