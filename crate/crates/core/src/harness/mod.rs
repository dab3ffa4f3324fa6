//! Experiment runner: JSON configs, validation, seeded dispatch to the
//! library modules, and JSON/CSV reports.
//!
//! All randomness in a run descends from the config seed through labelled
//! sub-streams, so a report's metrics are reproduced exactly by rerunning
//! its echoed config.

mod experiments;
pub mod fixtures;
mod params;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::mechanisms::LedgerEntry;
use crate::rng::SeedTree;

pub const EXPERIMENTS: [&str; 9] = [
    "dn_exhaustive",
    "dn_lp_sweep",
    "dp_budget",
    "rr_equivalence",
    "swap_invariants",
    "suppression_audit",
    "scenario_suite",
    "r_vs_r_prime",
    "regeneration_multiplicity",
];

/// One-line description of each experiment, for `list-experiments`.
pub fn describe(experiment: &str) -> Option<&'static str> {
    Some(match experiment {
        "dn_exhaustive" => {
            "exhaustive reconstruction under bounded noise; distance of every feasible candidate"
        }
        "dn_lp_sweep" => "LP reconstruction disagreement as the noise bound grows",
        "dp_budget" => "Laplace answers through a budget accountant; ledger and noise scale",
        "rr_equivalence" => {
            "randomized response, Laplace tails, zCDP conversion and privacy ratios"
        }
        "swap_invariants" => "count invariants of swapping at block and state level",
        "suppression_audit" => {
            "primary plus secondary suppression checked by the recoverability audit"
        }
        "scenario_suite" => {
            "reconstruction and reidentification on the three single-block scenarios"
        }
        "r_vs_r_prime" => {
            "linkage through regenerated microdata against direct linkage of the residual"
        }
        "regeneration_multiplicity" => "round trip and solution counts of microdata regeneration",
        _ => return None,
    })
}

/// Parameter names, defaults and help text for an experiment.
pub fn parameter_help(experiment: &str) -> Option<Vec<(String, Value, String)>> {
    experiments::schema(experiment).map(|s| {
        s.into_iter()
            .map(|p| (p.name.to_owned(), p.default, p.help.to_owned()))
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: String,
    /// Required; there is deliberately no clock-derived default.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub parameters: Map<String, Value>,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    /// Unrecognised top-level keys, reported by [`validate`].
    #[serde(flatten, skip_serializing)]
    pub unknown: Map<String, Value>,
}

impl ExperimentConfig {
    pub fn new(experiment: &str, seed: u64) -> Self {
        Self {
            experiment: experiment.to_owned(),
            seed: Some(seed),
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn with_parameter(mut self, key: &str, value: Value) -> Self {
        self.parameters.insert(key.to_owned(), value);
        self
    }

    /// Applies a `key=value` override. Keys `experiment`, `seed` and
    /// `output_path` address the top level; anything else, optionally
    /// prefixed `parameters.`, is a parameter. Values are read as JSON,
    /// falling back to a plain string.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Parameter(format!("override {assignment:?} is not key=value")))?;
        let key = key.trim();
        let value: Value =
            serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
        match key {
            "experiment" => self.experiment = raw.to_owned(),
            "seed" => {
                self.seed = Some(value.as_u64().ok_or_else(|| {
                    Error::Parameter(format!("seed must be a non-negative integer, got {raw:?}"))
                })?)
            }
            "output_path" => self.output_path = Some(PathBuf::from(raw)),
            "" => return Err(Error::Parameter("override has an empty key".into())),
            _ => {
                let name = key.strip_prefix("parameters.").unwrap_or(key);
                self.parameters.insert(name.to_owned(), value);
            }
        }
        Ok(())
    }
}

/// A schema violation, naming the offending key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub key: String,
    pub message: String,
}

impl Violation {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

/// Checks a config against its experiment's schema. Never fails; an empty
/// list means the config is runnable.
pub fn validate(config: &ExperimentConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    for key in config.unknown.keys() {
        out.push(Violation::new(key.clone(), format!("unknown key {key:?}")));
    }
    if config.seed.is_none() {
        out.push(Violation::new("seed", "seed required"));
    }
    match experiments::schema(&config.experiment) {
        Some(schema) => out.extend(params::validate(&schema, &config.parameters)),
        None => out.push(Violation::new(
            "experiment",
            format!(
                "unknown experiment {:?}; expected one of {}",
                config.experiment,
                EXPERIMENTS.join(", ")
            ),
        )),
    }
    out
}

/// The config as run: every parameter resolved, defaults included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub experiment: String,
    pub seed: u64,
    pub parameters: Value,
    pub output_path: Option<PathBuf>,
}

impl ConfigEcho {
    pub fn to_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            experiment: self.experiment.clone(),
            seed: Some(self.seed),
            parameters: self.parameters.as_object().cloned().unwrap_or_default(),
            output_path: self.output_path.clone(),
            unknown: Map::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ConfigEcho,
    pub metrics: BTreeMap<String, f64>,
    /// Named CSV payloads.
    pub tables: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub ledgers: BTreeMap<String, Vec<LedgerEntry>>,
    pub runtime_ms: u64,
}

/// Validates and executes a config. Nothing is written to disk; see
/// [`ExperimentReport::write`].
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let violations = validate(config);
    if !violations.is_empty() {
        let text: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(Error::Parameter(text.join("; ")));
    }
    let seed = config
        .seed
        .ok_or_else(|| Error::Parameter("seed required".into()))?;
    let schema = experiments::schema(&config.experiment)
        .ok_or_else(|| Error::Parameter(format!("unknown experiment {:?}", config.experiment)))?;
    let params = params::Params::resolve(&schema, &config.parameters);
    let start = Instant::now();
    let tree = SeedTree::new(seed).child(&config.experiment);
    let output = experiments::run(&config.experiment, &params, &tree)?;
    Ok(ExperimentReport {
        config: ConfigEcho {
            experiment: config.experiment.clone(),
            seed,
            parameters: params.to_json(),
            output_path: config.output_path.clone(),
        },
        metrics: output.metrics,
        tables: output.tables,
        ledgers: output.ledgers,
        runtime_ms: start.elapsed().as_millis() as u64,
    })
}

/// Formats `x` to `digits` significant figures. Integers below a million
/// print without a fraction; very large or small magnitudes use exponents.
pub fn format_significant(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    if x.fract() == 0.0 && x.abs() < 1e6 {
        return format!("{x:.0}");
    }
    // Round first so that e.g. 9.99996 is treated as magnitude 1.
    let rounded: f64 = format!("{:.*e}", digits - 1, x).parse().unwrap_or(x);
    let magnitude = rounded.abs().log10().floor() as i32;
    if !(-4..6).contains(&magnitude) {
        format!("{:.*e}", digits - 1, x)
    } else {
        let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
        format!("{rounded:.decimals$}")
    }
}

fn format_cell(cell: &str) -> String {
    cell.parse::<f64>()
        .ok()
        .filter(|_| cell.contains('.') || cell.contains('e'))
        .map_or_else(|| cell.to_owned(), |x| format_significant(x, 4))
}

impl ExperimentReport {
    /// Human-readable metrics and tables, numbers to 4 significant figures.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "experiment {} (seed {}) in {} ms\n",
            self.config.experiment, self.config.seed, self.runtime_ms
        );
        let width = self.metrics.keys().map(String::len).max().unwrap_or(0);
        for (k, v) in &self.metrics {
            s.push_str(&format!("  {k:<width$}  {}\n", format_significant(*v, 4)));
        }
        for (name, csv) in &self.tables {
            s.push_str(&format!("\n[{name}]\n"));
            let rows: Vec<Vec<String>> = csv
                .lines()
                .map(|l| l.split(',').map(format_cell).collect())
                .collect();
            let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
            let widths: Vec<usize> = (0..cols)
                .map(|c| {
                    rows.iter()
                        .filter_map(|r| r.get(c))
                        .map(|x| x.chars().count())
                        .max()
                        .unwrap_or(0)
                })
                .collect();
            for r in rows {
                let line: Vec<String> = r
                    .iter()
                    .zip(&widths)
                    .map(|(x, &w)| format!("{x:>w$}"))
                    .collect();
                s.push_str(&format!("  {}\n", line.join("  ")));
            }
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `report.json`, `summary.txt` and one `<name>.csv` per table
    /// into `dir`, creating it if needed. Returns the report path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let report = dir.join("report.json");
        fs::write(&report, self.to_json()?)?;
        fs::write(dir.join("summary.txt"), self.summary())?;
        for (name, csv) in &self.tables {
            fs::write(dir.join(format!("{name}.csv")), csv)?;
        }
        Ok(report)
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_json(s)
    }
}
