use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

use super::Violation;
use crate::error::{Error, Result};
use crate::model::Attribute;

#[derive(Debug, Clone, Copy)]
pub(crate) enum Kind {
    Int {
        min: i64,
        max: i64,
    },
    Float {
        min: f64,
        max: f64,
    },
    /// A finite number strictly greater than zero.
    Positive {
        max: f64,
    },
    IntList {
        min: i64,
        max: i64,
    },
    FloatList {
        min: f64,
        max: f64,
    },
    Choice(&'static [&'static str]),
    Attributes,
    AttributeLists,
}

#[derive(Debug, Clone)]
pub(crate) struct ParamSpec {
    pub name: &'static str,
    pub kind: Kind,
    pub default: Value,
    pub help: &'static str,
}

pub(crate) fn spec(
    name: &'static str,
    kind: Kind,
    default: Value,
    help: &'static str,
) -> ParamSpec {
    ParamSpec {
        name,
        kind,
        default,
        help,
    }
}

fn as_int(v: &Value) -> Option<i64> {
    v.as_i64().or_else(|| {
        v.as_f64()
            .filter(|f| f.fract() == 0.0 && f.abs() < 9e15)
            .map(|f| f as i64)
    })
}

fn check_int(name: &str, v: &Value, min: i64, max: i64, out: &mut Vec<String>) {
    match as_int(v) {
        None => out.push(format!("{name} must be an integer")),
        Some(x) if x < min => out.push(format!("{name} ≥ {min}")),
        Some(x) if x > max => out.push(format!("{name} ≤ {max}")),
        Some(_) => {}
    }
}

fn check_float(name: &str, v: &Value, min: f64, max: f64, out: &mut Vec<String>) {
    match v.as_f64() {
        None => out.push(format!("{name} must be a number")),
        Some(x) if !x.is_finite() => out.push(format!("{name} must be finite")),
        Some(x) if x < min => out.push(format!("{name} ≥ {min}")),
        Some(x) if x > max => out.push(format!("{name} ≤ {max}")),
        Some(_) => {}
    }
}

fn attribute_list(v: &Value) -> Option<Vec<Attribute>> {
    v.as_array()?
        .iter()
        .map(|a| a.as_str().and_then(|s| s.parse().ok()))
        .collect()
}

impl ParamSpec {
    fn check(&self, v: &Value) -> Vec<String> {
        let name = self.name;
        let mut out = Vec::new();
        match self.kind {
            Kind::Int { min, max } => check_int(name, v, min, max, &mut out),
            Kind::Float { min, max } => check_float(name, v, min, max, &mut out),
            Kind::Positive { max } => match v.as_f64() {
                Some(x) if x > 0.0 => check_float(name, v, 0.0, max, &mut out),
                Some(_) => out.push(format!("{name} > 0")),
                None => out.push(format!("{name} must be a number")),
            },
            Kind::IntList { min, max } => match v.as_array() {
                Some(items) if !items.is_empty() => {
                    for item in items {
                        check_int(name, item, min, max, &mut out);
                    }
                }
                _ => out.push(format!("{name} must be a non-empty list of integers")),
            },
            Kind::FloatList { min, max } => match v.as_array() {
                Some(items) if !items.is_empty() => {
                    for item in items {
                        check_float(name, item, min, max, &mut out);
                    }
                }
                _ => out.push(format!("{name} must be a non-empty list of numbers")),
            },
            Kind::Choice(choices) => {
                if !v.as_str().is_some_and(|s| choices.contains(&s)) {
                    out.push(format!("{name} must be one of {}", choices.join(", ")));
                }
            }
            Kind::Attributes => {
                if !attribute_list(v).is_some_and(|a| !a.is_empty()) {
                    out.push(format!(
                        "{name} must be a non-empty list of attribute names (age, gender, race, ethnicity, relationship)"
                    ));
                }
            }
            Kind::AttributeLists => {
                let ok = v.as_array().is_some_and(|lists| {
                    !lists.is_empty() && lists.iter().all(|l| attribute_list(l).is_some())
                });
                if !ok {
                    out.push(format!(
                        "{name} must be a non-empty list of attribute-name lists"
                    ));
                }
            }
        }
        out.dedup();
        out
    }
}

/// Checks supplied parameters against a schema.
pub(crate) fn validate(schema: &[ParamSpec], supplied: &Map<String, Value>) -> Vec<Violation> {
    let mut out = Vec::new();
    for key in supplied.keys() {
        if !schema.iter().any(|s| s.name == key) {
            out.push(Violation::new(
                format!("parameters.{key}"),
                format!("unknown parameter {key:?}"),
            ));
        }
    }
    for s in schema {
        if let Some(v) = supplied.get(s.name) {
            for message in s.check(v) {
                out.push(Violation::new(format!("parameters.{}", s.name), message));
            }
        }
    }
    out
}

/// Supplied parameters merged over the schema defaults.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Params {
    values: BTreeMap<String, Value>,
}

impl Params {
    pub fn resolve(schema: &[ParamSpec], supplied: &Map<String, Value>) -> Self {
        let values = schema
            .iter()
            .map(|s| {
                let v = supplied
                    .get(s.name)
                    .cloned()
                    .unwrap_or_else(|| s.default.clone());
                (s.name.to_owned(), v)
            })
            .collect();
        Self { values }
    }

    pub fn to_json(&self) -> Value {
        json!(self.values)
    }

    fn get(&self, name: &str) -> Result<&Value> {
        self.values
            .get(name)
            .ok_or_else(|| Error::Parameter(format!("missing parameter {name}")))
    }

    pub fn int(&self, name: &str) -> Result<i64> {
        as_int(self.get(name)?)
            .ok_or_else(|| Error::Parameter(format!("{name} must be an integer")))
    }

    pub fn usize(&self, name: &str) -> Result<usize> {
        usize::try_from(self.int(name)?)
            .map_err(|_| Error::Parameter(format!("{name} must be non-negative")))
    }

    pub fn float(&self, name: &str) -> Result<f64> {
        self.get(name)?
            .as_f64()
            .ok_or_else(|| Error::Parameter(format!("{name} must be a number")))
    }

    pub fn usizes(&self, name: &str) -> Result<Vec<usize>> {
        self.get(name)?
            .as_array()
            .ok_or_else(|| Error::Parameter(format!("{name} must be a list")))?
            .iter()
            .map(|v| {
                as_int(v)
                    .and_then(|x| usize::try_from(x).ok())
                    .ok_or_else(|| {
                        Error::Parameter(format!("{name} must hold non-negative integers"))
                    })
            })
            .collect()
    }

    pub fn floats(&self, name: &str) -> Result<Vec<f64>> {
        self.get(name)?
            .as_array()
            .ok_or_else(|| Error::Parameter(format!("{name} must be a list")))?
            .iter()
            .map(|v| {
                v.as_f64()
                    .ok_or_else(|| Error::Parameter(format!("{name} must hold numbers")))
            })
            .collect()
    }

    pub fn str(&self, name: &str) -> Result<&str> {
        self.get(name)?
            .as_str()
            .ok_or_else(|| Error::Parameter(format!("{name} must be a string")))
    }

    pub fn attributes(&self, name: &str) -> Result<Vec<Attribute>> {
        attribute_list(self.get(name)?)
            .ok_or_else(|| Error::Parameter(format!("{name} must be a list of attribute names")))
    }

    pub fn attribute_lists(&self, name: &str) -> Result<Vec<Vec<Attribute>>> {
        self.get(name)?
            .as_array()
            .ok_or_else(|| Error::Parameter(format!("{name} must be a list")))?
            .iter()
            .map(|l| {
                attribute_list(l).ok_or_else(|| {
                    Error::Parameter(format!("{name} must hold attribute-name lists"))
                })
            })
            .collect()
    }
}
