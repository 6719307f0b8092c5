use std::fmt;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

/// One comparison of a computed value against its reference.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// `|lhs - rhs| < tolerance`.
    pub fn abs(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let residual = (lhs - rhs).abs();
        Check {
            name: name.into(),
            lhs,
            rhs,
            residual,
            tolerance,
            pass: residual < tolerance,
        }
    }

    /// `|lhs - rhs| / |rhs| < tolerance`.
    pub fn rel(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let residual = ((lhs - rhs) / rhs).abs();
        Check {
            name: name.into(),
            lhs,
            rhs,
            residual,
            tolerance,
            pass: residual < tolerance,
        }
    }

    /// Monte-Carlo estimate against a target, passing within `k` standard
    /// errors.
    pub fn within_se(name: impl Into<String>, estimate: f64, se: f64, target: f64, k: f64) -> Self {
        let residual = (estimate - target).abs();
        Check {
            name: name.into(),
            lhs: estimate,
            rhs: target,
            residual,
            tolerance: k * se,
            pass: residual <= k * se,
        }
    }

    /// `lhs <= bound`; the residual is the excess over the bound.
    pub fn at_most(name: impl Into<String>, lhs: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            lhs,
            rhs: bound,
            residual: (lhs - bound).max(0.0),
            tolerance: 0.0,
            pass: lhs <= bound,
        }
    }

    /// `lhs > bound`, for p-values.
    pub fn above(name: impl Into<String>, lhs: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            lhs,
            rhs: bound,
            residual: (bound - lhs).max(0.0),
            tolerance: 0.0,
            pass: lhs > bound,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub pass: bool,
    pub seed: u64,
    pub seconds: f64,
    pub checks: Vec<Check>,
    /// Extra structured output of the suite.
    #[serde(skip_serializing_if = "Value::is_null")]
    pub details: Value,
}

impl SuiteReport {
    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// Largest residual among checks whose name starts with `prefix`.
    pub fn max_residual(&self, prefix: &str) -> f64 {
        self.checks
            .iter()
            .filter(|c| c.name.starts_with(prefix))
            .map(|c| c.residual)
            .fold(0.0, f64::max)
    }

    pub fn all_pass(&self, prefix: &str) -> bool {
        self.checks.iter().filter(|c| c.name.starts_with(prefix)).all(|c| c.pass)
    }
}

#[derive(Debug)]
pub enum CliError {
    /// Bad command line or configuration; exit code 2.
    Usage(String),
    /// Failure while running; exit code 1.
    Run(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Run(m) => write!(f, "run failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<sle_gff::Error> for CliError {
    fn from(e: sle_gff::Error) -> Self {
        CliError::Run(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Run(e.to_string())
    }
}

/// Typed configuration from a JSON object; `null` gives the defaults.
pub fn parse_config<T: DeserializeOwned + Default>(v: &Value) -> Result<T, CliError> {
    if v.is_null() {
        return Ok(T::default());
    }
    serde_json::from_value(v.clone()).map_err(|e| CliError::Usage(format!("malformed config: {e}")))
}
