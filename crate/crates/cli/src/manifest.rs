use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::report::CliError;

/// Everything needed to replay a run.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub name: String,
    pub config: Value,
    pub config_hash: String,
    pub seed: u64,
    /// How per-worker generators derive from the master seed.
    pub seed_scheme: String,
    pub streams: usize,
    pub versions: BTreeMap<String, String>,
    pub threads: usize,
    pub wall_time_s: f64,
    pub pass: Option<bool>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, name: &str, config: &Value, seed: u64) -> Self {
        let mut versions = BTreeMap::new();
        versions.insert("sle-gff".to_string(), sle_gff::VERSION.to_string());
        versions.insert("sle-gff-lab".to_string(), env!("CARGO_PKG_VERSION").to_string());
        RunManifest {
            command: command.to_string(),
            name: name.to_string(),
            config: config.clone(),
            config_hash: config_hash(config),
            seed,
            seed_scheme: "item k draws from ChaCha8 stream k of the master seed".to_string(),
            streams: 0,
            versions,
            threads: rayon::current_num_threads(),
            wall_time_s: 0.0,
            pass: None,
            outputs: Vec::new(),
        }
    }
}

/// SHA-256 of the compact JSON text (object keys sorted).
pub fn config_hash(config: &Value) -> String {
    let text = serde_json::to_string(config).unwrap_or_default();
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Options given after the suite or experiment name.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub values: Map<String, Value>,
    pub seed: Option<u64>,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

/// Parses `--key value` pairs. Values are read as JSON when they parse and
/// as strings otherwise; a key without a value is `true`.
pub fn parse_overrides(args: &[String]) -> Result<Overrides, CliError> {
    let mut o = Overrides::default();
    let mut k = 0;
    while k < args.len() {
        let key = args[k]
            .strip_prefix("--")
            .filter(|s| !s.is_empty())
            .ok_or_else(|| CliError::Usage(format!("unexpected argument '{}'", args[k])))?;
        let (key, inline) = match key.split_once('=') {
            Some((a, b)) => (a, Some(b.to_string())),
            None => (key, None),
        };
        let value = match inline {
            Some(v) => Some(v),
            None if k + 1 < args.len() && !is_flag(&args[k + 1]) => {
                k += 1;
                Some(args[k].clone())
            }
            None => None,
        };
        k += 1;
        match (key, value) {
            ("seed", Some(v)) => {
                o.seed = Some(v.parse().map_err(|_| CliError::Usage(format!("bad seed '{v}'")))?)
            }
            ("config", Some(v)) => o.config = Some(v.into()),
            ("out", Some(v)) => o.out = Some(v.into()),
            ("seed" | "config" | "out", None) => {
                return Err(CliError::Usage(format!("--{key} needs a value")))
            }
            (key, Some(v)) => {
                let parsed = serde_json::from_str(&v).unwrap_or(Value::String(v));
                o.values.insert(key.replace('-', "_"), parsed);
            }
            (key, None) => {
                o.values.insert(key.replace('-', "_"), Value::Bool(true));
            }
        }
    }
    Ok(o)
}

fn is_flag(s: &str) -> bool {
    s.starts_with("--") && s.len() > 2
}

/// Config file (if any) with the command-line values laid over it.
pub fn merged_config(o: &Overrides) -> Result<Value, CliError> {
    let mut base = match &o.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("malformed config: {e}")))?
        }
        None => Value::Object(Map::new()),
    };
    let obj = base
        .as_object_mut()
        .ok_or_else(|| CliError::Usage("config must be a JSON object".into()))?;
    for (k, v) in &o.values {
        obj.insert(k.clone(), v.clone());
    }
    Ok(base)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn overrides_and_reserved_keys() {
        let o = parse_overrides(&args("--grid 12x12 --seed 7 --paths 100 --T 1 --trace --out dir")).unwrap();
        assert_eq!(o.seed, Some(7));
        assert_eq!(o.out, Some(PathBuf::from("dir")));
        assert_eq!(o.values["grid"], Value::String("12x12".into()));
        assert_eq!(o.values["paths"], Value::from(100));
        assert_eq!(o.values["T"], Value::from(1));
        assert_eq!(o.values["trace"], Value::Bool(true));
        assert!(parse_overrides(&args("stray")).is_err());
        assert!(parse_overrides(&args("--seed x")).is_err());
        let o = parse_overrides(&args("--kappas=[2,4] --min-size 5")).unwrap();
        assert_eq!(o.values["kappas"], serde_json::json!([2, 4]));
        assert_eq!(o.values["min_size"], Value::from(5));
    }

    #[test]
    fn hash_ignores_key_order() {
        let a: Value = serde_json::from_str(r#"{"a":1,"b":[1,2]}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"b":[1,2],"a":1}"#).unwrap();
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }
}
