//! Verification suites and experiments for the `sle-gff` library, with
//! run manifests for replay.

pub mod experiments;
pub mod level_line;
pub mod manifest;
pub mod report;
pub mod suites;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

use crate::manifest::{merged_config, parse_overrides, RunManifest};
use crate::report::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Verify,
    Experiment,
}

pub struct Outcome {
    pub pass: bool,
    /// Printed to stdout.
    pub report: Value,
}

fn write_json(path: &Path, v: &impl serde::Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(v).map_err(|e| CliError::Run(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Runs one suite or experiment; `rest` holds the options after the name.
pub fn execute(cmd: Command, name: &str, rest: &[String]) -> Result<Outcome, CliError> {
    let o = parse_overrides(rest)?;
    let config = merged_config(&o)?;
    let cfg_value = if config.as_object().is_some_and(|m| m.is_empty()) { Value::Null } else { config.clone() };
    let start = Instant::now();
    match cmd {
        Command::Verify => {
            if !suites::SUITES.contains(&name) {
                return Err(CliError::Usage(format!(
                    "unknown suite '{name}'; expected one of: {}",
                    suites::SUITES.join(", ")
                )));
            }
            let seed = o.seed.unwrap_or_else(|| suites::default_seed(name));
            let report = suites::run_suite(name, &cfg_value, seed)?;
            let mut m = RunManifest::new("verify", name, &config, seed);
            m.wall_time_s = start.elapsed().as_secs_f64();
            m.pass = Some(report.pass);
            if let Some(dir) = &o.out {
                std::fs::create_dir_all(dir)?;
                m.outputs = vec!["report.json".into()];
                write_json(&dir.join("report.json"), &report)?;
                write_json(&dir.join("manifest.json"), &m)?;
            }
            Ok(Outcome {
                pass: report.pass,
                report: serde_json::to_value(&report).unwrap_or(Value::Null),
            })
        }
        Command::Experiment => {
            let seed = o.seed.unwrap_or(1);
            let dir = o.out.clone().unwrap_or_else(|| PathBuf::from("out").join(name));
            let out = experiments::run_experiment(name, &cfg_value, seed, &dir)?;
            let pass = out.checks.iter().all(|c| c.pass);
            let mut m = RunManifest::new("experiment", name, &config, seed);
            m.wall_time_s = start.elapsed().as_secs_f64();
            m.streams = out.streams;
            m.pass = (!out.checks.is_empty()).then_some(pass);
            m.outputs = out.files.clone();
            m.outputs.push("summary.json".into());
            let summary = json!({
                "name": name,
                "pass": pass,
                "summary": out.summary,
                "checks": out.checks,
                "out": dir.display().to_string(),
            });
            write_json(&dir.join("summary.json"), &summary)?;
            write_json(&dir.join("manifest.json"), &m)?;
            Ok(Outcome { pass, report: summary })
        }
    }
}
