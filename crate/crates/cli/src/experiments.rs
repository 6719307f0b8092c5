//! Experiments: sampling runs that write CSV files and a JSON summary into
//! an output directory.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sle_gff::gff::{two_arc_boundary, Gff};
use sle_gff::lattice::{DomainSpec, LatticeDomain, LatticeKind, VertexId};
use sle_gff::loewner::{sample_sle_driver, sample_sle_kr_driver, ForcePoint, MapStack};
use sle_gff::ust::{height_function, temperley_matching, wilson_ust, DoubledGraph};
use sle_gff::util::{jarque_bera, mean_se, stream_rng};

use crate::level_line::{run_level_lines, LevelLineConfig};
use crate::report::{parse_config, Check, CliError};

pub const EXPERIMENTS: [&str; 5] = [
    "sample-gff",
    "sample-ust",
    "run-sle",
    "level-line-driving",
    "height-vs-field",
];

pub struct ExperimentOutput {
    pub summary: Value,
    /// Empty for experiments without a pass criterion.
    pub checks: Vec<Check>,
    pub files: Vec<String>,
    /// Number of random streams used.
    pub streams: usize,
}

pub fn run_experiment(name: &str, config: &Value, seed: u64, out: &Path) -> Result<ExperimentOutput, CliError> {
    if !EXPERIMENTS.contains(&name) {
        return Err(CliError::Usage(format!(
            "unknown experiment '{name}'; expected one of: {}",
            EXPERIMENTS.join(", ")
        )));
    }
    fs::create_dir_all(out)?;
    match name {
        "sample-gff" => sample_gff(parse_config(config)?, seed, out),
        "sample-ust" => sample_ust(parse_config(config)?, seed, out),
        "run-sle" => run_sle(parse_config(config)?, seed, out),
        "level-line-driving" => level_line_driving(parse_config(config)?, seed, out),
        _ => height_vs_field(parse_config(config)?, seed, out),
    }
}

/// Shared domain fields: a full description in `domain`, or a rectangle.
macro_rules! domain_config {
    ($name:ident { $($field:ident : $ty:ty = $default:expr),* $(,)? }) => {
        #[derive(Debug, Deserialize)]
        #[serde(default, deny_unknown_fields)]
        pub struct $name {
            pub domain: Option<DomainSpec>,
            pub lattice: LatticeKind,
            pub width: usize,
            pub height: usize,
            pub mesh: f64,
            $(pub $field: $ty,)*
        }

        impl Default for $name {
            fn default() -> Self {
                $name {
                    domain: None,
                    lattice: LatticeKind::Square,
                    width: 16,
                    height: 16,
                    mesh: 1.0,
                    $($field: $default,)*
                }
            }
        }

        impl $name {
            fn build(&self) -> Result<LatticeDomain, CliError> {
                Ok(match &self.domain {
                    Some(spec) => spec.build()?,
                    None => LatticeDomain::rectangle(self.lattice, self.width, self.height, self.mesh)?,
                })
            }
        }
    };
}

domain_config!(GffExperiment {
    samples: usize = 1,
    // ±lambda on the arcs between marked points x and y (or two opposite
    // boundary vertices); zero boundary when absent
    lambda: Option<f64> = None,
});

domain_config!(UstExperiment { samples: usize = 1 });

fn arc_endpoints(d: &LatticeDomain) -> (VertexId, VertexId) {
    match (d.marked("x"), d.marked("y")) {
        (Ok(x), Ok(y)) => (x, y),
        _ => {
            let o = d.boundary_order();
            (o[0], o[o.len() / 2])
        }
    }
}

fn sample_gff(cfg: GffExperiment, seed: u64, out: &Path) -> Result<ExperimentOutput, CliError> {
    let d = cfg.build()?;
    let n = cfg.samples;
    let bv = match cfg.lambda {
        Some(l) => {
            let (x, y) = arc_endpoints(&d);
            two_arc_boundary(&d, x, y, l, -l)?
        }
        None => vec![0.0; d.n_vertices()],
    };
    let gff = Gff::new(&d, &bv)?;
    let samples: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|k| gff.sample(&mut stream_rng(seed, k as u64)))
        .collect();
    let mut w = csv::Writer::from_path(out.join("field.csv"))?;
    w.write_record(["sample", "vertex", "x", "y", "interior", "value"])?;
    for (k, s) in samples.iter().enumerate() {
        for v in 0..d.n_vertices() {
            let p = d.physical_position(v);
            w.serialize((k, v, p[0], p[1], d.is_interior(v), s[v]))?;
        }
    }
    w.flush()?;
    Ok(ExperimentOutput {
        summary: json!({
            "vertices": d.n_vertices(),
            "interior": d.n_interior(),
            "samples": n,
            "log_partition": gff.log_partition(),
        }),
        checks: Vec::new(),
        files: vec!["field.csv".into()],
        streams: n,
    })
}

fn sample_ust(cfg: UstExperiment, seed: u64, out: &Path) -> Result<ExperimentOutput, CliError> {
    let d = cfg.build()?;
    let n = cfg.samples;
    let trees: Vec<_> = (0..n)
        .into_par_iter()
        .map(|k| wilson_ust(&d, &mut stream_rng(seed, k as u64)))
        .collect();
    let mut w = csv::Writer::from_path(out.join("tree.csv"))?;
    w.write_record(["sample", "vertex", "x", "y", "parent", "parent_x", "parent_y"])?;
    for (k, t) in trees.iter().enumerate() {
        for (v, &p) in t.parent.iter().enumerate() {
            let a = d.physical_position(v);
            let b = d.physical_position(p);
            w.serialize((k, v, a[0], a[1], p, b[0], b[1]))?;
        }
    }
    w.flush()?;
    Ok(ExperimentOutput {
        summary: json!({ "interior": d.n_interior(), "samples": n }),
        checks: Vec::new(),
        files: vec!["tree.csv".into()],
        streams: n,
    })
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SleExperiment {
    pub kappa: f64,
    #[serde(alias = "T")]
    pub time: f64,
    pub dt: f64,
    pub paths: usize,
    pub start: f64,
    pub force: Vec<ForcePoint>,
    /// Also write the traced curves.
    pub trace: bool,
}

impl Default for SleExperiment {
    fn default() -> Self {
        SleExperiment {
            kappa: 4.0,
            time: 1.0,
            dt: 1e-3,
            paths: 100,
            start: 0.0,
            force: Vec::new(),
            trace: false,
        }
    }
}

fn run_sle(cfg: SleExperiment, seed: u64, out: &Path) -> Result<ExperimentOutput, CliError> {
    if !(cfg.kappa > 0.0 && cfg.time > 0.0 && cfg.dt > 0.0 && cfg.dt <= cfg.time) {
        return Err(CliError::Usage("need kappa > 0 and 0 < dt <= T".into()));
    }
    let dir = out.join("drivers");
    fs::create_dir_all(&dir)?;
    let drivers = (0..cfg.paths)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            Ok(if cfg.force.is_empty() {
                sample_sle_driver(cfg.kappa, cfg.start, cfg.time, cfg.dt, &mut rng)
            } else {
                sample_sle_kr_driver(cfg.kappa, cfg.start, &cfg.force, cfg.time, cfg.dt, &mut rng)?
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut files = Vec::new();
    for (k, drv) in drivers.iter().enumerate() {
        let name = format!("drivers/driver_{k:04}.csv");
        let mut w = csv::Writer::from_path(out.join(&name))?;
        w.write_record(["t", "w"])?;
        for (t, x) in drv.t.iter().zip(&drv.w) {
            w.serialize((t, x))?;
        }
        w.flush()?;
        files.push(name);
        if cfg.trace {
            let name = format!("drivers/trace_{k:04}.csv");
            let mut w = csv::Writer::from_path(out.join(&name))?;
            w.write_record(["x", "y"])?;
            for z in MapStack::from_driver(drv).trace() {
                w.serialize((z.re, z.im))?;
            }
            w.flush()?;
            files.push(name);
        }
    }
    let end: Vec<f64> = drivers.iter().map(|d| d.w.last().unwrap() - cfg.start).collect();
    let m = mean_se(&end);
    let var = end.iter().map(|x| (x - m.mean).powi(2)).sum::<f64>() / (end.len().max(2) - 1) as f64;
    Ok(ExperimentOutput {
        summary: json!({
            "paths": cfg.paths,
            "mean_end": m,
            "var_end_over_kappa_t": var / (cfg.kappa * cfg.time),
            "collisions": drivers.iter().map(|d| d.collisions).sum::<usize>(),
        }),
        checks: Vec::new(),
        files,
        streams: cfg.paths,
    })
}

pub fn level_line_checks(report: &crate::level_line::LevelLineReport, range: [f64; 2], p: f64) -> Vec<Check> {
    let mut checks = Vec::new();
    for pr in &report.probes {
        let mid = 0.5 * (range[0] + range[1]);
        let half = 0.5 * (range[1] - range[0]);
        checks.push(Check::abs(format!("Var(W_t)/(4t) at t={}", pr.t), pr.ratio, mid, half + 1e-15));
        checks.push(Check::above(format!("normality of W_t at t={}", pr.t), pr.jarque_bera_p, p));
    }
    checks
}

fn level_line_driving(cfg: LevelLineConfig, seed: u64, out: &Path) -> Result<ExperimentOutput, CliError> {
    let run = run_level_lines(&cfg, seed)?;
    let mut w = csv::Writer::from_path(out.join("driving.csv"))?;
    let mut header = vec!["path".to_string()];
    header.extend(run.report.probes.iter().map(|p| format!("w_at_{}", p.t)));
    w.write_record(&header)?;
    for (k, s) in run.samples.iter().enumerate() {
        let mut row = vec![k.to_string()];
        row.extend(s.iter().map(|x| x.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    let checks = level_line_checks(&run.report, cfg.ratio_range, cfg.p_threshold);
    Ok(ExperimentOutput {
        summary: serde_json::to_value(&run.report).unwrap_or(Value::Null),
        checks,
        files: vec!["driving.csv".into()],
        streams: cfg.paths,
    })
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeightExperiment {
    pub size: usize,
    pub samples: usize,
}

impl Default for HeightExperiment {
    fn default() -> Self {
        HeightExperiment {
            size: 16,
            samples: 2000,
        }
    }
}

#[derive(Serialize)]
struct HeightRow {
    sample: usize,
    height: f64,
    field: f64,
}

/// Dimer height at the centre cell against the GFF at the centre vertex
/// of the same square domain (zero boundary).
fn height_vs_field(cfg: HeightExperiment, seed: u64, out: &Path) -> Result<ExperimentOutput, CliError> {
    let d = LatticeDomain::rectangle(LatticeKind::Square, cfg.size, cfg.size, 1.0)?;
    let dg = DoubledGraph::new(&d)?;
    let c = d
        .vertex_at([cfg.size as i32 / 2, cfg.size as i32 / 2])
        .ok_or_else(|| CliError::Usage("size too small".into()))?;
    let gff = Gff::new(&d, &vec![0.0; d.n_vertices()])?;
    let green = gff.factor().green_block(&[c])?[(0, 0)];
    let rows = (0..cfg.samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            let t = wilson_ust(&d, &mut rng);
            let m = temperley_matching(&d, &dg, &t)?;
            let h = height_function(&d, &dg, &m)?;
            let height = h.get(c, 0).ok_or_else(|| CliError::Run("missing centre cell".into()))? as f64;
            let field = gff.sample(&mut rng)[c];
            Ok(HeightRow {
                sample: k,
                height,
                field,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut w = csv::Writer::from_path(out.join("centre.csv"))?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    let hs: Vec<f64> = rows.iter().map(|r| r.height).collect();
    let fs: Vec<f64> = rows.iter().map(|r| r.field).collect();
    let var = |xs: &[f64]| {
        let m = mean_se(xs).mean;
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len().max(2) - 1) as f64
    };
    Ok(ExperimentOutput {
        summary: json!({
            "size": cfg.size,
            "samples": cfg.samples,
            "height_mean": mean_se(&hs),
            "height_variance": var(&hs),
            "field_variance": var(&fs),
            "green_at_centre": green,
            "height_variance_over_green": var(&hs) / green,
            "field_jarque_bera_p": jarque_bera(&fs),
            "centre": d.position(c),
        }),
        checks: Vec::new(),
        files: vec!["centre.csv".into()],
        streams: cfg.samples,
    })
}
