//! Level lines of the discrete GFF on a triangular half disk, mapped to the
//! half plane and unzipped into driving functions.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sle_gff::gff::{two_arc_boundary, zero_level_interface, Gff};
use sle_gff::lattice::{LatticeDomain, LatticeKind, VertexId};
use sle_gff::loewner::extract_stack_until;
use sle_gff::util::{jarque_bera, mean_se, stream_rng, MeanSe};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LevelLineConfig {
    /// Lattice steps per unit radius (mesh `1/mesh`).
    pub mesh: usize,
    pub paths: usize,
    /// Loewner time at which unzipping stops.
    pub time: f64,
    /// Probe times as fractions of `time`.
    pub probes: Vec<f64>,
    /// Boundary height; defaults to `3^{-1/4} sqrt(π/8)`.
    pub lambda: Option<f64>,
    /// Accepted range of `Var(W_t)/(4t)`.
    pub ratio_range: [f64; 2],
    /// Smallest accepted Jarque–Bera p-value.
    pub p_threshold: f64,
}

impl Default for LevelLineConfig {
    fn default() -> Self {
        LevelLineConfig {
            mesh: 64,
            paths: 2000,
            time: 0.1,
            probes: vec![0.125, 0.25],
            lambda: None,
            ratio_range: [0.85, 1.15],
            p_threshold: 0.001,
        }
    }
}

/// Boundary height for which the zero level line of the triangular-lattice
/// field with unit edge weights approximates SLE_4.
pub fn triangular_lambda() -> f64 {
    3f64.powf(-0.25) * (PI / 8.0).sqrt()
}

/// Half disk `{|z + 1/2| < mesh, Im z > 0}` in lattice units on the
/// triangular lattice, with `x` the boundary vertex at the origin and `y`
/// the boundary vertex nearest the top of the arc.
pub fn half_disk(mesh: usize) -> sle_gff::Result<(LatticeDomain, VertexId, VertexId)> {
    let r = mesh as f64;
    let lim = mesh as i32 + 2;
    let mut cells = Vec::new();
    for row in 1..=lim {
        for i in -3 * lim..=3 * lim {
            let p = LatticeKind::Triangular.position([i, row]);
            if (p[0] + 0.5).powi(2) + p[1] * p[1] < r * r {
                cells.push([i, row]);
            }
        }
    }
    let mut d = LatticeDomain::from_cells(LatticeKind::Triangular, &cells, 1.0 / r)?;
    let x = d.mark("x", [0, 0])?;
    let top = d
        .boundary_order()
        .iter()
        .copied()
        .min_by(|&a, &b| {
            let dist = |v: VertexId| {
                let p = d.position(v);
                (p[0] + 0.5).powi(2) + (p[1] - r).powi(2)
            };
            dist(a).total_cmp(&dist(b))
        })
        .unwrap();
    let c = d.coord(top);
    let y = d.mark("y", c)?;
    Ok((d, x, y))
}

/// `z / (1 + z²)` maps the unit upper half disk onto the upper half plane,
/// fixing 0 with unit derivative and sending `i` to infinity.
pub fn to_half_plane(z: Complex64) -> Complex64 {
    z / (1.0 + z * z)
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeStats {
    pub t: f64,
    pub mean: MeanSe,
    pub variance: f64,
    pub variance_se: f64,
    /// `Var(W_t) / (4t)`.
    pub ratio: f64,
    pub ratio_se: f64,
    pub jarque_bera_p: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelLineReport {
    pub mesh: usize,
    pub lambda: f64,
    pub paths: usize,
    /// Interfaces that failed to unzip or ended before reaching `time`.
    pub discarded: usize,
    pub time: f64,
    pub mean_points_used: f64,
    pub probes: Vec<ProbeStats>,
}

pub struct LevelLineRun {
    pub report: LevelLineReport,
    /// `W` at the probe times, one row per kept interface.
    pub samples: Vec<Vec<f64>>,
}

fn probe_stats(t: f64, xs: &[f64]) -> ProbeStats {
    let n = xs.len() as f64;
    let m = mean_se(xs);
    let var = xs.iter().map(|x| (x - m.mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = xs.iter().map(|x| (x - m.mean).powi(4)).sum::<f64>() / n;
    let var_se = ((m4 - var * var) / n).sqrt();
    ProbeStats {
        t,
        mean: m,
        variance: var,
        variance_se: var_se,
        ratio: var / (4.0 * t),
        ratio_se: var_se / (4.0 * t),
        jarque_bera_p: jarque_bera(xs),
    }
}

/// Interface `i` uses stream `i` of `seed`.
pub fn run_level_lines(cfg: &LevelLineConfig, seed: u64) -> sle_gff::Result<LevelLineRun> {
    if cfg.mesh < 4 || cfg.paths < 2 || !(cfg.time > 0.0) {
        return Err(sle_gff::Error::Argument(
            "need mesh >= 4, paths >= 2 and a positive time".into(),
        ));
    }
    let lambda = cfg.lambda.unwrap_or_else(triangular_lambda);
    let (d, x, y) = half_disk(cfg.mesh)?;
    let bv = two_arc_boundary(&d, x, y, lambda, -lambda)?;
    let gff = Gff::new(&d, &bv)?;
    // every triangle centre lies within 1/√3 of an interior vertex
    let h = 1.0 / (cfg.mesh as f64 + 1.0 / 3f64.sqrt());
    let times: Vec<f64> = cfg.probes.iter().map(|f| f * cfg.time).collect();

    let runs: Vec<Option<(Vec<f64>, usize)>> = (0..cfg.paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let field = gff.sample(&mut rng);
            let it = zero_level_interface(&d, &field, x).ok()?;
            let curve: Vec<Complex64> = it
                .points
                .iter()
                .map(|p| to_half_plane(Complex64::new((p[0] + 0.5) * h, p[1] * h)))
                .collect();
            let stack = extract_stack_until(&curve, cfg.time).ok()?;
            let driver = stack.driver();
            if driver.duration() < cfg.time {
                return None;
            }
            let w = times.iter().map(|&t| driver.value_at(t)).collect::<Option<Vec<f64>>>()?;
            Some((w, stack.len()))
        })
        .collect();

    let kept: Vec<&(Vec<f64>, usize)> = runs.iter().flatten().collect();
    let samples: Vec<Vec<f64>> = kept.iter().map(|r| r.0.clone()).collect();
    let probes = times
        .iter()
        .enumerate()
        .map(|(k, &t)| probe_stats(t, &samples.iter().map(|s| s[k]).collect::<Vec<_>>()))
        .collect();
    Ok(LevelLineRun {
        report: LevelLineReport {
            mesh: cfg.mesh,
            lambda,
            paths: cfg.paths,
            discarded: cfg.paths - kept.len(),
            time: cfg.time,
            mean_points_used: kept.iter().map(|r| r.1 as f64).sum::<f64>() / kept.len().max(1) as f64,
            probes,
        },
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_disk_is_symmetric() {
        let (d, x, y) = half_disk(12).unwrap();
        for v in d.interior() {
            let p = d.position(v);
            let q = [-1.0 - p[0], p[1]];
            let [i, r] = d.coord(v);
            assert_eq!(LatticeKind::Triangular.position([-1 - i - r, r]), q);
            assert!(d.vertex_at([-1 - i - r, r]).is_some_and(|w| d.is_interior(w)));
        }
        assert_eq!(d.position(x), [0.0, 0.0]);
        assert!(d.position(y)[1] > 11.0);
    }

    #[test]
    fn map_sends_arc_to_real_line() {
        for th in [0.3, 1.0, 2.0] {
            let w = to_half_plane(Complex64::from_polar(1.0, th));
            assert!(w.im.abs() < 1e-15);
            assert!((w.re - 0.5 / th.cos()).abs() < 1e-12);
        }
        let w = to_half_plane(Complex64::new(0.0, 0.5));
        assert!((w - Complex64::new(0.0, 0.5 / 0.75)).norm() < 1e-15);
    }

    #[test]
    fn small_run_keeps_paths() {
        let cfg = LevelLineConfig {
            mesh: 16,
            paths: 20,
            time: 0.05,
            ..Default::default()
        };
        let r = run_level_lines(&cfg, 3).unwrap();
        assert!(r.report.discarded < 5, "{:?}", r.report);
        let again = run_level_lines(&cfg, 3).unwrap();
        assert_eq!(r.samples, again.samples);
    }
}
