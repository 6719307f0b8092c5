//! Named verification suites. Each suite reads an optional JSON config,
//! runs its identities and returns one [`Check`] per comparison.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};
use sle_gff::gff::{
    cameron_martin_density, coupling_constant_check, gaussian_quadratic_integral, rn_covariance_density,
    rn_density_on_cut, HybridQuadruple,
};
use sle_gff::kernels::{
    central_charge, highest_weight, kappa_to_ab, pa_correction, radial_exponent_check, reg_dirichlet_energy,
    reg_energy_closed_form, zeta_logdet_rectangle, CatalogMap, Mobius, Quadrature, RefConfig, RefDomain,
};
use sle_gff::lattice::{split_by_cut, LatticeDomain, LatticeKind};
use sle_gff::linalg::{det_factorization_check, neumann_jump, spanning_tree_count};
use sle_gff::loewner::{exp_martingale_test, m_martingale_test, MartingaleReport};
use sle_gff::loops::{
    hm_kernel_matrices, loop_mass_report, moebius_invariance_check, semicircle_benchmark,
    semicircle_loop_mass, HalfDisk, LoopGraph,
};
use sle_gff::ust::{
    harmonic_measure_from, height_function, increments_around, lerw_branch, lerw_log_partition,
    temperley_matching, tree_from_matching, wilson_ust, Black, DoubledGraph,
};
use sle_gff::util::{chi_square_gof, mean_se, stream_rng};

use crate::report::{parse_config, Check, CliError, SuiteReport};

pub const SUITES: [&str; 13] = [
    "det-factorization",
    "loop-mass-routes",
    "fredholm-symmetry",
    "pfident-exponents",
    "reg-energy",
    "pa-scaling",
    "semicircle",
    "temperley",
    "lerw-exit",
    "martingale",
    "exp-martingale",
    "coupling-constant",
    "cm-density",
];

pub fn default_seed(name: &str) -> u64 {
    // fixed per suite so that default runs are reproducible
    SUITES.iter().position(|&s| s == name).map_or(0, |k| 1000 + k as u64)
}

type Out = Result<(Vec<Check>, Value), CliError>;

pub fn run_suite(name: &str, config: &Value, seed: u64) -> Result<SuiteReport, CliError> {
    let start = Instant::now();
    let (checks, details) = match name {
        "det-factorization" => det_factorization(parse_config(config)?, seed)?,
        "loop-mass-routes" => loop_mass_routes(parse_config(config)?, seed)?,
        "fredholm-symmetry" => fredholm_symmetry(parse_config(config)?, seed)?,
        "pfident-exponents" => pfident_exponents(parse_config(config)?)?,
        "reg-energy" => reg_energy(parse_config(config)?, seed)?,
        "pa-scaling" => pa_scaling(parse_config(config)?)?,
        "semicircle" => semicircle(parse_config(config)?)?,
        "temperley" => temperley(parse_config(config)?, seed)?,
        "lerw-exit" => lerw_exit(parse_config(config)?, seed)?,
        "martingale" => martingale(parse_config(config)?, seed, false)?,
        "exp-martingale" => martingale(parse_config(config)?, seed, true)?,
        "coupling-constant" => coupling_constant(parse_config(config)?, seed)?,
        "cm-density" => cm_density(parse_config(config)?, seed)?,
        _ => {
            return Err(CliError::Usage(format!(
                "unknown suite '{name}'; expected one of: {}",
                SUITES.join(", ")
            )))
        }
    };
    Ok(SuiteReport {
        name: name.to_string(),
        pass: checks.iter().all(|c| c.pass),
        seed,
        seconds: start.elapsed().as_secs_f64(),
        checks,
        details,
    })
}

fn square(w: usize, h: usize) -> Result<LatticeDomain, CliError> {
    Ok(LatticeDomain::rectangle(LatticeKind::Square, w, h, 1.0)?)
}

fn parse_grid(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("grid must look like 12x12, got '{s}'"));
    let (a, b) = s.split_once('x').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetConfig {
    pub instances: usize,
    pub min_size: usize,
    pub max_size: usize,
    /// Fixed `WxH` size instead of random sizes.
    pub grid: Option<String>,
    pub tolerance: f64,
}

impl Default for DetConfig {
    fn default() -> Self {
        DetConfig {
            instances: 50,
            min_size: 3,
            max_size: 40,
            grid: None,
            tolerance: 1e-9,
        }
    }
}

/// Random rectangle cut along a random full column or row.
fn det_factorization(cfg: DetConfig, seed: u64) -> Out {
    let fixed = cfg.grid.as_deref().map(parse_grid).transpose()?;
    if cfg.min_size < 3 || cfg.max_size < cfg.min_size {
        return Err(CliError::Usage("need 3 <= min_size <= max_size".into()));
    }
    let checks = (0..cfg.instances)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            let (w, h) = fixed.unwrap_or_else(|| {
                (rng.gen_range(cfg.min_size..=cfg.max_size), rng.gen_range(cfg.min_size..=cfg.max_size))
            });
            let d = square(w, h)?;
            let vertical = w >= 3 && (h < 3 || rng.gen_bool(0.5));
            let delta = if vertical {
                d.column(rng.gen_range(1..w as i32 - 1))
            } else {
                d.row(rng.gen_range(1..h as i32 - 1))
            };
            let cut = split_by_cut(&d, &delta)?;
            let r = det_factorization_check(&d, &cut)?;
            let kind = if vertical { "column" } else { "row" };
            Ok(Check::abs(format!("{w}x{h} {kind} cut"), r.lhs, r.rhs, cfg.tolerance))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok((checks, Value::Null))
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopConfig {
    pub instances: usize,
    pub min_size: usize,
    pub max_size: usize,
    pub max_set: usize,
    pub tolerance: f64,
    /// Target truncation bound of the trace series.
    pub series_bound: f64,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            instances: 20,
            min_size: 4,
            max_size: 40,
            max_set: 6,
            tolerance: 1e-9,
            series_bound: 1e-10,
        }
    }
}

fn random_sets<R: Rng>(n: usize, max_set: usize, rng: &mut R) -> (Vec<usize>, Vec<usize>) {
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(rng);
    let a = rng.gen_range(1..=max_set.min(n / 2).max(1));
    let b = rng.gen_range(1..=max_set.min(n - a).max(1));
    (ids[..a].to_vec(), ids[a..a + b].to_vec())
}

fn loop_mass_routes(cfg: LoopConfig, seed: u64) -> Out {
    let per = (0..cfg.instances)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            let (w, h) = (rng.gen_range(cfg.min_size..=cfg.max_size), rng.gen_range(cfg.min_size..=cfg.max_size));
            let g = LoopGraph::from_domain(&square(w, h)?);
            let (k1, k2) = random_sets(g.dim(), cfg.max_set, &mut rng);
            let r = loop_mass_report(&g, &k1, &k2, cfg.series_bound, 1_000_000)?;
            let tag = format!("{w}x{h} |K1|={} |K2|={}", k1.len(), k2.len());
            Ok(vec![
                Check::abs(format!("det vs fredholm {tag}"), r.det_route, r.fredholm_route, cfg.tolerance),
                Check::at_most(
                    format!("series residual within tail bound {tag} ({} terms)", r.series.terms),
                    r.series_residual,
                    r.series.bound + 1e-12,
                ),
            ])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok((per.into_iter().flatten().collect(), Value::Null))
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymmetryConfig {
    pub instances: usize,
    pub size: usize,
    pub max_set: usize,
    pub tolerance: f64,
}

impl Default for SymmetryConfig {
    fn default() -> Self {
        SymmetryConfig {
            instances: 10,
            size: 20,
            max_set: 8,
            tolerance: 1e-12,
        }
    }
}

fn fredholm_symmetry(cfg: SymmetryConfig, seed: u64) -> Out {
    let g = LoopGraph::from_domain(&square(cfg.size, cfg.size)?);
    let mut checks = Vec::new();
    for k in 0..cfg.instances {
        let mut rng = stream_rng(seed, k as u64);
        let (k1, k2) = random_sets(g.dim(), cfg.max_set, &mut rng);
        let (t12, t21) = hm_kernel_matrices(&g, &k1, &k2)?;
        // t12 is |K2|x|K1| and t21 is |K1|x|K2|
        let a = (DMatrix::identity(k2.len(), k2.len()) - &t12 * &t21).determinant();
        let b = (DMatrix::identity(k1.len(), k1.len()) - &t21 * &t12).determinant();
        checks.push(Check::abs(
            format!("det(1-T12T21) = det(1-T21T12), |K1|={} |K2|={}", k1.len(), k2.len()),
            a,
            b,
            cfg.tolerance,
        ));
    }
    Ok((checks, Value::Null))
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExponentConfig {
    pub kappas: Vec<f64>,
    pub tolerance: f64,
    /// Extra boundary weights for the radial bookkeeping.
    pub radial_rhos: Vec<f64>,
}

impl Default for ExponentConfig {
    fn default() -> Self {
        ExponentConfig {
            kappas: (0..50).map(|k| 0.25 + k as f64 * (12.0 - 0.25) / 49.0).collect(),
            tolerance: 1e-12,
            radial_rhos: vec![0.7, -0.4],
        }
    }
}

fn pfident_exponents(cfg: ExponentConfig) -> Out {
    let mut checks = Vec::new();
    for &kappa in &cfg.kappas {
        let p = kappa_to_ab(kappa, 1.0, &[]);
        let (a, b) = (p.a[0], p.b);
        checks.push(Check::abs(
            format!("boundary exponent kappa={kappa:.4}"),
            PI * a * (2.0 * b + a) / 2.0,
            highest_weight(1.0, 2.0, kappa),
            cfg.tolerance,
        ));
        checks.push(Check::abs(
            format!("determinant exponent kappa={kappa:.4}"),
            -0.5 + 6.0 * PI * b * b,
            -central_charge(kappa) / 2.0,
            cfg.tolerance,
        ));
        let r = radial_exponent_check(kappa, 1.0, &cfg.radial_rhos);
        for (what, v) in [("b'", r.b_prime), ("bulk", r.bulk), ("poisson", r.poisson), ("excursion", r.excursion)] {
            checks.push(Check::abs(format!("radial {what} kappa={kappa:.4}"), v, 0.0, cfg.tolerance));
        }
    }
    Ok((checks, Value::Null))
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConfig {
    pub kappas: Vec<f64>,
    pub configurations: usize,
    pub tolerance: f64,
    pub cross_tolerance: f64,
    pub quadrature: Quadrature,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        EnergyConfig {
            kappas: vec![2.0, 6.0],
            configurations: 5,
            tolerance: 1e-3,
            cross_tolerance: 1e-4,
            quadrature: Quadrature::default(),
        }
    }
}

/// Differences against the reference disk with marked points ±1, so that
/// the additive normalisation of the closed form cancels.
fn reg_energy(cfg: EnergyConfig, seed: u64) -> Out {
    let q = &cfg.quadrature;
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let reference = RefConfig::new(RefDomain::Disk, vec![c(1.0, 0.0), c(-1.0, 0.0)], None)?;
    let mut checks = Vec::new();
    for &kappa in &cfg.kappas {
        let p = kappa_to_ab(kappa, 1.0, &[]);
        let (a, b) = (p.a[0], p.b);
        let e_ref = reg_dirichlet_energy(&reference, a, b, q)?.value;
        let c_ref = reg_energy_closed_form(&reference, a, b, q)?;
        let mut rng = stream_rng(seed, kappa.to_bits());
        for k in 0..cfg.configurations {
            let phi = Mobius::onto_disk(
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                rng.gen_range(0.5..2.0),
                Complex64::from_polar(rng.gen_range(0.0..0.6), rng.gen_range(0.0..2.0 * PI)),
                rng.gen_range(0.0..2.0 * PI),
            );
            let tx = rng.gen_range(0.0..2.0 * PI);
            let ty = tx + rng.gen_range(0.5..2.0 * PI - 0.5);
            let cfg_k = RefConfig::new(
                RefDomain::MobiusDisk(phi),
                vec![phi.apply(Complex64::from_polar(1.0, tx)), phi.apply(Complex64::from_polar(1.0, ty))],
                None,
            )?;
            let lhs = reg_dirichlet_energy(&cfg_k, a, b, q)?.value - e_ref;
            let rhs = reg_energy_closed_form(&cfg_k, a, b, q)? - c_ref;
            checks.push(Check::rel(format!("kappa={kappa} configuration {k}"), lhs, rhs, cfg.tolerance));
        }
    }
    // ∫ ∇arg(z-1)·∇arg(z+1) over the disk, by polarisation
    let single = reg_dirichlet_energy(&reference, 1.0, -0.5, q)?.value;
    let both = reg_dirichlet_energy(&reference, 1.0, 0.0, q)?.value;
    checks.push(Check::abs(
        "cross term at antipodal points",
        (2.0 * single - both) / 2.0,
        -PI * 2f64.ln(),
        cfg.cross_tolerance,
    ));
    Ok((checks, Value::Null))
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingConfig {
    pub lambdas: Vec<f64>,
    pub rectangles: Vec<[f64; 2]>,
    pub tolerance: f64,
    pub quadrature: Quadrature,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            lambdas: vec![2.0, 3.0],
            rectangles: vec![[1.0, 1.0], [1.0, 2.0]],
            tolerance: 1e-4,
            quadrature: Quadrature::default(),
        }
    }
}

/// Rectangle: `log det_ζ` shifts by `-2 ζ(0) log λ` with `ζ(0) = 1/4`.
/// Disk: the anomaly integral for `z ↦ λz` gives `-(1/3) log λ`.
fn pa_scaling(cfg: ScalingConfig) -> Out {
    let mut checks = Vec::new();
    for &lambda in &cfg.lambdas {
        for &[a, b] in &cfg.rectangles {
            let shift = zeta_logdet_rectangle(lambda * a, lambda * b)? - zeta_logdet_rectangle(a, b)?;
            checks.push(Check::abs(
                format!("rectangle {a}x{b} log det shift, lambda={lambda}"),
                shift,
                -2.0 * 0.25 * lambda.ln(),
                cfg.tolerance,
            ));
        }
        let m = CatalogMap::Mobius(Mobius::scaling(Complex64::new(lambda, 0.0)));
        checks.push(Check::abs(
            format!("disk anomaly term, lambda={lambda}"),
            pa_correction(&m, &cfg.quadrature)?,
            -lambda.ln() / 3.0,
            cfg.tolerance,
        ));
    }
    Ok((checks, Value::Null))
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SemicircleConfig {
    pub r: f64,
    pub mobius_r: f64,
    pub x: f64,
    pub far_centre: f64,
    pub tolerance: f64,
    pub ratio_tolerance: f64,
}

impl Default for SemicircleConfig {
    fn default() -> Self {
        SemicircleConfig {
            r: 0.1,
            mobius_r: 0.05,
            x: 0.5,
            far_centre: 30.0,
            tolerance: 0.1,
            ratio_tolerance: 0.05,
        }
    }
}

fn semicircle(cfg: SemicircleConfig) -> Out {
    let big = semicircle_benchmark(cfg.r)?;
    let half = semicircle_benchmark(cfg.r / 2.0)?;
    let far = semicircle_loop_mass(
        HalfDisk {
            centre: cfg.far_centre,
            radius: cfg.r,
        },
        128,
    )?;
    let mob = moebius_invariance_check(cfg.mobius_r, cfg.x)?;
    let checks = vec![
        Check::rel(format!("mass vs 2r^2 at r={}", cfg.r), big.estimate, big.target, cfg.tolerance),
        Check::rel("ratio under r -> r/2", half.estimate / big.estimate, 0.25, cfg.ratio_tolerance),
        Check::at_most(format!("far hull at centre {}", cfg.far_centre), far, 1e-3),
        Check::rel(
            format!("transported mass vs 2 hcap (-S/6) at x={}", cfg.x),
            mob.direct,
            mob.rhs,
            cfg.tolerance,
        ),
        Check::rel("transported mass vs untransported", mob.direct, mob.untransported, 1e-6),
        Check::abs(format!("(-S/6)(1/x) at x={}", cfg.x), mob.schwarzian_factor, {
            let z = 1.0 / cfg.x;
            1.0 / (z * z - 1.0).powi(2)
        }, 1e-12),
    ];
    let details = json!({
        "benchmark": big,
        "half_radius": half,
        "far": far,
        "mobius": mob,
        "mass_over_hcap": big.estimate / (cfg.r * cfg.r),
    });
    Ok((checks, details))
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemperleyConfig {
    pub width: usize,
    pub height: usize,
    pub samples: usize,
}

impl Default for TemperleyConfig {
    fn default() -> Self {
        TemperleyConfig {
            width: 10,
            height: 8,
            samples: 500,
        }
    }
}

fn temperley(cfg: TemperleyConfig, seed: u64) -> Out {
    let d = square(cfg.width, cfg.height)?;
    let dg = DoubledGraph::new(&d)?;
    let counts = (0..cfg.samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            let t = wilson_ust(&d, &mut rng);
            let m = temperley_matching(&d, &dg, &t)?;
            let back = tree_from_matching(&d, &dg, &m)?;
            let h = height_function(&d, &dg, &m)?;
            let mut bad = 0usize;
            for v in d.interior() {
                if let Some(inc) = increments_around(&d, &h, Black::Vertex(v)) {
                    let mut s = inc.clone();
                    s.sort();
                    if s != [-3, 1, 1, 1] && s != [-1, -1, -1, 3] {
                        bad += 1;
                    }
                }
            }
            Ok(((back != t) as usize, bad))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mismatches: usize = counts.iter().map(|c| c.0).sum();
    let bad: usize = counts.iter().map(|c| c.1).sum();
    let checks = vec![
        Check::abs("tree -> matching -> tree mismatches", mismatches as f64, 0.0, 0.5),
        Check::abs("inadmissible height increments", bad as f64, 0.0, 0.5),
        Check::abs("black count - 2 = white count", (dg.n_black() - 2) as f64, dg.n_white() as f64, 0.5),
    ];
    Ok((checks, json!({ "samples": cfg.samples })))
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LerwConfig {
    pub width: usize,
    pub height: usize,
    pub runs: usize,
    pub p_threshold: f64,
}

impl Default for LerwConfig {
    fn default() -> Self {
        LerwConfig {
            width: 9,
            height: 9,
            runs: 100_000,
            p_threshold: 0.001,
        }
    }
}

/// Exit law of LERW from the centre against harmonic measure, and the
/// count of trees whose branch exits at the bottom middle edge.
fn lerw_exit(cfg: LerwConfig, seed: u64) -> Out {
    let d = square(cfg.width, cfg.height)?;
    let y = d
        .vertex_at([cfg.width as i32 / 2, cfg.height as i32 / 2])
        .ok_or_else(|| CliError::Usage("domain too small".into()))?;
    let harm = harmonic_measure_from(&d, y)?;
    let exits = (0..cfg.runs)
        .into_par_iter()
        .map(|k| {
            let p = lerw_branch(&d, y, &mut stream_rng(seed, k as u64))?;
            Ok(d.boundary_index(*p.last().unwrap()).unwrap())
        })
        .collect::<Result<Vec<usize>, CliError>>()?;
    let mut counts = vec![0u64; harm.len()];
    for &e in &exits {
        counts[e] += 1;
    }
    let (stat, dof, p) = chi_square_gof(&counts, &harm, 5.0);

    let x = d
        .vertex_at([cfg.width as i32 / 2, -1])
        .ok_or_else(|| CliError::Usage("domain too small".into()))?;
    let kx = d.boundary_index(x).unwrap();
    let trees = spanning_tree_count(&d, false)?.log.exp();
    let hits: Vec<f64> = exits.iter().map(|&e| f64::from(u8::from(e == kx))).collect();
    let frac = mean_se(&hits);
    let exact = lerw_log_partition(&d, x, y)?.exp();
    let checks = vec![
        Check::above(format!("exit law chi-square p ({dof} dof)"), p, cfg.p_threshold),
        Check::within_se(
            "trees with branch exiting at bottom middle",
            trees * frac.mean,
            trees * frac.se,
            exact,
            3.0,
        ),
    ];
    Ok((checks, json!({ "chi_square": stat, "dof": dof, "exit_fraction": frac })))
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MartingaleConfig {
    pub kappas: Vec<f64>,
    /// Observation points `[re, im]`.
    pub points: Vec<[f64; 2]>,
    /// Coefficients of the exponential functional, one per point.
    pub coefficients: Vec<f64>,
    pub t: f64,
    pub dt: f64,
    pub paths: usize,
}

impl Default for MartingaleConfig {
    fn default() -> Self {
        MartingaleConfig {
            kappas: vec![2.0, 8.0 / 3.0, 4.0, 6.0, 8.0],
            points: Vec::new(),
            coefficients: Vec::new(),
            t: 0.25,
            dt: 1e-3,
            paths: 10_000,
        }
    }
}

/// κ number `k` uses master seed `seed + k`.
fn martingale(cfg: MartingaleConfig, seed: u64, exponential: bool) -> Out {
    let pts: Vec<Complex64> = if cfg.points.is_empty() {
        vec![if exponential { Complex64::new(0.0, 2.0) } else { Complex64::new(1.0, 1.0) }]
    } else {
        cfg.points.iter().map(|p| Complex64::new(p[0], p[1])).collect()
    };
    let cs = if cfg.coefficients.is_empty() { vec![1.0; pts.len()] } else { cfg.coefficients.clone() };
    if pts.iter().any(|z| !(z.im > 0.0)) {
        return Err(CliError::Usage("observation points must lie in the upper half plane".into()));
    }
    let reports = cfg
        .kappas
        .par_iter()
        .enumerate()
        .map(|(k, &kappa)| {
            let s = seed + k as u64;
            if exponential {
                Ok(vec![exp_martingale_test(kappa, &pts, &cs, cfg.t, cfg.dt, cfg.paths, s)?])
            } else {
                Ok(pts.iter().map(|&z| m_martingale_test(kappa, z, cfg.t, cfg.dt, cfg.paths, s)).collect())
            }
        })
        .collect::<Result<Vec<Vec<MartingaleReport>>, CliError>>()?;
    let what = if exponential { "exponential functional" } else { "m_t" };
    let mut checks = Vec::new();
    for r in reports.iter().flatten() {
        checks.push(Check::within_se(
            format!("{what} kappa={:.4} ({} stopped)", r.kappa, r.stopped),
            r.estimate.mean,
            r.estimate.se,
            r.target,
            3.0,
        ));
    }
    Ok((checks, serde_json::to_value(&reports).unwrap_or(Value::Null)))
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CouplingConfig {
    pub quadruples: usize,
    pub tolerance: f64,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        CouplingConfig {
            quadruples: 10,
            tolerance: 1e-8,
        }
    }
}

/// Rectangle with a top-left notch of `(cols, rows)` and a bottom-right
/// notch of `(cols, rows)`.
fn notched(w: usize, h: usize, tl: (usize, usize), br: (usize, usize)) -> Vec<Vec<bool>> {
    (0..h)
        .map(|r| {
            (0..w)
                .map(|c| !((c < tl.0 && r >= h - tl.1) || (c >= w - br.0 && r < br.1)))
                .collect()
        })
        .collect()
}

fn coupling_constant(cfg: CouplingConfig, seed: u64) -> Out {
    let mut checks = Vec::new();
    for k in 0..cfg.quadruples {
        let mut rng = stream_rng(seed, k as u64);
        let (w, h) = (rng.gen_range(6..=10), rng.gen_range(4..=8));
        let cut = rng.gen_range(2..w as i32 - 2);
        let left_max = cut as usize - 1;
        let right_max = w - cut as usize - 2;
        let mut mask = || {
            notched(
                w,
                h,
                (rng.gen_range(0..=left_max), rng.gen_range(0..h)),
                (rng.gen_range(0..=right_max), rng.gen_range(0..h)),
            )
        };
        let (m0, m1) = (mask(), mask());
        let (s0, s1) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        // jump of π a with a = 1/√π on the bottom side
        let pa = PI.sqrt();
        let base = move |c: [i32; 2]| {
            0.5 * (0.3 * c[0] as f64 + 0.7 * c[1] as f64).sin() + if c[1] < 0 { pa } else { 0.0 }
        };
        let bv0 = move |c: [i32; 2]| base(c) + 0.1 * s0 * (c[0] - cut) as f64;
        let bv1 = move |c: [i32; 2]| base(c) + 0.1 * s1 * (c[0] - cut) as f64;
        let q = HybridQuadruple::from_masks([&m0, &m1], cut, [&bv0, &bv1])?;
        let r = coupling_constant_check(&q)?;
        checks.push(Check::rel(format!("{w}x{h} cut at column {cut}"), r.lhs, r.rhs, cfg.tolerance));
    }
    Ok((checks, Value::Null))
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityConfig {
    pub samples: usize,
    pub exact_tolerance: f64,
}

impl Default for DensityConfig {
    fn default() -> Self {
        DensityConfig {
            samples: 200_000,
            exact_tolerance: 1e-12,
        }
    }
}

fn gaussian_samples(q: &DMatrix<f64>, n: usize, seed: u64, stream: u64) -> Result<Vec<DVector<f64>>, CliError> {
    let l = q
        .clone()
        .cholesky()
        .ok_or_else(|| CliError::Run("covariance not positive definite".into()))?
        .l();
    let mut rng = stream_rng(seed, stream);
    Ok((0..n)
        .map(|_| &l * DVector::from_fn(q.nrows(), |_, _| rng.sample::<f64, _>(StandardNormal)))
        .collect())
}

fn mc_check(name: &str, values: &[f64], target: f64) -> Check {
    let m = mean_se(values);
    Check::within_se(name, m.mean, m.se, target, 3.0)
}

/// Jump operators on a shared column cut of a full and a notched 6×6
/// rectangle; the notch sits away from the cut.
fn cut_pair() -> Result<(DMatrix<f64>, DMatrix<f64>), CliError> {
    let full = square(6, 6)?;
    let notch = LatticeDomain::from_mask(LatticeKind::Square, &notched(6, 6, (1, 2), (0, 0)), 1.0)?;
    let n1 = neumann_jump(&full, &split_by_cut(&full, &full.column(3))?)?;
    let n2 = neumann_jump(&notch, &split_by_cut(&notch, &notch.column(3))?)?;
    Ok((n1, n2))
}

fn cm_density(cfg: DensityConfig, seed: u64) -> Out {
    let n = cfg.samples;
    let mut checks = Vec::new();
    // 1-D oracle: ∫ exp(λh²/2 + μh) dN(0,q) = (1-λq)^{-1/2} exp(μ²q / 2(1-λq))
    for &(lam, mu, q) in &[(0.3, 0.0, 1.0), (0.4, 0.7, 1.5), (-2.0, -0.3, 0.5)] {
        let closed = gaussian_quadratic_integral(
            &DMatrix::from_element(1, 1, lam),
            &DVector::from_element(1, mu),
            &DMatrix::from_element(1, 1, q),
        )?;
        let oracle = (1.0 - lam * q).powf(-0.5) * (mu * mu * q / (2.0 * (1.0 - lam * q))).exp();
        checks.push(Check::abs(format!("quadratic integral 1-D lambda={lam} mu={mu} q={q}"), closed, oracle, cfg.exact_tolerance));
    }

    let q = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.1, 0.3, 0.8, -0.2, 0.1, -0.2, 1.2]);
    let hs = gaussian_samples(&q, n, seed, 0)?;

    let mq = DMatrix::from_row_slice(3, 3, &[0.2, 0.05, 0.0, 0.05, -0.3, 0.1, 0.0, 0.1, 0.15]);
    let mv = DVector::from_vec(vec![0.2, -0.1, 0.3]);
    let closed = gaussian_quadratic_integral(&mq, &mv, &q)?;
    let vals: Vec<f64> = hs.iter().map(|h| (0.5 * h.dot(&(&mq * h)) + mv.dot(h)).exp()).collect();
    checks.push(mc_check("quadratic integral 3-D, Monte Carlo", &vals, closed));

    let shift = DVector::from_vec(vec![0.5, -0.4, 0.2]);
    let vals = hs
        .iter()
        .map(|h| cameron_martin_density(h, &shift, &q))
        .collect::<sle_gff::Result<Vec<f64>>>()?;
    checks.push(mc_check("shift density integrates to 1", &vals, 1.0));

    let (n1, n2) = cut_pair()?;
    let c1 = n1.clone().try_inverse().ok_or_else(|| CliError::Run("singular jump operator".into()))?;
    let c2 = n2.clone().try_inverse().ok_or_else(|| CliError::Run("singular jump operator".into()))?;
    let ws = gaussian_samples(&c1, n, seed, 1)?;
    let vals = ws
        .iter()
        .map(|w| rn_density_on_cut(w, &n1, &n2))
        .collect::<sle_gff::Result<Vec<f64>>>()?;
    checks.push(mc_check("cut density integrates to 1", &vals, 1.0));
    let vals = ws
        .iter()
        .map(|w| rn_covariance_density(w, &c1, &c2))
        .collect::<sle_gff::Result<Vec<f64>>>()?;
    checks.push(mc_check("covariance-form density integrates to 1", &vals, 1.0));
    let w0 = &ws[0];
    checks.push(Check::rel(
        "cut and covariance forms agree pointwise",
        rn_density_on_cut(w0, &n1, &n2)?,
        rn_covariance_density(w0, &c1, &c2)?,
        1e-10,
    ));
    Ok((checks, json!({ "samples": n, "cut_size": n1.nrows() })))
}
