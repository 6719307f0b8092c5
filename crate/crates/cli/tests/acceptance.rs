//! End-to-end acceptance checks. Each test prints one `[PASS]`/`[FAIL]`
//! line; run with `--nocapture` to see them. Tests are serialized so the
//! wall-clock limits measure one workload at a time.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde_json::Value;
use sle_gff_lab::experiments::level_line_checks;
use sle_gff_lab::level_line::{run_level_lines, LevelLineConfig};
use sle_gff_lab::report::{Check, SuiteReport};
use sle_gff_lab::suites::{default_seed, run_suite};

static SERIAL: Mutex<()> = Mutex::new(());

fn judge(description: &str, limit: Duration, body: impl FnOnce() -> (bool, String)) {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let (ok, details) = body();
    let took = start.elapsed();
    let in_time = took <= limit;
    let pass = ok && in_time;
    let tag = if pass { "PASS" } else { "FAIL" };
    let late = if in_time { String::new() } else { format!(", over the {limit:?} limit") };
    println!("[{tag}] {description}: {details} ({:.2}s{late})", took.as_secs_f64());
    assert!(pass, "{description}: {details}");
}

fn suite(name: &str) -> SuiteReport {
    run_suite(name, &Value::Null, default_seed(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn summarize<'a>(checks: impl IntoIterator<Item = &'a Check>) -> (bool, String) {
    let checks: Vec<&Check> = checks.into_iter().collect();
    let failed: Vec<&&Check> = checks.iter().filter(|c| !c.pass).collect();
    let worst = checks.iter().map(|c| c.residual).fold(0.0, f64::max);
    let mut s = format!("{} checks, max residual {worst:.3e}", checks.len());
    if let Some(c) = failed.first() {
        s += &format!(
            "; {} failed, first: {} lhs={:.6e} rhs={:.6e} residual={:.3e} tol={:.1e}",
            failed.len(),
            c.name,
            c.lhs,
            c.rhs,
            c.residual,
            c.tolerance
        );
    }
    (failed.is_empty() && !checks.is_empty(), s)
}

fn named<'a>(r: &'a SuiteReport, prefix: &'a str) -> impl Iterator<Item = &'a Check> + 'a {
    r.checks.iter().filter(move |c| c.name.starts_with(prefix))
}

#[test]
fn determinant_factorizes_across_random_cuts() {
    judge("determinant factorization on 50 rectangles", Duration::from_secs(5), || {
        let r = suite("det-factorization");
        assert_eq!(r.checks.len(), 50);
        summarize(&r.checks)
    });
}

#[test]
fn loop_mass_routes_agree() {
    judge("loop mass by determinant, Fredholm and series", Duration::from_secs(10), || {
        let r = suite("loop-mass-routes");
        summarize(&r.checks)
    });
}

#[test]
fn semicircle_mass_matches_twice_r_squared() {
    judge("semicircle loop mass near 2r^2 and quarter ratio", Duration::from_secs(30), || {
        let r = suite("semicircle");
        summarize(named(&r, "mass vs 2r^2").chain(named(&r, "ratio under")))
    });
}

#[test]
fn transported_semicircle_matches_schwarzian_term() {
    judge("semicircle mass transported by a Möbius map", Duration::from_secs(30), || {
        let r = suite("semicircle");
        summarize(named(&r, "transported mass vs 2 hcap"))
    });
}

#[test]
fn exponent_algebra_matches() {
    judge("partition function exponents on 50 kappas", Duration::from_secs(1), || {
        let r = suite("pfident-exponents");
        assert!(named(&r, "boundary exponent").count() == 50);
        assert!(named(&r, "determinant exponent").count() == 50);
        summarize(&r.checks)
    });
}

#[test]
fn regularized_energy_matches_closed_form() {
    judge("regularized Dirichlet energy and antipodal cross term", Duration::from_secs(60), || {
        let r = suite("reg-energy");
        summarize(&r.checks)
    });
}

#[test]
fn rectangle_log_det_scales_with_half_log_lambda() {
    judge("zeta determinant of dilated rectangles", Duration::from_secs(60), || {
        let r = suite("pa-scaling");
        summarize(named(&r, "rectangle"))
    });
}

#[test]
fn sle_martingales_have_constant_mean() {
    judge("m_t and exponential functional over five kappas", Duration::from_secs(300), || {
        let a = suite("martingale");
        let b = suite("exp-martingale");
        summarize(a.checks.iter().chain(&b.checks))
    });
}

#[test]
fn coupling_constant_matches_partition_functions() {
    judge("coupling constant on 10 quadruples", Duration::from_secs(10), || {
        let r = suite("coupling-constant");
        assert_eq!(r.checks.len(), 10);
        summarize(&r.checks)
    });
}

#[test]
fn temperley_and_lerw_statistics() {
    judge("Temperley round trip, LERW exit law and partition function", Duration::from_secs(120), || {
        let a = suite("temperley");
        let b = suite("lerw-exit");
        summarize(a.checks.iter().chain(&b.checks))
    });
}

#[test]
fn kappa_four_level_lines_drive_like_brownian_motion() {
    judge("level-line driving variance at mesh 1/64", Duration::from_secs(1800), || {
        let cfg = LevelLineConfig::default();
        assert_eq!((cfg.mesh, cfg.paths), (64, 2000));
        let run = run_level_lines(&cfg, 1).expect("level lines");
        let checks = level_line_checks(&run.report, cfg.ratio_range, cfg.p_threshold);
        let (ok, mut s) = summarize(&checks);
        for p in &run.report.probes {
            s += &format!("; t={} ratio {:.3}±{:.3} JB p {:.3}", p.t, p.ratio, p.ratio_se, p.jarque_bera_p);
        }
        s += &format!("; {} discarded", run.report.discarded);
        (ok && run.report.discarded * 20 < cfg.paths, s)
    });
}

#[test]
fn gaussian_densities_integrate_to_one() {
    judge("Gaussian integral oracle and density normalizations", Duration::from_secs(60), || {
        let r = suite("cm-density");
        summarize(&r.checks)
    });
}
