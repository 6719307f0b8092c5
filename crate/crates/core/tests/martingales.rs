use num_complex::Complex64;
use sle_gff::loewner::{exp_martingale_test, m_martingale_test};

const KAPPAS: [f64; 5] = [2.0, 8.0 / 3.0, 4.0, 6.0, 8.0];

#[test]
fn m_is_a_martingale() {
    for (i, &kappa) in KAPPAS.iter().enumerate() {
        let r = m_martingale_test(kappa, Complex64::new(1.0, 1.0), 0.25, 1e-3, 10_000, 100 + i as u64);
        println!("{r:?}");
        assert!(r.pass, "{r:?}");
    }
}

#[test]
fn exponential_functional_is_a_martingale() {
    for (i, &kappa) in KAPPAS.iter().enumerate() {
        let z = [Complex64::new(0.0, 2.0)];
        let r = exp_martingale_test(kappa, &z, &[1.0], 0.25, 1e-3, 10_000, 200 + i as u64).unwrap();
        println!("{r:?}");
        assert!(r.pass, "{r:?}");
    }
}

#[test]
fn two_point_exponential_functional() {
    let zs = [Complex64::new(0.5, 1.0), Complex64::new(-1.0, 1.5)];
    let r = exp_martingale_test(8.0 / 3.0, &zs, &[1.0, -0.5], 0.25, 1e-3, 10_000, 300).unwrap();
    println!("{r:?}");
    assert!(r.pass, "{r:?}");
}

#[test]
fn step_size_is_refined_enough() {
    // same Brownian path at dt and dt/2; the paired change of E[m_t] must
    // be small against the Monte-Carlo error of the 10^4-path estimate
    use rand::Rng;
    use rand_distr::StandardNormal;
    use sle_gff::loewner::{observe_driven, STOP_TOL};
    use sle_gff::util::{mean_se, stream_rng};
    let (t, dt) = (0.25, 1e-3);
    let z = [Complex64::new(1.0, 1.0)];
    for &kappa in &KAPPAS {
        let n = (t / dt) as usize;
        let mut diffs = Vec::new();
        let mut values = Vec::new();
        for i in 0..2000 {
            let mut rng = stream_rng(400, i);
            let sd = (kappa * dt / 2.0).sqrt();
            let mut w = 0.0;
            let fine: Vec<f64> = (0..2 * n)
                .map(|_| {
                    w += sd * rng.sample::<f64, _>(StandardNormal);
                    w
                })
                .collect();
            let coarse: Vec<f64> = fine.iter().skip(1).step_by(2).copied().collect();
            let a = observe_driven(kappa, &z, &fine, dt / 2.0, STOP_TOL).m[0];
            let b = observe_driven(kappa, &z, &coarse, dt, STOP_TOL).m[0];
            diffs.push(a - b);
            values.push(b);
        }
        let d = mean_se(&diffs);
        let se_1e4 = mean_se(&values).se * (2000.0f64 / 10_000.0).sqrt();
        println!("kappa {kappa}: paired shift {:.2e} +- {:.1e}, target se {se_1e4:.2e}", d.mean, d.se);
        assert!(d.mean.abs() + 3.0 * d.se < 0.1 * se_1e4);
    }
}
