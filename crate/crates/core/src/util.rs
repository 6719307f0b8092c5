//! Shared numerics: seeded random streams, quadrature and a few statistics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Independent stream `stream` of the generator seeded by `master`.
pub fn stream_rng(master: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(master);
    r.set_stream(stream);
    r
}

#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

pub fn mean_se(xs: &[f64]) -> MeanSe {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        f64::NAN
    };
    MeanSe {
        mean,
        se: (var / n as f64).sqrt(),
        n,
    }
}

/// Pearson goodness of fit. Cells with expected count below `min_expected`
/// are pooled into one. Returns `(statistic, dof, p-value)`.
pub fn chi_square_gof(observed: &[u64], probs: &[f64], min_expected: f64) -> (f64, usize, f64) {
    let total: u64 = observed.iter().sum();
    let norm: f64 = probs.iter().sum();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut po, mut pe) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        let e = total as f64 * p / norm;
        if e < min_expected {
            po += o as f64;
            pe += e;
        } else {
            cells.push((o as f64, e));
        }
    }
    if pe > 0.0 {
        cells.push((po, pe));
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = cells.len().saturating_sub(1).max(1);
    let p = 1.0 - ChiSquared::new(dof as f64).unwrap().cdf(stat);
    (stat, dof, p)
}

/// Jarque–Bera normality test; returns the p-value.
pub fn jarque_bera(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m3 = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    let skew = m3 / m2.powf(1.5);
    let kurt = m4 / (m2 * m2) - 3.0;
    let jb = n / 6.0 * (skew * skew + kurt * kurt / 4.0);
    1.0 - ChiSquared::new(2.0).unwrap().cdf(jb)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Composite Gauss–Legendre rule on `[a, b]` split at the given interior
/// breakpoints.
pub fn integrate(f: impl Fn(f64) -> f64, breaks: &[f64], order: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    breaks
        .windows(2)
        .map(|ab| {
            let (a, b) = (ab[0], ab[1]);
            let h = 0.5 * (b - a);
            let c = 0.5 * (a + b);
            x.iter().zip(&w).map(|(xi, wi)| wi * f(c + h * xi)).sum::<f64>() * h
        })
        .sum()
}

/// Breakpoints on `[a, b]` refined geometrically towards both ends.
pub fn graded_breaks(a: f64, b: f64, levels: usize, ratio: f64) -> Vec<f64> {
    let len = b - a;
    let mut left = vec![a];
    let mut s = len * 0.5 * ratio.powi(levels as i32);
    for _ in 0..levels {
        left.push(a + s);
        s /= ratio;
    }
    let mut out = left.clone();
    out.push(a + 0.5 * len);
    for &p in left.iter().rev() {
        out.push(b - (p - a));
    }
    out
}

/// Linear interpolation of `(t, y)` data at `t0`; `None` outside the range.
pub fn interpolate(ts: &[f64], ys: &[f64], t0: f64) -> Option<f64> {
    if ts.is_empty() || t0 < ts[0] || t0 > *ts.last().unwrap() {
        return None;
    }
    let k = ts.partition_point(|&t| t < t0);
    if k == 0 {
        return Some(ys[0]);
    }
    let (t1, t2) = (ts[k - 1], ts[k]);
    let s = if t2 > t1 { (t0 - t1) / (t2 - t1) } else { 0.0 };
    Some(ys[k - 1] + s * (ys[k] - ys[k - 1]))
}
