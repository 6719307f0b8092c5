//! Chordal Loewner chains discretised by exact vertical-slit maps, SLE
//! drivers with force points, the martingale observables and zipper-style
//! driver extraction.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::util::{mean_se, stream_rng, MeanSe};
use crate::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// A force point of an SLE_κ(ρ) driver.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ForcePoint {
    /// Real point `z` (may be `±inf`) with weight `rho`.
    Real { z: f64, rho: f64 },
    /// The pair `y, conj(y)`, each with weight `rho`.
    Conjugate { y: Complex64, rho: f64 },
}

impl ForcePoint {
    pub fn rho(&self) -> f64 {
        match *self {
            ForcePoint::Real { rho, .. } | ForcePoint::Conjugate { rho, .. } => rho,
        }
    }

    /// Radial SLE_κ aimed at the interior point `y`.
    pub fn radial(kappa: f64, y: Complex64) -> Self {
        ForcePoint::Conjugate {
            y,
            rho: (kappa - 6.0) / 2.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DriverKind {
    Deterministic,
    Sle { kappa: f64 },
    SleRho { kappa: f64, force: Vec<ForcePoint> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Driver {
    pub t: Vec<f64>,
    pub w: Vec<f64>,
    pub kind: DriverKind,
    /// Positions of each force point at the grid times (upper member for
    /// conjugate pairs).
    #[serde(default)]
    pub force_paths: Vec<Vec<Complex64>>,
    /// Steps at which a force point would have crossed the driver.
    #[serde(default)]
    pub collisions: usize,
}

impl Driver {
    pub fn new(t: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        if t.len() != w.len() || t.is_empty() {
            return Err(Error::Argument("driver needs matching non-empty t and W".into()));
        }
        if t[0] != 0.0 || t.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::Argument("driver times must start at 0 and increase".into()));
        }
        Ok(Driver {
            t,
            w,
            kind: DriverKind::Deterministic,
            force_paths: Vec::new(),
            collisions: 0,
        })
    }

    /// Constant driver on a uniform grid.
    pub fn constant(x: f64, total: f64, n: usize) -> Self {
        let t = (0..=n).map(|k| total * k as f64 / n as f64).collect();
        Driver::new(t, vec![x; n + 1]).unwrap()
    }

    pub fn duration(&self) -> f64 {
        *self.t.last().unwrap()
    }

    /// Piecewise linear interpolation.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        crate::util::interpolate(&self.t, &self.w, t)
    }
}

/// Brownian driver `x + sqrt(κ) B` on a uniform grid of step `dt`.
pub fn sample_sle_driver<R: Rng + ?Sized>(
    kappa: f64,
    x: f64,
    total: f64,
    dt: f64,
    rng: &mut R,
) -> Driver {
    let n = (total / dt).round().max(1.0) as usize;
    let dt = total / n as f64;
    let sd = (kappa * dt).sqrt();
    let mut t = Vec::with_capacity(n + 1);
    let mut w = Vec::with_capacity(n + 1);
    t.push(0.0);
    w.push(x);
    for k in 1..=n {
        let xi: f64 = rng.sample(StandardNormal);
        t.push(k as f64 * dt);
        w.push(w[k - 1] + sd * xi);
    }
    Driver {
        t,
        w,
        kind: DriverKind::Sle { kappa },
        force_paths: Vec::new(),
        collisions: 0,
    }
}

/// SLE_κ(ρ) driver. Real force points are advanced through `X = W - Z` with
/// the singular self-interaction treated implicitly, which keeps the sign
/// of `X` (the Bessel convention). Conjugate pairs follow the exact slit
/// flow with explicit drift `2ρ Re 1/(W - y)`.
pub fn sample_sle_kr_driver<R: Rng + ?Sized>(
    kappa: f64,
    x: f64,
    force: &[ForcePoint],
    total: f64,
    dt: f64,
    rng: &mut R,
) -> Result<Driver> {
    for f in force {
        if f.rho() <= -2.0 {
            return Err(Error::Argument(format!("force weight {} must exceed -2", f.rho())));
        }
        if let ForcePoint::Real { z, .. } = *f {
            if z == x {
                return Err(Error::Argument("force point starts on the driver".into()));
            }
        }
        if let ForcePoint::Conjugate { y, .. } = *f {
            if y.im <= 0.0 {
                return Err(Error::Argument("conjugate force point must lie in H".into()));
            }
        }
    }
    let n = (total / dt).round().max(1.0) as usize;
    let dt = total / n as f64;
    let sd = (kappa * dt).sqrt();
    let mut pos: Vec<Complex64> = force
        .iter()
        .map(|f| match *f {
            ForcePoint::Real { z, .. } => Complex64::new(z, 0.0),
            ForcePoint::Conjugate { y, .. } => y,
        })
        .collect();
    let mut paths: Vec<Vec<Complex64>> = pos.iter().map(|&p| vec![p]).collect();
    let mut t = vec![0.0];
    let mut w = vec![x];
    let mut collisions = 0;
    let mut cur = x;
    for k in 1..=n {
        let xi: f64 = rng.sample(StandardNormal);
        let noise = sd * xi;
        // drift from the old configuration
        let drift_old: Vec<f64> = force
            .iter()
            .zip(&pos)
            .map(|(f, p)| match f {
                ForcePoint::Real { rho, .. } if p.re.is_finite() => rho / (cur - p.re),
                ForcePoint::Conjugate { rho, .. } => 2.0 * rho * (1.0 / (cur - p)).re,
                _ => 0.0,
            })
            .collect();
        let total_old: f64 = drift_old.iter().sum();
        let mut new_x = vec![f64::NAN; force.len()];
        for (i, f) in force.iter().enumerate() {
            if let ForcePoint::Real { rho, .. } = *f {
                if !pos[i].re.is_finite() {
                    continue;
                }
                let xo = cur - pos[i].re;
                let a = xo + noise + (total_old - drift_old[i]) * dt;
                if a * xo <= 0.0 {
                    collisions += 1;
                }
                let disc = (a * a + 4.0 * (rho + 2.0) * dt).sqrt();
                new_x[i] = if xo > 0.0 { (a + disc) / 2.0 } else { (a - disc) / 2.0 };
            }
        }
        let mut drift = 0.0;
        for (i, f) in force.iter().enumerate() {
            drift += match *f {
                ForcePoint::Real { rho, .. } if new_x[i].is_finite() => rho / new_x[i],
                ForcePoint::Real { .. } => 0.0,
                ForcePoint::Conjugate { .. } => drift_old[i],
            };
        }
        let next = cur + noise + drift * dt;
        for (i, f) in force.iter().enumerate() {
            match f {
                ForcePoint::Real { .. } if new_x[i].is_finite() => {
                    pos[i] = Complex64::new(next - new_x[i], 0.0)
                }
                ForcePoint::Conjugate { .. } => pos[i] = slit_step(pos[i], dt, next),
                _ => {}
            }
            paths[i].push(pos[i]);
        }
        cur = next;
        t.push(k as f64 * dt);
        w.push(cur);
    }
    Ok(Driver {
        t,
        w,
        kind: DriverKind::SleRho {
            kappa,
            force: force.to_vec(),
        },
        force_paths: paths,
        collisions,
    })
}

/// `W + sqrt((z - W)^2 + 4 dt)` with the root in the closed upper half
/// plane; on the real axis the root keeps the side of `z`.
fn slit_step(z: Complex64, dt: f64, w: f64) -> Complex64 {
    let u = z - w;
    w + upper_root(u * u + 4.0 * dt, u.re)
}

fn upper_root(v: Complex64, side: f64) -> Complex64 {
    let s = v.sqrt();
    if s.im < 0.0 || (s.im == 0.0 && s.re * side < 0.0) {
        -s
    } else {
        s
    }
}

/// Image of a point under a growing map stack, with `log g'` accumulated
/// factor by factor so its imaginary part is a continuous branch.
#[derive(Clone, Copy, Debug)]
pub struct Tracked {
    pub z: Complex64,
    pub g: Complex64,
    pub log_deriv: Complex64,
    /// Step index at which the point was judged swallowed.
    pub swallowed: Option<usize>,
    steps: usize,
}

/// Relative distance-to-hull threshold below which a point counts as
/// swallowed.
pub const SWALLOW_TOL: f64 = 1e-9;

impl Tracked {
    pub fn new(z: Complex64) -> Self {
        Tracked {
            z,
            g: z,
            log_deriv: Complex64::new(0.0, 0.0),
            swallowed: None,
            steps: 0,
        }
    }

    /// `Im g / |g'|`, comparable to the distance from `z` to the hull.
    pub fn distance_scale(&self) -> f64 {
        self.g.im / self.log_deriv.re.exp()
    }

    pub fn step(&mut self, dt: f64, w: f64, tol: f64) {
        self.steps += 1;
        if self.swallowed.is_some() {
            return;
        }
        let u = self.g - w;
        let s = upper_root(u * u + 4.0 * dt, u.re);
        self.g = w + s;
        self.log_deriv += (u / s).ln();
        if self.z.im > 0.0 && !(self.distance_scale() >= tol * self.z.im) {
            self.swallowed = Some(self.steps);
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MapStack {
    steps: Vec<(f64, f64)>,
}

impl MapStack {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends the slit map of duration `dt` at driver value `w`.
    pub fn push(&mut self, dt: f64, w: f64) {
        assert!(dt >= 0.0);
        self.steps.push((dt, w));
    }

    /// One step per grid interval, using the driver value at its right end.
    pub fn from_driver(d: &Driver) -> Self {
        let steps = (1..d.t.len()).map(|k| (d.t[k] - d.t[k - 1], d.w[k])).collect();
        MapStack { steps }
    }

    pub fn steps(&self) -> &[(f64, f64)] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Half-plane capacity, `2 * sum(dt)`.
    pub fn capacity(&self) -> f64 {
        2.0 * self.steps.iter().map(|s| s.0).sum::<f64>()
    }

    pub fn evaluate(&self, z: Complex64) -> Tracked {
        let mut p = Tracked::new(z);
        for &(dt, w) in &self.steps {
            p.step(dt, w, SWALLOW_TOL);
        }
        p
    }

    pub fn g(&self, z: Complex64) -> Complex64 {
        self.evaluate(z).g
    }

    pub fn g_prime(&self, z: Complex64) -> Complex64 {
        self.evaluate(z).log_deriv.exp()
    }

    /// Inverse of the first `k` steps.
    pub fn inverse_prefix(&self, k: usize, mut w: Complex64) -> Complex64 {
        for &(dt, x) in self.steps[..k].iter().rev() {
            let u = w - x;
            w = x + upper_root(u * u - 4.0 * dt, u.re);
        }
        w
    }

    pub fn inverse(&self, w: Complex64) -> Complex64 {
        self.inverse_prefix(self.steps.len(), w)
    }

    /// Tip of the curve after each step.
    pub fn trace(&self) -> Vec<Complex64> {
        (0..self.steps.len())
            .map(|k| {
                let (dt, w) = self.steps[k];
                self.inverse_prefix(k, w + 2.0 * dt.sqrt() * I)
            })
            .collect()
    }

    /// Stack of the hull scaled by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        MapStack {
            steps: self
                .steps
                .iter()
                .map(|&(dt, w)| (lambda * lambda * dt, lambda * w))
                .collect(),
        }
    }

    /// `other` applied after `self`.
    pub fn concat(&self, other: &MapStack) -> Self {
        let mut steps = self.steps.clone();
        steps.extend_from_slice(&other.steps);
        MapStack { steps }
    }

    pub fn driver(&self) -> Driver {
        let mut t = vec![0.0];
        let mut w = vec![self.steps.first().map_or(0.0, |s| s.1)];
        for &(dt, x) in &self.steps {
            if dt > 0.0 {
                t.push(t.last().unwrap() + dt);
                w.push(x);
            }
        }
        Driver {
            t,
            w,
            kind: DriverKind::Deterministic,
            force_paths: Vec::new(),
            collisions: 0,
        }
    }
}

/// `(a, b)` matched to κ: `a = sqrt(2/(πκ))`, `b = a(1 - κ/4)`.
pub fn ab_constants(kappa: f64) -> (f64, f64) {
    let a = (2.0 / (PI * kappa)).sqrt();
    (a, a * (1.0 - kappa / 4.0))
}

/// `m_t(z) = -a arg(g_t(z) - W_t) - b arg g_t'(z)`.
pub fn observable_m(p: &Tracked, w: f64, a: f64, b: f64) -> Result<f64> {
    if p.swallowed.is_some() {
        return Err(Error::Domain("point has been swallowed".into()));
    }
    Ok(-a * (p.g - w).arg() - b * p.log_deriv.im)
}

/// Dirichlet Green function of the half plane, `-(1/2π) log|(z-w)/(z-conj w)|`.
pub fn green_h(z: Complex64, w: Complex64) -> f64 {
    -((z - w).norm() / (z - w.conj()).norm()).ln() / (2.0 * PI)
}

/// `G_0 - G_t` for two tracked points; coincident points use the finite
/// diagonal limit.
pub fn green_variation_tracked(p: &Tracked, q: &Tracked) -> f64 {
    if p.z == q.z {
        (p.z.im.ln() + p.log_deriv.re - p.g.im.ln()) / (2.0 * PI)
    } else {
        green_h(p.z, q.z) - green_h(p.g, q.g)
    }
}

pub fn green_variation(stack: &MapStack, z1: Complex64, z2: Complex64) -> Result<f64> {
    let p = stack.evaluate(z1);
    let q = stack.evaluate(z2);
    if p.swallowed.is_some() || q.swallowed.is_some() {
        return Err(Error::Domain("point has been swallowed".into()));
    }
    Ok(green_variation_tracked(&p, &q))
}

/// State of one SLE path at time `t` for a set of observation points, the
/// path being stopped when any point approaches the hull.
#[derive(Clone, Debug)]
pub struct PathObservation {
    pub m: Vec<f64>,
    /// `(G_0 - G_t)(z_j, z_k)`, row major.
    pub green: Vec<f64>,
    pub stopped: bool,
}

/// Runs an SLE_κ path from 0 up to time `t` and reads off `m_t` and
/// `G_0 - G_t` at `zs`, frozen at the first near-swallowing time.
pub fn observe_path<R: Rng + ?Sized>(
    kappa: f64,
    zs: &[Complex64],
    t: f64,
    dt: f64,
    stop_tol: f64,
    rng: &mut R,
) -> PathObservation {
    let n = (t / dt).round().max(1.0) as usize;
    let dt = t / n as f64;
    let sd = (kappa * dt).sqrt();
    let mut w = 0.0;
    let values: Vec<f64> = (0..n)
        .map(|_| {
            let xi: f64 = rng.sample(StandardNormal);
            w += sd * xi;
            w
        })
        .collect();
    observe_driven(kappa, zs, &values, dt, stop_tol)
}

/// As [`observe_path`] for given driver values `W(k dt)`, `k = 1..`.
pub fn observe_driven(
    kappa: f64,
    zs: &[Complex64],
    values: &[f64],
    dt: f64,
    stop_tol: f64,
) -> PathObservation {
    let (a, b) = ab_constants(kappa);
    let mut pts: Vec<Tracked> = zs.iter().map(|&z| Tracked::new(z)).collect();
    let mut stopped = false;
    let mut snapshot = pts.clone();
    let mut w_snap = 0.0;
    for &w in values {
        for p in pts.iter_mut() {
            p.step(dt, w, stop_tol);
        }
        if pts.iter().any(|p| p.swallowed.is_some()) {
            stopped = true;
            break;
        }
        snapshot.clone_from(&pts);
        w_snap = w;
    }
    let k = zs.len();
    let m = snapshot
        .iter()
        .map(|p| -a * (p.g - w_snap).arg() - b * p.log_deriv.im)
        .collect();
    let mut green = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            green[i * k + j] = green_variation_tracked(&snapshot[i], &snapshot[j]);
        }
    }
    PathObservation { m, green, stopped }
}

#[derive(Clone, Debug, Serialize)]
pub struct MartingaleReport {
    pub kappa: f64,
    pub estimate: MeanSe,
    pub target: f64,
    /// Paths frozen before `t` because an observation point neared the hull.
    pub stopped: usize,
    pub pass: bool,
}

impl MartingaleReport {
    fn new(kappa: f64, xs: &[f64], target: f64, stopped: usize) -> Self {
        let estimate = mean_se(xs);
        let pass = (estimate.mean - target).abs() <= 3.0 * estimate.se;
        MartingaleReport {
            kappa,
            estimate,
            target,
            stopped,
            pass,
        }
    }
}

/// Stopping threshold used by the Monte-Carlo martingale checks.
pub const STOP_TOL: f64 = 1e-6;

/// `E[m_t(z)] = m_0(z)` over `n_paths` SLE_κ paths, path `i` drawing from
/// stream `i` of `seed`.
pub fn m_martingale_test(
    kappa: f64,
    z: Complex64,
    t: f64,
    dt: f64,
    n_paths: usize,
    seed: u64,
) -> MartingaleReport {
    let (a, b) = ab_constants(kappa);
    let m0 = -a * z.arg() - b * 0.0;
    let mut stopped = 0;
    let xs: Vec<f64> = (0..n_paths)
        .map(|i| {
            let obs = observe_path(kappa, &[z], t, dt, STOP_TOL, &mut stream_rng(seed, i as u64));
            stopped += obs.stopped as usize;
            obs.m[0]
        })
        .collect();
    MartingaleReport::new(kappa, &xs, m0, stopped)
}

/// `E[exp(Σ c_k m_t(z_k) - ½ ΣΣ c_j c_k (G_0 - G_t)(z_j, z_k))]` against
/// `exp(Σ c_k m_0(z_k))`.
pub fn exp_martingale_test(
    kappa: f64,
    zs: &[Complex64],
    cs: &[f64],
    t: f64,
    dt: f64,
    n_paths: usize,
    seed: u64,
) -> Result<MartingaleReport> {
    if zs.len() != cs.len() {
        return Err(Error::Argument("one coefficient per point".into()));
    }
    let (a, _) = ab_constants(kappa);
    let m0: f64 = zs.iter().zip(cs).map(|(z, c)| -c * a * z.arg()).sum();
    let k = zs.len();
    let mut stopped = 0;
    let xs: Vec<f64> = (0..n_paths)
        .map(|i| {
            let obs = observe_path(kappa, zs, t, dt, STOP_TOL, &mut stream_rng(seed, i as u64));
            stopped += obs.stopped as usize;
            let lin: f64 = obs.m.iter().zip(cs).map(|(m, c)| c * m).sum();
            let mut quad = 0.0;
            for i in 0..k {
                for j in 0..k {
                    quad += cs[i] * cs[j] * obs.green[i * k + j];
                }
            }
            (lin - 0.5 * quad).exp()
        })
        .collect();
    Ok(MartingaleReport::new(kappa, &xs, m0.exp(), stopped))
}

fn segments_cross(p1: Complex64, p2: Complex64, q1: Complex64, q2: Complex64) -> bool {
    let cross = |o: Complex64, a: Complex64, b: Complex64| {
        let (u, v) = (a - o, b - o);
        u.re * v.im - u.im * v.re
    };
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Polyline self-intersection test (non-adjacent segments only).
pub fn self_intersects(curve: &[Complex64]) -> bool {
    let n = curve.len();
    for i in 0..n.saturating_sub(1) {
        for j in i + 2..n - 1 {
            if segments_cross(curve[i], curve[i + 1], curve[j], curve[j + 1]) {
                return true;
            }
        }
    }
    false
}

/// Unzips a simple curve from the origin: each point in turn is mapped by
/// the maps found so far and removed with one vertical slit. A leading
/// point at the origin is skipped.
pub fn extract_stack(curve: &[Complex64]) -> Result<MapStack> {
    extract_stack_until(curve, f64::INFINITY)
}

/// As [`extract_stack`], stopping after the first step at which the
/// Loewner time reaches `max_time`; later points are never touched.
pub fn extract_stack_until(curve: &[Complex64], max_time: f64) -> Result<MapStack> {
    let start = usize::from(curve.first().is_some_and(|z| z.norm() < 1e-14));
    let pts = &curve[start..];
    let mut stack = MapStack::new();
    let mut time = 0.0;
    let mut used = 0;
    for (k, &z) in pts.iter().enumerate() {
        if time >= max_time {
            break;
        }
        if !(z.im > 0.0) {
            return Err(Error::Argument("curve must stay in the open upper half plane".into()));
        }
        let mut p = z;
        for &(dt, w) in stack.steps() {
            p = slit_step(p, dt, w);
        }
        if !(p.im > 0.0) {
            return Err(Error::Numerical(format!("point {k} left H during unzipping")));
        }
        let (dt, w) = (p.im * p.im / 4.0, p.re);
        stack.push(dt, w);
        time += dt;
        used = k + 1;
    }
    let mut chain = Vec::with_capacity(used + 1);
    chain.push(Complex64::new(0.0, 0.0));
    chain.extend_from_slice(&pts[..used]);
    if self_intersects(&chain) || chain.windows(2).any(|p| p[0] == p[1]) {
        return Err(Error::Argument("curve is not simple".into()));
    }
    Ok(stack)
}

/// Driver of a simple curve in the upper half plane started at 0.
pub fn extract_driving(curve: &[Complex64]) -> Result<Driver> {
    Ok(extract_stack(curve)?.driver())
}
