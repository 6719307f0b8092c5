//! Harmonic kernels of reference domains, catalog conformal maps, the
//! (a, b) harmonic function and its regularised energy, the flat
//! Polyakov–Alvarez correction, ζ-determinants of rectangles and the SLE /
//! free-field exponent bookkeeping.
//!
//! Kernel normalisations: in the half plane `P(y, x) = Im y / |x - y|^2`,
//! `H(x, y) = 1 / (x - y)^2` and the conformal radius density is
//! `1 / Im y`. In the disk `P(w, u) = (1 - |w|^2) / (2 |u - w|^2)` against
//! arc length and `H(u, v) = 1 / |u - v|^2`, both exactly the Cayley
//! transports of the half-plane ones, while the radius density
//! `1 / (1 - |w|^2)` is half the transported value so that it equals 1 at
//! the centre.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::util::{gauss_legendre, graded_breaks, integrate};
use crate::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `z -> (a z + b) / (c z + d)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mobius {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Mobius {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        if (a * d - b * c).norm() < 1e-300 {
            return Err(Error::Argument("degenerate Mobius coefficients".into()));
        }
        Ok(Mobius { a, b, c, d })
    }

    pub fn identity() -> Self {
        Mobius {
            a: c(1.0, 0.0),
            b: c(0.0, 0.0),
            c: c(0.0, 0.0),
            d: c(1.0, 0.0),
        }
    }

    /// `z -> λ z`.
    pub fn scaling(lambda: Complex64) -> Self {
        Mobius {
            a: lambda,
            ..Self::identity()
        }
    }

    /// Disk automorphism `e^{iθ} (z - α) / (1 - conj(α) z)`.
    pub fn disk_automorphism(alpha: Complex64, theta: f64) -> Self {
        let r = Complex64::from_polar(1.0, theta);
        Mobius {
            a: r,
            b: -r * alpha,
            c: -alpha.conj(),
            d: c(1.0, 0.0),
        }
    }

    /// Map of the disk onto the disk `|w - centre| < radius`.
    pub fn onto_disk(centre: Complex64, radius: f64, alpha: Complex64, theta: f64) -> Self {
        let m = Self::disk_automorphism(alpha, theta);
        Mobius {
            a: radius * m.a + centre * m.c,
            b: radius * m.b + centre * m.d,
            c: m.c,
            d: m.d,
        }
    }

    /// Cayley map of the disk onto the half plane sending `u` (on the unit
    /// circle) to infinity and 0 to `i`.
    pub fn cayley(u: Complex64) -> Self {
        let i = c(0.0, 1.0);
        Mobius {
            a: i,
            b: i * u,
            c: c(-1.0, 0.0),
            d: u,
        }
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn deriv(&self, z: Complex64) -> Complex64 {
        let q = self.c * z + self.d;
        self.det() / (q * q)
    }

    /// `self ∘ other`.
    pub fn compose(&self, o: &Mobius) -> Mobius {
        Mobius {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn inverse(&self) -> Mobius {
        Mobius {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    fn jet(&self, z: Complex64) -> [Complex64; 4] {
        let q = self.c * z + self.d;
        let d1 = self.det() / (q * q);
        let d2 = -2.0 * self.c * d1 / q;
        let d3 = 6.0 * self.c * self.c * d1 / (q * q);
        [self.apply(z), d1, d2, d3]
    }

    /// Pole of the map, `None` for affine maps.
    pub fn pole(&self) -> Option<Complex64> {
        (self.c.norm() > 0.0).then(|| -self.d / self.c)
    }
}

/// Catalog of analytic maps with exact derivatives up to third order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CatalogMap {
    Mobius(Mobius),
    /// `z + 1/z`.
    Joukowski,
    /// `outer ∘ inner`.
    Compose {
        outer: Box<CatalogMap>,
        inner: Box<CatalogMap>,
    },
}

impl CatalogMap {
    /// Value and first three derivatives.
    pub fn jet(&self, z: Complex64) -> [Complex64; 4] {
        match self {
            CatalogMap::Mobius(m) => m.jet(z),
            CatalogMap::Joukowski => {
                let zi = 1.0 / z;
                let z2 = zi * zi;
                [z + zi, 1.0 - z2, 2.0 * z2 * zi, -6.0 * z2 * z2]
            }
            CatalogMap::Compose { outer, inner } => {
                let [g, g1, g2, g3] = inner.jet(z);
                let [f, f1, f2, f3] = outer.jet(g);
                [
                    f,
                    f1 * g1,
                    f2 * g1 * g1 + f1 * g2,
                    f3 * g1 * g1 * g1 + 3.0 * f2 * g1 * g2 + f1 * g3,
                ]
            }
        }
    }

    pub fn compose(self, inner: CatalogMap) -> CatalogMap {
        CatalogMap::Compose {
            outer: Box::new(self),
            inner: Box::new(inner),
        }
    }
}

/// Schwarzian derivative `f'''/f' - (3/2)(f''/f')^2`.
pub fn schwarzian(map: &CatalogMap, z: Complex64) -> Result<Complex64> {
    let [_, d1, d2, d3] = map.jet(z);
    if d1.norm() < 1e-300 || !d1.is_finite() {
        return Err(Error::Domain(format!("map is not locally univalent at {z}")));
    }
    let r = d2 / d1;
    Ok(d3 / d1 - 1.5 * r * r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RefDomain {
    HalfPlane,
    Disk,
    /// Image of the unit disk under a Mobius map whose pole lies outside
    /// the closed disk.
    MobiusDisk(Mobius),
    Rectangle { width: f64, height: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefConfig {
    pub domain: RefDomain,
    /// Marked boundary points.
    #[serde(default)]
    pub marked: Vec<Complex64>,
    /// Optional marked bulk point.
    #[serde(default)]
    pub bulk: Option<Complex64>,
}

impl RefConfig {
    pub fn new(domain: RefDomain, marked: Vec<Complex64>, bulk: Option<Complex64>) -> Result<Self> {
        if let RefDomain::MobiusDisk(m) = &domain {
            if m.pole().is_some_and(|p| p.norm() <= 1.0 + 1e-12) {
                return Err(Error::Domain("Mobius image of the disk is unbounded".into()));
            }
        }
        for i in 0..marked.len() {
            for j in 0..i {
                if (marked[i] - marked[j]).norm() < 1e-14 {
                    return Err(Error::Argument("marked points must be distinct".into()));
                }
            }
        }
        Ok(RefConfig { domain, marked, bulk })
    }

    /// Map from the unit disk onto the domain, for disk-type domains.
    pub fn disk_map(&self) -> Result<Mobius> {
        match &self.domain {
            RefDomain::Disk => Ok(Mobius::identity()),
            RefDomain::MobiusDisk(m) => Ok(*m),
            _ => Err(Error::Unsupported("domain is not a disk image".into())),
        }
    }
}

/// Poisson kernel density of the point `y` at the boundary point `x`.
pub fn poisson_kernel(domain: &RefDomain, y: Complex64, x: Complex64) -> Result<f64> {
    match domain {
        RefDomain::HalfPlane => {
            if y.im <= 0.0 {
                return Err(Error::Argument("bulk point must lie in H".into()));
            }
            Ok(y.im / (x - y).norm_sqr())
        }
        RefDomain::Disk => {
            if y.norm() >= 1.0 {
                return Err(Error::Argument("bulk point must lie in the disk".into()));
            }
            Ok((1.0 - y.norm_sqr()) / (2.0 * (x - y).norm_sqr()))
        }
        RefDomain::MobiusDisk(m) => {
            let inv = m.inverse();
            Ok(poisson_kernel(&RefDomain::Disk, inv.apply(y), inv.apply(x))? * inv.deriv(x).norm())
        }
        RefDomain::Rectangle { .. } => Err(Error::Unsupported("kernels on rectangles".into())),
    }
}

/// Boundary excursion kernel.
pub fn excursion_kernel(domain: &RefDomain, x: Complex64, y: Complex64) -> Result<f64> {
    if (x - y).norm() < 1e-300 {
        return Err(Error::Argument("coincident boundary points".into()));
    }
    match domain {
        RefDomain::HalfPlane => Ok(1.0 / (x - y).norm_sqr()),
        RefDomain::Disk => Ok(1.0 / (x - y).norm_sqr()),
        RefDomain::MobiusDisk(m) => {
            let inv = m.inverse();
            Ok(excursion_kernel(&RefDomain::Disk, inv.apply(x), inv.apply(y))?
                * inv.deriv(x).norm()
                * inv.deriv(y).norm())
        }
        RefDomain::Rectangle { .. } => Err(Error::Unsupported("kernels on rectangles".into())),
    }
}

/// Conformal radius density at a bulk point.
pub fn conformal_radius(domain: &RefDomain, y: Complex64) -> Result<f64> {
    match domain {
        RefDomain::HalfPlane => Ok(1.0 / y.im),
        RefDomain::Disk => Ok(1.0 / (1.0 - y.norm_sqr())),
        RefDomain::MobiusDisk(m) => {
            let inv = m.inverse();
            Ok(conformal_radius(&RefDomain::Disk, inv.apply(y))? * inv.deriv(y).norm())
        }
        RefDomain::Rectangle { .. } => Err(Error::Unsupported("kernels on rectangles".into())),
    }
}

pub fn central_charge(kappa: f64) -> f64 {
    1.0 - 1.5 * (kappa - 4.0).powi(2) / kappa
}

/// Kac weight `h_{p;q}(κ)`.
pub fn highest_weight(p: f64, q: f64, kappa: f64) -> f64 {
    ((p * kappa - 4.0 * q).powi(2) - (kappa - 4.0).powi(2)) / (16.0 * kappa)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbParams {
    pub a: Vec<f64>,
    pub b: f64,
    pub kappa: f64,
    pub eps: f64,
}

/// `a_i = ε ρ_i / sqrt(2πκ)`, `b = ε (4 - κ) / sqrt(8πκ)`; the first weight
/// is the seed `ρ_0 = 2`, so `a_0 = ε sqrt(2/(πκ))`.
pub fn kappa_to_ab(kappa: f64, eps: f64, rhos: &[f64]) -> AbParams {
    let s = (2.0 * PI * kappa).sqrt();
    let mut a = vec![eps * 2.0 / s];
    a.extend(rhos.iter().map(|r| eps * r / s));
    AbParams {
        a,
        b: eps * (4.0 - kappa) / (8.0 * PI * kappa).sqrt(),
        kappa,
        eps,
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExponentResiduals {
    /// `|π a (2b + a)/2 - h_{1;2}(κ)|`
    pub boundary: f64,
    /// `|(-1/2 + 6π b^2) + c/2|`
    pub determinant: f64,
}

pub fn exponent_match_check(kappa: f64) -> ExponentResiduals {
    let p = kappa_to_ab(kappa, 1.0, &[]);
    let (a, b) = (p.a[0], p.b);
    ExponentResiduals {
        boundary: (PI * a * (2.0 * b + a) / 2.0 - highest_weight(1.0, 2.0, kappa)).abs(),
        determinant: ((-0.5 + 6.0 * PI * b * b) + central_charge(kappa) / 2.0).abs(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RadialResiduals {
    /// `b' = b + ½ Σ a_i` against `-ε ρ / sqrt(2πκ)`.
    pub b_prime: f64,
    /// `π b'(b' - 2b)` against `2α`.
    pub bulk: f64,
    /// The alternative bulk exponent `-2π b b'` against `2α`; generally
    /// nonzero.
    pub bulk_alternative: f64,
    /// `π a_i b'` against `-ρ ρ_i / (2κ)`, largest over `i`.
    pub poisson: f64,
    /// `-π a_i a_j / 2` against `-ρ_i ρ_j / (4κ)`, largest over pairs.
    pub excursion: f64,
    pub determinant: f64,
}

/// Radial bookkeeping for boundary weights `rhos` (the seed `ρ_0 = 2` is
/// prepended) and a bulk point carrying `ρ = (κ - 6 - Σ rhos)/2`.
pub fn radial_exponent_check(kappa: f64, eps: f64, rhos: &[f64]) -> RadialResiduals {
    let p = kappa_to_ab(kappa, eps, rhos);
    let mut all = vec![2.0];
    all.extend_from_slice(rhos);
    let rho = (kappa - 6.0 - rhos.iter().sum::<f64>()) / 2.0;
    let alpha = rho / (4.0 * kappa) * (rho - kappa + 4.0);
    let bp = p.b + 0.5 * p.a.iter().sum::<f64>();
    let mut poisson = 0.0f64;
    let mut excursion = 0.0f64;
    for i in 0..all.len() {
        poisson = poisson.max((PI * p.a[i] * bp + rho * all[i] / (2.0 * kappa)).abs());
        for j in 0..i {
            excursion = excursion
                .max((-PI * p.a[i] * p.a[j] / 2.0 + all[i] * all[j] / (4.0 * kappa)).abs());
        }
    }
    RadialResiduals {
        b_prime: (bp + eps * rho / (2.0 * PI * kappa).sqrt()).abs(),
        bulk: (PI * bp * (bp - 2.0 * p.b) - 2.0 * alpha).abs(),
        bulk_alternative: (-2.0 * PI * p.b * bp - 2.0 * alpha).abs(),
        poisson,
        excursion,
        determinant: ((-0.5 + 6.0 * PI * p.b * p.b) + central_charge(kappa) / 2.0).abs(),
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PartitionShape {
    /// Log of the kernel product.
    pub log_kernels: f64,
    /// Exponent `-c/2` of the ζ-determinant.
    pub det_exponent: f64,
}

/// Log of `H(y)^{2α} Π P(y, z_i)^{-ρρ_i/2κ} Π H(z_i, z_j)^{-ρ_iρ_j/4κ}`
/// with `rhos` aligned to `config.marked` (seed first). Without a bulk
/// point only the boundary product remains.
pub fn sle_log_partition_shape(config: &RefConfig, kappa: f64, rhos: &[f64]) -> Result<PartitionShape> {
    if rhos.len() != config.marked.len() {
        return Err(Error::Argument("one weight per marked point".into()));
    }
    let z = &config.marked;
    let mut log = 0.0;
    for i in 0..z.len() {
        for j in 0..i {
            log -= rhos[i] * rhos[j] / (4.0 * kappa)
                * excursion_kernel(&config.domain, z[i], z[j])?.ln();
        }
    }
    if let Some(y) = config.bulk {
        let rho = (kappa - 6.0 - rhos[1..].iter().sum::<f64>()) / 2.0;
        let alpha = rho / (4.0 * kappa) * (rho - kappa + 4.0);
        log += 2.0 * alpha * conformal_radius(&config.domain, y)?.ln();
        for i in 0..z.len() {
            log -= rho * rhos[i] / (2.0 * kappa) * poisson_kernel(&config.domain, y, z[i])?.ln();
        }
    }
    Ok(PartitionShape {
        log_kernels: log,
        det_exponent: -central_charge(kappa) / 2.0,
    })
}

/// Harmonic function with (a, b) boundary data in a disk-type or half-plane
/// configuration with marked points `x` (jump `πa`) and `y` (target).
#[derive(Clone, Debug)]
pub struct AbHarmonic {
    /// Map of the domain onto the half plane sending `y` to infinity.
    to_h: Mobius,
    x_h: f64,
    a: f64,
    b: f64,
    ref_arg: Complex64,
}

pub fn ab_harmonic(config: &RefConfig, a: f64, b: f64) -> Result<AbHarmonic> {
    let to_h = match &config.domain {
        RefDomain::HalfPlane => {
            if config.marked.len() != 1 {
                return Err(Error::Argument("half plane takes x only (y = infinity)".into()));
            }
            Mobius::identity()
        }
        RefDomain::Disk | RefDomain::MobiusDisk(_) => {
            if config.marked.len() != 2 {
                return Err(Error::Argument("need marked points x and y".into()));
            }
            let inv = config.disk_map()?.inverse();
            Mobius::cayley(inv.apply(config.marked[1])).compose(&inv)
        }
        RefDomain::Rectangle { .. } => {
            return Err(Error::Unsupported("no catalog map for rectangles".into()))
        }
    };
    let x_h = to_h.apply(config.marked[0]).re;
    let z_ref = to_h.inverse().apply(c(x_h, 1.0));
    Ok(AbHarmonic {
        to_h,
        x_h,
        a,
        b,
        ref_arg: to_h.c * z_ref + to_h.d,
    })
}

impl AbHarmonic {
    /// `a arg(φ(z) - x) - b (arg φ'(z) - arg φ'(z_ref))`.
    pub fn eval(&self, z: Complex64) -> Result<f64> {
        let w = self.to_h.apply(z);
        if (w - self.x_h).norm() < 1e-300 || !w.is_finite() {
            return Err(Error::Argument("evaluation at a marked point".into()));
        }
        // arg φ' = arg det - 2 arg(cz + d); the ratio to the reference keeps
        // a continuous branch on the domain
        let darg = -2.0 * ((self.to_h.c * z + self.to_h.d) / self.ref_arg).arg();
        Ok(self.a * (w - self.x_h).arg() - self.b * darg)
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Quadrature {
    /// Gauss–Legendre order per panel.
    pub order: usize,
    /// Angular nodes for periodic trapezoid rules.
    pub angular: usize,
    /// Number of ε values `ε_k = ε_0 2^{-k}` in the Richardson table.
    pub levels: usize,
    pub eps0: f64,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            order: 16,
            angular: 256,
            levels: 6,
            eps0: 1.0 / 32.0,
        }
    }
}

/// `-(1/6π)(½ ∫_D |∇σ|^2 + ∫_∂D σ dl)` for `σ = log|φ'|`, `φ` a catalog map
/// conformal on the closed unit disk.
pub fn pa_correction(map: &CatalogMap, q: &Quadrature) -> Result<f64> {
    let n = q.angular;
    let (x, w) = gauss_legendre(q.order);
    let dth = 2.0 * PI / n as f64;
    let mut bulk = 0.0;
    let panels = [0.0, 0.5, 0.8, 0.95, 1.0];
    for ab in panels.windows(2) {
        let (r0, r1) = (ab[0], ab[1]);
        for (xi, wi) in x.iter().zip(&w) {
            let r = 0.5 * (r0 + r1) + 0.5 * (r1 - r0) * xi;
            let mut ring = 0.0;
            for k in 0..n {
                let z = Complex64::from_polar(r, k as f64 * dth);
                let [_, d1, d2, _] = map.jet(z);
                if !(d1.norm() > 0.0) || !d1.is_finite() {
                    return Err(Error::Domain("map is not conformal on the disk".into()));
                }
                ring += (d2 / d1).norm_sqr();
            }
            bulk += wi * 0.5 * (r1 - r0) * r * ring * dth;
        }
    }
    let mut edge = 0.0;
    for k in 0..n {
        let [_, d1, _, _] = map.jet(Complex64::from_polar(1.0, k as f64 * dth));
        edge += d1.norm().ln();
    }
    edge *= dth;
    if !(bulk.is_finite() && edge.is_finite()) {
        return Err(Error::Numerical("Polyakov-Alvarez quadrature diverged".into()));
    }
    Ok(-(0.5 * bulk + edge) / (6.0 * PI))
}

fn theta_excess(a: f64, t: f64) -> f64 {
    // (a / sqrt(πt)) Σ_{j≥1} exp(-j²a²/t)
    let mut s = 0.0;
    let mut j = 1.0;
    loop {
        let term = (-j * j * a * a / t).exp();
        s += term;
        if term < 1e-18 * s.max(1e-300) || term == 0.0 {
            break;
        }
        j += 1.0;
    }
    a / (PI * t).sqrt() * s
}

fn theta_direct(a: f64, t: f64) -> f64 {
    let mut s = 0.0;
    let mut j = 1.0;
    loop {
        let term = (-PI * PI * j * j * t / (a * a)).exp();
        s += term;
        if term < 1e-18 * s.max(1e-300) || term == 0.0 {
            break;
        }
        j += 1.0;
    }
    s
}

/// `Σ_{j≥1} exp(-π² j² t / a²)`, by Jacobi inversion for small `t`.
fn theta(a: f64, t: f64) -> f64 {
    if t < a * a / PI {
        0.5 * (a / (PI * t).sqrt() - 1.0) + theta_excess(a, t)
    } else {
        theta_direct(a, t)
    }
}

/// `ζ'(0)` of the Dirichlet Laplacian on an `a × b` rectangle, splitting the
/// heat trace at `t0`.
pub fn zeta_prime_rectangle_split(a: f64, b: f64, t0: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && t0 > 0.0) {
        return Err(Error::Argument("rectangle sides and split must be positive".into()));
    }
    let cm1 = a * b / (4.0 * PI);
    let cm12 = -(a + b) / (4.0 * PI.sqrt());
    let c0 = 0.25;
    let order = 24;
    // (0, t0]: heat trace minus its small-time expansion, which is
    // exponentially small near 0
    let small = |t: f64| {
        let (aa, ab) = (0.5 * (a / (PI * t).sqrt() - 1.0), 0.5 * (b / (PI * t).sqrt() - 1.0));
        let (ea, eb) = (theta_excess(a, t), theta_excess(b, t));
        (aa * eb + ea * ab + ea * eb) / t
    };
    let mut breaks = vec![0.0];
    let mut s = t0 * 2f64.powi(-30);
    while s < t0 {
        breaks.push(s);
        s *= 2.0;
    }
    breaks.push(t0);
    let low = integrate(small, &breaks, order);
    // [t0, ∞)
    let big = |t: f64| theta(a, t) * theta(b, t) / t;
    let decay = PI * PI * (1.0 / (a * a) + 1.0 / (b * b));
    let mut high = 0.0;
    let (mut lo, mut width) = (t0, (1.0 / decay).min(t0));
    for _ in 0..400 {
        let piece = integrate(big, &[lo, lo + width], order);
        high += piece;
        lo += width;
        width *= 1.5;
        if (-decay * lo).exp() < 1e-18 {
            return Ok(c0 * (EULER_GAMMA + t0.ln()) - cm1 / t0 - 2.0 * cm12 / t0.sqrt() + low + high);
        }
    }
    Err(Error::Numerical("heat-trace tail did not converge".into()))
}

/// `log det_ζ = -ζ'(0)` for the Dirichlet Laplacian on an `a × b` rectangle.
pub fn zeta_logdet_rectangle(a: f64, b: f64) -> Result<f64> {
    Ok(-zeta_prime_rectangle_split(a, b, 1.0)?)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RegEnergy {
    pub value: f64,
    /// Difference between the two highest Richardson orders.
    pub error_estimate: f64,
}

/// Regularised Dirichlet energy of the (a, b) harmonic function in a disk
/// `D = φ(𝔻)` (a Mobius image) with marked boundary points `x` (jump of
/// `a`) and `y` (jump of `2b + a`): energy of `D` minus `ε`-balls around the
/// marked points plus `π(a² + (2b + a)²) log ε`, extrapolated to `ε → 0`.
pub fn reg_dirichlet_energy(config: &RefConfig, a: f64, b: f64, q: &Quadrature) -> Result<RegEnergy> {
    let phi = config.disk_map()?;
    if config.marked.len() != 2 {
        return Err(Error::Argument("need marked points x and y".into()));
    }
    let psi = phi.inverse();
    let x0 = psi.apply(config.marked[0]);
    let y0 = psi.apply(config.marked[1]);
    if (x0.norm() - 1.0).abs() > 1e-9 || (y0.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::Argument("marked points must lie on the boundary".into()));
    }
    // D = disk(centre, radius)
    let (centre, radius) = circumcircle(phi.apply(c(1.0, 0.0)), phi.apply(c(0.0, 1.0)), phi.apply(c(-1.0, 0.0)));
    let ay = 2.0 * b + a;
    let kd = phi.c / phi.d;
    // F = H∘ψ, H(z) = -a Log((z-x0)/(-x0)) + (2b+a) Log((z-y0)/(-y0)) + b log(φ'(z)/φ'(0))
    let f = |w: Complex64| -> (Complex64, Complex64) {
        let z = psi.apply(w);
        let h = -a * ((z - x0) / (-x0)).ln() + ay * ((z - y0) / (-y0)).ln() - 2.0 * b * (1.0 + kd * z).ln();
        let dh = -a / (z - x0) + ay / (z - y0) - 2.0 * b * kd / (1.0 + kd * z);
        (h, dh * psi.deriv(w))
    };
    let xw = phi.apply(x0);
    let yw = phi.apply(y0);
    let th_x = (xw - centre).arg();
    let th_y = (yw - centre).arg();
    let energy = |eps: f64| -> f64 {
        let delta = 2.0 * (eps / (2.0 * radius)).asin();
        let levels = ((radius / eps).log2().ceil() as usize) + 6;
        let outer = |t0: f64, t1: f64| {
            let breaks = graded_breaks(t0, t1, levels, 0.5);
            integrate(
                |th| {
                    let e = Complex64::from_polar(1.0, th);
                    let (h, dh) = f(centre + radius * e);
                    -h.im * (dh * c(0.0, radius) * e).re
                },
                &breaks,
                q.order,
            )
        };
        let unwrap = |t: f64, from: f64| {
            let mut t = t;
            while t <= from {
                t += 2.0 * PI;
            }
            t
        };
        let a1 = th_x + delta;
        let a2 = unwrap(th_y - delta, a1);
        let b1 = th_y + delta;
        let b2 = unwrap(th_x - delta, b1);
        let mut total = outer(a1, a2) + outer(b1, b2);
        for (p, th) in [(xw, th_x), (yw, th_y)] {
            // clockwise around p, from the point before it to the point after it
            let start = (centre + radius * Complex64::from_polar(1.0, th - delta) - p).arg();
            let end = (centre + radius * Complex64::from_polar(1.0, th + delta) - p).arg();
            let span = (start - end).rem_euclid(2.0 * PI);
            total += integrate(
                |s| {
                    let beta = start - s * span;
                    let e = Complex64::from_polar(1.0, beta);
                    let (h, dh) = f(p + eps * e);
                    -h.im * (dh * c(0.0, -span * eps) * e).re
                },
                &[0.0, 0.25, 0.5, 0.75, 1.0],
                q.order,
            );
        }
        total + PI * (a * a + ay * ay) * eps.ln()
    };
    let n = q.levels.max(2);
    let mut table: Vec<f64> = (0..n).map(|k| energy(q.eps0 * 0.5f64.powi(k as i32))).collect();
    let mut prev = table[n - 1];
    let mut last = prev;
    for j in 1..n {
        let fac = 2f64.powi(j as i32);
        for k in (j..n).rev() {
            table[k] = (fac * table[k] - table[k - 1]) / (fac - 1.0);
        }
        prev = last;
        last = table[n - 1];
    }
    if !last.is_finite() {
        return Err(Error::Numerical("regularised energy quadrature diverged".into()));
    }
    Ok(RegEnergy {
        value: last,
        error_estimate: (last - prev).abs(),
    })
}

/// Closed form of the regularised energy up to the additive constant fixed
/// by the reference configuration (disk, x = 1, y = -1):
/// `πa(2b+a)(log|φ'(x0)| + log|φ'(y0)| + 2 log|y0 - x0|) - 12π b² PA(φ)`.
pub fn reg_energy_closed_form(config: &RefConfig, a: f64, b: f64, q: &Quadrature) -> Result<f64> {
    let phi = config.disk_map()?;
    let psi = phi.inverse();
    let x0 = psi.apply(config.marked[0]);
    let y0 = psi.apply(config.marked[1]);
    let pa = pa_correction(&CatalogMap::Mobius(phi), q)?;
    Ok(PI * a * (2.0 * b + a)
        * (phi.deriv(x0).norm().ln() + phi.deriv(y0).norm().ln() + 2.0 * (y0 - x0).norm().ln())
        - 12.0 * PI * b * b * pa)
}

fn circumcircle(p: Complex64, q: Complex64, r: Complex64) -> (Complex64, f64) {
    let (b, cc) = (q - p, r - p);
    let d = 2.0 * (b.re * cc.im - b.im * cc.re);
    let ux = (cc.im * b.norm_sqr() - b.im * cc.norm_sqr()) / d;
    let uy = (b.re * cc.norm_sqr() - cc.re * b.norm_sqr()) / d;
    let centre = p + c(ux, uy);
    (centre, (p - centre).norm())
}
