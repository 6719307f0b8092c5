//! Discrete Gaussian free field: sampling, partition functions, Markov
//! decomposition across a cut, boundary data of (a, b) type, Gaussian
//! density identities and level-line exploration.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::lattice::{Cut, LatticeDomain, LatticeKind, VertexId, TRI_DIRS};
use crate::linalg::{
    dirichlet_laplacian, log_det_spd, neumann_jump_with, sqrt_psd, CutFactors, FactoredLaplacian,
};

/// GFF with given boundary data on a fixed domain. Holds the factored
/// Laplacian and the harmonic mean.
pub struct Gff<'a> {
    domain: &'a LatticeDomain,
    factor: FactoredLaplacian,
    mean: Vec<f64>,
}

impl<'a> Gff<'a> {
    /// `boundary` is indexed by vertex id; interior entries are ignored.
    pub fn new(domain: &'a LatticeDomain, boundary: &[f64]) -> Result<Self> {
        if boundary.len() != domain.n_vertices() {
            return Err(Error::Argument("boundary data length mismatch".into()));
        }
        let factor = dirichlet_laplacian(domain).factor(domain)?;
        let mean = factor.harmonic_extension(domain, boundary);
        Ok(Gff {
            domain,
            factor,
            mean,
        })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn factor(&self) -> &FactoredLaplacian {
        &self.factor
    }

    /// A sample over all vertices (boundary entries equal the data).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.domain.n_interior();
        let xi: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let fluct = self.factor.ldl().correlate(&xi);
        let mut out = self.mean.clone();
        for v in 0..n {
            out[v] += fluct[v];
        }
        out
    }

    /// `log Z = -½ log det Δ - ½ E(mean)`.
    pub fn log_partition(&self) -> f64 {
        -0.5 * self.factor.log_det() - 0.5 * dirichlet_energy(self.domain, &self.mean)
    }
}

/// Sum over edges with an interior endpoint of squared differences.
pub fn dirichlet_energy(domain: &LatticeDomain, f: &[f64]) -> f64 {
    domain
        .edges()
        .iter()
        .map(|&(u, w)| (f[u] - f[w]).powi(2))
        .sum()
}

pub fn sample_gff<R: Rng + ?Sized>(
    domain: &LatticeDomain,
    boundary: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    Ok(Gff::new(domain, boundary)?.sample(rng))
}

pub fn log_partition_fn(domain: &LatticeDomain, boundary: &[f64]) -> Result<f64> {
    Ok(Gff::new(domain, boundary)?.log_partition())
}

/// `φ = φ_l + Pw + φ_r` on interior vertices, where `w` is the trace on the
/// cut, `Pw` its harmonic extension vanishing on the outer boundary, and
/// `φ_l`, `φ_r` vanish off the left and right parts.
pub struct MarkovParts {
    pub left: Vec<f64>,
    pub extension: Vec<f64>,
    pub right: Vec<f64>,
}

pub fn markov_decompose(
    domain: &LatticeDomain,
    factors: &CutFactors,
    cut: &Cut,
    sample: &[f64],
) -> MarkovParts {
    let w: Vec<f64> = cut.delta.iter().map(|&v| sample[v]).collect();
    let extension = factors.extend(domain, cut, &w);
    let n = domain.n_vertices();
    let mut left = vec![0.0; n];
    let mut right = vec![0.0; n];
    for &v in &cut.left {
        left[v] = sample[v] - extension[v];
    }
    for &v in &cut.right {
        right[v] = sample[v] - extension[v];
    }
    MarkovParts {
        left,
        extension,
        right,
    }
}

/// Boundary values of (a, b) type. `marked` lists the jump points
/// `x_1..x_n` followed by `y`; `a` has one entry per `x_i`. Walking the
/// boundary counter-clockwise from `anchor` (value 0), the value increases
/// by `b` times the turning angle at each vertex, jumps by `π a_i` on
/// reaching `x_i` and by `-π Σa - 2π b` on reaching `y`.
pub fn ab_boundary_values(
    domain: &LatticeDomain,
    marked: &[VertexId],
    a: &[f64],
    b: f64,
    anchor: VertexId,
) -> Result<Vec<f64>> {
    if marked.len() != a.len() + 1 {
        return Err(Error::Argument(
            "need one marked point per a_i plus the terminal point y".into(),
        ));
    }
    if marked.iter().any(|&m| !domain.is_boundary(m)) || !domain.is_boundary(anchor) {
        return Err(Error::Argument("marked points and anchor must be boundary vertices".into()));
    }
    if marked.contains(&anchor) {
        return Err(Error::Argument("anchor coincides with a jump point".into()));
    }
    let mut sorted = marked.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != marked.len() {
        return Err(Error::Argument("marked points must be distinct".into()));
    }
    let n = domain.n_vertices();
    let mut jump = vec![0.0; n];
    for (k, &x) in marked[..a.len()].iter().enumerate() {
        jump[x] = PI * a[k];
    }
    let y = *marked.last().unwrap();
    jump[y] = -PI * a.iter().sum::<f64>() - 2.0 * PI * b;

    let order = domain.boundary_order();
    let start = domain.boundary_index(anchor).unwrap();
    let mut vals = vec![0.0; n];
    let mut cur = 0.0;
    for k in 1..order.len() {
        let v = order[(start + k) % order.len()];
        cur += b * domain.turning_angle(v) + jump[v];
        vals[v] = cur;
    }
    Ok(vals)
}

/// Boundary data equal to `on_xy` on the counter-clockwise arc from `x`
/// (included) to `y` (excluded) and `on_yx` on the rest.
pub fn two_arc_boundary(
    domain: &LatticeDomain,
    x: VertexId,
    y: VertexId,
    on_xy: f64,
    on_yx: f64,
) -> Result<Vec<f64>> {
    let (Some(ix), Some(iy)) = (domain.boundary_index(x), domain.boundary_index(y)) else {
        return Err(Error::Argument("arc endpoints must be boundary vertices".into()));
    };
    if ix == iy {
        return Err(Error::Argument("arc endpoints coincide".into()));
    }
    let order = domain.boundary_order();
    let len = order.len();
    let mut vals = vec![0.0; domain.n_vertices()];
    for k in 0..len {
        let v = order[(ix + k) % len];
        let on_first = k < (iy + len - ix) % len;
        vals[v] = if on_first { on_xy } else { on_yx };
    }
    Ok(vals)
}

fn check_square(m: &DMatrix<f64>, n: usize, what: &str) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::Argument(format!("{what} must be {n}x{n}")));
    }
    Ok(())
}

/// `log ∫ exp(½⟨Mh,h⟩ + ⟨m,h⟩) dN(0,Q)(h)
///    = -½ log det(1 - K) + ½ |(1-K)^{-1/2} Q^{1/2} m|²` with
/// `K = Q^{1/2} M Q^{1/2}`, requiring `K < 1`.
pub fn log_gaussian_quadratic_integral(
    m_mat: &DMatrix<f64>,
    m: &DVector<f64>,
    q: &DMatrix<f64>,
) -> Result<f64> {
    let n = m.len();
    check_square(m_mat, n, "M")?;
    check_square(q, n, "Q")?;
    let qh = sqrt_psd(q)?;
    let k = &qh * m_mat * &qh;
    let k = (&k + k.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(k.clone());
    let top = eig.eigenvalues.max();
    if !(top < 1.0) {
        return Err(Error::Argument(format!(
            "spectral condition violated: largest eigenvalue of Q^1/2 M Q^1/2 is {top}"
        )));
    }
    let a = DMatrix::identity(n, n) - k;
    let logdet = log_det_spd(&a)?;
    let v = &qh * m;
    let sol = a
        .cholesky()
        .ok_or_else(|| Error::Numerical("1 - K not positive definite".into()))?
        .solve(&v);
    Ok(-0.5 * logdet + 0.5 * v.dot(&sol))
}

pub fn gaussian_quadratic_integral(
    m_mat: &DMatrix<f64>,
    m: &DVector<f64>,
    q: &DMatrix<f64>,
) -> Result<f64> {
    Ok(log_gaussian_quadratic_integral(m_mat, m, q)?.exp())
}

/// Density of `N(m, Q)` against `N(0, Q)` at `h`.
pub fn cameron_martin_density(h: &DVector<f64>, m: &DVector<f64>, q: &DMatrix<f64>) -> Result<f64> {
    let c = q
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Argument("Q must be positive definite".into()))?;
    let qm = c.solve(m);
    Ok((qm.dot(h) - 0.5 * qm.dot(m)).exp())
}

/// Density of `N(0, N2⁻¹)` against `N(0, N1⁻¹)` at `w`:
/// `(det N2 / det N1)^{1/2} exp(½⟨w, (N1 - N2) w⟩)`.
pub fn rn_density_on_cut(w: &DVector<f64>, n1: &DMatrix<f64>, n2: &DMatrix<f64>) -> Result<f64> {
    let n = w.len();
    check_square(n1, n, "N1")?;
    check_square(n2, n, "N2")?;
    let ld = log_det_spd(n2)? - log_det_spd(n1)?;
    let quad = w.dot(&((n1 - n2) * w));
    Ok((0.5 * ld + 0.5 * quad).exp())
}

/// Density of `N(0, R)` against `N(0, Q)` written through
/// `R = Q^{1/2}(1 - S)Q^{1/2}`:
/// `det(1-S)^{-1/2} exp(-½⟨S(1-S)⁻¹ Q^{-1/2}h, Q^{-1/2}h⟩)`.
pub fn rn_covariance_density(h: &DVector<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<f64> {
    let n = h.len();
    let qh = sqrt_psd(q)?;
    let qhi = qh
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Argument("Q must be invertible".into()))?;
    let one_minus_s = &qhi * r * &qhi;
    let s = DMatrix::identity(n, n) - &one_minus_s;
    let u = &qhi * h;
    let inv = one_minus_s
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Argument("1 - S must be invertible".into()))?;
    let quad = (&s * &inv * &u).dot(&u);
    Ok((-0.5 * log_det_spd(&one_minus_s)? - 0.5 * quad).exp())
}

/// One of the four hybrid domains: `Γ_ij` agrees with `Γ_i` left of the cut
/// and with `Γ_j` right of it.
pub struct HybridEntry {
    pub domain: LatticeDomain,
    pub boundary: Vec<f64>,
    pub cut: Cut,
}

/// `entries[i][j]` is `Γ_ij` (indices 0 and 1 for the two base domains).
pub struct HybridQuadruple {
    pub entries: [[HybridEntry; 2]; 2],
}

impl HybridQuadruple {
    /// Builds `Γ_ij` from two square masks (`mask[row][col]`, same size)
    /// glued along column `cut_col`; boundary data come from `bv[i]` left of
    /// the cut and `bv[j]` right of it, as functions of lattice coordinates.
    pub fn from_masks(
        masks: [&[Vec<bool>]; 2],
        cut_col: i32,
        bv: [&dyn Fn([i32; 2]) -> f64; 2],
    ) -> Result<Self> {
        let build = |i: usize, j: usize| -> Result<HybridEntry> {
            let rows = masks[0].len().max(masks[1].len());
            let mut mask = vec![Vec::new(); rows];
            for (r, row) in mask.iter_mut().enumerate() {
                let width = masks[0].get(r).map_or(0, |x| x.len()).max(masks[1].get(r).map_or(0, |x| x.len()));
                for c in 0..width {
                    let src = if (c as i32) <= cut_col { i } else { j };
                    row.push(masks[src].get(r).and_then(|x| x.get(c)).copied().unwrap_or(false));
                }
            }
            let domain = LatticeDomain::from_mask(LatticeKind::Square, &mask, 1.0)?;
            let mut boundary = vec![0.0; domain.n_vertices()];
            for &v in domain.boundary_order() {
                let c = domain.coord(v);
                boundary[v] = if c[0] < cut_col {
                    bv[i](c)
                } else if c[0] > cut_col {
                    bv[j](c)
                } else {
                    let (p, q) = (bv[0](c), bv[1](c));
                    if (p - q).abs() > 1e-12 {
                        return Err(Error::Argument(format!(
                            "boundary data disagree on the cut column at {c:?}"
                        )));
                    }
                    p
                };
            }
            let delta = domain.column(cut_col);
            let cut = crate::lattice::split_by_cut(&domain, &delta)?;
            Ok(HybridEntry {
                domain,
                boundary,
                cut,
            })
        };
        let e00 = build(0, 0)?;
        let e01 = build(0, 1)?;
        let e10 = build(1, 0)?;
        let e11 = build(1, 1)?;
        let q = HybridQuadruple {
            entries: [[e00, e01], [e10, e11]],
        };
        q.validate()?;
        Ok(q)
    }

    fn validate(&self) -> Result<()> {
        let coords = |e: &HybridEntry| -> Vec<[i32; 2]> {
            e.cut.delta.iter().map(|&v| e.domain.coord(v)).collect()
        };
        let c0 = coords(&self.entries[0][0]);
        for row in &self.entries {
            for e in row {
                if coords(e) != c0 {
                    return Err(Error::Argument("cut differs between hybrid domains".into()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct CouplingCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub log_lhs: f64,
    pub log_rhs: f64,
    pub residual: f64,
}

/// `∫ (dT_*μ21/dT_*μ11)(dT_*μ12/dT_*μ11) dT_*μ11` in closed form against
/// `Z11 Z22 / (Z12 Z21)`, where `T` restricts a field to the cut.
pub fn coupling_constant_check(q: &HybridQuadruple) -> Result<CouplingCheck> {
    struct Stats {
        jump: DMatrix<f64>,
        mean: DVector<f64>,
        log_z: f64,
    }
    let stats = |e: &HybridEntry| -> Result<Stats> {
        let f = CutFactors::new(&e.domain, &e.cut)?;
        let jump = neumann_jump_with(&e.domain, &e.cut, &f);
        let gff = Gff::new(&e.domain, &e.boundary)?;
        let mean = DVector::from_iterator(e.cut.delta.len(), e.cut.delta.iter().map(|&v| gff.mean()[v]));
        Ok(Stats {
            jump,
            mean,
            log_z: gff.log_partition(),
        })
    };
    let s11 = stats(&q.entries[0][0])?;
    let s12 = stats(&q.entries[0][1])?;
    let s21 = stats(&q.entries[1][0])?;
    let s22 = stats(&q.entries[1][1])?;

    // With h = w - mean11, log(p21 p12 / p11²) = ½⟨Mh,h⟩ + ⟨m,h⟩ + c.
    let d21 = &s11.mean - &s21.mean;
    let d12 = &s11.mean - &s12.mean;
    let m_mat = &s11.jump * 2.0 - &s21.jump - &s12.jump;
    let m_vec = -(&s21.jump * &d21) - &s12.jump * &d12;
    let c = 0.5 * (log_det_spd(&s21.jump)? + log_det_spd(&s12.jump)? - 2.0 * log_det_spd(&s11.jump)?)
        - 0.5 * (d21.dot(&(&s21.jump * &d21)) + d12.dot(&(&s12.jump * &d12)));
    let cov = s11
        .jump
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("jump operator not invertible".into()))?;
    let log_lhs = c + log_gaussian_quadratic_integral(&m_mat, &m_vec, &cov)?;
    let log_rhs = s11.log_z + s22.log_z - s12.log_z - s21.log_z;
    Ok(CouplingCheck {
        lhs: log_lhs.exp(),
        rhs: log_rhs.exp(),
        log_lhs,
        log_rhs,
        residual: (log_lhs.exp() - log_rhs.exp()).abs() / log_rhs.exp(),
    })
}

/// The exploration path separating `-` from `+` vertices of a field on a
/// triangular domain, from marked point `x` to the boundary edge where the
/// signs switch back.
#[derive(Clone, Debug)]
pub struct Interface {
    /// Lattice-unit points: midpoint of the starting boundary edge, centres
    /// of the triangles crossed, midpoint of the final boundary edge.
    pub points: Vec<[f64; 2]>,
    /// `(minus, plus)` vertex pairs straddling the path.
    pub pairs: Vec<(VertexId, VertexId)>,
    /// Number of vertices with value exactly zero (counted as `+`).
    pub ties: usize,
}

/// Explores the zero level line of `field` (indexed by vertex id) starting
/// from the boundary edge `(pred(x), x)`, keeping `-` on the left. The
/// boundary must be `+` from `x` counter-clockwise up to some `y` and `-`
/// after it.
pub fn zero_level_interface(
    domain: &LatticeDomain,
    field: &[f64],
    x: VertexId,
) -> Result<Interface> {
    if domain.kind() != LatticeKind::Triangular {
        return Err(Error::Unsupported(
            "level-line exploration needs a triangular lattice".into(),
        ));
    }
    let ix = domain
        .boundary_index(x)
        .ok_or_else(|| Error::Argument("x must be a boundary vertex".into()))?;
    let order = domain.boundary_order();
    let len = order.len();
    let plus = |v: VertexId| field[v] >= 0.0;
    // boundary sign pattern: one + arc starting at x
    let switches = (0..len)
        .filter(|&k| plus(order[k]) != plus(order[(k + 1) % len]))
        .count();
    if !plus(x) || plus(order[(ix + len - 1) % len]) || switches != 2 {
        return Err(Error::Argument(
            "boundary must be + on one arc starting at x and - on the rest".into(),
        ));
    }
    let ties = domain.interior().filter(|&v| field[v] == 0.0).count();

    let add = |a: [i32; 2], b: [i32; 2]| [a[0] + b[0], a[1] + b[1]];
    let pos = |c: [i32; 2]| LatticeKind::Triangular.position(c);
    let mid = |a: [f64; 2], b: [f64; 2]| [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];

    let mut l = domain.coord(order[(ix + len - 1) % len]);
    let r0 = domain.coord(x);
    let d = [r0[0] - l[0], r0[1] - l[1]];
    let mut k = TRI_DIRS
        .iter()
        .position(|&t| t == d)
        .ok_or_else(|| Error::Domain("boundary ring not a lattice cycle".into()))?;
    let mut points = vec![mid(pos(l), pos(r0))];
    let mut pairs = Vec::new();
    let max_steps = 4 * domain.n_vertices() + 16;
    for _ in 0..max_steps {
        let r = add(l, TRI_DIRS[k]);
        let lv = domain.vertex_at(l).unwrap();
        let rv = domain.vertex_at(r).unwrap();
        pairs.push((lv, rv));
        let t = add(l, TRI_DIRS[(k + 1) % 6]);
        let Some(tv) = domain.vertex_at(t) else {
            points.push(mid(pos(l), pos(r)));
            return Ok(Interface {
                points,
                pairs,
                ties,
            });
        };
        let (pl, pr, pt) = (pos(l), pos(r), pos(t));
        points.push([(pl[0] + pr[0] + pt[0]) / 3.0, (pl[1] + pr[1] + pt[1]) / 3.0]);
        if plus(tv) {
            k = (k + 1) % 6;
        } else {
            let d = [r[0] - t[0], r[1] - t[1]];
            k = TRI_DIRS.iter().position(|&u| u == d).unwrap();
            l = t;
        }
    }
    Err(Error::Numerical("exploration did not terminate".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::split_by_cut;
    use crate::util::{mean_se, stream_rng};
    use proptest::prelude::*;

    fn sq(w: usize, h: usize) -> LatticeDomain {
        LatticeDomain::rectangle(LatticeKind::Square, w, h, 1.0).unwrap()
    }

    #[test]
    fn single_vertex_partition_and_mean() {
        let d = sq(1, 1);
        let zero = vec![0.0; d.n_vertices()];
        assert!((log_partition_fn(&d, &zero).unwrap() + 0.5 * 4f64.ln()).abs() < 1e-14);
        // 1-D Gaussian integral oracle: ∫ exp(-½ Σ(φ-b_k)²) dφ/√(2π)
        let mut bv = zero.clone();
        for (k, &v) in d.boundary_order().iter().enumerate() {
            bv[v] = k as f64 * 0.3 - 1.0;
        }
        let bs: Vec<f64> = d.neighbors(0).iter().map(|&v| bv[v]).collect();
        let s1: f64 = bs.iter().sum();
        let s2: f64 = bs.iter().map(|b| b * b).sum();
        let oracle = -0.5 * 4f64.ln() - 0.5 * (s2 - s1 * s1 / 4.0);
        assert!((log_partition_fn(&d, &bv).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn constant_boundary_gives_constant_mean() {
        let d = sq(5, 4);
        let bv = vec![1.7; d.n_vertices()];
        let g = Gff::new(&d, &bv).unwrap();
        assert!(g.mean().iter().all(|x| (x - 1.7).abs() < 1e-12));
    }

    #[test]
    fn sample_covariance_matches_green_function() {
        let d = sq(3, 3);
        let g = Gff::new(&d, &vec![0.0; d.n_vertices()]).unwrap();
        let green = g.factor().green_block(&[4, 0]).unwrap();
        let mut rng = stream_rng(11, 0);
        let n = 40_000;
        let mut s44 = Vec::with_capacity(n);
        let mut s40 = Vec::with_capacity(n);
        for _ in 0..n {
            let x = g.sample(&mut rng);
            s44.push(x[4] * x[4]);
            s40.push(x[4] * x[0]);
        }
        let a = mean_se(&s44);
        let b = mean_se(&s40);
        assert!((a.mean - green[(0, 0)]).abs() < 4.0 * a.se);
        assert!((b.mean - green[(0, 1)]).abs() < 4.0 * b.se);
    }

    #[test]
    fn markov_decomposition_reconstructs() {
        let d = sq(6, 4);
        let cut = split_by_cut(&d, &d.column(2)).unwrap();
        let f = CutFactors::new(&d, &cut).unwrap();
        let mut rng = stream_rng(3, 0);
        let bv: Vec<f64> = (0..d.n_vertices()).map(|v| (v % 3) as f64).collect();
        let x = sample_gff(&d, &bv, &mut rng).unwrap();
        let p = markov_decompose(&d, &f, &cut, &x);
        for v in d.interior() {
            let s = p.left[v] + p.extension[v] + p.right[v];
            assert!((s - x[v]).abs() < 1e-12);
        }
        for &v in &cut.delta {
            assert_eq!(p.left[v], 0.0);
            assert_eq!(p.right[v], 0.0);
        }
    }

    #[test]
    fn ab_values_jump_and_turn() {
        let d = sq(4, 3);
        let order = d.boundary_order().to_vec();
        let x = d.vertex_at([1, -1]).unwrap();
        let y = d.vertex_at([2, 3]).unwrap();
        let anchor = d.vertex_at([3, -1]).unwrap();
        let a = 2.0 / (2.0 * PI * 4.0f64).sqrt();
        let vals = ab_boundary_values(&d, &[x, y], &[a], 0.0, anchor).unwrap();
        let px = order[(d.boundary_index(x).unwrap() + order.len() - 1) % order.len()];
        assert!((vals[x] - vals[px] - PI * a).abs() < 1e-14);
        assert!((PI * a - (PI / 2.0).sqrt()).abs() < 1e-14);

        let b = 1.0;
        let vals = ab_boundary_values(&d, &[x, y], &[0.0], b, anchor).unwrap();
        // increments away from y and x equal b times the turning angle
        let mut total = 0.0;
        for k in 0..order.len() {
            let u = order[k];
            let v = order[(k + 1) % order.len()];
            let step = vals[v] - vals[u];
            total += step;
            if v != y && v != x {
                assert!((step - b * d.turning_angle(v)).abs() < 1e-13);
            }
        }
        assert!(total.abs() < 1e-12);
        assert!(ab_boundary_values(&d, &[x, y], &[0.0], b, x).is_err());
    }

    #[test]
    fn two_arcs() {
        let d = sq(3, 3);
        let x = d.vertex_at([1, -1]).unwrap();
        let y = d.vertex_at([1, 3]).unwrap();
        let v = two_arc_boundary(&d, x, y, 1.0, -1.0).unwrap();
        assert_eq!(v[x], 1.0);
        assert_eq!(v[y], -1.0);
        assert_eq!(v[d.vertex_at([3, 1]).unwrap()], 1.0);
        assert_eq!(v[d.vertex_at([-1, 1]).unwrap()], -1.0);
    }

    #[test]
    fn quadratic_integral_one_dimensional() {
        // ∫ exp(λh²/2) dN(0,1) = (1-λ)^{-1/2}
        let lam = 0.3;
        let v = gaussian_quadratic_integral(
            &DMatrix::from_element(1, 1, lam),
            &DVector::zeros(1),
            &DMatrix::identity(1, 1),
        )
        .unwrap();
        assert!((v - (1.0 - lam).powf(-0.5)).abs() < 1e-14);
        let e = gaussian_quadratic_integral(
            &DMatrix::from_element(1, 1, 1.2),
            &DVector::zeros(1),
            &DMatrix::identity(1, 1),
        );
        assert!(e.is_err());
    }

    #[test]
    fn quadratic_integral_matches_quadrature() {
        // 1-D with linear term and non-unit variance against Gauss-Hermite
        // style brute force on a fine grid.
        let (lam, mu, q) = (0.4, 0.7, 1.5);
        let closed = gaussian_quadratic_integral(
            &DMatrix::from_element(1, 1, lam),
            &DVector::from_element(1, mu),
            &DMatrix::from_element(1, 1, q),
        )
        .unwrap();
        let h = 1e-3;
        let mut s = 0.0;
        let mut x = -40.0;
        while x < 40.0 {
            let dens = (-x * x / (2.0 * q)).exp() / (2.0 * PI * q).sqrt();
            s += (0.5 * lam * x * x + mu * x).exp() * dens * h;
            x += h;
        }
        assert!((closed - s).abs() < 1e-8 * s);
    }

    #[test]
    fn cut_density_scalar_example() {
        let w = DVector::from_element(1, 0.8);
        let v = rn_density_on_cut(&w, &DMatrix::from_element(1, 1, 2.0), &DMatrix::from_element(1, 1, 3.0)).unwrap();
        // direct ratio of the two normal densities
        let p = |prec: f64| (prec / (2.0 * PI)).sqrt() * (-0.5 * prec * 0.64f64).exp();
        assert!((v - p(3.0) / p(2.0)).abs() < 1e-14);
        assert!((v - 1.5f64.sqrt() * (-0.32f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn cut_density_agrees_with_covariance_form() {
        let n1 = DMatrix::from_row_slice(2, 2, &[3.0, -1.0, -1.0, 2.5]);
        let n2 = DMatrix::from_row_slice(2, 2, &[4.0, -0.5, -0.5, 3.0]);
        let w = DVector::from_vec(vec![0.3, -0.9]);
        let a = rn_density_on_cut(&w, &n1, &n2).unwrap();
        let b = rn_covariance_density(
            &w,
            &n1.clone().try_inverse().unwrap(),
            &n2.clone().try_inverse().unwrap(),
        )
        .unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn cameron_martin_at_zero_shift() {
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let h = DVector::from_vec(vec![1.0, 2.0]);
        assert_eq!(cameron_martin_density(&h, &DVector::zeros(2), &q).unwrap(), 1.0);
        // 1-D: N(m,q)/N(0,q) at h
        let q1 = DMatrix::from_element(1, 1, 2.0);
        let v = cameron_martin_density(&DVector::from_element(1, 0.5), &DVector::from_element(1, 1.0), &q1).unwrap();
        let direct = (-(0.5f64 - 1.0).powi(2) / 4.0 + 0.25 / 4.0).exp();
        assert!((v - direct).abs() < 1e-14);
    }

    #[test]
    fn coupling_identity_on_notched_rectangles() {
        let full = vec![vec![true; 6]; 6];
        let mut notched = full.clone();
        notched[5][0] = false;
        notched[0][5] = false;
        let a = 1.0 / PI.sqrt();
        let bv0 = move |c: [i32; 2]| if c[1] < 0 { PI * a } else { 0.0 };
        let bv1 = move |c: [i32; 2]| if c[1] < 0 { PI * a } else if c[0] < 0 { 0.3 } else { 0.0 };
        let q = HybridQuadruple::from_masks([&full, &notched], 2, [&bv0, &bv1]).unwrap();
        let r = coupling_constant_check(&q).unwrap();
        assert!(r.residual < 1e-8, "{r:?}");
    }

    #[test]
    fn interface_on_small_triangular_domain() {
        let mut d = LatticeDomain::rectangle(LatticeKind::Triangular, 8, 6, 1.0).unwrap();
        let x = d.mark("x", [0, -1]).unwrap();
        let y = d.mark("y", [1, 6]).unwrap();
        let bv = two_arc_boundary(&d, x, y, 1.0, -1.0).unwrap();
        let mut rng = stream_rng(9, 0);
        let f = sample_gff(&d, &bv, &mut rng).unwrap();
        let it = zero_level_interface(&d, &f, x).unwrap();
        for &(m, p) in &it.pairs {
            assert!(f[m] < 0.0 && f[p] >= 0.0);
        }
        let last = *it.pairs.last().unwrap();
        assert!(d.is_boundary(last.0) && d.is_boundary(last.1));
        let sq = sq(3, 3);
        assert!(zero_level_interface(&sq, &vec![0.0; sq.n_vertices()], sq.boundary_order()[0]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn ab_values_close_up(b in -2.0f64..2.0, a0 in -1.0f64..1.0, a1 in -1.0f64..1.0, w in 2usize..6, h in 2usize..6) {
            let d = sq(w, h);
            let order = d.boundary_order();
            let n = order.len();
            let marks = [order[1], order[n / 3], order[2 * n / 3]];
            let vals = ab_boundary_values(&d, &marks, &[a0, a1], b, order[0]).unwrap();
            // value returning to the anchor closes the loop
            let back = vals[order[n - 1]] + b * d.turning_angle(order[0]);
            prop_assert!(back.abs() < 1e-10);
        }

        #[test]
        fn density_integrates_to_one(n1d in 1.0f64..4.0, n2d in 1.0f64..4.0) {
            // E_{w~N(0,1/n1)} of the cut density, by quadrature
            let n1 = DMatrix::from_element(1, 1, n1d);
            let n2 = DMatrix::from_element(1, 1, n2d);
            let h = 1e-3;
            let mut s = 0.0;
            let mut x = -12.0;
            while x < 12.0 {
                let p = (n1d / (2.0 * PI)).sqrt() * (-0.5 * n1d * x * x).exp();
                s += rn_density_on_cut(&DVector::from_element(1, x), &n1, &n2).unwrap() * p * h;
                x += h;
            }
            prop_assert!((s - 1.0).abs() < 1e-6);
        }
    }
}
