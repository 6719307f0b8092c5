//! Mass of the random-walk loop measure of loops meeting two disjoint sets:
//! by Laplacian determinants, by the Fredholm determinant of the two
//! hitting-distribution kernels, and by the trace series; plus the
//! continuum half-plane benchmark with semicircular hulls.
//!
//! Kernel orientation: `t21` has rows indexed by `K1` and columns by `K2`
//! (walk started in `K1`, stopped on `K2`), `t12` the reverse, so
//! `t12 * t21` acts on functions on `K1`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::lattice::{LatticeDomain, VertexId};
use crate::linalg::{dirichlet_laplacian, nested_dissection, Ldl, SparseSym};
use crate::util::gauss_legendre;
use crate::{Error, Result};

/// A weighted graph with Dirichlet boundary, given by its Laplacian
/// `D - A`; the random walk steps from `v` to `w` with probability
/// `A(v, w) / D(v, v)` and is killed otherwise.
#[derive(Clone, Debug)]
pub struct LoopGraph {
    lap: SparseSym,
    coords: Option<Vec<[i32; 2]>>,
}

impl LoopGraph {
    pub fn new(lap: SparseSym) -> Self {
        LoopGraph { lap, coords: None }
    }

    /// Interior vertices of a lattice domain; vertex `v` keeps index `v`.
    pub fn from_domain(domain: &LatticeDomain) -> Self {
        let lap = dirichlet_laplacian(domain).matrix().clone();
        let coords = domain.interior().map(|v| domain.coord(v)).collect();
        LoopGraph {
            lap,
            coords: Some(coords),
        }
    }

    /// Path `v_0 .. v_{n-1}` with both ends attached to the boundary.
    pub fn path(n: usize) -> Self {
        let mut trips = Vec::new();
        for k in 0..n {
            trips.push((k, k, 2.0));
            if k > 0 {
                trips.push((k, k - 1, -1.0));
            }
        }
        LoopGraph::new(SparseSym::from_lower_triplets(n, &trips))
    }

    pub fn dim(&self) -> usize {
        self.lap.dim()
    }

    fn keep_without(&self, removed: &[usize]) -> Vec<usize> {
        let mut gone = vec![false; self.dim()];
        for &r in removed {
            gone[r] = true;
        }
        (0..self.dim()).filter(|&v| !gone[v]).collect()
    }

    /// Factor of the Laplacian restricted to `keep`, with the map from
    /// graph vertices to local indices.
    fn factor_on(&self, keep: &[usize]) -> Result<(Ldl, Vec<usize>)> {
        let mut local = vec![usize::MAX; self.dim()];
        for (k, &v) in keep.iter().enumerate() {
            local[v] = k;
        }
        let mut trips = Vec::new();
        for (k, &v) in keep.iter().enumerate() {
            for (i, x) in self.lap.column(v) {
                let li = local[i];
                if li != usize::MAX && li <= k {
                    trips.push((k, li, x));
                }
            }
        }
        let sub = SparseSym::from_lower_triplets(keep.len(), &trips);
        let perm = match &self.coords {
            Some(c) => nested_dissection(&keep.iter().map(|&v| c[v]).collect::<Vec<_>>()),
            None => (0..keep.len()).collect(),
        };
        Ok((Ldl::new(&sub, perm)?, local))
    }

    pub fn log_det_without(&self, removed: &[usize]) -> Result<f64> {
        let keep = self.keep_without(removed);
        if keep.is_empty() {
            return Ok(0.0);
        }
        Ok(self.factor_on(&keep)?.0.log_det())
    }

    /// Hitting distribution on `target` for walks started at `sources`,
    /// killed on the boundary: rows `sources`, columns `target`.
    pub fn hitting_matrix(&self, sources: &[usize], target: &[usize]) -> Result<DMatrix<f64>> {
        let keep = self.keep_without(target);
        let mut out = DMatrix::zeros(sources.len(), target.len());
        if keep.is_empty() {
            return Ok(out);
        }
        let (ldl, local) = self.factor_on(&keep)?;
        for (j, &z) in target.iter().enumerate() {
            // h(v) = P_v(first hit of target is z): Δ h = A(., z) off the target
            let mut rhs = vec![0.0; keep.len()];
            for (i, x) in self.lap.column(z) {
                if local[i] != usize::MAX {
                    rhs[local[i]] = -x;
                }
            }
            let h = ldl.solve(&rhs);
            for (i, &s) in sources.iter().enumerate() {
                out[(i, j)] = h[local[s]];
            }
        }
        Ok(out)
    }
}

fn check_disjoint(n: usize, k1: &[usize], k2: &[usize]) -> Result<()> {
    let mut seen = vec![0u8; n];
    for &v in k1 {
        if v >= n {
            return Err(Error::Argument(format!("vertex {v} is not interior")));
        }
        seen[v] |= 1;
    }
    for &v in k2 {
        if v >= n {
            return Err(Error::Argument(format!("vertex {v} is not interior")));
        }
        if seen[v] & 1 == 1 {
            return Err(Error::Argument("K1 and K2 overlap".into()));
        }
    }
    Ok(())
}

/// `log det Δ_{∖K1} + log det Δ_{∖K2} - log det Δ - log det Δ_{∖(K1∪K2)}`.
pub fn loop_mass_det(g: &LoopGraph, k1: &[usize], k2: &[usize]) -> Result<f64> {
    check_disjoint(g.dim(), k1, k2)?;
    let both: Vec<usize> = k1.iter().chain(k2).copied().collect();
    Ok(g.log_det_without(k1)? + g.log_det_without(k2)? - g.log_det_without(&[])? - g.log_det_without(&both)?)
}

/// `(t12, t21)`: `t21` is the hitting distribution of `K2` from `K1` (rows
/// `K1`), `t12` that of `K1` from `K2` (rows `K2`).
pub fn hm_kernel_matrices(g: &LoopGraph, k1: &[usize], k2: &[usize]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_disjoint(g.dim(), k1, k2)?;
    let t21 = g.hitting_matrix(k1, k2)?;
    let t12 = g.hitting_matrix(k2, k1)?;
    Ok((t12, t21))
}

/// `-log det(1 - t12 t21)`.
pub fn fredholm_route(t12: &DMatrix<f64>, t21: &DMatrix<f64>) -> Result<f64> {
    let m = t12 * t21;
    let n = m.nrows();
    let d = (DMatrix::identity(n, n) - m).determinant();
    if !(d > 0.0) {
        return Err(Error::Numerical(format!("det(1 - T) = {d} is not positive")));
    }
    Ok(-d.ln())
}

/// Largest row sum, i.e. `1 - p` for the sub-Markov gap `p`.
pub fn max_row_sum(t: &DMatrix<f64>) -> f64 {
    t.row_iter().map(|r| r.iter().sum::<f64>()).fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    pub bound: f64,
    pub terms: usize,
}

/// `Σ_{n ≤ n_max} Tr((t12 t21)^n)/n` with the tail bound
/// `dim q^{N+1} / ((N+1)(1-q))`, `q` the product of the largest row sums.
pub fn series_route(t12: &DMatrix<f64>, t21: &DMatrix<f64>, n_max: usize) -> SeriesValue {
    let m = t12 * t21;
    let q = max_row_sum(t12) * max_row_sum(t21);
    let mut p = m.clone();
    let mut value = 0.0;
    for n in 1..=n_max {
        value += p.trace() / n as f64;
        if n < n_max {
            p = &p * &m;
        }
    }
    let dim = m.nrows() as f64;
    let bound = if q < 1.0 {
        dim * q.powi(n_max as i32 + 1) / ((n_max + 1) as f64 * (1.0 - q))
    } else {
        f64::INFINITY
    };
    SeriesValue {
        value,
        bound,
        terms: n_max,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LoopMassReport {
    pub det_route: f64,
    pub fredholm_route: f64,
    pub fredholm_swapped: f64,
    pub series: SeriesValue,
    pub det_fredholm_residual: f64,
    pub series_residual: f64,
    pub series_within_bound: bool,
}

/// All three routes; the series is run until its bound drops below `tol`
/// (at most `n_cap` terms).
pub fn loop_mass_report(g: &LoopGraph, k1: &[VertexId], k2: &[VertexId], tol: f64, n_cap: usize) -> Result<LoopMassReport> {
    let det_route = loop_mass_det(g, k1, k2)?;
    let (t12, t21) = hm_kernel_matrices(g, k1, k2)?;
    let fr = fredholm_route(&t12, &t21)?;
    let fs = fredholm_route(&t21, &t12)?;
    let q = max_row_sum(&t12) * max_row_sum(&t21);
    let dim = t12.ncols() as f64;
    let mut n = 1;
    while n < n_cap && dim * q.powi(n as i32 + 1) / ((n + 1) as f64 * (1.0 - q)) > tol {
        n += 1;
    }
    let series = series_route(&t12, &t21, n);
    let series_residual = (series.value - fr).abs();
    Ok(LoopMassReport {
        det_route,
        fredholm_route: fr,
        fredholm_swapped: fs,
        series,
        det_fredholm_residual: (det_route - fr).abs(),
        series_residual,
        series_within_bound: series_residual <= series.bound + 1e-12,
    })
}

/// Half disk `{|z - centre| ≤ radius, Im z ≥ 0}` with `centre` real.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct HalfDisk {
    pub centre: f64,
    pub radius: f64,
}

impl HalfDisk {
    /// Half-plane capacity.
    pub fn hcap(&self) -> f64 {
        self.radius * self.radius
    }

    /// Image under a real Mobius map of the half plane (which maps
    /// half-disks centred on the axis to half-disks).
    pub fn image(&self, m: impl Fn(f64) -> f64) -> HalfDisk {
        let (p, q) = (m(self.centre - self.radius), m(self.centre + self.radius));
        HalfDisk {
            centre: 0.5 * (p + q),
            radius: 0.5 * (p - q).abs(),
        }
    }
}

/// Loop mass in the half plane between the half disk `k1` and the unit
/// half disk `K2`, by Nyström discretisation of the two harmonic-measure
/// kernels with `n` Gauss–Legendre nodes in angle on each semicircle.
pub fn semicircle_loop_mass(k1: HalfDisk, n: usize) -> Result<f64> {
    let HalfDisk { centre: x0, radius: r } = k1;
    let inside = x0.abs() + r < 1.0;
    if !(inside || x0.abs() - r > 1.0) || r <= 0.0 {
        return Err(Error::Argument("half disk must not meet the unit semicircle".into()));
    }
    let (x, w) = gauss_legendre(n);
    let ang: Vec<f64> = x.iter().map(|t| 0.5 * PI * (t + 1.0)).collect();
    let wt: Vec<f64> = w.iter().map(|w| 0.5 * PI * w).collect();
    // density in θ of hitting e^{iθ} on the unit semicircle from z
    let to_k2 = |z: Complex64, th: f64| -> f64 {
        let u = Complex64::from_polar(1.0, th);
        if inside {
            let pd = |v: Complex64| (1.0 - z.norm_sqr()) / (2.0 * PI * (v - z).norm_sqr());
            pd(u) - pd(u.conj())
        } else {
            let jz = z + 1.0 / z;
            let s = 2.0 * th.cos();
            jz.im / (PI * ((jz.re - s).powi(2) + jz.im * jz.im)) * 2.0 * th.sin()
        }
    };
    // density in α of hitting x0 + r e^{iα} from y, in H minus k1
    let to_k1 = |y: Complex64, al: f64| -> f64 {
        let u = y - x0;
        let py = u + r * r / u;
        let s = 2.0 * r * al.cos();
        py.im / (PI * ((py.re - s).powi(2) + py.im * py.im)) * 2.0 * r * al.sin()
    };
    // t21: rows K1 nodes, cols K2 nodes; t12: rows K2, cols K1
    let t21 = DMatrix::from_fn(n, n, |i, j| {
        to_k2(x0 + Complex64::from_polar(r, ang[i]), ang[j]) * wt[j]
    });
    let t12 = DMatrix::from_fn(n, n, |i, j| to_k1(Complex64::from_polar(1.0, ang[i]), ang[j]) * wt[j]);
    fredholm_route(&t12, &t21)
}

#[derive(Clone, Debug, Serialize)]
pub struct SemicircleBenchmark {
    pub r: f64,
    pub estimate: f64,
    /// `2 r^2`, twice the capacity of the half disk of radius `r`.
    pub target: f64,
    pub nodes: usize,
    pub rel_change_last_doubling: f64,
}

/// Doubles the node count from `n0` until the estimate moves by less than
/// `rel_tol`.
pub fn converged_mass(k1: HalfDisk, n0: usize, rel_tol: f64) -> Result<(f64, usize, f64)> {
    let mut n = n0;
    let mut prev = semicircle_loop_mass(k1, n)?;
    loop {
        let next = semicircle_loop_mass(k1, 2 * n)?;
        let change = ((next - prev) / next).abs();
        n *= 2;
        if change < rel_tol || n >= 4096 {
            return Ok((next, n, change));
        }
        prev = next;
    }
}

pub fn semicircle_benchmark(r: f64) -> Result<SemicircleBenchmark> {
    if !(r > 0.0 && r <= 0.3) {
        return Err(Error::Argument("benchmark radius must lie in (0, 0.3]".into()));
    }
    let (estimate, nodes, change) = converged_mass(HalfDisk { centre: 0.0, radius: r }, 16, 1e-8)?;
    Ok(SemicircleBenchmark {
        r,
        estimate,
        target: 2.0 * r * r,
        nodes,
        rel_change_last_doubling: change,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MobiusCheck {
    pub x: f64,
    pub r: f64,
    /// Mass computed directly for the transported hull.
    pub direct: f64,
    /// Mass of the untransported pair.
    pub untransported: f64,
    pub hcap_image: f64,
    /// `(-S ψ / 6)(1/x)` for `ψ(z) = z + 1/z`.
    pub schwarzian_factor: f64,
    /// `2 hcap(φ(K1)) (-Sψ/6)(1/x)`.
    pub rhs: f64,
    pub residual: f64,
}

/// Transports the half disk of radius `r` at 0 by `φ(z) = (1 - xz)/(x - z)`
/// (which fixes the unit semicircle) and compares the loop mass with
/// `2 hcap(φ(K1)) (-Sψ/6)(1/x)`.
pub fn moebius_invariance_check(r: f64, x: f64) -> Result<MobiusCheck> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Argument("x must lie in (0, 1)".into()));
    }
    let k1 = HalfDisk { centre: 0.0, radius: r };
    let img = k1.image(|t| (1.0 - x * t) / (x - t));
    let (direct, _, _) = converged_mass(img, 16, 1e-8)?;
    let (untransported, _, _) = converged_mass(k1, 16, 1e-8)?;
    let s = crate::kernels::schwarzian(&crate::kernels::CatalogMap::Joukowski, Complex64::new(1.0 / x, 0.0))?;
    let factor = -s.re / 6.0;
    let rhs = 2.0 * img.hcap() * factor;
    Ok(MobiusCheck {
        x,
        r,
        direct,
        untransported,
        hcap_image: img.hcap(),
        schwarzian_factor: factor,
        rhs,
        residual: ((direct - rhs) / rhs).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeKind;
    use crate::util::stream_rng;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn grid(w: usize, h: usize) -> (LatticeDomain, LoopGraph) {
        let d = LatticeDomain::rectangle(LatticeKind::Square, w, h, 1.0).unwrap();
        let g = LoopGraph::from_domain(&d);
        (d, g)
    }

    #[test]
    fn path_by_hand() {
        let g = LoopGraph::path(3);
        let m = loop_mass_det(&g, &[0], &[2]).unwrap();
        assert!((m - (9.0f64 / 8.0).ln()).abs() < 1e-14);
        // from v1, reach v3 before the boundary: the 2x2 system on {v1, v2}
        // h1 = h2/2, h2 = (h1 + 1)/2 gives h1 = 1/3
        let (t12, t21) = hm_kernel_matrices(&g, &[0], &[2]).unwrap();
        assert!((t21[(0, 0)] - 1.0 / 3.0).abs() < 1e-14);
        assert!((t12[(0, 0)] - 1.0 / 3.0).abs() < 1e-14);
        let f = fredholm_route(&t12, &t21).unwrap();
        assert!((f - m).abs() < 1e-14);
    }

    #[test]
    fn all_interior_removed() {
        let g = LoopGraph::path(3);
        let m = loop_mass_det(&g, &[0, 1], &[2]).unwrap();
        let expect = g.log_det_without(&[0, 1]).unwrap() + g.log_det_without(&[2]).unwrap()
            - g.log_det_without(&[]).unwrap();
        assert!((m - expect).abs() < 1e-14);
        assert!(loop_mass_det(&g, &[0, 1], &[1]).is_err());
    }

    #[test]
    fn mass_decays_with_separation() {
        let (d, g) = grid(60, 7);
        let a = d.vertex_at([2, 3]).unwrap();
        let mut last = f64::INFINITY;
        for dx in [3, 6, 12, 24, 48] {
            let b = d.vertex_at([2 + dx, 3]).unwrap();
            let m = loop_mass_det(&g, &[a], &[b]).unwrap();
            assert!(m > 0.0 && m < last);
            last = m;
        }
        assert!(last < 1e-10);
    }

    #[test]
    fn kernels_are_sub_markov_and_mirror() {
        let (d, g) = grid(9, 7);
        let k1 = [d.vertex_at([1, 3]).unwrap(), d.vertex_at([2, 2]).unwrap()];
        let k2 = [d.vertex_at([7, 3]).unwrap(), d.vertex_at([6, 2]).unwrap()];
        let (t12, t21) = hm_kernel_matrices(&g, &k1, &k2).unwrap();
        assert!(t12.iter().chain(t21.iter()).all(|&x| x >= 0.0));
        assert!(max_row_sum(&t12) < 1.0 && max_row_sum(&t21) < 1.0);
        // mirror x -> 8 - x swaps the sets
        for i in 0..2 {
            for j in 0..2 {
                assert!((t12[(i, j)] - t21[(i, j)]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn rank_one_and_swap() {
        let t12 = DMatrix::from_row_slice(2, 1, &[0.2, 0.1]);
        let t21 = DMatrix::from_row_slice(1, 2, &[0.5, 0.3]);
        let lambda: f64 = (&t12 * &t21).trace();
        assert!((fredholm_route(&t12, &t21).unwrap() + (1.0 - lambda).ln()).abs() < 1e-14);
        assert!((fredholm_route(&t21, &t12).unwrap() + (1.0 - lambda).ln()).abs() < 1e-14);
        let s = series_route(&t12, &t21, 1);
        assert!((s.value - lambda).abs() < 1e-15);
    }

    #[test]
    fn routes_agree_on_random_grids() {
        let mut rng = stream_rng(21, 0);
        for _ in 0..10 {
            let (w, h) = (rng.gen_range(4..20), rng.gen_range(4..20));
            let (_, g) = grid(w, h);
            let mut ids: Vec<usize> = (0..g.dim()).collect();
            ids.shuffle(&mut rng);
            let n1 = rng.gen_range(1..5);
            let n2 = rng.gen_range(1..5);
            let r = loop_mass_report(&g, &ids[..n1], &ids[n1..n1 + n2], 1e-12, 100_000).unwrap();
            assert!(r.det_fredholm_residual < 1e-9, "{r:?}");
            assert!((r.fredholm_route - r.fredholm_swapped).abs() < 1e-12);
            assert!(r.series_within_bound, "{r:?}");
        }
    }

    #[test]
    fn series_bound_decays() {
        let (d, g) = grid(12, 12);
        let k1 = [d.vertex_at([2, 5]).unwrap()];
        let k2 = [d.vertex_at([8, 6]).unwrap()];
        let (t12, t21) = hm_kernel_matrices(&g, &k1, &k2).unwrap();
        let q = max_row_sum(&t12) * max_row_sum(&t21);
        let b: Vec<f64> = (1..6).map(|n| series_route(&t12, &t21, n).bound).collect();
        for p in b.windows(2) {
            assert!(p[1] <= q * p[0] + 1e-18);
        }
    }

    #[test]
    fn monotone_and_restriction() {
        let (d, g) = grid(16, 12);
        let k2 = [d.vertex_at([12, 6]).unwrap()];
        let mut k1 = vec![d.vertex_at([3, 6]).unwrap()];
        let mut last = loop_mass_det(&g, &k1, &k2).unwrap();
        for c in [[4, 6], [5, 6], [5, 7], [6, 7]] {
            k1.push(d.vertex_at(c).unwrap());
            let m = loop_mass_det(&g, &k1, &k2).unwrap();
            assert!(m >= last);
            last = m;
        }
        // the 14x10 sub-rectangle offset by one
        let sub = LatticeDomain::from_cells(
            LatticeKind::Square,
            &(1..15).flat_map(|x| (1..11).map(move |y| [x, y])).collect::<Vec<_>>(),
            1.0,
        )
        .unwrap();
        let gs = LoopGraph::from_domain(&sub);
        let map = |v: VertexId| sub.vertex_at(d.coord(v)).unwrap();
        let small = loop_mass_det(&gs, &k1.iter().map(|&v| map(v)).collect::<Vec<_>>(), &[map(k2[0])]).unwrap();
        assert!(small < last);
    }

    #[test]
    fn semicircle_shape() {
        let b = semicircle_benchmark(0.1).unwrap();
        let h = semicircle_benchmark(0.05).unwrap();
        assert!(b.rel_change_last_doubling < 1e-6);
        let ratio = h.estimate / b.estimate;
        assert!((ratio - 0.25).abs() < 0.05 * 0.25, "{ratio}");
        let far = semicircle_loop_mass(HalfDisk { centre: 30.0, radius: 0.1 }, 64).unwrap();
        assert!(far < 1e-3 && far > 0.0);
    }

    #[test]
    fn transported_mass_is_invariant() {
        let c = moebius_invariance_check(0.05, 0.5).unwrap();
        assert!(((c.direct - c.untransported) / c.untransported).abs() < 1e-8, "{c:?}");
        assert!((c.schwarzian_factor - 1.0 / 9.0).abs() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10))]
        #[test]
        fn fredholm_symmetry(seed in 0u64..1000) {
            let mut rng = stream_rng(seed, 1);
            let (_, g) = grid(8, 8);
            let mut ids: Vec<usize> = (0..g.dim()).collect();
            ids.shuffle(&mut rng);
            let (t12, t21) = hm_kernel_matrices(&g, &ids[..3], &ids[3..5]).unwrap();
            let a = fredholm_route(&t12, &t21).unwrap();
            let b = fredholm_route(&t21, &t12).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!(a >= 0.0);
        }
    }
}
