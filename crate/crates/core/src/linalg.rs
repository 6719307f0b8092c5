//! Dirichlet Laplacians, sparse LDLᵀ factorizations and the Green/Neumann
//! operators built on them.

use std::io::Write;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::lattice::{Cut, LatticeDomain, VertexId};

/// Symmetric sparse matrix with both triangles stored, column-compressed.
#[derive(Clone, Debug)]
pub struct SparseSym {
    n: usize,
    colptr: Vec<usize>,
    rowidx: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSym {
    /// Entries `(i, j, v)` with `i >= j`; off-diagonals are mirrored and
    /// duplicates summed.
    pub fn from_lower_triplets(n: usize, trips: &[(usize, usize, f64)]) -> Self {
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in trips {
            cols[j].push((i, v));
            if i != j {
                cols[i].push((j, v));
            }
        }
        let mut colptr = vec![0];
        let mut rowidx = Vec::new();
        let mut vals = Vec::new();
        for mut c in cols {
            c.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < c.len() {
                let (i, mut v) = c[k];
                k += 1;
                while k < c.len() && c[k].0 == i {
                    v += c[k].1;
                    k += 1;
                }
                rowidx.push(i);
                vals.push(v);
            }
            colptr.push(rowidx.len());
        }
        SparseSym {
            n,
            colptr,
            rowidx,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.colptr[j]..self.colptr[j + 1]).map(move |p| (self.rowidx[p], self.vals[p]))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            for (i, v) in self.column(j) {
                y[i] += v * x[j];
            }
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for j in 0..self.n {
            for (i, v) in self.column(j) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Matrix Market coordinate format, lower triangle only.
    pub fn write_matrix_market(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real symmetric")?;
        let lower: Vec<(usize, usize, f64)> = (0..self.n)
            .flat_map(|j| self.column(j).filter(move |&(i, _)| i >= j).map(move |(i, v)| (i, j, v)))
            .collect();
        writeln!(out, "{} {} {}", self.n, self.n, lower.len())?;
        for (i, j, v) in lower {
            writeln!(out, "{} {} {:.17e}", i + 1, j + 1, v)?;
        }
        Ok(())
    }
}

/// Sparse `PAPᵀ = LDLᵀ` (up-looking, after Davis's LDL).
#[derive(Clone, Debug)]
pub struct Ldl {
    n: usize,
    perm: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
}

impl Ldl {
    /// Factors `a` using the given elimination order (`perm[k]` is the
    /// original index eliminated k-th). Fails unless every pivot is positive.
    pub fn new(a: &SparseSym, perm: Vec<usize>) -> Result<Self> {
        let n = a.dim();
        assert_eq!(perm.len(), n);
        let mut pinv = vec![0; n];
        for (k, &p) in perm.iter().enumerate() {
            pinv[p] = k;
        }
        const NONE: usize = usize::MAX;
        let mut parent = vec![NONE; n];
        let mut flag = vec![0usize; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for (r, _) in a.column(perm[k]) {
                let mut i = pinv[r];
                if i < k {
                    while flag[i] != k {
                        if parent[i] == NONE {
                            parent[i] = k;
                        }
                        lnz[i] += 1;
                        flag[i] = k;
                        i = parent[i];
                    }
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }
        let total = lp[n];
        let mut li = vec![0usize; total];
        let mut lx = vec![0.0; total];
        let mut d = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut pattern = vec![0usize; n];
        for k in 0..n {
            y[k] = 0.0;
            let mut top = n;
            flag[k] = k;
            lnz[k] = 0;
            for (r, v) in a.column(perm[k]) {
                let mut i = pinv[r];
                if i <= k {
                    y[i] += v;
                    let mut len = 0;
                    while flag[i] != k {
                        pattern[len] = i;
                        len += 1;
                        flag[i] = k;
                        i = parent[i];
                    }
                    while len > 0 {
                        top -= 1;
                        len -= 1;
                        pattern[top] = pattern[len];
                    }
                }
            }
            d[k] = y[k];
            y[k] = 0.0;
            for &i in &pattern[top..n] {
                let yi = y[i];
                y[i] = 0.0;
                let p2 = lp[i] + lnz[i];
                for p in lp[i]..p2 {
                    y[li[p]] -= lx[p] * yi;
                }
                let l_ki = yi / d[i];
                d[k] -= l_ki * yi;
                li[p2] = k;
                lx[p2] = l_ki;
                lnz[i] += 1;
            }
            if !(d[k] > 0.0) {
                return Err(Error::NotPositiveDefinite {
                    pivot: perm[k],
                    value: d[k],
                });
            }
        }
        Ok(Ldl {
            n,
            perm,
            lp,
            li,
            lx,
            d,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn fill(&self) -> usize {
        self.lx.len()
    }

    /// Sum of log pivots.
    pub fn log_det(&self) -> f64 {
        self.d.iter().map(|x| x.ln()).sum()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for j in 0..n {
            let xj = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                x[self.li[p]] -= self.lx[p] * xj;
            }
        }
        for j in 0..n {
            x[j] /= self.d[j];
        }
        self.back_substitute(&mut x);
        let mut out = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            out[p] = x[k];
        }
        out
    }

    /// `x = Pᵀ L⁻ᵀ D^{-1/2} ξ`, a sample with covariance `A⁻¹` when `ξ` is
    /// standard normal.
    pub fn correlate(&self, xi: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = xi.iter().zip(&self.d).map(|(z, d)| z / d.sqrt()).collect();
        self.back_substitute(&mut x);
        let mut out = vec![0.0; self.n];
        for (k, &p) in self.perm.iter().enumerate() {
            out[p] = x[k];
        }
        out
    }

    fn back_substitute(&self, x: &mut [f64]) {
        for j in (0..self.n).rev() {
            let mut s = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                s -= self.lx[p] * x[self.li[p]];
            }
            x[j] = s;
        }
    }
}

/// Nested dissection on integer lattice coordinates: split along the longer
/// axis at the median line, recurse on both halves, separator last. Lattice
/// edges never change a coordinate by more than one, so the median line
/// always separates.
pub fn nested_dissection(coords: &[[i32; 2]]) -> Vec<usize> {
    let mut order = Vec::with_capacity(coords.len());
    let idx: Vec<usize> = (0..coords.len()).collect();
    nd_rec(coords, idx, &mut order);
    order
}

fn nd_rec(coords: &[[i32; 2]], mut idx: Vec<usize>, order: &mut Vec<usize>) {
    if idx.len() <= 16 {
        order.extend(idx);
        return;
    }
    let span = |a: usize| {
        let lo = idx.iter().map(|&i| coords[i][a]).min().unwrap();
        let hi = idx.iter().map(|&i| coords[i][a]).max().unwrap();
        hi - lo
    };
    let axis = if span(0) >= span(1) { 0 } else { 1 };
    if span(axis) < 2 {
        order.extend(idx);
        return;
    }
    idx.sort_by_key(|&i| coords[i][axis]);
    let mid = coords[idx[idx.len() / 2]][axis];
    let (mut lo, mut hi, mut sep) = (Vec::new(), Vec::new(), Vec::new());
    for i in idx {
        match coords[i][axis].cmp(&mid) {
            std::cmp::Ordering::Less => lo.push(i),
            std::cmp::Ordering::Greater => hi.push(i),
            std::cmp::Ordering::Equal => sep.push(i),
        }
    }
    nd_rec(coords, lo, order);
    nd_rec(coords, hi, order);
    order.extend(sep);
}

/// The combinatorial Laplacian of a domain restricted to a subset `S` of
/// interior vertices, with every vertex outside `S` treated as Dirichlet
/// boundary.
#[derive(Clone, Debug)]
pub struct Laplacian {
    verts: Vec<VertexId>,
    local: Vec<usize>,
    mat: SparseSym,
}

pub const NOT_IN_SET: usize = usize::MAX;

/// Dirichlet Laplacian on all interior vertices; local index = vertex id.
pub fn dirichlet_laplacian(domain: &LatticeDomain) -> Laplacian {
    let all: Vec<VertexId> = domain.interior().collect();
    dirichlet_laplacian_on(domain, &all)
}

pub fn dirichlet_laplacian_on(domain: &LatticeDomain, subset: &[VertexId]) -> Laplacian {
    let mut verts = subset.to_vec();
    verts.sort_unstable();
    verts.dedup();
    let mut local = vec![NOT_IN_SET; domain.n_vertices()];
    for (k, &v) in verts.iter().enumerate() {
        assert!(domain.is_interior(v), "subset must be interior");
        local[v] = k;
    }
    let mut trips = Vec::new();
    for (k, &v) in verts.iter().enumerate() {
        trips.push((k, k, domain.degree(v) as f64));
        for &w in domain.neighbors(v) {
            let lw = local[w];
            if lw != NOT_IN_SET && lw < k {
                trips.push((k, lw, -1.0));
            }
        }
    }
    let mat = SparseSym::from_lower_triplets(verts.len(), &trips);
    Laplacian { verts, local, mat }
}

impl Laplacian {
    pub fn vertices(&self) -> &[VertexId] {
        &self.verts
    }

    /// Local index of a vertex, [`NOT_IN_SET`] if outside.
    pub fn local(&self, v: VertexId) -> usize {
        self.local[v]
    }

    pub fn matrix(&self) -> &SparseSym {
        &self.mat
    }

    pub fn factor(&self, domain: &LatticeDomain) -> Result<FactoredLaplacian> {
        let coords: Vec<[i32; 2]> = self.verts.iter().map(|&v| domain.coord(v)).collect();
        let ldl = Ldl::new(&self.mat, nested_dissection(&coords))?;
        Ok(FactoredLaplacian {
            lap: self.clone(),
            ldl,
        })
    }
}

/// A factored Dirichlet Laplacian; immutable, so concurrent solves are safe.
#[derive(Clone, Debug)]
pub struct FactoredLaplacian {
    lap: Laplacian,
    ldl: Ldl,
}

impl FactoredLaplacian {
    pub fn new(domain: &LatticeDomain, subset: &[VertexId]) -> Result<Self> {
        dirichlet_laplacian_on(domain, subset).factor(domain)
    }

    pub fn laplacian(&self) -> &Laplacian {
        &self.lap
    }

    pub fn ldl(&self) -> &Ldl {
        &self.ldl
    }

    pub fn log_det(&self) -> f64 {
        self.ldl.log_det()
    }

    /// Extends `values` (indexed by vertex id, read only outside the set)
    /// harmonically into the set. Returns a full-length vector agreeing
    /// with `values` outside.
    pub fn harmonic_extension(&self, domain: &LatticeDomain, values: &[f64]) -> Vec<f64> {
        let rhs: Vec<f64> = self
            .lap
            .verts
            .iter()
            .map(|&v| {
                domain
                    .neighbors(v)
                    .iter()
                    .filter(|&&w| self.lap.local[w] == NOT_IN_SET)
                    .map(|&w| values[w])
                    .sum()
            })
            .collect();
        let u = self.ldl.solve(&rhs);
        let mut out = values.to_vec();
        for (k, &v) in self.lap.verts.iter().enumerate() {
            out[v] = u[k];
        }
        out
    }

    /// `G(x, y)` for `x, y` in `sources` (all inside the set).
    pub fn green_block(&self, sources: &[VertexId]) -> Result<DMatrix<f64>> {
        let n = self.lap.verts.len();
        let mut g = DMatrix::zeros(sources.len(), sources.len());
        for (b, &s) in sources.iter().enumerate() {
            let ls = self.lap.local[s];
            if ls == NOT_IN_SET {
                return Err(Error::Argument(format!("vertex {s} is not in the domain")));
            }
            let mut e = vec![0.0; n];
            e[ls] = 1.0;
            let col = self.ldl.solve(&e);
            for (a, &t) in sources.iter().enumerate() {
                g[(a, b)] = col[self.lap.local[t]];
            }
        }
        Ok(g)
    }
}

pub fn log_det(domain: &LatticeDomain) -> Result<f64> {
    Ok(dirichlet_laplacian(domain).factor(domain)?.log_det())
}

/// Harmonic extension of boundary data (indexed by vertex id; interior
/// entries ignored).
pub fn harmonic_extension(domain: &LatticeDomain, boundary: &[f64]) -> Result<Vec<f64>> {
    if boundary.len() != domain.n_vertices() {
        return Err(Error::Argument("boundary data length mismatch".into()));
    }
    let f = dirichlet_laplacian(domain).factor(domain)?;
    Ok(f.harmonic_extension(domain, boundary))
}

pub fn green_block(domain: &LatticeDomain, sources: &[VertexId]) -> Result<DMatrix<f64>> {
    dirichlet_laplacian(domain).factor(domain)?.green_block(sources)
}

/// Factored Laplacians of the two sides of a cut.
pub struct CutFactors {
    pub left: FactoredLaplacian,
    pub right: FactoredLaplacian,
}

impl CutFactors {
    pub fn new(domain: &LatticeDomain, cut: &Cut) -> Result<Self> {
        Ok(CutFactors {
            left: FactoredLaplacian::new(domain, &cut.left)?,
            right: FactoredLaplacian::new(domain, &cut.right)?,
        })
    }

    /// Harmonic extension of `w` (indexed like `cut.delta`) to both sides,
    /// zero on the outer boundary.
    pub fn extend(&self, domain: &LatticeDomain, cut: &Cut, w: &[f64]) -> Vec<f64> {
        let mut vals = vec![0.0; domain.n_vertices()];
        for (k, &v) in cut.delta.iter().enumerate() {
            vals[v] = w[k];
        }
        let l = self.left.harmonic_extension(domain, &vals);
        let r = self.right.harmonic_extension(domain, &vals);
        for &v in &cut.right {
            vals[v] = r[v];
        }
        for &v in &cut.left {
            vals[v] = l[v];
        }
        vals
    }
}

/// The jump operator on the cut: `(Nw)(x)` is the discrete Laplacian at
/// `x ∈ δ` of the harmonic extension of `w`. It equals the inverse of the
/// Green block on δ.
pub fn neumann_jump(domain: &LatticeDomain, cut: &Cut) -> Result<DMatrix<f64>> {
    let f = CutFactors::new(domain, cut)?;
    Ok(neumann_jump_with(domain, cut, &f))
}

pub fn neumann_jump_with(domain: &LatticeDomain, cut: &Cut, f: &CutFactors) -> DMatrix<f64> {
    let m = cut.delta.len();
    let mut n = DMatrix::zeros(m, m);
    for b in 0..m {
        let mut w = vec![0.0; m];
        w[b] = 1.0;
        let pw = f.extend(domain, cut, &w);
        for (a, &x) in cut.delta.iter().enumerate() {
            let lap: f64 = domain.neighbors(x).iter().map(|&y| pw[x] - pw[y]).sum();
            n[(a, b)] = lap;
        }
    }
    n
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct DetFactorization {
    pub lhs: f64,
    pub log_det_left: f64,
    pub log_det_right: f64,
    pub log_det_jump: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// `log det Δ` against `log det Δ_l + log det N + log det Δ_r`.
pub fn det_factorization_check(domain: &LatticeDomain, cut: &Cut) -> Result<DetFactorization> {
    let lhs = log_det(domain)?;
    let f = CutFactors::new(domain, cut)?;
    let n = neumann_jump_with(domain, cut, &f);
    let log_det_jump = log_det_spd(&n)?;
    let log_det_left = f.left.log_det();
    let log_det_right = f.right.log_det();
    let rhs = log_det_left + log_det_jump + log_det_right;
    Ok(DetFactorization {
        lhs,
        log_det_left,
        log_det_right,
        log_det_jump,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}

/// Log-determinant of a symmetric positive definite dense matrix.
pub fn log_det_spd(m: &DMatrix<f64>) -> Result<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let c = nalgebra::Cholesky::new(sym).ok_or_else(|| {
        Error::NotPositiveDefinite {
            pivot: 0,
            value: f64::NAN,
        }
    })?;
    Ok(c.l().diagonal().iter().map(|x| 2.0 * x.ln()).sum())
}

/// Symmetric square root of a positive semidefinite matrix.
pub fn sqrt_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let e = nalgebra::SymmetricEigen::new((m + m.transpose()) * 0.5);
    let scale = e.eigenvalues.amax().max(1.0);
    let mut d = e.eigenvalues.clone();
    for x in d.iter_mut() {
        if *x < -1e-12 * scale {
            return Err(Error::Argument("matrix is not positive semidefinite".into()));
        }
        *x = x.max(0.0).sqrt();
    }
    Ok(&e.eigenvectors * DMatrix::from_diagonal(&d) * e.eigenvectors.transpose())
}

/// Number of spanning trees of the graph with all boundary vertices glued
/// into one root (Matrix-Tree theorem).
#[derive(Clone, Debug)]
pub struct TreeCount {
    pub log: f64,
    pub exact: Option<BigInt>,
}

impl TreeCount {
    pub fn approx(&self) -> f64 {
        self.log.exp()
    }
}

pub const EXACT_COUNT_LIMIT: usize = 100;

pub fn spanning_tree_count(domain: &LatticeDomain, exact: bool) -> Result<TreeCount> {
    let log = log_det(domain)?;
    let exact = if exact {
        if domain.n_interior() > EXACT_COUNT_LIMIT {
            return Err(Error::Argument(format!(
                "exact counting limited to {EXACT_COUNT_LIMIT} interior vertices"
            )));
        }
        let m = dirichlet_laplacian(domain).matrix().to_dense();
        let ints: Vec<Vec<BigInt>> = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| BigInt::from(m[(i, j)] as i64)).collect())
            .collect();
        Some(bareiss_det(ints))
    } else {
        None
    };
    Ok(TreeCount { log, exact })
}

/// Fraction-free Gaussian elimination.
pub fn bareiss_det(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = t / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    &a[n - 1][n - 1] * sign
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{split_by_cut, LatticeKind};
    use proptest::prelude::*;

    fn sq(w: usize, h: usize) -> LatticeDomain {
        LatticeDomain::rectangle(LatticeKind::Square, w, h, 1.0).unwrap()
    }

    fn dense_logdet(d: &LatticeDomain) -> f64 {
        log_det_spd(&dirichlet_laplacian(d).matrix().to_dense()).unwrap()
    }

    #[test]
    fn single_vertex() {
        let d = sq(1, 1);
        assert!((log_det(&d).unwrap() - 4f64.ln()).abs() < 1e-14);
        let g = green_block(&d, &[0]).unwrap();
        assert!((g[(0, 0)] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn two_by_two_block() {
        // eigenvalues 2, 4, 4, 6
        let d = sq(2, 2);
        assert!((log_det(&d).unwrap() - 192f64.ln()).abs() < 1e-12);
        assert_eq!(
            spanning_tree_count(&d, true).unwrap().exact.unwrap(),
            BigInt::from(192)
        );
    }

    #[test]
    fn path_graph() {
        let d = sq(3, 1);
        // every vertex of a 3x1 strip also has two vertical boundary edges
        let m = dirichlet_laplacian(&d).matrix().to_dense();
        assert_eq!(m[(0, 0)], 4.0);
        assert!((log_det(&d).unwrap() - dense_logdet(&d)).abs() < 1e-12);
    }

    #[test]
    fn sparse_matches_dense_with_any_order() {
        let d = sq(7, 5);
        let lap = dirichlet_laplacian(&d);
        let n = d.n_interior();
        let natural = Ldl::new(lap.matrix(), (0..n).collect()).unwrap();
        let reversed = Ldl::new(lap.matrix(), (0..n).rev().collect()).unwrap();
        let dense = dense_logdet(&d);
        assert!((natural.log_det() - dense).abs() < 1e-10);
        assert!((reversed.log_det() - dense).abs() < 1e-10);
    }

    #[test]
    fn not_positive_definite_reports_pivot() {
        let a = SparseSym::from_lower_triplets(2, &[(0, 0, 1.0), (1, 0, 2.0), (1, 1, 1.0)]);
        assert!(matches!(
            Ldl::new(&a, vec![0, 1]),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn harmonic_extension_reproduces_linear_functions() {
        let d = sq(6, 4);
        let vals: Vec<f64> = (0..d.n_vertices())
            .map(|v| {
                let p = d.position(v);
                2.0 * p[0] - 0.5 * p[1] + 1.0
            })
            .collect();
        let h = harmonic_extension(&d, &vals).unwrap();
        for v in d.interior() {
            assert!((h[v] - vals[v]).abs() < 1e-11);
        }
    }

    #[test]
    fn neumann_jump_equals_inverse_green_block() {
        let d = sq(7, 4);
        let cut = split_by_cut(&d, &d.column(3)).unwrap();
        let n = neumann_jump(&d, &cut).unwrap();
        let g = green_block(&d, &cut.delta).unwrap();
        let prod = &n * &g;
        let err = (prod - DMatrix::identity(cut.delta.len(), cut.delta.len())).amax();
        assert!(err < 1e-10, "{err}");
        assert!((&n - n.transpose()).amax() < 1e-12);
    }

    #[test]
    fn neumann_jump_on_a_path() {
        // both side vertices get w/4 from the extension
        let d = sq(3, 1);
        let cut = split_by_cut(&d, &[1]).unwrap();
        let n = neumann_jump(&d, &cut).unwrap();
        assert!((n[(0, 0)] - (4.0 - 0.5)).abs() < 1e-14);
    }

    #[test]
    fn bareiss_small() {
        let m = vec![
            vec![BigInt::from(2), BigInt::from(-1)],
            vec![BigInt::from(-1), BigInt::from(2)],
        ];
        assert_eq!(bareiss_det(m), BigInt::from(3));
        let m = vec![
            vec![BigInt::from(0), BigInt::from(1)],
            vec![BigInt::from(1), BigInt::from(0)],
        ];
        assert_eq!(bareiss_det(m), BigInt::from(-1));
    }

    #[test]
    fn matrix_market_roundtrip_header() {
        let d = sq(2, 1);
        let mut buf = Vec::new();
        dirichlet_laplacian(&d)
            .matrix()
            .write_matrix_market(&mut buf)
            .unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("%%MatrixMarket"));
        assert!(s.lines().nth(1).unwrap() == "2 2 3");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn factorization_identity_on_random_cuts(w in 4usize..12, h in 1usize..8, c in 1usize..10) {
            let c = 1 + c % (w - 2);
            let d = sq(w, h);
            let cut = split_by_cut(&d, &d.column(c as i32)).unwrap();
            let r = det_factorization_check(&d, &cut).unwrap();
            prop_assert!(r.residual < 1e-9 * r.lhs.abs().max(1.0));
        }

        #[test]
        fn green_block_symmetric_positive(w in 1usize..9, h in 1usize..9, seed in 0u64..1000) {
            let d = sq(w, h);
            let n = d.n_interior();
            let picks: Vec<usize> = (0..n.min(4)).map(|k| ((seed as usize) * 7 + k * 13) % n).collect();
            let mut picks = picks; picks.sort(); picks.dedup();
            let g = green_block(&d, &picks).unwrap();
            prop_assert!((&g - g.transpose()).amax() < 1e-12);
            prop_assert!(log_det_spd(&g).is_ok());
            prop_assert!(g.iter().all(|&x| x > 0.0));
        }

        #[test]
        fn sparse_logdet_matches_dense(w in 1usize..10, h in 1usize..10) {
            let d = sq(w, h);
            prop_assert!((log_det(&d).unwrap() - dense_logdet(&d)).abs() < 1e-9);
        }
    }
}
