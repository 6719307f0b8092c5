//! Uniform spanning trees rooted at the boundary, loop-erased random walk,
//! and Temperley's tree ↔ dimer ↔ height correspondence on square domains.
//!
//! Temperley conventions. The graph `G` has the interior vertices plus one
//! root standing for the whole boundary; its faces are the unit squares with
//! at least one interior corner. The doubled graph has black vertices
//! (interior vertices, the root, faces) and white vertices (edges of `G`,
//! i.e. lattice edges with an interior endpoint); a white is joined to its
//! two endpoints and its two adjacent faces. Removing the root and one
//! outer face (the lowest-leftmost face) leaves a balanced graph. For a 2×2
//! block: 4 vertices, 12 edges, 9 faces, so 4 + 8 black against 12 white.

use std::collections::{HashMap, VecDeque};

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{LatticeDomain, LatticeKind, VertexId};
use crate::linalg::{dirichlet_laplacian, FactoredLaplacian};

/// Parent pointers of the interior vertices; parents may be boundary
/// vertices, which all stand for the root.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SpanningTree {
    pub parent: Vec<VertexId>,
}

impl SpanningTree {
    /// Checks that every interior vertex reaches the boundary along lattice
    /// edges without cycles.
    pub fn validate(&self, domain: &LatticeDomain) -> Result<()> {
        let n = domain.n_interior();
        if self.parent.len() != n {
            return Err(Error::Argument("parent map has the wrong length".into()));
        }
        for v in 0..n {
            if !domain.neighbors(v).contains(&self.parent[v]) {
                return Err(Error::Argument(format!("parent of {v} is not a neighbour")));
            }
        }
        // 0 unvisited, 1 on stack, 2 reaches root
        let mut state = vec![0u8; n];
        for s in 0..n {
            let mut path = Vec::new();
            let mut u = s;
            while u < n && state[u] == 0 {
                state[u] = 1;
                path.push(u);
                u = self.parent[u];
            }
            if u < n && state[u] == 1 {
                return Err(Error::Argument("parent map has a cycle".into()));
            }
            for p in path {
                state[p] = 2;
            }
        }
        Ok(())
    }

    /// Edge list `(child, parent)` for export.
    pub fn edges(&self) -> Vec<(VertexId, VertexId)> {
        self.parent.iter().copied().enumerate().collect()
    }
}

fn random_neighbor<R: Rng + ?Sized>(domain: &LatticeDomain, v: VertexId, rng: &mut R) -> VertexId {
    let nb = domain.neighbors(v);
    nb[rng.gen_range(0..nb.len())]
}

/// Wilson's algorithm with the boundary as root.
pub fn wilson_ust<R: Rng + ?Sized>(domain: &LatticeDomain, rng: &mut R) -> SpanningTree {
    let n = domain.n_interior();
    let mut in_tree = vec![false; domain.n_vertices()];
    for v in n..domain.n_vertices() {
        in_tree[v] = true;
    }
    let mut next = vec![usize::MAX; n];
    for i in 0..n {
        let mut u = i;
        while !in_tree[u] {
            next[u] = random_neighbor(domain, u, rng);
            u = next[u];
        }
        let mut u = i;
        while !in_tree[u] {
            in_tree[u] = true;
            u = next[u];
        }
    }
    SpanningTree { parent: next }
}

/// Loop-erasure of a simple random walk from `y` stopped at the boundary.
/// Following last-exit pointers gives the chronological loop erasure.
pub fn lerw_branch<R: Rng + ?Sized>(
    domain: &LatticeDomain,
    y: VertexId,
    rng: &mut R,
) -> Result<Vec<VertexId>> {
    if !domain.is_interior(y) {
        return Err(Error::Argument("LERW must start at an interior vertex".into()));
    }
    let mut next: HashMap<VertexId, VertexId> = HashMap::new();
    let mut u = y;
    while domain.is_interior(u) {
        let w = random_neighbor(domain, u, rng);
        next.insert(u, w);
        u = w;
    }
    let mut path = vec![y];
    let mut u = y;
    while domain.is_interior(u) {
        u = next[&u];
        path.push(u);
    }
    Ok(path)
}

/// Exit distribution of simple random walk from `y`, indexed like
/// [`LatticeDomain::boundary_order`]: `P_y(exit at x) = Σ_{v~x} G(y, v)`.
pub fn harmonic_measure_from(domain: &LatticeDomain, y: VertexId) -> Result<Vec<f64>> {
    let f = dirichlet_laplacian(domain).factor(domain)?;
    harmonic_measure_with(domain, &f, y)
}

pub fn harmonic_measure_with(
    domain: &LatticeDomain,
    f: &FactoredLaplacian,
    y: VertexId,
) -> Result<Vec<f64>> {
    if !domain.is_interior(y) {
        return Err(Error::Argument("start must be interior".into()));
    }
    let mut e = vec![0.0; domain.n_interior()];
    e[y] = 1.0;
    let g = f.ldl().solve(&e);
    Ok(domain
        .boundary_order()
        .iter()
        .map(|&x| domain.neighbors(x).iter().map(|&v| g[v]).sum())
        .collect())
}

/// `log det Δ + log Harm(y, {x})`, the log of the number of spanning trees
/// whose branch from `y` exits at `x`. `-∞` when `x` has no interior
/// neighbour.
pub fn lerw_log_partition(domain: &LatticeDomain, x: VertexId, y: VertexId) -> Result<f64> {
    let f = dirichlet_laplacian(domain).factor(domain)?;
    let k = domain
        .boundary_index(x)
        .ok_or_else(|| Error::Argument("x must be a boundary vertex".into()))?;
    let h = harmonic_measure_with(domain, &f, y)?[k];
    Ok(if h > 0.0 {
        f.log_det() + h.ln()
    } else {
        f64::NEG_INFINITY
    })
}

/// Black vertex of the doubled graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Black {
    Vertex(VertexId),
    Root,
    /// Unit square with the given lower-left lattice corner.
    Face([i32; 2]),
}

#[derive(Clone, Debug)]
pub struct DoubledGraph {
    n_interior: usize,
    faces: Vec<[i32; 2]>,
    whites: Vec<(VertexId, VertexId)>,
    white_index: HashMap<(VertexId, VertexId), usize>,
    white_faces: Vec<[usize; 2]>,
    outer: usize,
}

impl DoubledGraph {
    pub fn new(domain: &LatticeDomain) -> Result<Self> {
        if domain.kind() != LatticeKind::Square {
            return Err(Error::Unsupported("Temperley's bijection needs a square lattice".into()));
        }
        let n = domain.n_interior();
        let mut faces: Vec<[i32; 2]> = Vec::new();
        for v in 0..n {
            let [i, j] = domain.coord(v);
            for f in [[i, j], [i - 1, j], [i - 1, j - 1], [i, j - 1]] {
                faces.push(f);
            }
        }
        faces.sort_by_key(|f| (f[1], f[0]));
        faces.dedup();
        let face_index: HashMap<[i32; 2], usize> =
            faces.iter().enumerate().map(|(k, &f)| (f, k)).collect();
        let whites = domain.edges();
        let white_index = whites.iter().enumerate().map(|(k, &e)| (e, k)).collect();
        let white_faces = whites
            .iter()
            .map(|&(u, w)| {
                let (a, b) = (domain.coord(u), domain.coord(w));
                let lo = [a[0].min(b[0]), a[1].min(b[1])];
                let pair = if a[1] == b[1] {
                    [lo, [lo[0], lo[1] - 1]]
                } else {
                    [lo, [lo[0] - 1, lo[1]]]
                };
                [face_index[&pair[0]], face_index[&pair[1]]]
            })
            .collect();
        Ok(DoubledGraph {
            n_interior: n,
            faces,
            whites,
            white_index,
            white_faces,
            outer: 0,
        })
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn n_white(&self) -> usize {
        self.whites.len()
    }

    /// Black vertices including the root and outer face.
    pub fn n_black(&self) -> usize {
        self.n_interior + 1 + self.faces.len()
    }

    pub fn outer_face(&self) -> [i32; 2] {
        self.faces[self.outer]
    }

    pub fn white(&self, e: usize) -> (VertexId, VertexId) {
        self.whites[e]
    }

    fn white_of(&self, u: VertexId, w: VertexId) -> Option<usize> {
        self.white_index.get(&(u.min(w), u.max(w))).copied()
    }

    /// The four black neighbours of a white vertex.
    pub fn black_neighbors(&self, domain: &LatticeDomain, e: usize) -> [Black; 4] {
        let (u, w) = self.whites[e];
        let b = |v: VertexId| {
            if domain.is_interior(v) {
                Black::Vertex(v)
            } else {
                Black::Root
            }
        };
        let [f, g] = self.white_faces[e];
        [b(u), b(w), Black::Face(self.faces[f]), Black::Face(self.faces[g])]
    }
}

/// Vertices, edges and faces of the interior complex (interior vertices,
/// interior–interior edges, squares with four interior corners).
pub fn interior_complex_counts(domain: &LatticeDomain) -> (usize, usize, usize) {
    let n = domain.n_interior();
    let e = domain
        .edges()
        .iter()
        .filter(|&&(_, w)| domain.is_interior(w))
        .count();
    let mut f = 0;
    for v in 0..n {
        let [i, j] = domain.coord(v);
        let all = [[i + 1, j], [i, j + 1], [i + 1, j + 1]]
            .iter()
            .all(|&c| domain.vertex_at(c).is_some_and(|u| domain.is_interior(u)));
        if all {
            f += 1;
        }
    }
    (n, e, f)
}

/// Perfect matching of the trimmed doubled graph: the black partner of each
/// white vertex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DimerMatching {
    pub partner: Vec<Black>,
}

impl DimerMatching {
    /// Every white matched to an adjacent retained black, every retained
    /// black used once.
    pub fn validate(&self, domain: &LatticeDomain, dg: &DoubledGraph) -> Result<()> {
        if self.partner.len() != dg.n_white() {
            return Err(Error::Argument("matching does not cover every white vertex".into()));
        }
        let mut used: HashMap<Black, usize> = HashMap::new();
        for (e, &b) in self.partner.iter().enumerate() {
            if b == Black::Root || b == Black::Face(dg.outer_face()) {
                return Err(Error::Argument("matching uses a removed vertex".into()));
            }
            if !dg.black_neighbors(domain, e).contains(&b) {
                return Err(Error::Argument(format!("white {e} matched to a non-neighbour")));
            }
            *used.entry(b).or_default() += 1;
        }
        let expected = dg.n_black() - 2;
        if used.len() != expected || used.values().any(|&c| c != 1) {
            return Err(Error::Argument("matching is not perfect".into()));
        }
        Ok(())
    }
}

pub fn temperley_matching(
    domain: &LatticeDomain,
    dg: &DoubledGraph,
    tree: &SpanningTree,
) -> Result<DimerMatching> {
    tree.validate(domain)?;
    let mut partner: Vec<Option<Black>> = vec![None; dg.n_white()];
    for v in 0..domain.n_interior() {
        let e = dg.white_of(v, tree.parent[v]).expect("tree edge");
        partner[e] = Some(Black::Vertex(v));
    }
    // Dual tree on faces through the unused edges, oriented to the outer face.
    let mut face_adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); dg.n_faces()];
    for e in 0..dg.n_white() {
        if partner[e].is_none() {
            let [f, g] = dg.white_faces[e];
            face_adj[f].push((g, e));
            face_adj[g].push((f, e));
        }
    }
    let mut seen = vec![false; dg.n_faces()];
    seen[dg.outer] = true;
    let mut queue = VecDeque::from([dg.outer]);
    while let Some(f) = queue.pop_front() {
        for &(g, e) in &face_adj[f] {
            if partner[e].is_some() {
                continue;
            }
            if seen[g] {
                return Err(Error::Numerical("dual graph has a cycle".into()));
            }
            seen[g] = true;
            partner[e] = Some(Black::Face(dg.faces[g]));
            queue.push_back(g);
        }
    }
    let partner: Option<Vec<Black>> = partner.into_iter().collect();
    let m = DimerMatching {
        partner: partner.ok_or_else(|| Error::Numerical("dual tree does not span".into()))?,
    };
    m.validate(domain, dg)?;
    Ok(m)
}

/// Inverse of [`temperley_matching`]: each vertex's parent is the other end
/// of its matched edge.
pub fn tree_from_matching(
    domain: &LatticeDomain,
    dg: &DoubledGraph,
    m: &DimerMatching,
) -> Result<SpanningTree> {
    m.validate(domain, dg)?;
    let mut parent = vec![usize::MAX; domain.n_interior()];
    for (e, &b) in m.partner.iter().enumerate() {
        if let Black::Vertex(v) = b {
            let (u, w) = dg.white(e);
            parent[v] = if u == v { w } else { u };
        }
    }
    let t = SpanningTree { parent };
    t.validate(domain)?;
    Ok(t)
}

/// Heights on the quarter cells `(v, q)` of interior vertices (quadrants
/// NE, NW, SW, SE), which are the faces of the superposed graph `(DΓ)†`.
#[derive(Clone, Debug, Serialize)]
pub struct HeightFunction {
    pub cells: Vec<(VertexId, u8)>,
    pub values: Vec<i64>,
}

const QUAD: [[i32; 2]; 4] = [[1, 1], [-1, 1], [-1, -1], [1, -1]];

fn quad_of(s: [i32; 2]) -> u8 {
    QUAD.iter().position(|&q| q == s).unwrap() as u8
}

impl HeightFunction {
    pub fn get(&self, v: VertexId, q: u8) -> Option<i64> {
        self.cells
            .iter()
            .position(|&c| c == (v, q))
            .map(|k| self.values[k])
    }

    /// Lattice-unit centre of a quarter cell.
    pub fn cell_center(domain: &LatticeDomain, v: VertexId, q: u8) -> [f64; 2] {
        let p = domain.position(v);
        let s = QUAD[q as usize];
        [p[0] + 0.25 * s[0] as f64, p[1] + 0.25 * s[1] as f64]
    }
}

/// Height of a perfect matching: crossing an edge of the doubled graph with
/// its black end on the left changes the height by -3 if the edge is
/// matched and by +1 otherwise (reversed signs with black on the right).
/// The base cell, with height 0, is the first quarter cell of the
/// lowest-numbered interior corner of the outer face.
pub fn height_function(
    domain: &LatticeDomain,
    dg: &DoubledGraph,
    m: &DimerMatching,
) -> Result<HeightFunction> {
    let outer = dg.outer_face();
    let face_of = |v: VertexId, q: u8| {
        let [i, j] = domain.coord(v);
        let s = QUAD[q as usize];
        [i + (s[0] - 1) / 2, j + (s[1] - 1) / 2]
    };
    let mut cells = Vec::new();
    let mut index: HashMap<(VertexId, u8), usize> = HashMap::new();
    for v in 0..domain.n_interior() {
        for q in 0..4u8 {
            if face_of(v, q) != outer {
                index.insert((v, q), cells.len());
                cells.push((v, q));
            }
        }
    }
    let matched = |b: Black, e: usize| m.partner[e] == b;
    let black_pos = |b: Black| -> [f64; 2] {
        match b {
            Black::Vertex(v) => domain.position(v),
            Black::Face(f) => [f[0] as f64 + 0.5, f[1] as f64 + 0.5],
            Black::Root => unreachable!(),
        }
    };
    // Neighbouring cells with the separating doubled-graph edge.
    let neighbours = |v: VertexId, q: u8| -> Vec<((VertexId, u8), Black, usize)> {
        let s = QUAD[q as usize];
        let c = domain.coord(v);
        let mut out = Vec::new();
        for axis in 0..2 {
            let mut flip = s;
            flip[axis] = -s[axis];
            // same vertex: across the half edge v -> v + s[other axis]
            let mut along = [0, 0];
            along[1 - axis] = s[1 - axis];
            let u = domain.vertex_at([c[0] + along[0], c[1] + along[1]]).unwrap();
            out.push(((v, quad_of(flip)), Black::Vertex(v), dg.white_of(v, u).unwrap()));
            // neighbouring vertex: across the half edge face -> (v, w)
            let mut step = [0, 0];
            step[axis] = s[axis];
            let w = domain.vertex_at([c[0] + step[0], c[1] + step[1]]).unwrap();
            if domain.is_interior(w) {
                let e = dg.white_of(v, w).unwrap();
                out.push(((w, quad_of(flip)), Black::Face(face_of(v, q)), e));
            }
        }
        out
    };
    let base_v = (0..domain.n_interior())
        .find(|&v| (0..4u8).any(|q| face_of(v, q) == outer))
        .ok_or_else(|| Error::Domain("outer face has no interior corner".into()))?;
    let base = (0..4u8).find(|&q| index.contains_key(&(base_v, q))).unwrap();
    let mut values: Vec<Option<i64>> = vec![None; cells.len()];
    values[index[&(base_v, base)]] = Some(0);
    let mut queue = VecDeque::from([(base_v, base)]);
    while let Some((v, q)) = queue.pop_front() {
        let h = values[index[&(v, q)]].unwrap();
        let a = HeightFunction::cell_center(domain, v, q);
        for (nb, black, e) in neighbours(v, q) {
            let Some(&k) = index.get(&nb) else { continue };
            if black == Black::Face(outer) {
                continue;
            }
            let b = HeightFunction::cell_center(domain, nb.0, nb.1);
            let d = [b[0] - a[0], b[1] - a[1]];
            let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
            let p = black_pos(black);
            let left = d[0] * (p[1] - mid[1]) - d[1] * (p[0] - mid[0]) > 0.0;
            let step = if matched(black, e) { -3 } else { 1 };
            let h2 = h + if left { step } else { -step };
            match values[k] {
                None => {
                    values[k] = Some(h2);
                    queue.push_back(nb);
                }
                Some(x) if x != h2 => {
                    return Err(Error::Numerical("height function is not consistent".into()))
                }
                _ => {}
            }
        }
    }
    let values: Option<Vec<i64>> = values.into_iter().collect();
    Ok(HeightFunction {
        cells,
        values: values.ok_or_else(|| Error::Numerical("height cells not connected".into()))?,
    })
}

/// Height increments around a black vertex, walking its surrounding cells
/// counter-clockwise; `None` if some cell is missing.
pub fn increments_around(
    domain: &LatticeDomain,
    h: &HeightFunction,
    black: Black,
) -> Option<Vec<i64>> {
    let ring: Vec<(VertexId, u8)> = match black {
        Black::Vertex(v) => (0..4u8).map(|q| (v, q)).collect(),
        Black::Face([i, j]) => {
            let at = |c: [i32; 2]| domain.vertex_at(c).filter(|&v| domain.is_interior(v));
            vec![
                (at([i, j])?, 0),
                (at([i + 1, j])?, 1),
                (at([i + 1, j + 1])?, 2),
                (at([i, j + 1])?, 3),
            ]
        }
        Black::Root => return None,
    };
    let vals: Option<Vec<i64>> = ring.iter().map(|&(v, q)| h.get(v, q)).collect();
    let vals = vals?;
    Some((0..vals.len()).map(|k| vals[(k + 1) % vals.len()] - vals[k]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::spanning_tree_count;
    use crate::util::{chi_square_gof, stream_rng};
    use std::collections::HashSet;

    fn sq(w: usize, h: usize) -> LatticeDomain {
        LatticeDomain::rectangle(LatticeKind::Square, w, h, 1.0).unwrap()
    }

    /// All rooted spanning trees by brute force over parent choices.
    fn enumerate_trees(d: &LatticeDomain) -> Vec<SpanningTree> {
        let n = d.n_interior();
        let mut out = Vec::new();
        let mut choice = vec![0usize; n];
        loop {
            let t = SpanningTree {
                parent: (0..n).map(|v| d.neighbors(v)[choice[v]]).collect(),
            };
            if t.validate(d).is_ok() {
                out.push(t);
            }
            let mut k = 0;
            loop {
                if k == n {
                    return out;
                }
                choice[k] += 1;
                if choice[k] < d.degree(k) {
                    break;
                }
                choice[k] = 0;
                k += 1;
            }
        }
    }

    #[test]
    fn enumeration_matches_matrix_tree() {
        for (w, h) in [(1, 1), (2, 1), (2, 2), (3, 1)] {
            let d = sq(w, h);
            let n = enumerate_trees(&d).len();
            let c = spanning_tree_count(&d, true).unwrap().exact.unwrap();
            assert_eq!(num_bigint::BigInt::from(n), c, "{w}x{h}");
        }
    }

    #[test]
    fn wilson_is_uniform_on_fifteen_trees() {
        let d = sq(2, 1);
        let trees = enumerate_trees(&d);
        assert_eq!(trees.len(), 15);
        let idx: HashMap<SpanningTree, usize> =
            trees.iter().cloned().enumerate().map(|(k, t)| (t, k)).collect();
        let mut counts = vec![0u64; trees.len()];
        let mut rng = stream_rng(1, 0);
        for _ in 0..30_000 {
            counts[idx[&wilson_ust(&d, &mut rng)]] += 1;
        }
        let (_, _, p) = chi_square_gof(&counts, &vec![1.0; trees.len()], 5.0);
        assert!(p > 0.001, "p = {p}");
    }

    #[test]
    fn lerw_is_simple_and_ends_on_boundary() {
        let d = sq(7, 6);
        let mut rng = stream_rng(2, 0);
        for _ in 0..200 {
            let p = lerw_branch(&d, 20, &mut rng).unwrap();
            let set: HashSet<_> = p.iter().collect();
            assert_eq!(set.len(), p.len());
            assert!(d.is_boundary(*p.last().unwrap()));
            assert!(p[..p.len() - 1].iter().all(|&v| d.is_interior(v)));
            for w in p.windows(2) {
                assert!(d.neighbors(w[0]).contains(&w[1]));
            }
        }
        let single = sq(1, 1);
        assert_eq!(lerw_branch(&single, 0, &mut rng).unwrap().len(), 2);
    }

    #[test]
    fn lerw_partition_single_vertex() {
        let d = sq(1, 1);
        let x = d.vertex_at([1, 0]).unwrap();
        assert!(lerw_log_partition(&d, x, 0).unwrap().abs() < 1e-14);
        let corner = d.vertex_at([1, 1]).unwrap();
        assert_eq!(lerw_log_partition(&d, corner, 0).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn harmonic_measure_sums_to_one() {
        let d = sq(5, 4);
        let h = harmonic_measure_from(&d, 7).unwrap();
        assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lerw_partition_symmetric() {
        let d = sq(5, 5);
        let y = d.vertex_at([2, 2]).unwrap();
        let a = lerw_log_partition(&d, d.vertex_at([0, -1]).unwrap(), y).unwrap();
        let b = lerw_log_partition(&d, d.vertex_at([4, -1]).unwrap(), y).unwrap();
        let c = lerw_log_partition(&d, d.vertex_at([5, 4]).unwrap(), y).unwrap();
        assert!((a - b).abs() < 1e-12 && (a - c).abs() < 1e-12);
    }

    #[test]
    fn doubled_graph_counts() {
        let d = sq(2, 2);
        let dg = DoubledGraph::new(&d).unwrap();
        assert_eq!(dg.n_white(), 12);
        assert_eq!(dg.n_faces(), 9);
        assert_eq!(dg.n_black() - 2, dg.n_white());
        assert_eq!(interior_complex_counts(&d), (4, 4, 1));
        let d = sq(1, 1);
        let dg = DoubledGraph::new(&d).unwrap();
        assert_eq!((dg.n_white(), dg.n_faces()), (4, 4));
        let tri = LatticeDomain::rectangle(LatticeKind::Triangular, 2, 2, 1.0).unwrap();
        assert!(DoubledGraph::new(&tri).is_err());
    }

    #[test]
    fn euler_relation_on_interior_complex() {
        let mask = vec![
            vec![true, true, true, true],
            vec![true, true, true, false],
            vec![true, true, false, false],
            vec![false, true, false, false],
        ];
        let d = LatticeDomain::from_mask(LatticeKind::Square, &mask, 1.0).unwrap();
        let (v, e, f) = interior_complex_counts(&d);
        assert_eq!(v as i64 - e as i64 + f as i64, 1);
        let dg = DoubledGraph::new(&d).unwrap();
        assert_eq!(dg.n_black() - 2, dg.n_white());
    }

    #[test]
    fn bijection_on_enumerated_trees() {
        for (w, h) in [(1, 1), (2, 1), (2, 2)] {
            let d = sq(w, h);
            let dg = DoubledGraph::new(&d).unwrap();
            let trees = enumerate_trees(&d);
            let mut seen = HashSet::new();
            for t in &trees {
                let m = temperley_matching(&d, &dg, t).unwrap();
                assert_eq!(&tree_from_matching(&d, &dg, &m).unwrap(), t);
                assert!(seen.insert(format!("{:?}", m.partner)));
                let hf = height_function(&d, &dg, &m).unwrap();
                for v in d.interior() {
                    if let Some(inc) = increments_around(&d, &hf, Black::Vertex(v)) {
                        assert_eq!(inc.iter().sum::<i64>(), 0);
                    }
                }
            }
        }
    }

    #[test]
    fn single_vertex_heights_by_hand() {
        // tree: parent to the east. Matching: v-e_E, NW face-e_W, SE face-e_S,
        // NE face-e_N; the SW face is the outer face.
        let d = sq(1, 1);
        let dg = DoubledGraph::new(&d).unwrap();
        assert_eq!(dg.outer_face(), [-1, -1]);
        let east = d.vertex_at([1, 0]).unwrap();
        let t = SpanningTree { parent: vec![east] };
        let m = temperley_matching(&d, &dg, &t).unwrap();
        let h = height_function(&d, &dg, &m).unwrap();
        let ne = h.get(0, 0).unwrap();
        assert_eq!(h.get(0, 1).unwrap() - ne, 1);
        assert_eq!(h.get(0, 3).unwrap() - ne, 3);
        assert_eq!(h.get(0, 2), None);
    }

    #[test]
    fn sampled_matchings_are_perfect_with_admissible_heights() {
        let d = sq(8, 8);
        let dg = DoubledGraph::new(&d).unwrap();
        let mut rng = stream_rng(4, 0);
        for _ in 0..300 {
            let t = wilson_ust(&d, &mut rng);
            let m = temperley_matching(&d, &dg, &t).unwrap();
            assert_eq!(tree_from_matching(&d, &dg, &m).unwrap(), t);
            let h = height_function(&d, &dg, &m).unwrap();
            for v in d.interior() {
                if let Some(inc) = increments_around(&d, &h, Black::Vertex(v)) {
                    assert_eq!(inc.iter().sum::<i64>(), 0);
                    let mut s = inc.clone();
                    s.sort();
                    assert!(s == vec![-3, 1, 1, 1] || s == vec![-1, -1, -1, 3]);
                }
            }
            for v in d.interior() {
                let [i, j] = d.coord(v);
                if let Some(inc) = increments_around(&d, &h, Black::Face([i, j])) {
                    assert_eq!(inc.iter().sum::<i64>(), 0);
                }
            }
        }
    }
}
