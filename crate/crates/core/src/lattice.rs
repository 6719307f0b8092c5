//! Finite lattice domains.
//!
//! A domain is a connected, simply connected set of interior cells of the
//! square or triangular lattice. Its boundary is the ring of exterior cells
//! adjacent to the interior (8-adjacency on the square lattice so the ring
//! closes up around corners, 6-adjacency on the triangular lattice). Graph
//! edges are lattice edges with at least one interior endpoint.
//!
//! Vertex ids are dense: interior vertices come first (row-major), then the
//! ring in counter-clockwise order.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VertexId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeKind {
    Square,
    Triangular,
}

const SQUARE_DIRS: [[i32; 2]; 4] = [[1, 0], [0, 1], [-1, 0], [0, -1]];
/// Axial directions, counter-clockwise starting east.
pub const TRI_DIRS: [[i32; 2]; 6] = [[1, 0], [0, 1], [-1, 1], [-1, 0], [0, -1], [1, -1]];
const SQUARE_RING: [[i32; 2]; 8] = [
    [1, 0],
    [1, 1],
    [0, 1],
    [-1, 1],
    [-1, 0],
    [-1, -1],
    [0, -1],
    [1, -1],
];

impl LatticeKind {
    pub fn dirs(self) -> &'static [[i32; 2]] {
        match self {
            LatticeKind::Square => &SQUARE_DIRS,
            LatticeKind::Triangular => &TRI_DIRS,
        }
    }

    /// Position in lattice units of the cell with lattice coordinates `c`.
    pub fn position(self, c: [i32; 2]) -> [f64; 2] {
        match self {
            LatticeKind::Square => [c[0] as f64, c[1] as f64],
            LatticeKind::Triangular => [
                c[0] as f64 + 0.5 * c[1] as f64,
                c[1] as f64 * 3f64.sqrt() / 2.0,
            ],
        }
    }

    /// Maps mask coordinates (column, row) to lattice coordinates. Triangular
    /// masks use offset rows, so each row of the mask is a horizontal row of
    /// the lattice and odd rows sit half a step to the right.
    pub fn from_offset(self, col: i32, row: i32) -> [i32; 2] {
        match self {
            LatticeKind::Square => [col, row],
            LatticeKind::Triangular => [col - row.div_euclid(2), row],
        }
    }
}

#[derive(Clone, Debug)]
pub struct LatticeDomain {
    kind: LatticeKind,
    mesh: f64,
    coords: Vec<[i32; 2]>,
    n_interior: usize,
    adj: Vec<Vec<VertexId>>,
    boundary_order: Vec<VertexId>,
    index: HashMap<[i32; 2], VertexId>,
    marked: BTreeMap<String, VertexId>,
}

/// JSON description: `mask[row][col]` with row 0 at the bottom, nonzero
/// entries interior. Marked points are `[col, row]` in the same frame and
/// must land on the boundary ring.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DomainSpec {
    pub lattice: LatticeKind,
    pub mask: Vec<Vec<u8>>,
    #[serde(default = "one")]
    pub mesh: f64,
    #[serde(default)]
    pub marked: BTreeMap<String, [i32; 2]>,
}

fn one() -> f64 {
    1.0
}

impl DomainSpec {
    pub fn build(&self) -> Result<LatticeDomain> {
        let mask: Vec<Vec<bool>> = self
            .mask
            .iter()
            .map(|r| r.iter().map(|&x| x != 0).collect())
            .collect();
        let mut d = LatticeDomain::from_mask(self.lattice, &mask, self.mesh)?;
        for (name, &[c, r]) in &self.marked {
            d.mark(name, self.lattice.from_offset(c, r))?;
        }
        Ok(d)
    }
}

impl LatticeDomain {
    /// `mask[row][col]`, row 0 at the bottom.
    pub fn from_mask(kind: LatticeKind, mask: &[Vec<bool>], mesh: f64) -> Result<Self> {
        let mut cells = Vec::new();
        for (row, r) in mask.iter().enumerate() {
            for (col, &inside) in r.iter().enumerate() {
                if inside {
                    cells.push(kind.from_offset(col as i32, row as i32));
                }
            }
        }
        Self::from_cells(kind, &cells, mesh)
    }

    pub fn rectangle(kind: LatticeKind, width: usize, height: usize, mesh: f64) -> Result<Self> {
        Self::from_mask(kind, &vec![vec![true; width]; height], mesh)
    }

    /// Builds a domain from interior cells given in lattice coordinates
    /// (axial coordinates for the triangular lattice).
    pub fn from_cells(kind: LatticeKind, cells: &[[i32; 2]], mesh: f64) -> Result<Self> {
        if !(mesh > 0.0 && mesh.is_finite()) {
            return Err(Error::Domain(format!("mesh must be positive, got {mesh}")));
        }
        if cells.is_empty() {
            return Err(Error::Domain("mask has no interior cells".into()));
        }
        let mut interior: Vec<[i32; 2]> = cells.to_vec();
        interior.sort_by_key(|c| (c[1], c[0]));
        interior.dedup();
        let mut index: HashMap<[i32; 2], VertexId> = HashMap::new();
        for (k, &c) in interior.iter().enumerate() {
            index.insert(c, k);
        }
        let n_interior = interior.len();

        // Connectivity of the interior.
        let dirs = kind.dirs();
        let mut seen = vec![false; n_interior];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for d in dirs {
                let c = [interior[v][0] + d[0], interior[v][1] + d[1]];
                if let Some(&w) = index.get(&c) {
                    if !seen[w] {
                        seen[w] = true;
                        count += 1;
                        queue.push_back(w);
                    }
                }
            }
        }
        if count != n_interior {
            return Err(Error::Domain("interior cells are not connected".into()));
        }

        let is_interior = |c: [i32; 2]| index.contains_key(&c);
        let ring_seq = match kind {
            LatticeKind::Square => trace_square(&interior, &is_interior),
            LatticeKind::Triangular => trace_triangular(&interior, &is_interior),
        };
        // The ring set: every exterior cell adjacent to the interior.
        let ring_dirs: &[[i32; 2]] = match kind {
            LatticeKind::Square => &SQUARE_RING,
            LatticeKind::Triangular => &TRI_DIRS,
        };
        let mut ring_set = std::collections::HashSet::new();
        for c in &interior {
            for d in ring_dirs {
                let e = [c[0] + d[0], c[1] + d[1]];
                if !is_interior(e) {
                    ring_set.insert(e);
                }
            }
        }
        let mut seen_ring = std::collections::HashSet::new();
        for c in &ring_seq {
            if !seen_ring.insert(*c) {
                return Err(Error::Domain(
                    "boundary ring is not a simple closed curve (pinched mask)".into(),
                ));
            }
        }
        if seen_ring.len() != ring_set.len() {
            return Err(Error::Domain("mask is not simply connected".into()));
        }

        let mut coords = interior;
        let mut boundary_order = Vec::with_capacity(ring_seq.len());
        for c in ring_seq {
            let id = coords.len();
            index.insert(c, id);
            coords.push(c);
            boundary_order.push(id);
        }

        let mut adj = vec![Vec::new(); coords.len()];
        for v in 0..n_interior {
            for d in dirs {
                let c = [coords[v][0] + d[0], coords[v][1] + d[1]];
                let w = index[&c];
                adj[v].push(w);
                if w >= n_interior {
                    adj[w].push(v);
                }
            }
        }

        Ok(LatticeDomain {
            kind,
            mesh,
            coords,
            n_interior,
            adj,
            boundary_order,
            index,
            marked: BTreeMap::new(),
        })
    }

    /// Registers a named marked point; it must be a boundary vertex.
    pub fn mark(&mut self, name: &str, coord: [i32; 2]) -> Result<VertexId> {
        let v = self
            .vertex_at(coord)
            .filter(|&v| self.is_boundary(v))
            .ok_or_else(|| {
                Error::Domain(format!("marked point {name} at {coord:?} is not on the boundary"))
            })?;
        self.marked.insert(name.to_string(), v);
        Ok(v)
    }

    pub fn marked(&self, name: &str) -> Result<VertexId> {
        self.marked
            .get(name)
            .copied()
            .ok_or_else(|| Error::Domain(format!("unknown marked point {name}")))
    }

    pub fn marked_points(&self) -> &BTreeMap<String, VertexId> {
        &self.marked
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    pub fn n_vertices(&self) -> usize {
        self.coords.len()
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    pub fn n_boundary(&self) -> usize {
        self.coords.len() - self.n_interior
    }

    pub fn is_interior(&self, v: VertexId) -> bool {
        v < self.n_interior
    }

    pub fn is_boundary(&self, v: VertexId) -> bool {
        v >= self.n_interior && v < self.coords.len()
    }

    pub fn interior(&self) -> std::ops::Range<VertexId> {
        0..self.n_interior
    }

    pub fn coord(&self, v: VertexId) -> [i32; 2] {
        self.coords[v]
    }

    pub fn vertex_at(&self, c: [i32; 2]) -> Option<VertexId> {
        self.index.get(&c).copied()
    }

    /// Position in lattice units.
    pub fn position(&self, v: VertexId) -> [f64; 2] {
        self.kind.position(self.coords[v])
    }

    /// Position scaled by the mesh.
    pub fn physical_position(&self, v: VertexId) -> [f64; 2] {
        let p = self.position(v);
        [p[0] * self.mesh, p[1] * self.mesh]
    }

    /// Interior vertices: all lattice neighbours. Boundary vertices: their
    /// interior neighbours.
    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adj[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v].len()
    }

    /// Edges with at least one interior endpoint, each listed once as
    /// `(u, w)` with `u` interior and `u < w`.
    pub fn edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut out = Vec::new();
        for u in self.interior() {
            for &w in &self.adj[u] {
                if w > u {
                    out.push((u, w));
                }
            }
        }
        out
    }

    /// Boundary vertices in counter-clockwise order.
    pub fn boundary_order(&self) -> &[VertexId] {
        &self.boundary_order
    }

    /// Index of a boundary vertex in [`Self::boundary_order`].
    pub fn boundary_index(&self, v: VertexId) -> Option<usize> {
        self.is_boundary(v).then(|| v - self.n_interior)
    }

    /// Signed turning angle of the boundary polyline at boundary vertex `v`.
    pub fn turning_angle(&self, v: VertexId) -> f64 {
        let n = self.boundary_order.len();
        let k = self.boundary_index(v).expect("boundary vertex");
        let prev = self.position(self.boundary_order[(k + n - 1) % n]);
        let cur = self.position(v);
        let next = self.position(self.boundary_order[(k + 1) % n]);
        let a = [cur[0] - prev[0], cur[1] - prev[1]];
        let b = [next[0] - cur[0], next[1] - cur[1]];
        (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1])
    }

    /// Total turning along the boundary walked counter-clockwise from
    /// `from` to `to`, counting the vertices strictly in between. Zero when
    /// `from == to`.
    pub fn boundary_winding(&self, from: VertexId, to: VertexId) -> Result<f64> {
        let (Some(i), Some(j)) = (self.boundary_index(from), self.boundary_index(to)) else {
            return Err(Error::Argument("winding endpoints must be boundary vertices".into()));
        };
        let n = self.boundary_order.len();
        let mut k = (i + 1) % n;
        let mut total = 0.0;
        if i == j {
            return Ok(0.0);
        }
        while k != j {
            total += self.turning_angle(self.boundary_order[k]);
            k = (k + 1) % n;
        }
        Ok(total)
    }

    /// Sum of turning angles over the whole boundary cycle, `2π` for any
    /// valid domain.
    pub fn total_turning(&self) -> f64 {
        self.boundary_order
            .iter()
            .map(|&v| self.turning_angle(v))
            .sum()
    }

    /// Interior vertices whose first lattice coordinate equals `col` (a
    /// vertical line on the square lattice).
    pub fn column(&self, col: i32) -> Vec<VertexId> {
        self.interior().filter(|&v| self.coords[v][0] == col).collect()
    }

    /// Interior vertices in lattice row `row`.
    pub fn row(&self, row: i32) -> Vec<VertexId> {
        self.interior().filter(|&v| self.coords[v][1] == row).collect()
    }
}

fn trace_square(interior: &[[i32; 2]], is_interior: &dyn Fn([i32; 2]) -> bool) -> Vec<[i32; 2]> {
    // Directed unit edges of the interior's outline, interior on the left.
    // side 0 bottom (+x), 1 right (+y), 2 top (-x), 3 left (-y).
    let normal = |s: usize| SQUARE_DIRS[(s + 3) % 4];
    let travel = |s: usize| SQUARE_DIRS[s];
    let add = |a: [i32; 2], b: [i32; 2]| [a[0] + b[0], a[1] + b[1]];
    let exposed = |c: [i32; 2], s: usize| is_interior(c) && !is_interior(add(c, normal(s)));

    let start = (interior[0], 0usize);
    let mut cur = start;
    let mut seq: Vec<[i32; 2]> = Vec::new();
    loop {
        let (c, s) = cur;
        seq.push(add(c, normal(s)));
        let s1 = (s + 1) % 4;
        let ahead = add(c, travel(s));
        cur = if exposed(c, s1) {
            seq.push(add(add(c, normal(s)), normal(s1)));
            (c, s1)
        } else if exposed(ahead, s) {
            (ahead, s)
        } else {
            (add(ahead, normal(s)), (s + 3) % 4)
        };
        if cur == start {
            break;
        }
    }
    dedup_cyclic(seq)
}

fn trace_triangular(
    interior: &[[i32; 2]],
    is_interior: &dyn Fn([i32; 2]) -> bool,
) -> Vec<[i32; 2]> {
    let add = |a: [i32; 2], b: [i32; 2]| [a[0] + b[0], a[1] + b[1]];
    // Lowest row first, so the south-west neighbour is exterior.
    let l0 = interior[0];
    let start = (l0, 4usize);
    let mut state = start;
    let mut seq = Vec::new();
    loop {
        let (l, k) = state;
        let r = add(l, TRI_DIRS[k]);
        seq.push(r);
        let t = add(l, TRI_DIRS[(k + 1) % 6]);
        state = if is_interior(t) {
            // New left vertex t; r = t + d for some direction d.
            let d = [r[0] - t[0], r[1] - t[1]];
            let k2 = TRI_DIRS.iter().position(|&x| x == d).expect("adjacent");
            (t, k2)
        } else {
            (l, (k + 1) % 6)
        };
        if state == start {
            break;
        }
    }
    dedup_cyclic(seq)
}

fn dedup_cyclic(mut seq: Vec<[i32; 2]>) -> Vec<[i32; 2]> {
    seq.dedup();
    while seq.len() > 1 && seq.first() == seq.last() {
        seq.pop();
    }
    seq
}

/// A cut: a set of interior vertices whose removal splits the interior into
/// left and right parts.
#[derive(Clone, Debug)]
pub struct Cut {
    pub delta: Vec<VertexId>,
    pub left: Vec<VertexId>,
    pub right: Vec<VertexId>,
}

/// Components of the interior with `removed` taken out, ordered by their
/// smallest vertex id.
pub fn components_without(domain: &LatticeDomain, removed: &[VertexId]) -> Vec<Vec<VertexId>> {
    let n = domain.n_interior();
    let mut blocked = vec![false; n];
    for &v in removed {
        if v < n {
            blocked[v] = true;
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut out: Vec<Vec<VertexId>> = Vec::new();
    for s in 0..n {
        if blocked[s] || comp[s] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = vec![s];
        comp[s] = id;
        let mut k = 0;
        while k < members.len() {
            let v = members[k];
            k += 1;
            for &w in domain.neighbors(v) {
                if w < n && !blocked[w] && comp[w] == usize::MAX {
                    comp[w] = id;
                    members.push(w);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

pub fn split_by_cut(domain: &LatticeDomain, delta: &[VertexId]) -> Result<Cut> {
    if delta.is_empty() {
        return Err(Error::Argument("cut is empty".into()));
    }
    let mut d = delta.to_vec();
    d.sort_unstable();
    d.dedup();
    if d.iter().any(|&v| !domain.is_interior(v)) {
        return Err(Error::Argument("cut vertices must be interior".into()));
    }
    let comps = components_without(domain, &d);
    if comps.len() != 2 {
        return Err(Error::Argument(format!(
            "cut separates the interior into {} parts, expected 2",
            comps.len()
        )));
    }
    let mut it = comps.into_iter();
    Ok(Cut {
        delta: d,
        left: it.next().unwrap(),
        right: it.next().unwrap(),
    })
}

/// Exterior angle sum check used by tests: `2π` up to rounding.
pub fn is_full_turn(x: f64) -> bool {
    (x - 2.0 * PI).abs() < 1e-9
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(w: usize, h: usize) -> LatticeDomain {
        LatticeDomain::rectangle(LatticeKind::Square, w, h, 1.0).unwrap()
    }

    #[test]
    fn three_by_three_block_counts() {
        let d = sq(3, 3);
        assert_eq!(d.n_interior(), 9);
        assert_eq!(d.n_boundary(), 16);
        assert_eq!(d.edges().len(), 24);
        assert!(is_full_turn(d.total_turning()));
    }

    #[test]
    fn single_cell_has_eight_ring_and_four_edges() {
        let d = sq(1, 1);
        assert_eq!(d.n_interior(), 1);
        assert_eq!(d.n_boundary(), 8);
        assert_eq!(d.degree(0), 4);
        assert_eq!(d.edges().len(), 4);
    }

    #[test]
    fn ring_is_a_lattice_cycle() {
        let mask = vec![
            vec![true, true, true, false],
            vec![true, false, true, true],
            vec![true, true, true, true],
        ];
        // the hole at (1,1) makes this non simply connected
        assert!(LatticeDomain::from_mask(LatticeKind::Square, &mask, 1.0).is_err());
        let mask = vec![
            vec![true, true, true, true],
            vec![true, true, false, false],
            vec![true, true, false, false],
        ];
        let d = LatticeDomain::from_mask(LatticeKind::Square, &mask, 1.0).unwrap();
        let b = d.boundary_order();
        for k in 0..b.len() {
            let p = d.coord(b[k]);
            let q = d.coord(b[(k + 1) % b.len()]);
            assert_eq!((p[0] - q[0]).abs() + (p[1] - q[1]).abs(), 1);
        }
        assert!(is_full_turn(d.total_turning()));
    }

    #[test]
    fn ring_is_counter_clockwise() {
        let d = sq(4, 2);
        let b = d.boundary_order();
        let mut area2 = 0.0;
        for k in 0..b.len() {
            let p = d.position(b[k]);
            let q = d.position(b[(k + 1) % b.len()]);
            area2 += p[0] * q[1] - p[1] * q[0];
        }
        assert!(area2 > 0.0);
    }

    #[test]
    fn pinched_mask_rejected() {
        let mask = vec![vec![true, false], vec![false, true]];
        assert!(LatticeDomain::from_mask(LatticeKind::Square, &mask, 1.0).is_err());
    }

    #[test]
    fn winding_half_way_round_a_square() {
        let d = sq(3, 3);
        let bottom = d.vertex_at([1, -1]).unwrap();
        let top = d.vertex_at([1, 3]).unwrap();
        assert!((d.boundary_winding(bottom, top).unwrap() - PI).abs() < 1e-12);
        assert_eq!(d.boundary_winding(top, top).unwrap(), 0.0);
    }

    #[test]
    fn triangular_interior_degree_six() {
        let d = LatticeDomain::rectangle(LatticeKind::Triangular, 5, 4, 0.1).unwrap();
        for v in d.interior() {
            assert_eq!(d.degree(v), 6);
        }
        assert!(is_full_turn(d.total_turning()));
        let b = d.boundary_order();
        for k in 0..b.len() {
            let p = d.coord(b[k]);
            let q = d.coord(b[(k + 1) % b.len()]);
            let delta = [q[0] - p[0], q[1] - p[1]];
            assert!(TRI_DIRS.contains(&delta));
        }
    }

    #[test]
    fn column_cut_splits_in_two() {
        let d = sq(5, 3);
        let cut = split_by_cut(&d, &d.column(2)).unwrap();
        assert_eq!(cut.left.len(), 6);
        assert_eq!(cut.right.len(), 6);
        assert!(cut.left.iter().all(|&v| d.coord(v)[0] < 2));
        assert!(split_by_cut(&d, &d.column(0)).is_err());
    }

    #[test]
    fn path_cut() {
        let d = sq(3, 1);
        let cut = split_by_cut(&d, &[1]).unwrap();
        assert_eq!(cut.left, vec![0]);
        assert_eq!(cut.right, vec![2]);
    }

    #[test]
    fn json_spec() {
        let spec: DomainSpec = serde_json::from_str(
            r#"{"lattice":"square","mask":[[1,1],[1,1]],"mesh":0.5,"marked":{"x":[0,-1]}}"#,
        )
        .unwrap();
        let d = spec.build().unwrap();
        assert_eq!(d.n_interior(), 4);
        assert_eq!(d.coord(d.marked("x").unwrap()), [0, -1]);
        assert_eq!(d.physical_position(3), [0.5, 0.5]);
    }
}
