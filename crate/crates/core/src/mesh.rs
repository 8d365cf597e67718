//! Closed oriented piecewise-linear boundaries.
//!
//! A [`BoundaryMesh`] is either a set of closed polygonal loops in the plane
//! (stored with `z = 0`) or a closed oriented triangle mesh in space. Outward
//! orientation means counter-clockwise loops in 2D and counter-clockwise
//! triangles seen from outside in 3D, so that the signed enclosed volume is
//! positive.

use std::collections::HashMap;
use std::fmt;

use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Ambient dimension `n + 1` of the domain; the boundary has dimension `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AmbientDim {
    Two,
    Three,
}

impl AmbientDim {
    /// Dimension `n` of the boundary.
    pub fn n(self) -> usize {
        match self {
            AmbientDim::Two => 1,
            AmbientDim::Three => 2,
        }
    }

    pub fn ambient(self) -> usize {
        self.n() + 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cells {
    Segments(Vec<[usize; 2]>),
    Triangles(Vec<[usize; 3]>),
}

impl Cells {
    pub fn len(&self) -> usize {
        match self {
            Cells::Segments(s) => s.len(),
            Cells::Triangles(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A violated [`BoundaryMesh`] invariant.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Defect {
    Empty,
    IndexOutOfRange { element: usize, index: usize },
    /// 2D vertex without exactly one incoming and one outgoing segment.
    OpenCurve { vertex: usize, incoming: usize, outgoing: usize },
    /// Edge used by a single triangle.
    OpenEdge { a: usize, b: usize },
    /// Edge not shared by exactly two oppositely traversed triangles.
    NonManifoldEdge { a: usize, b: usize, forward: usize, backward: usize },
    ZeroLengthEdge { element: usize, a: usize, b: usize },
    DegenerateTriangle { element: usize, area: f64 },
    UnusedVertex { vertex: usize },
    NonPositiveVolume { volume: f64 },
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Defect::Empty => write!(f, "mesh has no elements"),
            Defect::IndexOutOfRange { element, index } => {
                write!(f, "element {element} references missing vertex {index}")
            }
            Defect::OpenCurve { vertex, incoming, outgoing } => write!(
                f,
                "open curve at vertex {vertex} ({incoming} incoming, {outgoing} outgoing segments)"
            ),
            Defect::OpenEdge { a, b } => write!(f, "open edge ({a}, {b})"),
            Defect::NonManifoldEdge { a, b, forward, backward } => write!(
                f,
                "non-manifold edge ({a}, {b}): traversed {forward}x forward, {backward}x backward"
            ),
            Defect::ZeroLengthEdge { element, a, b } => {
                write!(f, "zero-length edge ({a}, {b}) in element {element}")
            }
            Defect::DegenerateTriangle { element, area } => {
                write!(f, "triangle {element} has area {area:e}")
            }
            Defect::UnusedVertex { vertex } => write!(f, "vertex {vertex} is not used"),
            Defect::NonPositiveVolume { volume } => {
                write!(f, "signed volume {volume:e} is not positive")
            }
        }
    }
}

/// Closed oriented boundary of a bounded domain.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryMesh {
    dim: AmbientDim,
    vertices: Vec<Vec3>,
    cells: Cells,
}

impl BoundaryMesh {
    /// Planar curve from vertices and directed segments. Vertices must have `z = 0`.
    pub fn curve(vertices: Vec<Vec3>, segments: Vec<[usize; 2]>) -> Self {
        BoundaryMesh { dim: AmbientDim::Two, vertices, cells: Cells::Segments(segments) }
    }

    /// Planar curve made of closed loops given as `[x, y]` vertex lists.
    pub fn from_loops(loops: &[Vec<[f64; 2]>]) -> Self {
        let mut vertices = Vec::new();
        let mut segments = Vec::new();
        for lp in loops {
            let base = vertices.len();
            let m = lp.len();
            vertices.extend(lp.iter().map(|p| Vec3::new(p[0], p[1], 0.0)));
            segments.extend((0..m).map(|i| [base + i, base + (i + 1) % m]));
        }
        Self::curve(vertices, segments)
    }

    /// Single closed polygon.
    pub fn polygon(points: &[[f64; 2]]) -> Self {
        Self::from_loops(&[points.to_vec()])
    }

    pub fn triangles(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Self {
        BoundaryMesh { dim: AmbientDim::Three, vertices, cells: Cells::Triangles(triangles) }
    }

    pub fn dim(&self) -> AmbientDim {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn cells(&self) -> &Cells {
        &self.cells
    }

    pub fn segments(&self) -> &[[usize; 2]] {
        match &self.cells {
            Cells::Segments(s) => s,
            Cells::Triangles(_) => &[],
        }
    }

    pub fn tris(&self) -> &[[usize; 3]] {
        match &self.cells {
            Cells::Triangles(t) => t,
            Cells::Segments(_) => &[],
        }
    }

    pub fn num_elements(&self) -> usize {
        self.cells.len()
    }

    /// Vertex positions of element `e` (2 for segments, 3 for triangles).
    pub fn element_points(&self, e: usize) -> ElementPoints {
        match &self.cells {
            Cells::Segments(s) => {
                let [a, b] = s[e];
                ElementPoints::Segment([self.vertices[a], self.vertices[b]])
            }
            Cells::Triangles(t) => {
                let [a, b, c] = t[e];
                ElementPoints::Triangle([self.vertices[a], self.vertices[b], self.vertices[c]])
            }
        }
    }

    /// Length (2D) or area (3D) of element `e`.
    pub fn element_measure(&self, e: usize) -> f64 {
        self.element_points(e).measure()
    }

    pub fn element_centroid(&self, e: usize) -> Vec3 {
        self.element_points(e).centroid()
    }

    /// Unnormalized outward normal: length-weighted in 2D, twice-area-weighted in 3D.
    pub fn element_normal(&self, e: usize) -> Vec3 {
        self.element_points(e).normal()
    }

    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        if self.vertices.is_empty() {
            0.0
        } else {
            (hi - lo).norm()
        }
    }

    /// Returns the mesh with every vertex mapped by `f`; connectivity is kept.
    pub fn map_vertices(&self, f: impl Fn(&Vec3) -> Vec3) -> Self {
        BoundaryMesh {
            dim: self.dim,
            vertices: self.vertices.iter().map(f).collect(),
            cells: self.cells.clone(),
        }
    }

    pub fn translated(&self, t: &Vec3) -> Self {
        self.map_vertices(|v| v + t)
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map_vertices(|v| v * s)
    }

    /// Applies a rotation followed by a translation. In 2D only rotations
    /// about the z axis keep the curve planar; the caller is responsible.
    pub fn rigid_motion(&self, rot: &Rotation3<f64>, t: &Vec3) -> Self {
        self.map_vertices(|v| rot * v + t)
    }

    /// Reverses the orientation of every element.
    pub fn reversed(&self) -> Self {
        let cells = match &self.cells {
            Cells::Segments(s) => Cells::Segments(s.iter().map(|&[a, b]| [b, a]).collect()),
            Cells::Triangles(t) => Cells::Triangles(t.iter().map(|&[a, b, c]| [a, c, b]).collect()),
        };
        BoundaryMesh { dim: self.dim, vertices: self.vertices.clone(), cells }
    }

    /// Concatenates meshes of the same dimension.
    pub fn concat(parts: &[BoundaryMesh]) -> Result<Self> {
        let Some(first) = parts.first() else {
            return Err(Error::invalid("cannot concatenate zero meshes"));
        };
        let dim = first.dim;
        let mut vertices = Vec::new();
        let mut segs = Vec::new();
        let mut tris = Vec::new();
        for p in parts {
            if p.dim != dim {
                return Err(Error::invalid("cannot concatenate meshes of different dimension"));
            }
            let base = vertices.len();
            vertices.extend_from_slice(&p.vertices);
            match &p.cells {
                Cells::Segments(s) => segs.extend(s.iter().map(|&[a, b]| [a + base, b + base])),
                Cells::Triangles(t) => {
                    tris.extend(t.iter().map(|&[a, b, c]| [a + base, b + base, c + base]))
                }
            }
        }
        let cells = match dim {
            AmbientDim::Two => Cells::Segments(segs),
            AmbientDim::Three => Cells::Triangles(tris),
        };
        Ok(BoundaryMesh { dim, vertices, cells })
    }

    /// Drops vertices no element references and renumbers the rest.
    pub fn compacted(&self) -> Self {
        let mut map = vec![usize::MAX; self.vertices.len()];
        let mut vertices = Vec::new();
        let mut remap = |i: usize, vertices: &mut Vec<Vec3>| {
            if map[i] == usize::MAX {
                map[i] = vertices.len();
                vertices.push(self.vertices[i]);
            }
            map[i]
        };
        let cells = match &self.cells {
            Cells::Segments(s) => Cells::Segments(
                s.iter()
                    .map(|&[a, b]| [remap(a, &mut vertices), remap(b, &mut vertices)])
                    .collect(),
            ),
            Cells::Triangles(t) => Cells::Triangles(
                t.iter()
                    .map(|&[a, b, c]| {
                        [remap(a, &mut vertices), remap(b, &mut vertices), remap(c, &mut vertices)]
                    })
                    .collect(),
            ),
        };
        BoundaryMesh { dim: self.dim, vertices, cells }
    }

    /// Number of connected components of the boundary (union-find over
    /// vertices joined by elements).
    pub fn component_count(&self) -> usize {
        self.component_labels().1
    }

    /// Component label per element and the number of components.
    pub fn component_labels(&self) -> (Vec<usize>, usize) {
        let mut uf = UnionFind::new(self.vertices.len());
        let first_vertex: Vec<usize> = match &self.cells {
            Cells::Segments(s) => s
                .iter()
                .map(|&[a, b]| {
                    uf.union(a, b);
                    a
                })
                .collect(),
            Cells::Triangles(t) => t
                .iter()
                .map(|&[a, b, c]| {
                    uf.union(a, b);
                    uf.union(b, c);
                    a
                })
                .collect(),
        };
        let mut ids = HashMap::new();
        let labels = first_vertex
            .iter()
            .map(|&v| {
                let root = uf.find(v);
                let next = ids.len();
                *ids.entry(root).or_insert(next)
            })
            .collect();
        (labels, ids.len())
    }

    /// Splits the boundary into its connected components.
    pub fn components(&self) -> Vec<BoundaryMesh> {
        let (labels, count) = self.component_labels();
        let mut parts: Vec<Cells> = (0..count)
            .map(|_| match self.dim {
                AmbientDim::Two => Cells::Segments(Vec::new()),
                AmbientDim::Three => Cells::Triangles(Vec::new()),
            })
            .collect();
        for (e, &l) in labels.iter().enumerate() {
            match (&mut parts[l], &self.cells) {
                (Cells::Segments(dst), Cells::Segments(src)) => dst.push(src[e]),
                (Cells::Triangles(dst), Cells::Triangles(src)) => dst.push(src[e]),
                _ => unreachable!(),
            }
        }
        parts
            .into_iter()
            .map(|cells| {
                BoundaryMesh { dim: self.dim, vertices: self.vertices.clone(), cells }.compacted()
            })
            .collect()
    }

    /// Checks every invariant; an empty list means the mesh is valid.
    pub fn validate(&self) -> Vec<Defect> {
        let mut defects = Vec::new();
        if self.cells.is_empty() {
            defects.push(Defect::Empty);
            return defects;
        }
        let nv = self.vertices.len();
        let diag = self.bbox_diagonal();
        let len_tol = 1e-14 * diag;
        let area_tol = 1e-14 * diag * diag;
        let mut used = vec![false; nv];

        match &self.cells {
            Cells::Segments(segs) => {
                let mut incoming = vec![0usize; nv];
                let mut outgoing = vec![0usize; nv];
                for (e, &[a, b]) in segs.iter().enumerate() {
                    if a >= nv || b >= nv {
                        defects.push(Defect::IndexOutOfRange { element: e, index: a.max(b) });
                        continue;
                    }
                    used[a] = true;
                    used[b] = true;
                    outgoing[a] += 1;
                    incoming[b] += 1;
                    if (self.vertices[a] - self.vertices[b]).norm() <= len_tol {
                        defects.push(Defect::ZeroLengthEdge { element: e, a, b });
                    }
                }
                for v in 0..nv {
                    if !used[v] {
                        defects.push(Defect::UnusedVertex { vertex: v });
                    } else if incoming[v] != 1 || outgoing[v] != 1 {
                        defects.push(Defect::OpenCurve {
                            vertex: v,
                            incoming: incoming[v],
                            outgoing: outgoing[v],
                        });
                    }
                }
            }
            Cells::Triangles(tris) => {
                // directed edge counts keyed by the undirected pair (min, max)
                let mut edges: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
                for (e, &[a, b, c]) in tris.iter().enumerate() {
                    if a >= nv || b >= nv || c >= nv {
                        defects.push(Defect::IndexOutOfRange { element: e, index: a.max(b).max(c) });
                        continue;
                    }
                    for &(i, j) in &[(a, b), (b, c), (c, a)] {
                        used[i] = true;
                        let entry = edges.entry((i.min(j), i.max(j))).or_insert((0, 0));
                        if i < j {
                            entry.0 += 1;
                        } else {
                            entry.1 += 1;
                        }
                        if (self.vertices[i] - self.vertices[j]).norm() <= len_tol {
                            defects.push(Defect::ZeroLengthEdge { element: e, a: i, b: j });
                        }
                    }
                    let area = self.element_measure(e);
                    if area <= area_tol {
                        defects.push(Defect::DegenerateTriangle { element: e, area });
                    }
                }
                let mut keys: Vec<_> = edges.into_iter().collect();
                keys.sort_unstable_by_key(|(k, _)| *k);
                for ((a, b), (forward, backward)) in keys {
                    match (forward, backward) {
                        (1, 1) => {}
                        (1, 0) | (0, 1) => defects.push(Defect::OpenEdge { a, b }),
                        _ => defects.push(Defect::NonManifoldEdge { a, b, forward, backward }),
                    }
                }
                for (v, &u) in used.iter().enumerate() {
                    if !u {
                        defects.push(Defect::UnusedVertex { vertex: v });
                    }
                }
            }
        }

        if defects.is_empty() {
            let volume = crate::geometry::signed_volume(self);
            if volume <= 0.0 {
                defects.push(Defect::NonPositiveVolume { volume });
            }
        }
        defects
    }

    /// `Ok(())` when [`validate`](Self::validate) finds nothing.
    pub fn ensure_valid(&self) -> Result<()> {
        let defects = self.validate();
        if defects.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidMesh(defects))
        }
    }
}

/// Vertex positions of one element.
#[derive(Clone, Copy, Debug)]
pub enum ElementPoints {
    Segment([Vec3; 2]),
    Triangle([Vec3; 3]),
}

impl ElementPoints {
    pub fn measure(&self) -> f64 {
        match self {
            ElementPoints::Segment([a, b]) => (b - a).norm(),
            ElementPoints::Triangle([a, b, c]) => 0.5 * (b - a).cross(&(c - a)).norm(),
        }
    }

    pub fn centroid(&self) -> Vec3 {
        match self {
            ElementPoints::Segment([a, b]) => (a + b) * 0.5,
            ElementPoints::Triangle([a, b, c]) => (a + b + c) / 3.0,
        }
    }

    pub fn normal(&self) -> Vec3 {
        match self {
            ElementPoints::Segment([a, b]) => {
                let d = b - a;
                Vec3::new(d.y, -d.x, 0.0)
            }
            ElementPoints::Triangle([a, b, c]) => (b - a).cross(&(c - a)),
        }
    }

    pub fn points(&self) -> &[Vec3] {
        match self {
            ElementPoints::Segment(p) => p,
            ElementPoints::Triangle(p) => p,
        }
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), rank: vec![0; n] }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn unit_cube() -> BoundaryMesh {
        let v: Vec<Vec3> = (0..8)
            .map(|i| Vec3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64))
            .collect();
        // outward, counter-clockwise seen from outside
        let t = vec![
            [0, 2, 1], [1, 2, 3], // z = 0
            [4, 5, 6], [5, 7, 6], // z = 1
            [0, 1, 4], [1, 5, 4], // y = 0
            [2, 6, 3], [3, 6, 7], // y = 1
            [0, 4, 2], [2, 4, 6], // x = 0
            [1, 3, 5], [3, 7, 5], // x = 1
        ];
        BoundaryMesh::triangles(v, t)
    }

    #[test]
    fn cube_is_valid() {
        assert_eq!(unit_cube().validate(), vec![]);
    }

    #[test]
    fn flipped_cube_triangle_gives_three_edge_defects() {
        let cube = unit_cube();
        let mut t = cube.tris().to_vec();
        t[3] = [t[3][0], t[3][2], t[3][1]];
        let flipped = BoundaryMesh::triangles(cube.vertices().to_vec(), t);
        let defects = flipped.validate();
        assert_eq!(defects.len(), 3, "{defects:?}");
        assert!(defects.iter().all(|d| matches!(d, Defect::NonManifoldEdge { .. })));
    }

    #[test]
    fn open_square_polyline() {
        let v = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ];
        let open = BoundaryMesh::curve(v, vec![[0, 1], [1, 2], [2, 3]]);
        let defects = open.validate();
        assert_eq!(defects.len(), 2);
        assert!(matches!(defects[0], Defect::OpenCurve { vertex: 0, .. }));
        assert!(matches!(defects[1], Defect::OpenCurve { vertex: 3, .. }));
    }

    #[test]
    fn clockwise_square_has_negative_volume() {
        let sq = BoundaryMesh::polygon(&[[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]);
        assert!(matches!(sq.validate()[..], [Defect::NonPositiveVolume { .. }]));
    }

    #[test]
    fn out_of_range_and_degenerate() {
        let v = vec![Vec3::zeros(), Vec3::x(), Vec3::new(2.0, 0.0, 0.0)];
        let m = BoundaryMesh::triangles(v, vec![[0, 1, 2], [0, 1, 7]]);
        let d = m.validate();
        assert!(d.iter().any(|d| matches!(d, Defect::IndexOutOfRange { element: 1, index: 7 })));
        assert!(d.iter().any(|d| matches!(d, Defect::DegenerateTriangle { element: 0, .. })));
    }

    #[test]
    fn components_of_two_cubes() {
        let a = unit_cube();
        let b = a.translated(&Vec3::new(3.0, 0.0, 0.0));
        let both = BoundaryMesh::concat(&[a, b]).unwrap();
        assert_eq!(both.component_count(), 2);
        let parts = both.components();
        assert_eq!(parts.len(), 2);
        assert!(parts.iter().all(|p| p.validate().is_empty()));
    }
}
