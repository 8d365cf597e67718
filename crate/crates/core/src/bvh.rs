//! Bounding-volume hierarchy over boundary elements.
//!
//! Supports nearest-point queries and signed ray-crossing counts, which is
//! all the point classification and Hausdorff code needs.

use crate::mesh::{BoundaryMesh, Cells, Vec3};

const LEAF_SIZE: usize = 4;

#[derive(Clone, Copy, Debug)]
struct Node {
    lo: Vec3,
    hi: Vec3,
    /// Leaf: first index into `order`. Inner: index of the left child; the
    /// right child follows it.
    start: usize,
    /// Number of primitives in a leaf; zero marks an inner node.
    count: usize,
}

/// A triangle, or a segment stored with its end point repeated.
#[derive(Clone, Copy, Debug)]
pub struct Prim {
    pub p: [Vec3; 3],
}

#[derive(Clone, Debug)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<usize>,
    prims: Vec<Prim>,
    segments: bool,
}

/// Result of a nearest-point query.
#[derive(Clone, Copy, Debug)]
pub struct Nearest {
    pub distance: f64,
    pub element: usize,
    pub point: Vec3,
}

/// Outcome of a signed ray-crossing count.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Crossing {
    Winding(i64),
    /// The ray passed too close to an edge or vertex to be trusted.
    Ambiguous,
}

impl Bvh {
    pub fn new(mesh: &BoundaryMesh) -> Self {
        let v = mesh.vertices();
        let (prims, segments): (Vec<Prim>, bool) = match mesh.cells() {
            Cells::Segments(s) => {
                (s.iter().map(|&[a, b]| Prim { p: [v[a], v[b], v[b]] }).collect(), true)
            }
            Cells::Triangles(t) => {
                (t.iter().map(|&[a, b, c]| Prim { p: [v[a], v[b], v[c]] }).collect(), false)
            }
        };
        Self::from_prims(prims, segments)
    }

    fn from_prims(prims: Vec<Prim>, segments: bool) -> Self {
        let centroids: Vec<Vec3> = prims.iter().map(|p| (p.p[0] + p.p[1] + p.p[2]) / 3.0).collect();
        let mut order: Vec<usize> = (0..prims.len()).collect();
        let mut nodes = Vec::with_capacity(2 * prims.len() / LEAF_SIZE + 1);
        nodes.push(Node { lo: Vec3::zeros(), hi: Vec3::zeros(), start: 0, count: 0 });
        // explicit stack of (node index, range)
        let mut stack = vec![(0usize, 0usize, prims.len())];
        while let Some((ni, s, e)) = stack.pop() {
            let mut lo = Vec3::repeat(f64::INFINITY);
            let mut hi = Vec3::repeat(f64::NEG_INFINITY);
            let mut clo = lo;
            let mut chi = hi;
            for &i in &order[s..e] {
                for q in &prims[i].p {
                    lo = lo.inf(q);
                    hi = hi.sup(q);
                }
                clo = clo.inf(&centroids[i]);
                chi = chi.sup(&centroids[i]);
            }
            nodes[ni].lo = lo;
            nodes[ni].hi = hi;
            if e - s <= LEAF_SIZE {
                nodes[ni].start = s;
                nodes[ni].count = e - s;
                continue;
            }
            let ext = chi - clo;
            let axis = if ext.x >= ext.y && ext.x >= ext.z {
                0
            } else if ext.y >= ext.z {
                1
            } else {
                2
            };
            let mid = (s + e) / 2;
            order[s..e].select_nth_unstable_by(mid - s, |&a, &b| {
                centroids[a][axis].total_cmp(&centroids[b][axis])
            });
            let left = nodes.len();
            nodes.push(Node { lo, hi, start: 0, count: 0 });
            nodes.push(Node { lo, hi, start: 0, count: 0 });
            nodes[ni].start = left;
            nodes[ni].count = 0;
            stack.push((left, s, mid));
            stack.push((left + 1, mid, e));
        }
        Bvh { nodes, order, prims, segments }
    }

    pub fn len(&self) -> usize {
        self.prims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prims.is_empty()
    }

    pub fn prim(&self, i: usize) -> &Prim {
        &self.prims[i]
    }

    /// Closest point of element `i` to `q`.
    pub fn closest_on(&self, i: usize, q: &Vec3) -> Vec3 {
        let p = &self.prims[i].p;
        if self.segments {
            closest_on_segment(q, &p[0], &p[1])
        } else {
            closest_on_triangle(q, &p[0], &p[1], &p[2])
        }
    }

    /// Nearest boundary point to `q`.
    pub fn nearest(&self, q: &Vec3) -> Nearest {
        self.nearest_within(q, f64::INFINITY).expect("non-empty hierarchy")
    }

    /// Nearest boundary point if it is closer than `limit`.
    pub fn nearest_within(&self, q: &Vec3, limit: f64) -> Option<Nearest> {
        if self.prims.is_empty() {
            return None;
        }
        let mut best: Option<Nearest> = None;
        let mut best_d2 = if limit.is_finite() { limit * limit } else { f64::INFINITY };
        let mut stack = vec![(0usize, box_dist2(q, &self.nodes[0]))];
        while let Some((ni, d2)) = stack.pop() {
            if d2 >= best_d2 {
                continue;
            }
            let node = &self.nodes[ni];
            if node.count > 0 {
                for &i in &self.order[node.start..node.start + node.count] {
                    let c = self.closest_on(i, q);
                    let dd = (c - q).norm_squared();
                    if dd < best_d2 {
                        best_d2 = dd;
                        best = Some(Nearest { distance: dd.sqrt(), element: i, point: c });
                    }
                }
            } else {
                let (a, b) = (node.start, node.start + 1);
                let (da, db) = (box_dist2(q, &self.nodes[a]), box_dist2(q, &self.nodes[b]));
                // visit the nearer child first
                if da < db {
                    stack.push((b, db));
                    stack.push((a, da));
                } else {
                    stack.push((a, da));
                    stack.push((b, db));
                }
            }
        }
        best
    }

    /// Distance from `q` to the boundary.
    pub fn distance(&self, q: &Vec3) -> f64 {
        self.nearest(q).distance
    }

    /// Signed number of boundary crossings along a fixed ray from `q`,
    /// which equals the winding number when the ray is in general position.
    pub fn ray_winding(&self, q: &Vec3) -> Crossing {
        // irrational-ish direction keeps the ray away from axis-aligned features
        let d = if self.segments {
            Vec3::new(0.8191520442889918, 0.5735764363510461, 0.0)
        } else {
            Vec3::new(0.5773502691896258, 0.6123724356957946, 0.5400617248673217).normalize()
        };
        let inv = Vec3::new(1.0 / d.x, 1.0 / d.y, if d.z == 0.0 { f64::INFINITY } else { 1.0 / d.z });
        let mut total = 0i64;
        if self.prims.is_empty() {
            return Crossing::Winding(0);
        }
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if !ray_hits_box(q, &inv, node, self.segments) {
                continue;
            }
            if node.count > 0 {
                for &i in &self.order[node.start..node.start + node.count] {
                    let p = &self.prims[i].p;
                    let hit = if self.segments {
                        ray_segment(q, &d, &p[0], &p[1])
                    } else {
                        ray_triangle(q, &d, &p[0], &p[1], &p[2])
                    };
                    match hit {
                        Hit::Miss => {}
                        Hit::Signed(s) => total += s,
                        Hit::Ambiguous => return Crossing::Ambiguous,
                    }
                }
            } else {
                stack.push(node.start);
                stack.push(node.start + 1);
            }
        }
        Crossing::Winding(total)
    }
}

fn box_dist2(q: &Vec3, n: &Node) -> f64 {
    let mut d = 0.0;
    for k in 0..3 {
        let v = if q[k] < n.lo[k] {
            n.lo[k] - q[k]
        } else if q[k] > n.hi[k] {
            q[k] - n.hi[k]
        } else {
            0.0
        };
        d += v * v;
    }
    d
}

fn ray_hits_box(o: &Vec3, inv: &Vec3, n: &Node, planar: bool) -> bool {
    let mut t0 = 0.0f64;
    let mut t1 = f64::INFINITY;
    let axes = if planar { 2 } else { 3 };
    for k in 0..axes {
        // slightly padded box so grazing rays are not culled
        let pad = 1e-12 * (1.0 + n.hi[k].abs().max(n.lo[k].abs()));
        let a = (n.lo[k] - pad - o[k]) * inv[k];
        let b = (n.hi[k] + pad - o[k]) * inv[k];
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        t0 = t0.max(a);
        t1 = t1.min(b);
        if t0 > t1 {
            return false;
        }
    }
    true
}

enum Hit {
    Miss,
    Signed(i64),
    Ambiguous,
}

const RAY_EPS: f64 = 1e-10;

fn ray_triangle(o: &Vec3, d: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Hit {
    let e1 = b - a;
    let e2 = c - a;
    let pv = d.cross(&e2);
    let det = e1.dot(&pv);
    let scale = e1.norm() * e2.norm();
    if det.abs() <= 1e-14 * scale {
        // ray parallel to the plane: harmless unless it lies in it
        let n = e1.cross(&e2);
        return if (o - a).dot(&n).abs() <= 1e-12 * scale * (o - a).norm().max(1.0) {
            Hit::Ambiguous
        } else {
            Hit::Miss
        };
    }
    let inv = 1.0 / det;
    let tv = o - a;
    let u = tv.dot(&pv) * inv;
    let qv = tv.cross(&e1);
    let v = d.dot(&qv) * inv;
    let t = e2.dot(&qv) * inv;
    let w = 1.0 - u - v;
    let len = scale.sqrt();
    if u < -RAY_EPS || v < -RAY_EPS || w < -RAY_EPS || t < -RAY_EPS * len {
        return Hit::Miss;
    }
    if u < RAY_EPS || v < RAY_EPS || w < RAY_EPS || t.abs() < RAY_EPS * len {
        return Hit::Ambiguous;
    }
    // normal (b−a)×(c−a) points outward; leaving through a face counts +1
    Hit::Signed(if det < 0.0 { 1 } else { -1 })
}

fn ray_segment(o: &Vec3, d: &Vec3, a: &Vec3, b: &Vec3) -> Hit {
    let e = b - a;
    let den = d.x * e.y - d.y * e.x;
    let len = e.norm();
    if den.abs() <= 1e-14 * len {
        let w = o - a;
        return if (w.x * e.y - w.y * e.x).abs() <= 1e-12 * len * w.norm().max(1.0) {
            Hit::Ambiguous
        } else {
            Hit::Miss
        };
    }
    let w = a - o;
    // o + t d = a + s e
    let t = (w.x * e.y - w.y * e.x) / den;
    let s = (w.x * d.y - w.y * d.x) / den;
    if s < -RAY_EPS || s > 1.0 + RAY_EPS || t < -RAY_EPS * len {
        return Hit::Miss;
    }
    if s < RAY_EPS || s > 1.0 - RAY_EPS || t.abs() < RAY_EPS * len {
        return Hit::Ambiguous;
    }
    // outward normal of a ccw loop is (e.y, −e.x); leaving means d·n > 0
    Hit::Signed(if d.x * e.y - d.y * e.x > 0.0 { 1 } else { -1 })
}

pub fn closest_on_segment(q: &Vec3, a: &Vec3, b: &Vec3) -> Vec3 {
    let e = b - a;
    let l2 = e.norm_squared();
    if l2 == 0.0 {
        return *a;
    }
    let t = ((q - a).dot(&e) / l2).clamp(0.0, 1.0);
    a + e * t
}

/// Closest point on a triangle (Ericson, Real-Time Collision Detection 5.1.5).
pub fn closest_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::tests::unit_cube;

    #[test]
    fn nearest_on_cube() {
        let bvh = Bvh::new(&unit_cube());
        let n = bvh.nearest(&Vec3::new(0.5, 0.5, 3.0));
        assert!((n.distance - 2.0).abs() < 1e-14);
        let n = bvh.nearest(&Vec3::new(0.3, 0.4, 0.45));
        assert!((n.distance - 0.3).abs() < 1e-14);
        let n = bvh.nearest(&Vec3::new(2.0, 2.0, 2.0));
        assert!((n.distance - 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn ray_winding_cube() {
        let bvh = Bvh::new(&unit_cube());
        assert_eq!(bvh.ray_winding(&Vec3::new(0.31, 0.42, 0.53)), Crossing::Winding(1));
        assert_eq!(bvh.ray_winding(&Vec3::new(1.31, 0.42, 0.53)), Crossing::Winding(0));
        assert_eq!(bvh.ray_winding(&Vec3::new(-0.31, -0.42, -0.53)), Crossing::Winding(0));
    }

    #[test]
    fn ray_winding_square() {
        let sq = BoundaryMesh::polygon(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        let bvh = Bvh::new(&sq);
        assert_eq!(bvh.ray_winding(&Vec3::new(0.3, 0.6, 0.0)), Crossing::Winding(1));
        assert_eq!(bvh.ray_winding(&Vec3::new(-0.3, 0.6, 0.0)), Crossing::Winding(0));
        assert_eq!(bvh.ray_winding(&Vec3::new(0.3, -0.6, 0.0)), Crossing::Winding(0));
    }

    #[test]
    fn closest_triangle_regions() {
        let (a, b, c) = (Vec3::zeros(), Vec3::x(), Vec3::y());
        assert_eq!(closest_on_triangle(&Vec3::new(-1.0, -1.0, 0.0), &a, &b, &c), a);
        let p = closest_on_triangle(&Vec3::new(0.2, 0.2, 5.0), &a, &b, &c);
        assert!((p - Vec3::new(0.2, 0.2, 0.0)).norm() < 1e-15);
        let p = closest_on_triangle(&Vec3::new(1.0, 1.0, 0.0), &a, &b, &c);
        assert!((p - Vec3::new(0.5, 0.5, 0.0)).norm() < 1e-15);
    }
}
