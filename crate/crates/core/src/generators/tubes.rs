//! Balls with thin tubes: attached spikes and free capsules.
//!
//! A tube of radius ε around a segment is a cylinder closed by a
//! hemispherical cap. Where it meets the ball, the sphere triangles near the
//! foot are removed and the hole boundary is stitched to the ring in which
//! the cylinder meets the exact sphere.

use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::sphere::{icosphere, orient_piece, zip_rings};
use crate::bvh::closest_on_triangle;
use crate::error::{Error, Result};
use crate::mesh::{BoundaryMesh, Vec3};

/// A forest of segments thickened into tubes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeSpec {
    pub segments: Vec<[[f64; 3]; 2]>,
    pub tube_radius: f64,
    pub attach_to_ball: bool,
}

impl TreeSpec {
    /// Total length `H¹(T)` of the segments.
    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|[a, b]| (Vec3::from(*b) - Vec3::from(*a)).norm()).sum()
    }

    /// Segments as vertex lists, suitable as extra model points.
    pub fn polyline_points(&self, spacing: f64) -> Vec<Vec3> {
        let mut out = Vec::new();
        for [a, b] in &self.segments {
            let (a, b) = (Vec3::from(*a), Vec3::from(*b));
            let n = ((b - a).norm() / spacing).ceil().max(1.0) as usize;
            out.extend((0..=n).map(|k| a + (b - a) * (k as f64 / n as f64)));
        }
        out
    }
}

/// Number of vertices on each tube ring at a given icosphere level.
pub fn ring_resolution(level: u32) -> usize {
    16usize.max(1usize << level.min(20))
}

/// Ball of radius `ball_radius` at the origin together with ε-tubes around
/// the tree's segments.
///
/// Attached segments must start inside or on the ball and leave it within
/// 60° of the surface normal; free segments must keep a clearance of 2ε from
/// the ball and from each other. Segments meeting at a common interior
/// point (branching junctions) are not supported.
pub fn tube_tree_domain(ball_radius: f64, tree: &TreeSpec, level: u32) -> Result<BoundaryMesh> {
    let ball = icosphere(Vec3::zeros(), ball_radius, level)?;
    if tree.segments.is_empty() {
        return Ok(ball);
    }
    let eps = tree.tube_radius;
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("tube radius must be positive, got {eps}")));
    }
    let m = ring_resolution(level);
    let r0 = ball_radius;

    let mut attached = Vec::new();
    let mut free = Vec::new();
    for (k, [a, b]) in tree.segments.iter().enumerate() {
        let (a, b) = (Vec3::from(*a), Vec3::from(*b));
        let (ra, rb) = (a.norm(), b.norm());
        let touches = ra.min(rb) <= r0 * (1.0 + 1e-9);
        if touches {
            if !tree.attach_to_ball {
                return Err(Error::invalid(format!("segment {k} touches the ball but attach_to_ball is false")));
            }
            let (inner, outer) = if ra <= rb { (a, b) } else { (b, a) };
            if outer.norm() <= r0 + 2.0 * eps {
                return Err(Error::invalid(format!("segment {k} does not leave the ball by more than 2ε")));
            }
            let dir = (outer - inner).normalize();
            // exit point of the line inner + t·dir
            let wa = inner.dot(&dir);
            let t = -wa + (wa * wa - inner.norm_squared() + r0 * r0).max(0.0).sqrt();
            let foot = inner + dir * t;
            let cos = dir.dot(&foot.normalize());
            if cos < 0.5 {
                return Err(Error::Unsupported(format!(
                    "segment {k} meets the sphere at {:.1}° from the normal; at most 60° is supported",
                    cos.clamp(-1.0, 1.0).acos().to_degrees()
                )));
            }
            attached.push((k, foot, outer, cos));
        } else {
            if tree.attach_to_ball {
                return Err(Error::Unsupported(format!(
                    "segment {k} is not attached to the ball; branching trees are not supported"
                )));
            }
            free.push((k, a, b));
        }
    }

    // clearance between tubes and between free tubes and the ball
    let segs: Vec<(usize, Vec3, Vec3)> = attached
        .iter()
        .map(|&(k, f, o, _)| (k, f, o))
        .chain(free.iter().copied())
        .collect();
    for i in 0..segs.len() {
        for j in i + 1..segs.len() {
            let d = segment_distance(&segs[i].1, &segs[i].2, &segs[j].1, &segs[j].2);
            if d < 3.0 * eps {
                return Err(Error::invalid(format!(
                    "tubes around segments {} and {} overlap (axis distance {d:.3e} < 3ε)",
                    segs[i].0, segs[j].0
                )));
            }
        }
    }
    for &(k, a, b) in &free {
        let d = point_segment_distance(&Vec3::zeros(), &a, &b);
        if d < r0 + 2.0 * eps {
            return Err(Error::invalid(format!("free tube {k} overlaps the ball")));
        }
    }

    let mut vertices: Vec<Vec3> = ball.vertices().to_vec();
    let mut tris: Vec<[usize; 3]> = ball.tris().to_vec();
    let mut removed = vec![false; tris.len()];
    let mut faces: Vec<[usize; 3]> = Vec::new();

    for &(k, foot, outer, cos) in &attached {
        let dir = (outer - foot).normalize();
        let (e1, e2) = frame(&dir);
        let cut = cut_region(&vertices, &tris, &removed, &foot, 1.5 * eps / cos)
            .map_err(|msg| Error::Unsupported(format!("segment {k}: {msg}")))?;
        for &t in &cut.triangles {
            removed[t] = true;
        }
        let angle = |p: &Vec3| {
            let d = p - foot;
            d.dot(&e2).atan2(d.dot(&e1))
        };
        let hole: Vec<(f64, usize)> = cut.boundary.iter().map(|&v| (angle(&vertices[v]), v)).collect();
        let hole = sorted_ring(hole).ok_or_else(|| {
            Error::Unsupported(format!("segment {k}: hole boundary is not star-shaped about the foot"))
        })?;

        // ring where the cylinder meets the exact sphere
        let on_sphere = |th: f64| -> (Vec3, f64) {
            let b = foot + (e1 * th.cos() + e2 * th.sin()) * eps;
            let wa = b.dot(&dir);
            let t = -wa + (wa * wa - b.norm_squared() + r0 * r0).max(0.0).sqrt();
            (b + dir * t, t)
        };
        let length = (outer - foot).norm();
        let mut band = Vec::new();
        let ring0: Vec<(f64, usize)> = (0..m)
            .map(|i| {
                let th = 2.0 * PI * i as f64 / m as f64;
                vertices.push(on_sphere(th).0);
                (th, vertices.len() - 1)
            })
            .collect();
        zip_rings(&hole, &ring0, &mut band);
        orient_piece(&vertices, &mut band, |x| *x);
        faces.extend(band);

        let mut tube = Vec::new();
        let top = tube_body(&mut vertices, &mut tube, &ring0, m, eps, |th, s| {
            let (p, t0) = on_sphere(th);
            p + dir * ((length - t0) * s)
        }, length, 0);
        let rows = top.1;
        cap(&mut vertices, &mut tube, &top.0, m, eps, &outer, &dir, &e1, &e2, rows, false);
        orient_piece(&vertices, &mut tube, |x| x - closest_on_segment(x, &foot, &outer));
        faces.extend(tube);
    }

    for &(_, a, b) in &free {
        let dir = (b - a).normalize();
        let (e1, e2) = frame(&dir);
        let length = (b - a).norm();
        let mut piece = Vec::new();
        let ring0: Vec<(f64, usize)> = (0..m)
            .map(|i| {
                let th = 2.0 * PI * i as f64 / m as f64;
                vertices.push(a + (e1 * th.cos() + e2 * th.sin()) * eps);
                (th, vertices.len() - 1)
            })
            .collect();
        cap(&mut vertices, &mut piece, &ring0, m, eps, &a, &(-dir), &e1, &e2, 0, true);
        let top = tube_body(&mut vertices, &mut piece, &ring0, m, eps, |th, s| {
            a + (e1 * th.cos() + e2 * th.sin()) * eps + dir * (length * s)
        }, length, 0);
        cap(&mut vertices, &mut piece, &top.0, m, eps, &b, &dir, &e1, &e2, top.1, false);
        orient_piece(&vertices, &mut piece, |x| x - closest_on_segment(x, &a, &b));
        faces.extend(piece);
    }

    tris = tris.into_iter().zip(&removed).filter(|(_, r)| !**r).map(|(t, _)| t).collect();
    tris.extend(faces);
    let mesh = BoundaryMesh::triangles(vertices, tris).compacted();
    let defects = mesh.validate();
    if !defects.is_empty() {
        return Err(Error::InvalidMesh(defects));
    }
    Ok(mesh)
}

/// Ball with `directions.len()` radial spikes of length `height` and radius `eps`.
pub fn spiky_ball(
    ball_radius: f64,
    directions: &[Vec3],
    height: f64,
    eps: f64,
    level: u32,
) -> Result<BoundaryMesh> {
    if height == 0.0 || directions.is_empty() {
        return icosphere(Vec3::zeros(), ball_radius, level);
    }
    if !(height > 0.0) {
        return Err(Error::invalid(format!("spike height must be non-negative, got {height}")));
    }
    let segments = directions
        .iter()
        .map(|d| {
            let d = d.normalize();
            [(d * ball_radius).into(), (d * (ball_radius + height)).into()]
        })
        .collect();
    tube_tree_domain(ball_radius, &TreeSpec { segments, tube_radius: eps, attach_to_ball: true }, level)
}

/// Cylinder rows above `ring0`, twisted by half a step on alternate rows.
/// `at(θ, s)` maps an angle and a fraction `s ∈ [0, 1]` of the length to
/// a point. Returns the top ring and the number of rows.
fn tube_body(
    vertices: &mut Vec<Vec3>,
    faces: &mut Vec<[usize; 3]>,
    ring0: &[(f64, usize)],
    m: usize,
    eps: f64,
    at: impl Fn(f64, f64) -> Vec3,
    length: f64,
    row0: usize,
) -> (Vec<(f64, usize)>, usize) {
    let spacing = 2.0 * PI * eps / m as f64 * 0.75f64.sqrt();
    let rows = ((length / spacing).ceil() as usize).max(1);
    let mut prev = ring0.to_vec();
    for j in 1..=rows {
        let phase = if (row0 + j) % 2 == 1 { PI / m as f64 } else { 0.0 };
        let s = j as f64 / rows as f64;
        let ring: Vec<(f64, usize)> = (0..m)
            .map(|i| {
                let th = phase + 2.0 * PI * i as f64 / m as f64;
                vertices.push(at(th, s));
                (th, vertices.len() - 1)
            })
            .collect();
        zip_rings(&prev, &ring, faces);
        prev = ring;
    }
    (prev, rows)
}

/// Hemispherical cap of radius `eps` centered at `center`, bulging along
/// `dir`, attached to `base` (a ring of radius `eps` in the plane through
/// `center` normal to `dir`). `below` marks a cap on the far side of the
/// body from the direction rings are stacked, which reverses the zipping so
/// orientation stays consistent with the body.
#[allow(clippy::too_many_arguments)]
fn cap(
    vertices: &mut Vec<Vec3>,
    faces: &mut Vec<[usize; 3]>,
    base: &[(f64, usize)],
    m: usize,
    eps: f64,
    center: &Vec3,
    dir: &Vec3,
    e1: &Vec3,
    e2: &Vec3,
    row0: usize,
    below: bool,
) {
    let spacing = 2.0 * PI * eps / m as f64 * 0.75f64.sqrt();
    let rows = ((0.5 * PI * eps / spacing).round() as usize).max(2);
    let mut prev = base.to_vec();
    for k in 1..rows {
        let phi = 0.5 * PI * k as f64 / rows as f64;
        let count = ((m as f64 * phi.cos()).round() as usize).max(6);
        let phase = if (row0 + k) % 2 == 1 { PI / count as f64 } else { 0.0 };
        let ring: Vec<(f64, usize)> = (0..count)
            .map(|i| {
                let th = phase + 2.0 * PI * i as f64 / count as f64;
                let p = center
                    + (e1 * th.cos() + e2 * th.sin()) * (eps * phi.cos())
                    + dir * (eps * phi.sin());
                vertices.push(p);
                (th, vertices.len() - 1)
            })
            .collect();
        if below {
            zip_rings(&ring, &prev, faces);
        } else {
            zip_rings(&prev, &ring, faces);
        }
        prev = ring;
    }
    vertices.push(center + dir * eps);
    let apex = [(0.0, vertices.len() - 1)];
    if below {
        zip_rings(&apex, &prev, faces);
    } else {
        zip_rings(&prev, &apex, faces);
    }
}

struct Cut {
    triangles: Vec<usize>,
    /// Boundary vertex loop of the removed region.
    boundary: Vec<usize>,
}

/// Triangles within `radius` of `foot`, grown until their union is a disk
/// (single boundary loop without pinch vertices).
fn cut_region(
    v: &[Vec3],
    tris: &[[usize; 3]],
    removed: &[bool],
    foot: &Vec3,
    radius: f64,
) -> std::result::Result<Cut, String> {
    let mut set: HashSet<usize> = (0..tris.len())
        .filter(|&t| {
            let [a, b, c] = tris[t];
            (closest_on_triangle(foot, &v[a], &v[b], &v[c]) - foot).norm() < radius
        })
        .collect();
    if set.is_empty() {
        return Err("no sphere triangle near the foot".into());
    }
    let mut vertex_tris: HashMap<usize, Vec<usize>> = HashMap::new();
    for (t, tri) in tris.iter().enumerate() {
        for &x in tri {
            vertex_tris.entry(x).or_default().push(t);
        }
    }
    for _ in 0..16 {
        if set.iter().any(|&t| removed[t]) {
            return Err("hole overlaps a neighboring tube".into());
        }
        let mut half: HashMap<(usize, usize), usize> = HashMap::new();
        for &t in &set {
            let [a, b, c] = tris[t];
            for (i, j) in [(a, b), (b, c), (c, a)] {
                half.insert((i, j), t);
            }
        }
        // boundary edges: directed edges whose reverse is not in the set
        let mut next: HashMap<usize, Vec<usize>> = HashMap::new();
        for &(i, j) in half.keys() {
            if !half.contains_key(&(j, i)) {
                next.entry(i).or_default().push(j);
            }
        }
        let pinches: Vec<usize> = next.iter().filter(|(_, o)| o.len() > 1).map(|(&k, _)| k).collect();
        // interior vertices of the region whose fan is incomplete also pinch
        if !pinches.is_empty() {
            for p in pinches {
                set.extend(vertex_tris[&p].iter().copied());
            }
            continue;
        }
        let start = *next.keys().min().ok_or("empty hole boundary")?;
        let mut boundary = vec![start];
        let mut cur = next[&start][0];
        while cur != start {
            boundary.push(cur);
            if boundary.len() > next.len() {
                return Err("hole boundary does not close".into());
            }
            cur = next[&cur][0];
        }
        if boundary.len() != next.len() {
            // several loops: the region has holes; fill by growing
            let on_loop: HashSet<usize> = boundary.iter().copied().collect();
            let extra: Vec<usize> = next.keys().filter(|k| !on_loop.contains(k)).copied().collect();
            for p in extra {
                set.extend(vertex_tris[&p].iter().copied());
            }
            continue;
        }
        let mut triangles: Vec<usize> = set.into_iter().collect();
        triangles.sort_unstable();
        return Ok(Cut { triangles, boundary });
    }
    Err("could not grow the hole into a disk".into())
}

/// Sorts a loop by angle and checks that this is a cyclic rotation of the
/// loop order (in either direction).
fn sorted_ring(ring: Vec<(f64, usize)>) -> Option<Vec<(f64, usize)>> {
    let n = ring.len();
    let mut sorted = ring.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let pos: HashMap<usize, usize> = sorted.iter().enumerate().map(|(i, x)| (x.1, i)).collect();
    let steps: Vec<usize> = (0..n).map(|i| (pos[&ring[(i + 1) % n].1] + n - pos[&ring[i].1]) % n).collect();
    if steps.iter().all(|&s| s == 1) || steps.iter().all(|&s| s == n - 1) {
        Some(sorted)
    } else {
        None
    }
}

fn frame(dir: &Vec3) -> (Vec3, Vec3) {
    let helper = if dir.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = dir.cross(&helper).normalize();
    let e2 = dir.cross(&e1);
    (e1, e2)
}

fn closest_on_segment(x: &Vec3, a: &Vec3, b: &Vec3) -> Vec3 {
    crate::bvh::closest_on_segment(x, a, b)
}

fn point_segment_distance(x: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    (closest_on_segment(x, a, b) - x).norm()
}

/// Distance between two segments (Ericson 5.1.9).
pub(crate) fn segment_distance(p1: &Vec3, q1: &Vec3, p2: &Vec3, q2: &Vec3) -> f64 {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let (a, e, f) = (d1.norm_squared(), d2.norm_squared(), d2.dot(&r));
    let (s, t);
    if a <= f64::EPSILON && e <= f64::EPSILON {
        return r.norm();
    }
    if a <= f64::EPSILON {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= f64::EPSILON {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 0.0 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    ((p1 + d1 * s) - (p2 + d2 * t)).norm()
}
