//! Sphere meshes and radial graphs over them.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mesh::{BoundaryMesh, Vec3};

pub const MAX_ICOSPHERE_LEVEL: u32 = 8;

fn icosahedron_unit() -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, t, 0.0], [1.0, t, 0.0], [-1.0, -t, 0.0], [1.0, -t, 0.0],
        [0.0, -1.0, t], [0.0, 1.0, t], [0.0, -1.0, -t], [0.0, 1.0, -t],
        [t, 0.0, -1.0], [t, 0.0, 1.0], [-t, 0.0, -1.0], [-t, 0.0, 1.0],
    ];
    let v = raw.iter().map(|p| Vec3::from(*p).normalize()).collect();
    let f = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    (v, f)
}

/// Unit-sphere vertex directions and faces of the level-`level` icosphere.
pub fn unit_icosphere(level: u32) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    if level > MAX_ICOSPHERE_LEVEL {
        return Err(Error::invalid(format!(
            "icosphere level {level} exceeds the maximum of {MAX_ICOSPHERE_LEVEL}"
        )));
    }
    let (mut v, mut f) = icosahedron_unit();
    for _ in 0..level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::with_capacity(f.len() * 3 / 2);
        let mut next = Vec::with_capacity(f.len() * 4);
        let mut midpoint = |a: usize, b: usize, v: &mut Vec<Vec3>| {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                v.push(((v[a] + v[b]) * 0.5).normalize());
                v.len() - 1
            })
        };
        for &[a, b, c] in &f {
            let ab = midpoint(a, b, &mut v);
            let bc = midpoint(b, c, &mut v);
            let ca = midpoint(c, a, &mut v);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        f = next;
    }
    Ok((v, f))
}

/// Subdivided icosahedron projected onto the sphere `S_center(radius)`.
pub fn icosphere(center: Vec3, radius: f64, level: u32) -> Result<BoundaryMesh> {
    if !(radius > 0.0) {
        return Err(Error::invalid(format!("sphere radius must be positive, got {radius}")));
    }
    let (v, f) = unit_icosphere(level)?;
    Ok(BoundaryMesh::triangles(v.into_iter().map(|d| center + d * radius).collect(), f))
}

/// Axis-aligned ellipsoid: the level-`level` icosphere scaled by `axes`.
pub fn ellipsoid(center: Vec3, axes: [f64; 3], level: u32) -> Result<BoundaryMesh> {
    if axes.iter().any(|a| !(*a > 0.0)) {
        return Err(Error::invalid(format!("ellipsoid axes must be positive, got {axes:?}")));
    }
    let (v, f) = unit_icosphere(level)?;
    let v = v
        .into_iter()
        .map(|d| center + Vec3::new(d.x * axes[0], d.y * axes[1], d.z * axes[2]))
        .collect();
    Ok(BoundaryMesh::triangles(v, f))
}

/// Unit sphere meshed in rings of constant polar angle about the north pole,
/// with spacing `fine` for polar angles below `cap` and grading smoothly to
/// `coarse` further away. Used for profiles concentrated near the pole that
/// an icosphere of practical level cannot resolve.
pub fn polar_sphere(cap: f64, fine: f64, coarse: f64) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    if !(fine > 0.0 && coarse >= fine && cap >= 0.0) {
        return Err(Error::invalid("polar sphere needs 0 < fine <= coarse and cap >= 0"));
    }
    // polar angles of the rings
    let mut thetas = vec![0.0];
    let mut h = fine;
    let mut t = 0.0;
    loop {
        if t >= cap {
            h = (h * 1.2).min(coarse);
        }
        t += h;
        if t >= PI - 0.5 * h {
            break;
        }
        thetas.push(t);
    }
    // the final gap lies in [h/2, 3h/2)
    thetas.push(PI);

    let mut vertices = vec![Vec3::z()];
    let mut rings: Vec<Vec<(f64, usize)>> = vec![vec![(0.0, 0)]];
    for k in 1..thetas.len() - 1 {
        let th = thetas[k];
        let local = (thetas[k + 1] - thetas[k - 1]) * 0.5;
        let m = ((2.0 * PI * th.sin() / local).round() as usize).max(6);
        let phase = if k % 2 == 1 { 0.0 } else { PI / m as f64 };
        let mut ring = Vec::with_capacity(m);
        for i in 0..m {
            let ph = phase + 2.0 * PI * i as f64 / m as f64;
            ring.push((ph, vertices.len()));
            vertices.push(Vec3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()));
        }
        rings.push(ring);
    }
    let south = vertices.len();
    vertices.push(-Vec3::z());
    rings.push(vec![(0.0, south)]);

    let mut faces = Vec::new();
    for k in 0..rings.len() - 1 {
        zip_rings(&rings[k], &rings[k + 1], &mut faces);
    }
    orient_piece(&vertices, &mut faces, |x| *x);
    Ok((vertices, faces))
}

/// Triangulates the band between two closed rings of `(angle, vertex)`
/// pairs, each sorted by angle, by advancing whichever ring's next vertex
/// has the smaller angle. A single-vertex ring produces a fan.
pub(crate) fn zip_rings(a: &[(f64, usize)], b: &[(f64, usize)], out: &mut Vec<[usize; 3]>) {
    if a.len() == 1 {
        for j in 0..b.len() {
            out.push([a[0].1, b[(j + 1) % b.len()].1, b[j].1]);
        }
        return;
    }
    if b.len() == 1 {
        for i in 0..a.len() {
            out.push([a[i].1, a[(i + 1) % a.len()].1, b[0].1]);
        }
        return;
    }
    let tau = 2.0 * PI;
    // start both rings at the vertex with the smallest angle
    let norm = |x: f64| x.rem_euclid(tau);
    let start = |r: &[(f64, usize)]| {
        (0..r.len()).min_by(|&i, &j| norm(r[i].0).total_cmp(&norm(r[j].0))).unwrap_or(0)
    };
    let (sa, sb) = (start(a), start(b));
    let unwrap = |r: &[(f64, usize)], s: usize| -> Vec<(f64, usize)> {
        let base = norm(r[s].0);
        let mut out = Vec::with_capacity(r.len() + 1);
        let mut prev = base;
        for k in 0..=r.len() {
            let (ang, idx) = r[(s + k) % r.len()];
            let mut x = norm(ang);
            while x < prev - 1e-12 {
                x += tau;
            }
            if k == r.len() {
                x = base + tau;
            }
            out.push((x, idx));
            prev = x;
        }
        out
    };
    let ua = unwrap(a, sa);
    let ub = unwrap(b, sb);
    let (mut i, mut j) = (0, 0);
    let (na, nb) = (a.len(), b.len());
    while i < na || j < nb {
        let advance_a = if i == na {
            false
        } else if j == nb {
            true
        } else {
            ua[i + 1].0 <= ub[j + 1].0
        };
        if advance_a {
            out.push([ua[i].1, ua[i + 1].1, ub[j].1]);
            i += 1;
        } else {
            out.push([ua[i].1, ub[j + 1].1, ub[j].1]);
            j += 1;
        }
    }
}

/// Flips a consistently oriented piece when its area-weighted normals
/// mostly disagree with the outward direction field `outward`.
pub(crate) fn orient_piece(v: &[Vec3], faces: &mut [[usize; 3]], outward: impl Fn(&Vec3) -> Vec3) {
    let score: f64 = faces
        .iter()
        .map(|f| {
            let n = (v[f[1]] - v[f[0]]).cross(&(v[f[2]] - v[f[0]]));
            let c = (v[f[0]] + v[f[1]] + v[f[2]]) / 3.0;
            n.dot(&outward(&c))
        })
        .sum();
    if score < 0.0 {
        for f in faces.iter_mut() {
            f.swap(1, 2);
        }
    }
}

/// Real orthonormal spherical harmonic `Y_ℓ^m` (ℓ ≤ 4) at a unit vector,
/// normalized so that `∫_{S²} Y² = 1`. Negative `m` selects the sine part.
pub fn real_harmonic(l: u32, m: i32, x: &Vec3) -> Result<f64> {
    if l > 4 || m.unsigned_abs() > l {
        return Err(Error::invalid(format!("harmonic degree must satisfy |m| <= l <= 4, got ({l}, {m})")));
    }
    let (x, y, z) = (x.x, x.y, x.z);
    let c = |k: f64| k / PI.sqrt();
    // closed forms in Cartesian coordinates on the unit sphere
    let v = match (l, m) {
        (0, 0) => c(0.5),
        (1, -1) => c(0.5 * 3f64.sqrt()) * y,
        (1, 0) => c(0.5 * 3f64.sqrt()) * z,
        (1, 1) => c(0.5 * 3f64.sqrt()) * x,
        (2, -2) => c(0.5 * 15f64.sqrt()) * x * y,
        (2, -1) => c(0.5 * 15f64.sqrt()) * y * z,
        (2, 0) => c(0.25 * 5f64.sqrt()) * (3.0 * z * z - 1.0),
        (2, 1) => c(0.5 * 15f64.sqrt()) * x * z,
        (2, 2) => c(0.25 * 15f64.sqrt()) * (x * x - y * y),
        (3, -3) => c(0.25 * (35.0f64 / 2.0).sqrt()) * y * (3.0 * x * x - y * y),
        (3, -2) => c(0.5 * 105f64.sqrt()) * x * y * z,
        (3, -1) => c(0.25 * (21.0f64 / 2.0).sqrt()) * y * (5.0 * z * z - 1.0),
        (3, 0) => c(0.25 * 7f64.sqrt()) * z * (5.0 * z * z - 3.0),
        (3, 1) => c(0.25 * (21.0f64 / 2.0).sqrt()) * x * (5.0 * z * z - 1.0),
        (3, 2) => c(0.25 * 105f64.sqrt()) * z * (x * x - y * y),
        (3, 3) => c(0.25 * (35.0f64 / 2.0).sqrt()) * x * (x * x - 3.0 * y * y),
        (4, -4) => c(0.75 * 35f64.sqrt()) * x * y * (x * x - y * y),
        (4, -3) => c(0.75 * (35.0f64 / 2.0).sqrt()) * y * z * (3.0 * x * x - y * y),
        (4, -2) => c(0.75 * 5f64.sqrt()) * x * y * (7.0 * z * z - 1.0),
        (4, -1) => c(0.75 * (5.0f64 / 2.0).sqrt()) * y * z * (7.0 * z * z - 3.0),
        (4, 0) => c(3.0 / 16.0) * (35.0 * z.powi(4) - 30.0 * z * z + 3.0),
        (4, 1) => c(0.75 * (5.0f64 / 2.0).sqrt()) * x * z * (7.0 * z * z - 3.0),
        (4, 2) => c(0.375 * 5f64.sqrt()) * (x * x - y * y) * (7.0 * z * z - 1.0),
        (4, 3) => c(0.75 * (35.0f64 / 2.0).sqrt()) * x * z * (x * x - 3.0 * y * y),
        (4, 4) => c(3.0 / 16.0 * 35f64.sqrt()) * (x * x * (x * x - 3.0 * y * y) - y * y * (3.0 * x * x - y * y)),
        _ => unreachable!(),
    };
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{isoperimetric_summary, perimeter};

    #[test]
    fn icosphere_counts() {
        let m = icosphere(Vec3::zeros(), 1.0, 0).unwrap();
        assert_eq!((m.vertices().len(), m.num_elements()), (12, 20));
        for k in 1..=4 {
            let m = icosphere(Vec3::zeros(), 1.0, k).unwrap();
            assert_eq!(m.num_elements(), 20 * 4usize.pow(k));
            assert!(m.validate().is_empty());
        }
        assert!(icosphere(Vec3::zeros(), 1.0, 9).is_err());
    }

    #[test]
    fn icosphere_vertices_on_sphere() {
        let m = icosphere(Vec3::new(1.0, 2.0, 3.0), 1.0, 3).unwrap();
        for v in m.vertices() {
            assert!(((v - Vec3::new(1.0, 2.0, 3.0)).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn icosphere_area_below_sphere() {
        let m = icosphere(Vec3::zeros(), 2.0, 4).unwrap();
        let e = 1.0 - perimeter(&m).unwrap() / (16.0 * PI);
        assert!(e > 0.0 && e < 1e-2, "{e}");
    }

    #[test]
    fn polar_sphere_is_valid_and_round() {
        let (v, f) = polar_sphere(0.1, 0.01, 0.08).unwrap();
        let m = BoundaryMesh::triangles(v, f);
        assert_eq!(m.validate(), vec![]);
        let s = isoperimetric_summary(&m).unwrap();
        assert!(s.deficit < 5e-3 && s.deficit > 0.0, "{s:?}");
    }

    #[test]
    fn harmonics_are_orthonormal() {
        // quadrature on a fine icosphere: area-weighted centroid rule
        let m = icosphere(Vec3::zeros(), 1.0, 5).unwrap();
        let mut basis = Vec::new();
        for l in 0..=4u32 {
            for mm in -(l as i32)..=(l as i32) {
                basis.push((l, mm));
            }
        }
        let tris = m.tris();
        let v = m.vertices();
        let pts: Vec<(Vec3, f64)> = tris
            .iter()
            .map(|&[a, b, c]| {
                let w = 0.5 * (v[b] - v[a]).cross(&(v[c] - v[a])).norm();
                (((v[a] + v[b] + v[c]) / 3.0).normalize(), w)
            })
            .collect();
        let total: f64 = pts.iter().map(|p| p.1).sum();
        for (i, &(l1, m1)) in basis.iter().enumerate() {
            for &(l2, m2) in &basis[i..] {
                let s: f64 = pts
                    .iter()
                    .map(|(x, w)| w * real_harmonic(l1, m1, x).unwrap() * real_harmonic(l2, m2, x).unwrap())
                    .sum::<f64>()
                    * 4.0
                    * PI
                    / total;
                let expect = if (l1, m1) == (l2, m2) { 1.0 } else { 0.0 };
                assert!((s - expect).abs() < 5e-3, "({l1},{m1})·({l2},{m2}) = {s}");
            }
        }
    }
}
