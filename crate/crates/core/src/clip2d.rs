//! Exact planar disk–polygon intersection and radial extents.
//!
//! The intersection area is a signed sum over boundary segments of the area
//! of `triangle(c, a, b) ∩ disk(c, r)`; circular pieces contribute exact
//! sectors, so no arc is ever discretized.

use crate::mesh::{BoundaryMesh, Vec3};

/// Signed area of `disk(0, r) ∩ triangle(0, a, b)` in the plane.
pub fn disk_triangle_area(a: [f64; 2], b: [f64; 2], r: f64) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let dd = d[0] * d[0] + d[1] * d[1];
    if dd == 0.0 {
        return 0.0;
    }
    // |a + t d|² = r²
    let ad = a[0] * d[0] + a[1] * d[1];
    let aa = a[0] * a[0] + a[1] * a[1];
    let disc = ad * ad - dd * (aa - r * r);
    let mut ts = [0.0, 1.0, 1.0, 1.0];
    let mut n = 1;
    if disc > 0.0 {
        let s = disc.sqrt();
        for t in [(-ad - s) / dd, (-ad + s) / dd] {
            if t > 0.0 && t < 1.0 {
                ts[n] = t;
                n += 1;
            }
        }
    }
    ts[n] = 1.0;
    let at = |t: f64| [a[0] + t * d[0], a[1] + t * d[1]];
    let mut total = 0.0;
    for k in 0..n {
        let (p, q) = (at(ts[k]), at(ts[k + 1]));
        let cross = p[0] * q[1] - p[1] * q[0];
        let m = at(0.5 * (ts[k] + ts[k + 1]));
        // a line that misses or only touches the circle stays outside
        if disc > 0.0 && m[0] * m[0] + m[1] * m[1] < r * r {
            total += 0.5 * cross;
        } else {
            let dot = p[0] * q[0] + p[1] * q[1];
            total += 0.5 * r * r * cross.atan2(dot);
        }
    }
    total
}

/// Area of `Ω ∩ disk(center, r)` for a planar boundary (all loops counted
/// with their orientation).
pub fn disk_intersection_area(mesh: &BoundaryMesh, center: &Vec3, r: f64) -> f64 {
    let v = mesh.vertices();
    mesh.segments()
        .iter()
        .map(|&[i, j]| {
            let a = [v[i].x - center.x, v[i].y - center.y];
            let b = [v[j].x - center.x, v[j].y - center.y];
            disk_triangle_area(a, b, r)
        })
        .sum()
}

/// Exact `|Ω Δ disk(center, r)|` given the area of Ω.
pub fn disk_symmetric_difference(mesh: &BoundaryMesh, area: f64, center: &Vec3, r: f64) -> f64 {
    let inter = disk_intersection_area(mesh, center, r);
    (area + std::f64::consts::PI * r * r - 2.0 * inter).max(0.0)
}

/// Boundary length inside `disk(center, r)`.
pub fn length_in_disk(mesh: &BoundaryMesh, center: &Vec3, r: f64) -> f64 {
    let v = mesh.vertices();
    mesh.segments()
        .iter()
        .map(|&[i, j]| {
            let (a, b) = (v[i] - center, v[j] - center);
            let d = b - a;
            let dd = d.norm_squared();
            if dd == 0.0 {
                return 0.0;
            }
            let ad = a.dot(&d);
            let disc = ad * ad - dd * (a.norm_squared() - r * r);
            if disc <= 0.0 {
                return 0.0;
            }
            let s = disc.sqrt();
            let t0 = ((-ad - s) / dd).max(0.0);
            let t1 = ((-ad + s) / dd).min(1.0);
            (t1 - t0).max(0.0) * dd.sqrt()
        })
        .sum()
}

/// Largest and smallest distance from `center` to the boundary curve.
/// The maximum is attained at a vertex; the minimum uses exact
/// point–segment distances.
pub fn radial_extent(mesh: &BoundaryMesh, center: &Vec3) -> (f64, f64) {
    let v = mesh.vertices();
    let mut rmax: f64 = 0.0;
    let mut rmin = f64::INFINITY;
    for &[i, j] in mesh.segments() {
        rmax = rmax.max((v[i] - center).norm());
        let p = crate::bvh::closest_on_segment(center, &v[i], &v[j]);
        rmin = rmin.min((p - center).norm());
    }
    (rmin, rmax)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn square(s: f64) -> BoundaryMesh {
        BoundaryMesh::polygon(&[[0.0, 0.0], [s, 0.0], [s, s], [0.0, s]])
    }

    #[test]
    fn disk_inside_square() {
        let sq = square(4.0);
        let a = disk_intersection_area(&sq, &Vec3::new(2.0, 2.0, 0.0), 1.0);
        assert!((a - PI).abs() < 1e-13);
    }

    #[test]
    fn square_inside_disk() {
        let sq = square(1.0);
        let a = disk_intersection_area(&sq, &Vec3::new(0.5, 0.5, 0.0), 10.0);
        assert!((a - 1.0).abs() < 1e-13);
    }

    #[test]
    fn quarter_disk_at_corner() {
        let sq = square(2.0);
        let a = disk_intersection_area(&sq, &Vec3::zeros(), 1.0);
        assert!((a - PI / 4.0).abs() < 1e-13);
    }

    #[test]
    fn half_disk_on_edge() {
        let sq = square(4.0);
        let a = disk_intersection_area(&sq, &Vec3::new(2.0, 0.0, 0.0), 1.0);
        assert!((a - PI / 2.0).abs() < 1e-13);
    }

    #[test]
    fn disk_inscribed_in_unit_square_centered() {
        // disk of radius 1/√2 through the corners: circle minus 4 segments
        let sq = square(1.0);
        let r = 0.5f64.sqrt();
        let c = Vec3::new(0.5, 0.5, 0.0);
        assert!((disk_intersection_area(&sq, &c, r) - 1.0).abs() < 1e-13);
        // radius 1/2: inscribed disk
        assert!((disk_intersection_area(&sq, &c, 0.5) - PI / 4.0).abs() < 1e-13);
    }

    #[test]
    fn disjoint_symmetric_difference() {
        let m = 4096;
        let pts: Vec<[f64; 2]> = (0..m)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / m as f64;
                [t.cos(), t.sin()]
            })
            .collect();
        let poly = BoundaryMesh::polygon(&pts);
        let area = crate::geometry::signed_volume(&poly);
        let sd = disk_symmetric_difference(&poly, area, &Vec3::new(2.0, 0.0, 0.0), 1.0);
        assert!((sd - (area + PI)).abs() < 1e-9);
        assert!((sd - 2.0 * PI).abs() < 1e-5);
    }

    #[test]
    fn radial_extent_of_square() {
        let (rmin, rmax) = radial_extent(&square(1.0), &Vec3::new(0.5, 0.5, 0.0));
        assert!((rmin - 0.5).abs() < 1e-15);
        assert!((rmax - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn length_in_disk_of_square() {
        let l = length_in_disk(&square(2.0), &Vec3::zeros(), 1.0);
        assert!((l - 2.0).abs() < 1e-14);
    }
}
