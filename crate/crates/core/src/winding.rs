//! Winding numbers and inside/outside classification.

use std::f64::consts::PI;

use serde::Serialize;

use crate::bvh::{Bvh, Crossing};
use crate::mesh::{AmbientDim, BoundaryMesh, Vec3};

/// Generalized winding number of `q` with respect to the boundary: the
/// normalized solid angle (3D) or turning angle (2D) it subtends.
pub fn winding_number(mesh: &BoundaryMesh, q: &Vec3) -> f64 {
    let v = mesh.vertices();
    match mesh.dim() {
        AmbientDim::Two => {
            let s: f64 = mesh
                .segments()
                .iter()
                .map(|&[a, b]| {
                    let (p, r) = (v[a] - q, v[b] - q);
                    (p.x * r.y - p.y * r.x).atan2(p.x * r.x + p.y * r.y)
                })
                .sum();
            s / (2.0 * PI)
        }
        AmbientDim::Three => {
            let s: f64 = mesh
                .tris()
                .iter()
                .map(|&[a, b, c]| solid_angle(&(v[a] - q), &(v[b] - q), &(v[c] - q)))
                .sum();
            s / (4.0 * PI)
        }
    }
}

/// Signed solid angle of a triangle seen from the origin (Van Oosterom–Strackee).
pub fn solid_angle(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
    let num = a.dot(&b.cross(c));
    let den = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
    2.0 * num.atan2(den)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum PointClass {
    Inside,
    Outside,
    Boundary { distance: f64 },
}

/// Classifies points against a fixed mesh using a cached hierarchy.
#[derive(Clone, Debug)]
pub struct Classifier<'a> {
    mesh: &'a BoundaryMesh,
    bvh: Bvh,
}

impl<'a> Classifier<'a> {
    pub fn new(mesh: &'a BoundaryMesh) -> Self {
        Classifier { mesh, bvh: Bvh::new(mesh) }
    }

    pub fn bvh(&self) -> &Bvh {
        &self.bvh
    }

    pub fn mesh(&self) -> &BoundaryMesh {
        self.mesh
    }

    /// Integer winding number, using a ray cast and falling back to the
    /// exact solid-angle sum when the ray grazes an edge.
    pub fn winding(&self, q: &Vec3) -> i64 {
        match self.bvh.ray_winding(q) {
            Crossing::Winding(w) => w,
            Crossing::Ambiguous => winding_number(self.mesh, q).round() as i64,
        }
    }

    /// True when `q` has nonzero winding number. Points on the boundary
    /// fall on either side.
    pub fn inside(&self, q: &Vec3) -> bool {
        self.winding(q) != 0
    }

    /// Exact classification with a boundary band of width `tol`.
    pub fn classify(&self, q: &Vec3, tol: f64) -> PointClass {
        if let Some(n) = self.bvh.nearest_within(q, tol.max(f64::MIN_POSITIVE)) {
            if n.distance <= tol {
                return PointClass::Boundary { distance: n.distance };
            }
        }
        let w = winding_number(self.mesh, q);
        if (w - w.round()).abs() > 0.25 {
            return PointClass::Boundary { distance: self.bvh.distance(q) };
        }
        if w.round() != 0.0 {
            PointClass::Inside
        } else {
            PointClass::Outside
        }
    }
}

/// Default boundary band: `1e−9` of the bounding-box diagonal.
pub fn default_boundary_tol(mesh: &BoundaryMesh) -> f64 {
    1e-9 * mesh.bbox_diagonal()
}

/// Inside/outside/boundary classification by generalized winding number.
pub fn point_in_solid(mesh: &BoundaryMesh, q: &Vec3, tol: Option<f64>) -> PointClass {
    let tol = tol.unwrap_or_else(|| default_boundary_tol(mesh));
    Classifier::new(mesh).classify(q, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::tests::unit_cube;

    #[test]
    fn cube_classification() {
        let cube = unit_cube();
        assert_eq!(point_in_solid(&cube, &Vec3::repeat(0.5), None), PointClass::Inside);
        assert_eq!(point_in_solid(&cube, &Vec3::repeat(5.0), None), PointClass::Outside);
        let on_face = Vec3::new(1.0 / 3.0, 2.0 / 3.0, 0.0);
        assert!(matches!(point_in_solid(&cube, &on_face, None), PointClass::Boundary { .. }));
    }

    #[test]
    fn winding_of_reversed_mesh_is_negative() {
        let cube = unit_cube().reversed();
        assert!((winding_number(&cube, &Vec3::repeat(0.5)) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn fast_and_exact_winding_agree_on_cube_grid() {
        let cube = unit_cube();
        let c = Classifier::new(&cube);
        for i in 0..9 {
            for j in 0..9 {
                for k in 0..9 {
                    // grid deliberately includes points on faces and edges
                    let q = Vec3::new(i as f64, j as f64, k as f64) * 0.25 - Vec3::repeat(0.5);
                    let exact = winding_number(&cube, &q);
                    if (exact - exact.round()).abs() < 1e-9 {
                        assert_eq!(c.winding(&q), exact.round() as i64, "{q:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn polygon_winding() {
        let sq = BoundaryMesh::polygon(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        assert!((winding_number(&sq, &Vec3::new(0.5, 0.5, 0.0)) - 1.0).abs() < 1e-14);
        assert!(winding_number(&sq, &Vec3::new(1.5, 0.5, 0.0)).abs() < 1e-14);
    }
}
