//! Discrete normals, mean and principal curvatures, and the deviation
//! field `Z = (x − x_Ω)/|x − x_Ω| − ν`.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Matrix2, SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::bvh::Bvh;
use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::AnnulusSpec;
use crate::measures::{integrate_outside_annulus, SphereFit};
use crate::mesh::{AmbientDim, BoundaryMesh, Vec3};

/// `H = MEAN_CONVENTION · (κ₁ + … + κₙ)`. With 1/2 in 3D, `H(S_R) = 1/R`;
/// set to 1 for the sum convention.
pub const MEAN_CONVENTION: f64 = 0.5;

/// Norms for one exponent `p`, normalized as `((1/P)∫|·|^p)^{1/p}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureNorms {
    pub mean: f64,
    pub second_fundamental_form: f64,
    /// `P(Ω)·‖H‖_p^n`.
    pub budget: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureField {
    pub dim: AmbientDim,
    pub normal: Vec<[f64; 3]>,
    pub mean: Vec<f64>,
    /// `[κ₁, κ₂]` with `κ₁ ≥ κ₂` (3D); `[κ, 0]` for curves.
    pub principal: Vec<[f64; 2]>,
    pub vertex_area: Vec<f64>,
    /// Vertices whose 2-ring is too flat or too small for a stable quadric.
    pub low_confidence: Vec<usize>,
    pub perimeter: f64,
    /// Keyed by `"p=2.0"`.
    pub aggregates: BTreeMap<String, CurvatureNorms>,
}

pub fn p_key(p: f64) -> String {
    format!("p={p:?}")
}

impl CurvatureField {
    /// `((1/P) Σ w_i |f_i|^p)^{1/p}`; `p = ∞` gives the max.
    pub fn norm_of(&self, values: impl Iterator<Item = f64>, p: f64) -> f64 {
        norm_p(&self.vertex_area, values, p, self.perimeter)
    }

    pub fn mean_norm(&self, p: f64) -> f64 {
        self.norm_of(self.mean.iter().copied(), p)
    }

    pub fn second_fundamental_norm(&self, p: f64) -> f64 {
        self.norm_of(self.principal.iter().map(|k| k[0].hypot(k[1])), p)
    }

    pub fn aggregate(&self, p: f64) -> Option<&CurvatureNorms> {
        self.aggregates.get(&p_key(p))
    }

    fn fill_aggregates(&mut self, p_list: &[f64]) {
        let n = self.dim.n() as i32;
        for &p in p_list {
            let mean = self.mean_norm(p);
            let norms = CurvatureNorms {
                mean,
                second_fundamental_form: self.second_fundamental_norm(p),
                budget: self.perimeter * mean.powi(n),
            };
            self.aggregates.insert(p_key(p), norms);
        }
    }
}

fn norm_p(weights: &[f64], values: impl Iterator<Item = f64>, p: f64, total: f64) -> f64 {
    if p.is_infinite() {
        return values.map(f64::abs).fold(0.0, f64::max);
    }
    let s: f64 = weights.iter().zip(values).map(|(w, v)| w * v.abs().powf(p)).sum();
    (s / total).powf(1.0 / p)
}

fn check_p(p_list: &[f64]) -> Result<()> {
    match p_list.iter().find(|p| !(**p >= 1.0)) {
        Some(p) => Err(Error::invalid(format!("norm exponents must be >= 1, got {p}"))),
        None => Ok(()),
    }
}

/// Dispatches on dimension.
pub fn curvature(mesh: &BoundaryMesh, p_list: &[f64]) -> Result<CurvatureField> {
    match mesh.dim() {
        AmbientDim::Two => curve_curvature(mesh, p_list),
        AmbientDim::Three => curvature_field(mesh, p_list),
    }
}

/// Unit normals by angle-weighted averaging of face normals.
pub fn vertex_normals(mesh: &BoundaryMesh) -> Vec<Vec3> {
    let v = mesh.vertices();
    let mut acc = vec![Vec3::zeros(); v.len()];
    match mesh.dim() {
        AmbientDim::Two => {
            for &[a, b] in mesh.segments() {
                let d = v[b] - v[a];
                let n = Vec3::new(d.y, -d.x, 0.0).normalize();
                acc[a] += n;
                acc[b] += n;
            }
        }
        AmbientDim::Three => {
            for t in mesh.tris() {
                let p = [v[t[0]], v[t[1]], v[t[2]]];
                let n = (p[1] - p[0]).cross(&(p[2] - p[0])).normalize();
                for k in 0..3 {
                    acc[t[k]] += n * corner_angle(&p, k);
                }
            }
        }
    }
    acc.into_iter().map(|n| n.normalize()).collect()
}

fn corner_angle(p: &[Vec3; 3], k: usize) -> f64 {
    let u = p[(k + 1) % 3] - p[k];
    let w = p[(k + 2) % 3] - p[k];
    u.cross(&w).norm().atan2(u.dot(&w))
}

/// Mixed Voronoi areas: circumcentric cells on non-obtuse triangles, and
/// the half/quarter split on obtuse ones. They sum to the surface area.
pub fn mixed_voronoi_areas(mesh: &BoundaryMesh) -> Vec<f64> {
    let v = mesh.vertices();
    let mut area = vec![0.0; v.len()];
    for t in mesh.tris() {
        let p = [v[t[0]], v[t[1]], v[t[2]]];
        let a = 0.5 * (p[1] - p[0]).cross(&(p[2] - p[0])).norm();
        let obtuse = (0..3).find(|&k| (p[(k + 1) % 3] - p[k]).dot(&(p[(k + 2) % 3] - p[k])) < 0.0);
        match obtuse {
            None => {
                for k in 0..3 {
                    let (i, j, l) = (k, (k + 1) % 3, (k + 2) % 3);
                    // |p_i p_j|² cot(angle at l) + |p_i p_l|² cot(angle at j)
                    let s = (p[j] - p[i]).norm_squared() * cot(&p, l) + (p[l] - p[i]).norm_squared() * cot(&p, j);
                    area[t[i]] += s / 8.0;
                }
            }
            Some(o) => {
                for k in 0..3 {
                    area[t[k]] += if k == o { a / 2.0 } else { a / 4.0 };
                }
            }
        }
    }
    area
}

fn cot(p: &[Vec3; 3], k: usize) -> f64 {
    let u = p[(k + 1) % 3] - p[k];
    let w = p[(k + 2) % 3] - p[k];
    u.dot(&w) / u.cross(&w).norm()
}

fn vertex_rings(mesh: &BoundaryMesh) -> Vec<BTreeSet<usize>> {
    let mut ring = vec![BTreeSet::new(); mesh.vertices().len()];
    for t in mesh.tris() {
        for k in 0..3 {
            ring[t[k]].insert(t[(k + 1) % 3]);
            ring[t[k]].insert(t[(k + 2) % 3]);
        }
    }
    ring
}

/// Per-vertex curvature of a closed triangle mesh: angle-weighted normals,
/// cotangent mean curvature over mixed Voronoi areas, and principal
/// curvatures from a quadric fitted over the 2-ring.
pub fn curvature_field(mesh: &BoundaryMesh, p_list: &[f64]) -> Result<CurvatureField> {
    if mesh.dim() != AmbientDim::Three {
        return Err(Error::invalid("curvature_field expects a triangle mesh; use curve_curvature for curves"));
    }
    mesh.ensure_valid()?;
    check_p(p_list)?;
    let v = mesh.vertices();
    let normals = vertex_normals(mesh);
    let area = mixed_voronoi_areas(mesh);

    let mut laplace = vec![Vec3::zeros(); v.len()];
    for t in mesh.tris() {
        let p = [v[t[0]], v[t[1]], v[t[2]]];
        for k in 0..3 {
            let (i, j) = ((k + 1) % 3, (k + 2) % 3);
            let w = cot(&p, k);
            laplace[t[i]] += (p[i] - p[j]) * w;
            laplace[t[j]] += (p[j] - p[i]) * w;
        }
    }
    // (1/(2A)) Σ (cot α + cot β)(x_i − x_j) = (κ₁ + κ₂) ν
    let mean: Vec<f64> = (0..v.len())
        .map(|i| MEAN_CONVENTION * laplace[i].dot(&normals[i]) / (2.0 * area[i]))
        .collect();

    let ring1 = vertex_rings(mesh);
    let fits = exec::map_range(v.len(), |i| {
        let mut nb: BTreeSet<usize> = ring1[i].clone();
        for &j in &ring1[i] {
            nb.extend(ring1[j].iter().copied());
        }
        nb.remove(&i);
        quadric_principal(&v[i], &normals[i], nb.iter().map(|&j| v[j]))
    });
    let principal: Vec<[f64; 2]> = fits.iter().map(|f| f.map_or([0.0, 0.0], |(k, _)| k)).collect();
    let low_confidence = fits
        .iter()
        .enumerate()
        .filter(|(_, f)| !matches!(f, Some((_, true))))
        .map(|(i, _)| i)
        .collect();

    let mut field = CurvatureField {
        dim: AmbientDim::Three,
        normal: normals.iter().map(|n| (*n).into()).collect(),
        mean,
        principal,
        perimeter: area.iter().sum(),
        vertex_area: area,
        low_confidence,
        aggregates: BTreeMap::new(),
    };
    field.fill_aggregates(p_list);
    Ok(field)
}

/// Least-squares fit of `h = a x² + b xy + c y² + d x + e y + f h²` in the
/// tangent frame, read as an implicit surface. The `h²` term makes spheres
/// and cylinders exact (`h = −(x² + y² + h²)/(2R)` for a sphere), which
/// removes the bias a pure quadratic graph has over a wide 2-ring. Falls
/// back to the plain quadratic when that column is degenerate. Returns the
/// shape-operator eigenvalues and whether the fit is trustworthy.
fn quadric_principal(x0: &Vec3, nu: &Vec3, nb: impl Iterator<Item = Vec3>) -> Option<([f64; 2], bool)> {
    let e1 = if nu.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let t1 = (e1 - nu * nu.dot(&e1)).normalize();
    let t2 = nu.cross(&t1);
    let local: Vec<(f64, f64, f64)> = nb
        .map(|p| {
            let d = p - x0;
            (d.dot(&t1), d.dot(&t2), d.dot(nu))
        })
        .collect();
    let scale = local.iter().map(|(x, y, _)| x.abs().max(y.abs())).fold(0.0, f64::max);
    let height = local.iter().map(|(_, _, h)| h.abs()).fold(0.0, f64::max);
    if local.len() < 5 || scale == 0.0 {
        return None;
    }
    let flat = height <= 1e-12 * scale;
    let implicit = if flat || local.len() < 6 {
        None
    } else {
        let rows = local.iter().map(|&(x, y, h)| {
            // columns pre-scaled to comparable magnitude
            let (u, v, g) = (x / scale, y / scale, h / scale);
            (SVector::<f64, 6>::from([u * u, u * v, v * v, u, v, g * g]), g)
        });
        least_squares(rows).map(|c| (c[0], c[1], c[2], c[3], c[4], c[5]))
    };
    let (a, b, c, d, e, f) = match implicit {
        Some(k) => k,
        None => {
            let rows = local.iter().map(|&(x, y, h)| {
                let (u, v, g) = (x / scale, y / scale, h / scale);
                (SVector::<f64, 5>::from([u * u, u * v, v * v, u, v]), g)
            });
            let c = least_squares(rows)?;
            (c[0], c[1], c[2], c[3], c[4], 0.0)
        }
    };
    // undo the scaling: second-order coefficients carry 1/scale
    let (a, b, c, f) = (a / scale, b / scale, c / scale, f / scale);
    // implicit differentiation of F = a x² + … + f h² − h at the origin
    let hxx = 2.0 * a + 2.0 * f * d * d;
    let hxy = b + 2.0 * f * d * e;
    let hyy = 2.0 * c + 2.0 * f * e * e;
    let w = (1.0 + d * d + e * e).sqrt();
    let first = Matrix2::new(1.0 + d * d, d * e, d * e, 1.0 + e * e);
    // outward ν: a convex surface bends away, so κ > 0 when h is concave
    let second = Matrix2::new(-hxx, -hxy, -hxy, -hyy) / w;
    let shape = first.try_inverse()? * second;
    let tr = shape.trace();
    let det = shape.determinant();
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    Some(([0.5 * tr + disc, 0.5 * tr - disc], !flat))
}

fn least_squares<const N: usize>(rows: impl Iterator<Item = (SVector<f64, N>, f64)>) -> Option<SVector<f64, N>> {
    let mut ata = SMatrix::<f64, N, N>::zeros();
    let mut atb = SVector::<f64, N>::zeros();
    for (r, h) in rows {
        ata += r * r.transpose();
        atb += r * h;
    }
    // reject near-singular systems rather than amplify noise
    let diag_max = (0..N).map(|i| ata[(i, i)]).fold(0.0, f64::max);
    if (0..N).any(|i| ata[(i, i)] <= 1e-24 * diag_max) {
        return None;
    }
    let c = ata.cholesky()?.solve(&atb);
    c.iter().all(|v| v.is_finite()).then_some(c)
}

/// Discrete curvature of a closed polygon: turning angle over the mean of
/// the two adjacent edge lengths, positive at convex corners.
pub fn curve_curvature(mesh: &BoundaryMesh, p_list: &[f64]) -> Result<CurvatureField> {
    if mesh.dim() != AmbientDim::Two {
        return Err(Error::invalid("curve_curvature expects a planar curve"));
    }
    mesh.ensure_valid()?;
    check_p(p_list)?;
    let v = mesh.vertices();
    let mut incoming = vec![usize::MAX; v.len()];
    let mut outgoing = vec![usize::MAX; v.len()];
    for &[a, b] in mesh.segments() {
        outgoing[a] = b;
        incoming[b] = a;
    }
    let normals = vertex_normals(mesh);
    let mut kappa = vec![0.0; v.len()];
    let mut area = vec![0.0; v.len()];
    for i in 0..v.len() {
        if outgoing[i] == usize::MAX {
            continue;
        }
        let d0 = v[i] - v[incoming[i]];
        let d1 = v[outgoing[i]] - v[i];
        let turn = (d0.x * d1.y - d0.y * d1.x).atan2(d0.dot(&d1));
        area[i] = 0.5 * (d0.norm() + d1.norm());
        kappa[i] = turn / area[i];
    }
    let mut field = CurvatureField {
        dim: AmbientDim::Two,
        normal: normals.iter().map(|n| (*n).into()).collect(),
        mean: kappa.clone(),
        principal: kappa.iter().map(|k| [*k, 0.0]).collect(),
        perimeter: area.iter().sum(),
        vertex_area: area,
        low_confidence: Vec::new(),
        aggregates: BTreeMap::new(),
    };
    field.fill_aggregates(p_list);
    Ok(field)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZField {
    pub z: Vec<[f64; 3]>,
    /// `((1/P)∫|Z|²)^{1/2}` with vertex-area weights.
    pub l2: f64,
    pub sup: f64,
}

/// `Z_x = (x − x_Ω)/|x − x_Ω| − ν_x` at every vertex.
pub fn z_field(mesh: &BoundaryMesh, fit: &SphereFit) -> Result<ZField> {
    mesh.ensure_valid()?;
    let c = fit.center();
    let dist = Bvh::new(mesh).distance(&c);
    if dist <= 1e-9 * fit.radius {
        return Err(Error::CenterOnBoundary { distance: dist });
    }
    let normals = vertex_normals(mesh);
    let weights = match mesh.dim() {
        AmbientDim::Two => crate::measures::barycentric_vertex_weights(mesh),
        AmbientDim::Three => mixed_voronoi_areas(mesh),
    };
    let z: Vec<Vec3> = mesh
        .vertices()
        .iter()
        .zip(&normals)
        .map(|(x, n)| {
            let r = x - c;
            // a vertex at the center has no radial direction; |Z| ≤ 2 still holds
            let dir = if r.norm() > 0.0 { r.normalize() } else { -n };
            dir - n
        })
        .collect();
    let total: f64 = weights.iter().sum();
    let l2 = norm_p(&weights, z.iter().map(|v| v.norm()), 2.0, total);
    let sup = z.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(ZField { z: z.into_iter().map(Into::into).collect(), l2, sup })
}

/// `∫_{∂Ω \ A} |H|^q dHⁿ`, integrating the piecewise-linear interpolant of
/// the vertex values `|H|^q`. With `q = 0` this is exactly the boundary
/// measure outside the annulus.
pub fn outside_annulus_curvature_integral(
    mesh: &BoundaryMesh,
    field: &CurvatureField,
    annulus: &AnnulusSpec,
    q: f64,
) -> Result<f64> {
    if field.mean.len() != mesh.vertices().len() {
        return Err(Error::invalid("curvature field does not belong to this mesh"));
    }
    let values: Vec<f64> = field.mean.iter().map(|h| if q == 0.0 { 1.0 } else { h.abs().powf(q) }).collect();
    Ok(integrate_outside_annulus(mesh, Some(&values), annulus))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::generators::{circle, icosphere, rectangle, tube_tree_domain, TreeSpec};
    use crate::geometry::{euler_characteristic, perimeter_unchecked, total_angle_defect};
    use crate::measures::{fit_sphere, outside_fractions, FitMethod};
    use crate::sampling::SamplerConfig;

    #[test]
    fn sphere_curvatures() {
        let r = 2.5;
        let m = icosphere(Vec3::new(1.0, 0.0, -2.0), r, 4).unwrap();
        let f = curvature_field(&m, &[1.0, 2.0]).unwrap();
        for i in 0..f.mean.len() {
            assert!((f.mean[i] * r - 1.0).abs() < 0.02, "H = {}", f.mean[i]);
            assert!((f.principal[i][0] * r - 1.0).abs() < 0.05);
            assert!((f.principal[i][1] * r - 1.0).abs() < 0.05);
            let n = Vec3::from(f.normal[i]);
            assert!((n.norm() - 1.0).abs() < 1e-12);
        }
        assert!((f.vertex_area.iter().sum::<f64>() / perimeter_unchecked(&m) - 1.0).abs() < 1e-9);
        assert!(f.low_confidence.is_empty());
    }

    #[test]
    fn scaling_laws() {
        let m = icosphere(Vec3::zeros(), 1.0, 3).unwrap();
        let s = 3.7;
        let a = curvature_field(&m, &[2.0]).unwrap();
        let b = curvature_field(&m.scaled(s), &[2.0]).unwrap();
        for (x, y) in a.mean.iter().zip(&b.mean) {
            assert!((x / s - y).abs() <= 1e-9 * x.abs());
        }
        let (na, nb) = (a.aggregate(2.0).unwrap(), b.aggregate(2.0).unwrap());
        assert!((na.mean / s - nb.mean).abs() < 1e-9 * na.mean);
        assert!((na.budget - nb.budget).abs() < 1e-9 * na.budget);
    }

    #[test]
    fn norms_are_monotone_in_p() {
        let m = crate::generators::random_star_mesh(3, 3, 0.2).unwrap();
        let f = curvature_field(&m, &[1.0, 2.0, 4.0, 8.0]).unwrap();
        let seq: Vec<f64> = [1.0, 2.0, 4.0, 8.0].iter().map(|p| f.aggregate(*p).unwrap().mean).collect();
        assert!(seq.windows(2).all(|w| w[0] <= w[1] * (1.0 + 1e-12)), "{seq:?}");
    }

    #[test]
    fn cylinder_interior_vertices() {
        let eps = 0.05;
        let tree = TreeSpec { segments: vec![[[0.0, 0.0, 0.9], [0.0, 0.0, 1.6]]], tube_radius: eps, attach_to_ball: true };
        let m = tube_tree_domain(1.0, &tree, 4).unwrap();
        let f = curvature_field(&m, &[1.0]).unwrap();
        let mut seen = 0;
        for (i, x) in m.vertices().iter().enumerate() {
            // tube wall away from the junction and the cap
            if x.z > 1.2 && x.z < 1.45 && (x.x.hypot(x.y) - eps).abs() < 1e-3 * eps {
                seen += 1;
                assert!((f.mean[i] * 2.0 * eps - 1.0).abs() < 0.05, "H = {}", f.mean[i]);
                assert!((f.principal[i][0] * eps - 1.0).abs() < 0.05);
                assert!((f.principal[i][1] * eps).abs() < 0.05);
            }
        }
        assert!(seen > 10);
    }

    #[test]
    fn gauss_bonnet() {
        for m in [icosphere(Vec3::zeros(), 1.0, 3).unwrap(), crate::mesh::tests::unit_cube()] {
            assert!((total_angle_defect(&m) - 2.0 * PI * euler_characteristic(&m) as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn polygon_curvature() {
        let m = circle([0.0, 0.0], 2.0, 64).unwrap();
        let f = curve_curvature(&m, &[1.0]).unwrap();
        let turning: f64 = f.mean.iter().zip(&f.vertex_area).map(|(k, w)| k * w).sum();
        assert!((turning - 2.0 * PI).abs() < 1e-12);
        let h = PI / 64.0;
        for k in &f.mean {
            // (2π/m)/(2R sin(π/m))
            assert!((k - (2.0 * h) / (4.0 * h.sin())).abs() < 1e-12);
            assert!((k * 2.0 - 1.0).abs() < 1e-3);
        }
        let sq = curve_curvature(&rectangle(1.0, 1.0).unwrap(), &[1.0]).unwrap();
        let total: f64 = sq.mean.iter().zip(&sq.vertex_area).map(|(k, w)| k * w).sum();
        assert!((total - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn z_of_sphere_about_own_and_shifted_centers() {
        let m = icosphere(Vec3::zeros(), 1.0, 4).unwrap();
        let fit = fit_sphere(&m, FitMethod::BoundaryLeastSquares, &SamplerConfig::default()).unwrap();
        let own = z_field(&m, &fit).unwrap().sup;
        assert!(own < 2e-2);
        // exact-geometry oracle: the radial direction about c against the true normal
        let c = Vec3::new(0.1, 0.0, 0.0);
        let oracle = m
            .vertices()
            .iter()
            .map(|x| ((x - c).normalize() - x.normalize()).norm())
            .fold(0.0, f64::max);
        assert!((oracle - 0.1).abs() < 1e-2);
        let shifted = SphereFit { center: c.into(), ..fit.clone() };
        let z = z_field(&m, &shifted).unwrap();
        assert!((z.sup - oracle).abs() <= own, "{} vs {oracle}", z.sup);
        let on = SphereFit { center: m.vertices()[0].into(), ..fit };
        assert!(matches!(z_field(&m, &on), Err(Error::CenterOnBoundary { .. })));
    }

    #[test]
    fn q_zero_matches_outside_measure() {
        let m = crate::generators::random_star_mesh(7, 3, 0.1).unwrap();
        let fit = fit_sphere(&m, FitMethod::BoundaryLeastSquares, &SamplerConfig::default()).unwrap();
        let f = curvature_field(&m, &[1.0]).unwrap();
        let p = perimeter_unchecked(&m);
        for eta in [0.01, 0.05, 0.1] {
            let a = fit.annulus(eta).unwrap();
            let i0 = outside_annulus_curvature_integral(&m, &f, &a, 0.0).unwrap();
            let frac = outside_fractions(&m, &fit, &[eta])[0];
            assert!((i0 - frac * p).abs() <= 1e-9 * p);
        }
        let ico = icosphere(Vec3::zeros(), 1.0, 3).unwrap();
        let fi = fit_sphere(&ico, FitMethod::BoundaryLeastSquares, &SamplerConfig::default()).unwrap();
        let cf = curvature_field(&ico, &[1.0]).unwrap();
        let v = outside_annulus_curvature_integral(&ico, &cf, &fi.annulus(0.05).unwrap(), 1.0).unwrap();
        assert_eq!(v, 0.0);
    }
}
