//! Hausdorff, Lipschitz and Preiss distances between boundaries and
//! model spheres.

mod netsimplex;
mod preiss;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rstar::primitives::GeomWithData;
use rstar::RTree;
use serde::{Deserialize, Serialize};

pub use netsimplex::{NetworkSimplex, Status as FlowStatus};
pub use preiss::{preiss_distance, DiscreteMeasure, PreissResult, DEFAULT_MAX_ATOMS};
pub use crate::winding::{point_in_solid, PointClass};

use crate::bvh::Bvh;
use crate::error::{Error, Result};
use crate::exec;
use crate::generators::unit_icosphere;
use crate::geometry::AnnulusSpec;
use crate::measures::SphereFit;
use crate::mesh::{AmbientDim, BoundaryMesh, ElementPoints, Vec3};

type Indexed = GeomWithData<[f64; 3], usize>;

/// Finite point sample of a set; every point of the underlying set lies
/// within `sampling_radius` of a sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledSet {
    pub points: Vec<[f64; 3]>,
    pub sampling_radius: f64,
}

impl SampledSet {
    pub fn new(points: Vec<[f64; 3]>, sampling_radius: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("sampled set is empty"));
        }
        if !(sampling_radius >= 0.0) {
            return Err(Error::invalid("sampling radius must be nonnegative"));
        }
        Ok(SampledSet { points, sampling_radius })
    }

    /// Vertices of a uniform refinement of every element, fine enough that
    /// refined edges are at most `h`. The certified radius is the longest
    /// refined edge: each point of a sub-element is that close to one of
    /// its corners.
    pub fn from_mesh(mesh: &BoundaryMesh, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::invalid("sampling spacing must be positive"));
        }
        let per = exec::map_range(mesh.num_elements(), |e| refine_points(&mesh.element_points(e), h));
        let mut points = Vec::new();
        let mut radius = 0.0f64;
        for (pts, r) in per {
            points.extend(pts.into_iter().map(<[f64; 3]>::from));
            radius = radius.max(r);
        }
        Self::new(points, radius)
    }

    /// Vertices of a projected icosphere (or regular polygon in 2D) on the
    /// sphere `S_center(radius)` with spacing at most `h`.
    pub fn sphere(dim: AmbientDim, center: &Vec3, radius: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && radius > 0.0) {
            return Err(Error::invalid("sphere sampling needs positive radius and spacing"));
        }
        match dim {
            AmbientDim::Two => {
                let m = ((2.0 * std::f64::consts::PI * radius / h).ceil() as usize).max(8);
                let step = 2.0 * std::f64::consts::PI / m as f64;
                let pts = (0..m)
                    .map(|k| {
                        let t = step * k as f64;
                        (center + Vec3::new(t.cos(), t.sin(), 0.0) * radius).into()
                    })
                    .collect();
                // a point on an arc is within half a chord of an end
                Self::new(pts, radius * (step / 2.0).sin() * 2.0)
            }
            AmbientDim::Three => {
                let mut level = 0;
                // longest edge of a projected icosphere is below 1.2/2^level
                while 1.2 * radius / 2f64.powi(level as i32) > h && level < crate::generators::MAX_ICOSPHERE_LEVEL {
                    level += 1;
                }
                let (v, f) = unit_icosphere(level)?;
                let mut edge = 0.0f64;
                for t in &f {
                    for k in 0..3 {
                        edge = edge.max((v[t[k]] - v[t[(k + 1) % 3]]).norm());
                    }
                }
                Self::new(v.iter().map(|x| (center + x * radius).into()).collect(), edge * radius)
            }
        }
    }

    fn tree(&self) -> RTree<Indexed> {
        RTree::bulk_load(self.points.iter().enumerate().map(|(i, p)| Indexed::new(*p, i)).collect())
    }
}

fn refine_points(el: &ElementPoints, h: f64) -> (Vec<Vec3>, f64) {
    match el {
        ElementPoints::Segment([a, b]) => {
            let len = (b - a).norm();
            let s = ((len / h).ceil() as usize).max(1);
            ((0..=s).map(|k| a + (b - a) * (k as f64 / s as f64)).collect(), len / s as f64)
        }
        ElementPoints::Triangle([a, b, c]) => {
            let longest = (b - a).norm().max((c - b).norm()).max((a - c).norm());
            let s = ((longest / h).ceil() as usize).max(1);
            let mut pts = Vec::with_capacity((s + 1) * (s + 2) / 2);
            for i in 0..=s {
                for j in 0..=(s - i) {
                    let (u, v) = (i as f64 / s as f64, j as f64 / s as f64);
                    pts.push(a + (b - a) * u + (c - a) * v);
                }
            }
            (pts, longest / s as f64)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HausdorffEstimate {
    pub value: f64,
    /// Bound on `|value − d_H|` against the underlying continuous sets.
    pub error_bound: f64,
    /// `sup_{a∈A} d(a, B)` and `sup_{b∈B} d(b, A)`.
    pub directed: [f64; 2],
}

/// Exact Hausdorff distance between the point sets; the error bound
/// against the underlying sets is `h_a + h_b`.
pub fn hausdorff_distance(a: &SampledSet, b: &SampledSet) -> Result<HausdorffEstimate> {
    if a.points.is_empty() || b.points.is_empty() {
        return Err(Error::invalid("Hausdorff distance of an empty set"));
    }
    let (ta, tb) = (a.tree(), b.tree());
    let directed = |from: &SampledSet, to: &RTree<Indexed>| {
        exec::map_slice(&from.points, |p| {
            let q = to.nearest_neighbor(p).expect("nonempty tree");
            (Vec3::from(*q.geom()) - Vec3::from(*p)).norm()
        })
        .into_iter()
        .fold(0.0, f64::max)
    };
    let ab = directed(a, &tb);
    let ba = directed(b, &ta);
    Ok(HausdorffEstimate { value: ab.max(ba), error_bound: a.sampling_radius + b.sampling_radius, directed: [ab, ba] })
}

/// Max-heap entry keyed by an upper bound.
struct Piece<T> {
    upper: f64,
    item: T,
}

impl<T> PartialEq for Piece<T> {
    fn eq(&self, other: &Self) -> bool {
        self.upper == other.upper
    }
}
impl<T> Eq for Piece<T> {}
impl<T> PartialOrd for Piece<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Piece<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.upper.total_cmp(&other.upper)
    }
}

/// `sup` of a 1-Lipschitz function over a union of simplices, certified to
/// `tol` by branch and bound. `split` halves a piece; `probe` returns a
/// point of the piece and a radius covering it.
fn lipschitz_sup<T>(
    pieces: Vec<T>,
    f: &(impl Fn(&Vec3) -> f64 + Sync),
    probe: impl Fn(&T) -> (Vec3, f64),
    split: impl Fn(&T) -> Vec<T>,
    corners: impl Fn(&T) -> Vec<Vec3>,
    tol: f64,
) -> f64 {
    let mut lower = 0.0f64;
    let mut heap = BinaryHeap::new();
    for p in pieces {
        for c in corners(&p) {
            lower = lower.max(f(&c));
        }
        let (x, r) = probe(&p);
        let fx = f(&x);
        lower = lower.max(fx);
        heap.push(Piece { upper: fx + r, item: p });
    }
    while let Some(top) = heap.pop() {
        if top.upper <= lower + tol {
            break;
        }
        for child in split(&top.item) {
            let (x, r) = probe(&child);
            let fx = f(&x);
            lower = lower.max(fx);
            if fx + r > lower + tol {
                heap.push(Piece { upper: fx + r, item: child });
            }
        }
    }
    lower
}

fn element_pieces(mesh: &BoundaryMesh) -> Vec<Vec<Vec3>> {
    (0..mesh.num_elements()).map(|e| mesh.element_points(e).points().to_vec()).collect()
}

fn flat_probe(p: &Vec<Vec3>) -> (Vec3, f64) {
    let c = p.iter().sum::<Vec3>() / p.len() as f64;
    let r = p.iter().map(|v| (v - c).norm()).fold(0.0, f64::max);
    (c, r)
}

fn flat_split(p: &Vec<Vec3>) -> Vec<Vec<Vec3>> {
    if p.len() == 2 {
        let m = (p[0] + p[1]) * 0.5;
        return vec![vec![p[0], m], vec![m, p[1]]];
    }
    let (a, b, c) = (p[0], p[1], p[2]);
    let (ab, bc, ca) = ((a + b) * 0.5, (b + c) * 0.5, (c + a) * 0.5);
    vec![vec![a, ab, ca], vec![ab, b, bc], vec![ca, bc, c], vec![ab, bc, ca]]
}

/// Pieces of the unit sphere (or circle) as unit-vector simplices.
fn sphere_pieces(dim: AmbientDim) -> Vec<Vec<Vec3>> {
    match dim {
        AmbientDim::Two => (0..64)
            .map(|k| {
                let t0 = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
                let t1 = 2.0 * std::f64::consts::PI * (k + 1) as f64 / 64.0;
                vec![Vec3::new(t0.cos(), t0.sin(), 0.0), Vec3::new(t1.cos(), t1.sin(), 0.0)]
            })
            .collect(),
        AmbientDim::Three => {
            let (v, f) = unit_icosphere(2).expect("level 2 is valid");
            f.iter().map(|t| vec![v[t[0]], v[t[1]], v[t[2]]]).collect()
        }
    }
}

/// Geodesically convex pieces are covered by the cap about the projected
/// centroid that reaches the corners.
fn sphere_probe(center: Vec3, radius: f64) -> impl Fn(&Vec<Vec3>) -> (Vec3, f64) {
    move |p| {
        let m = p.iter().sum::<Vec3>().normalize();
        let r = p.iter().map(|v| (v - m).norm()).fold(0.0, f64::max);
        (center + m * radius, r * radius)
    }
}

fn sphere_split(p: &Vec<Vec3>) -> Vec<Vec<Vec3>> {
    flat_split(p).into_iter().map(|q| q.into_iter().map(|v| v.normalize()).collect()).collect()
}

pub const MODEL_TOLERANCE: f64 = 1e-3;

/// `d_H(∂Ω, S_{x_Ω}(R_Ω) ∪ extra)`, with both one-sided suprema certified
/// by branch and bound to `R_Ω·1e−3`: distances to the sphere, to the
/// extra points and to the mesh are all 1-Lipschitz.
pub fn hausdorff_to_model(mesh: &BoundaryMesh, fit: &SphereFit, extra: &[Vec3]) -> Result<HausdorffEstimate> {
    mesh.ensure_valid()?;
    let c = fit.center();
    let r = fit.radius;
    let tol = r * MODEL_TOLERANCE;
    let extra_tree: Option<RTree<Indexed>> = (!extra.is_empty())
        .then(|| RTree::bulk_load(extra.iter().enumerate().map(|(i, p)| Indexed::new((*p).into(), i)).collect()));
    let to_model = |x: &Vec3| {
        let mut d = ((x - c).norm() - r).abs();
        if let Some(t) = &extra_tree {
            let q = t.nearest_neighbor(&(*x).into()).expect("nonempty");
            d = d.min((Vec3::from(*q.geom()) - x).norm());
        }
        d
    };
    let mesh_to_model = lipschitz_sup(element_pieces(mesh), &to_model, flat_probe, flat_split, |p| p.clone(), tol);

    let bvh = Bvh::new(mesh);
    let to_mesh = |x: &Vec3| bvh.distance(x);
    let probe = sphere_probe(c, r);
    let sphere_to_mesh = lipschitz_sup(
        sphere_pieces(mesh.dim()),
        &to_mesh,
        probe,
        sphere_split,
        |p| p.iter().map(|v| c + v * r).collect(),
        tol,
    );
    let extra_to_mesh = extra.iter().map(|p| bvh.distance(p)).fold(0.0, f64::max);
    let back = sphere_to_mesh.max(extra_to_mesh);
    Ok(HausdorffEstimate { value: mesh_to_model.max(back), error_bound: tol, directed: [mesh_to_model, back] })
}

/// `d_H(∂Ω ∩ A_η, S_{x_Ω}(R_Ω))` for the annulus of the fit. The boundary
/// part is sampled at spacing `R_Ω·1e−2`; the error bound adds that
/// spacing to the branch-and-bound tolerance.
pub fn hausdorff_in_annulus(mesh: &BoundaryMesh, fit: &SphereFit, eta: f64) -> Result<HausdorffEstimate> {
    mesh.ensure_valid()?;
    let annulus = AnnulusSpec::new(fit.center(), fit.radius, eta)?;
    let c = fit.center();
    let r = fit.radius;
    let samples = SampledSet::from_mesh(mesh, r * 1e-2)?;
    let kept: Vec<[f64; 3]> =
        samples.points.iter().copied().filter(|p| annulus.contains(&Vec3::from(*p))).collect();
    if kept.is_empty() {
        return Err(Error::invalid("the boundary does not meet the annulus"));
    }
    let forward = kept.iter().map(|p| ((Vec3::from(*p) - c).norm() - r).abs()).fold(0.0, f64::max);
    let tree = RTree::bulk_load(kept.iter().enumerate().map(|(i, p)| Indexed::new(*p, i)).collect());
    let to_part = |x: &Vec3| {
        let q: &Indexed = tree.nearest_neighbor(&(*x).into()).expect("nonempty");
        (Vec3::from(*q.geom()) - x).norm()
    };
    let tol = r * MODEL_TOLERANCE;
    let back = lipschitz_sup(
        sphere_pieces(mesh.dim()),
        &to_part,
        sphere_probe(c, r),
        sphere_split,
        |p| p.iter().map(|v| c + v * r).collect(),
        tol,
    );
    Ok(HausdorffEstimate {
        value: forward.max(back),
        error_bound: tol + samples.sampling_radius,
        directed: [forward, back],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEstimate {
    /// `|ln dil F| + |ln dil F⁻¹|`.
    pub value: f64,
    pub dilation: f64,
    pub inverse_dilation: f64,
    /// Longest element edge; the estimate carries an `O(h)` error.
    pub mesh_size: f64,
}

/// Lipschitz distance between `∂Ω` and the model sphere through the radial
/// map `F(x) = x_Ω + R_Ω(x − x_Ω)/|x − x_Ω|`. On each element the affine
/// parametrization is composed with `dF` at the barycenter,
/// `dF_x(u) = (R/|x|)(u − ⟨x̂, u⟩x̂)`, whose singular values bound the
/// local stretching of `F` and `F⁻¹`.
pub fn lipschitz_distance_to_sphere(mesh: &BoundaryMesh, fit: &SphereFit) -> Result<LipschitzEstimate> {
    mesh.ensure_valid()?;
    let c = fit.center();
    let r = fit.radius;
    let per: Vec<Result<(f64, f64, f64)>> = exec::map_range(mesh.num_elements(), |e| {
        let el = mesh.element_points(e);
        let pts = el.points();
        let b = el.centroid() - c;
        let dist = b.norm();
        let nu = el.normal().normalize();
        let rhat = b / dist;
        let transversality = nu.dot(&rhat);
        // the radial ray must cross the element outward exactly once
        if !(transversality > 1e-6) {
            return Err(Error::NotStarShaped { element: e, transversality });
        }
        let d_f = |u: &Vec3| (u - rhat * rhat.dot(u)) * (r / dist);
        let (smax, smin, h) = match pts.len() {
            2 => {
                let t = pts[1] - pts[0];
                let h = t.norm();
                let s = d_f(&(t / h)).norm();
                (s, s, h)
            }
            _ => {
                let e1 = (pts[1] - pts[0]).normalize();
                let e2 = nu.cross(&e1);
                let (a1, a2) = (d_f(&e1), d_f(&e2));
                // singular values of the 3×2 matrix [a1 a2]
                let g = nalgebra::Matrix2::new(a1.dot(&a1), a1.dot(&a2), a1.dot(&a2), a2.dot(&a2));
                let tr = g.trace();
                let det = g.determinant();
                let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
                let h = (pts[1] - pts[0]).norm().max((pts[2] - pts[1]).norm()).max((pts[0] - pts[2]).norm());
                ((0.5 * tr + disc).sqrt(), (0.5 * tr - disc).max(0.0).sqrt(), h)
            }
        };
        Ok((smax, smin, h))
    });
    let mut dil = 0.0f64;
    let mut inv = 0.0f64;
    let mut h = 0.0f64;
    for p in per {
        let (smax, smin, hh) = p?;
        dil = dil.max(smax);
        inv = inv.max(1.0 / smin);
        h = h.max(hh);
    }
    Ok(LipschitzEstimate { value: dil.ln().abs() + inv.ln().abs(), dilation: dil, inverse_dilation: inv, mesh_size: h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{icosphere, nearly_spherical, GraphFunction};
    use crate::measures::{fit_sphere, FitMethod};
    use crate::sampling::SamplerConfig;

    fn fit(m: &BoundaryMesh) -> SphereFit {
        fit_sphere(m, FitMethod::BoundaryLeastSquares, &SamplerConfig::default()).unwrap()
    }

    #[test]
    fn point_set_examples() {
        let a = SampledSet::new(vec![[0.0; 3]], 0.0).unwrap();
        let b = SampledSet::new(vec![[3.0, 4.0, 0.0]], 0.0).unwrap();
        assert_eq!(hausdorff_distance(&a, &b).unwrap().value, 5.0);
        assert_eq!(hausdorff_distance(&a, &a).unwrap().value, 0.0);
        assert!(SampledSet::new(vec![], 0.0).is_err());
    }

    #[test]
    fn concentric_spheres() {
        let a = SampledSet::sphere(AmbientDim::Three, &Vec3::zeros(), 1.0, 0.05).unwrap();
        let b = SampledSet::sphere(AmbientDim::Three, &Vec3::zeros(), 1.2, 0.05).unwrap();
        let d = hausdorff_distance(&a, &b).unwrap();
        assert!((d.value - 0.2).abs() <= d.error_bound, "{d:?}");
    }

    #[test]
    fn icosphere_to_own_model() {
        let m = icosphere(Vec3::new(0.5, 0.0, 0.0), 2.0, 4).unwrap();
        let f = fit(&m);
        let d = hausdorff_to_model(&m, &f, &[]).unwrap();
        assert!(d.value < 2e-3 * f.radius, "{d:?}");
        // the sampled variant agrees within its bound
        let s = SampledSet::from_mesh(&m, 0.02).unwrap();
        let t = SampledSet::sphere(AmbientDim::Three, &f.center(), f.radius, 0.02).unwrap();
        let e = hausdorff_distance(&s, &t).unwrap();
        assert!((e.value - d.value).abs() <= e.error_bound + d.error_bound);
    }

    #[test]
    fn lipschitz_of_spheres_is_scale_free() {
        let m = icosphere(Vec3::zeros(), 1.0, 4).unwrap();
        let a = lipschitz_distance_to_sphere(&m, &fit(&m)).unwrap();
        assert!(a.value < 5e-3, "{a:?}");
        let s = m.scaled(2.0);
        let b = lipschitz_distance_to_sphere(&s, &fit(&s)).unwrap();
        assert!((a.value - b.value).abs() < 1e-9);
    }

    #[test]
    fn lipschitz_rejects_non_star_shaped() {
        let m = icosphere(Vec3::zeros(), 1.0, 2).unwrap();
        let far = SphereFit { center: [3.0, 0.0, 0.0], ..fit(&m) };
        assert!(matches!(lipschitz_distance_to_sphere(&m, &far), Err(Error::NotStarShaped { .. })));
    }

    #[test]
    fn first_order_agreement_on_graphs() {
        // d_H ≈ R‖u‖_∞ for small harmonic graphs
        for a in [0.0125, 0.025, 0.05] {
            let u = GraphFunction::harmonic(2, 0, a);
            let m = nearly_spherical(&u, 4).unwrap();
            let f = fit(&m);
            let d = hausdorff_to_model(&m, &f, &[]).unwrap();
            let sup_u = m.vertices().iter().map(|v| ((v - f.center()).norm() / f.radius - 1.0).abs()).fold(0.0, f64::max);
            assert!((d.value / (f.radius * sup_u) - 1.0).abs() < 0.1, "a = {a}: {} vs {}", d.value, f.radius * sup_u);
        }
    }
}
