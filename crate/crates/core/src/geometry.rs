//! Bulk measures: enclosed volume, perimeter, isoperimetric ratio and deficit.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{AmbientDim, BoundaryMesh, Defect, ElementPoints, Vec3};

/// Volume of the unit ball in the ambient space.
pub fn unit_ball_volume(dim: AmbientDim) -> f64 {
    match dim {
        AmbientDim::Two => PI,
        AmbientDim::Three => 4.0 * PI / 3.0,
    }
}

/// Area of the unit sphere `S^n` (circumference of the unit circle for n = 1).
pub fn unit_sphere_area(dim: AmbientDim) -> f64 {
    (dim.ambient() as f64) * unit_ball_volume(dim)
}

/// Isoperimetric ratio of the unit ball, `(n+1)|B|^{1/(n+1)}`.
pub fn ball_iso_ratio(dim: AmbientDim) -> f64 {
    let np1 = dim.ambient() as f64;
    np1 * unit_ball_volume(dim).powf(1.0 / np1)
}

/// Radius of the ball with the given volume.
pub fn volume_radius(dim: AmbientDim, volume: f64) -> f64 {
    (volume / unit_ball_volume(dim)).powf(1.0 / dim.ambient() as f64)
}

/// Signed enclosed volume without validation.
///
/// Cone volumes are taken from the bounding-box center rather than the
/// origin; the result is the same in exact arithmetic but the rounding error
/// no longer grows with the distance of the mesh from the origin.
pub fn signed_volume(mesh: &BoundaryMesh) -> f64 {
    let (lo, hi) = mesh.bounding_box();
    let o = (lo + hi) * 0.5;
    let v = mesh.vertices();
    match mesh.dim() {
        AmbientDim::Two => {
            let s: f64 = mesh
                .segments()
                .iter()
                .map(|&[a, b]| {
                    let (p, q) = (v[a] - o, v[b] - o);
                    p.x * q.y - p.y * q.x
                })
                .sum();
            0.5 * s
        }
        AmbientDim::Three => {
            let s: f64 = mesh
                .tris()
                .iter()
                .map(|&[a, b, c]| (v[a] - o).dot(&(v[b] - o).cross(&(v[c] - o))))
                .sum();
            s / 6.0
        }
    }
}

/// Centroid of the enclosed region via the divergence theorem.
pub fn volume_centroid_unchecked(mesh: &BoundaryMesh) -> (f64, Vec3) {
    let (lo, hi) = mesh.bounding_box();
    let o = (lo + hi) * 0.5;
    let v = mesh.vertices();
    let mut vol = 0.0;
    let mut m = Vec3::zeros();
    match mesh.dim() {
        AmbientDim::Two => {
            for &[a, b] in mesh.segments() {
                let (p, q) = (v[a] - o, v[b] - o);
                let w = 0.5 * (p.x * q.y - p.y * q.x);
                vol += w;
                m += (p + q) * (w / 3.0);
            }
        }
        AmbientDim::Three => {
            for &[a, b, c] in mesh.tris() {
                let (p, q, r) = (v[a] - o, v[b] - o, v[c] - o);
                let w = p.dot(&q.cross(&r)) / 6.0;
                vol += w;
                m += (p + q + r) * (w / 4.0);
            }
        }
    }
    (vol, o + m / vol)
}

/// Exact signed volume (area in 2D) of the region bounded by a valid mesh.
pub fn enclosed_volume(mesh: &BoundaryMesh) -> Result<f64> {
    mesh.ensure_valid()?;
    Ok(signed_volume(mesh))
}

pub fn perimeter_unchecked(mesh: &BoundaryMesh) -> f64 {
    (0..mesh.num_elements()).map(|e| mesh.element_measure(e)).sum()
}

/// Total boundary measure: length in 2D, area in 3D.
pub fn perimeter(mesh: &BoundaryMesh) -> Result<f64> {
    mesh.ensure_valid()?;
    Ok(perimeter_unchecked(mesh))
}

/// Bulk measures and the isoperimetric deficit of a domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsoperimetricSummary {
    pub volume: f64,
    pub perimeter: f64,
    pub iso_ratio: f64,
    pub deficit: f64,
    /// Radius of the ball with the same volume.
    pub radius: f64,
    pub component_count: usize,
}

impl IsoperimetricSummary {
    fn from_measures(dim: AmbientDim, volume: f64, perimeter: f64, components: usize) -> Self {
        let n = dim.n() as f64;
        let iso_ratio = perimeter / volume.powf(n / (n + 1.0));
        IsoperimetricSummary {
            volume,
            perimeter,
            iso_ratio,
            deficit: iso_ratio / ball_iso_ratio(dim) - 1.0,
            radius: volume_radius(dim, volume),
            component_count: components,
        }
    }
}

/// Volume, perimeter, isoperimetric ratio `P/|Ω|^{n/(n+1)}`, deficit and
/// volume radius.
pub fn isoperimetric_summary(mesh: &BoundaryMesh) -> Result<IsoperimetricSummary> {
    match mesh.validate().as_slice() {
        [] => {}
        [Defect::NonPositiveVolume { volume }] => return Err(Error::NonPositiveVolume(*volume)),
        d => return Err(Error::InvalidMesh(d.to_vec())),
    }
    Ok(summary_unchecked(mesh))
}

pub(crate) fn summary_unchecked(mesh: &BoundaryMesh) -> IsoperimetricSummary {
    IsoperimetricSummary::from_measures(
        mesh.dim(),
        signed_volume(mesh),
        perimeter_unchecked(mesh),
        mesh.component_count(),
    )
}

/// The closed shell `{x : ||x − center| − radius| ≤ radius·width_ratio}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusSpec {
    pub center: [f64; 3],
    pub radius: f64,
    pub width_ratio: f64,
}

impl AnnulusSpec {
    pub fn new(center: Vec3, radius: f64, width_ratio: f64) -> Result<Self> {
        if !(width_ratio >= 0.0) || !(radius > 0.0) {
            return Err(Error::invalid(format!(
                "annulus needs radius > 0 and width ratio >= 0 (got {radius}, {width_ratio})"
            )));
        }
        Ok(AnnulusSpec { center: center.into(), radius, width_ratio })
    }

    pub fn center(&self) -> Vec3 {
        Vec3::from(self.center)
    }

    /// Signed radial excess `||x − c| − R| − Rη`; non-positive inside the shell.
    pub fn excess(&self, x: &Vec3) -> f64 {
        ((x - self.center()).norm() - self.radius).abs() - self.radius * self.width_ratio
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        self.excess(x) <= 0.0
    }
}

/// Angle defect sum over vertices, `Σ (2π − Σ corner angles)`.
pub fn total_angle_defect(mesh: &BoundaryMesh) -> f64 {
    let mut angle = vec![0.0; mesh.vertices().len()];
    for (e, t) in mesh.tris().iter().enumerate() {
        if let ElementPoints::Triangle(p) = mesh.element_points(e) {
            for k in 0..3 {
                let u = p[(k + 1) % 3] - p[k];
                let w = p[(k + 2) % 3] - p[k];
                angle[t[k]] += u.cross(&w).norm().atan2(u.dot(&w));
            }
        }
    }
    angle.iter().map(|a| 2.0 * PI - a).sum()
}

/// Euler characteristic `V − E + F` of a triangle mesh.
pub fn euler_characteristic(mesh: &BoundaryMesh) -> i64 {
    let f = mesh.tris().len() as i64;
    // closed manifold: every edge is shared by two faces
    let e = 3 * f / 2;
    mesh.vertices().len() as i64 - e + f
}
