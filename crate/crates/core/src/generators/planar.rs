//! Planar curve families.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::mesh::{BoundaryMesh, Vec3};
use crate::sampling::stream_rng;

/// Regular polygon with `segments` vertices inscribed in the circle.
pub fn circle(center: [f64; 2], radius: f64, segments: usize) -> Result<BoundaryMesh> {
    if segments < 3 {
        return Err(Error::invalid(format!("a closed polygon needs at least 3 segments, got {segments}")));
    }
    if !(radius > 0.0) {
        return Err(Error::invalid(format!("circle radius must be positive, got {radius}")));
    }
    let pts: Vec<[f64; 2]> = (0..segments)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / segments as f64;
            [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
        })
        .collect();
    Ok(BoundaryMesh::polygon(&pts))
}

/// Axis-aligned rectangle, counter-clockwise.
pub fn rectangle(width: f64, height: f64) -> Result<BoundaryMesh> {
    if !(width > 0.0 && height > 0.0) {
        return Err(Error::invalid("rectangle sides must be positive"));
    }
    Ok(BoundaryMesh::polygon(&[[0.0, 0.0], [width, 0.0], [width, height], [0.0, height]]))
}

/// Star-shaped polygon about the origin from radii at given angles.
pub fn star_polygon(angles: &[f64], radii: &[f64]) -> Result<BoundaryMesh> {
    if angles.len() != radii.len() || angles.len() < 3 {
        return Err(Error::invalid("star polygon needs matching angle/radius lists of length >= 3"));
    }
    if radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::invalid("star polygon radii must be positive"));
    }
    let pts: Vec<[f64; 2]> = angles.iter().zip(radii).map(|(t, r)| [r * t.cos(), r * t.sin()]).collect();
    Ok(BoundaryMesh::polygon(&pts))
}

/// Random star-shaped polygon: `vertices` sorted random angles and radii
/// drawn from `[1 − roughness, 1 + roughness]`, deterministic in `seed`.
pub fn random_star_polygon(seed: u64, vertices: usize, roughness: f64) -> Result<BoundaryMesh> {
    if vertices < 3 {
        return Err(Error::invalid("random polygon needs at least 3 vertices"));
    }
    if !(0.0..1.0).contains(&roughness) {
        return Err(Error::invalid("roughness must lie in [0, 1)"));
    }
    let mut rng = stream_rng(seed, 0, 0);
    // jittered angles keep consecutive vertices apart
    let angles: Vec<f64> = (0..vertices)
        .map(|k| 2.0 * PI * (k as f64 + 0.8 * rng.random::<f64>()) / vertices as f64)
        .collect();
    let radii: Vec<f64> =
        (0..vertices).map(|_| 1.0 + roughness * (2.0 * rng.random::<f64>() - 1.0)).collect();
    star_polygon(&angles, &radii)
}

/// Polygon from an explicit vertex list, validated.
pub fn polygon(points: &[[f64; 2]]) -> Result<BoundaryMesh> {
    let m = BoundaryMesh::polygon(points);
    m.ensure_valid()?;
    Ok(m)
}

/// Rotation of a planar mesh about the z axis followed by a translation.
pub fn planar_motion(mesh: &BoundaryMesh, angle: f64, shift: [f64; 2]) -> BoundaryMesh {
    let (s, c) = angle.sin_cos();
    mesh.map_vertices(|v| Vec3::new(c * v.x - s * v.y + shift[0], s * v.x + c * v.y + shift[1], 0.0))
}
