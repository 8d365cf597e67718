//! Domain families: spheres, radial graphs, tubes, unions and planar curves.

mod planar;
mod sphere;
mod tubes;

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use planar::{circle, planar_motion, polygon, random_star_polygon, rectangle, star_polygon};
pub use sphere::{ellipsoid, icosphere, polar_sphere, real_harmonic, unit_icosphere, MAX_ICOSPHERE_LEVEL};
pub use tubes::{ring_resolution, spiky_ball, tube_tree_domain, TreeSpec};

use crate::error::{Error, Result};
use crate::mesh::{BoundaryMesh, Vec3};
use crate::sampling::stream_rng;

/// Shape of a radial perturbation `u` of the unit sphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// `Σ c·Y_ℓ^m` with real orthonormal harmonics, ℓ ≤ 4.
    Harmonic { terms: Vec<(u32, i32, f64)> },
    /// The compactly supported `C^{1,1−n/p}` bump centered at the north pole
    /// whose support radius is `δ^{p/(2p−2n+pn)}`, transplanted to the sphere
    /// through the exponential map.
    Sharpness { p: f64, delta_target: f64 },
}

/// Radial graph function: the boundary is `{(1 + amplitude·u(x))x : x ∈ S²}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphFunction {
    pub profile: Profile,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

impl GraphFunction {
    /// `amplitude·Y_ℓ^m`.
    pub fn harmonic(l: u32, m: i32, amplitude: f64) -> Self {
        GraphFunction { profile: Profile::Harmonic { terms: vec![(l, m, 1.0)] }, amplitude }
    }

    pub fn sharpness(p: f64, delta_target: f64) -> Self {
        GraphFunction { profile: Profile::Sharpness { p, delta_target }, amplitude: 1.0 }
    }

    /// Value at a unit vector.
    pub fn eval(&self, x: &Vec3) -> Result<f64> {
        let u = match &self.profile {
            Profile::Harmonic { terms } => {
                let mut s = 0.0;
                for &(l, m, c) in terms {
                    s += c * real_harmonic(l, m, x)?;
                }
                s
            }
            Profile::Sharpness { p, delta_target } => {
                let theta = x.z.clamp(-1.0, 1.0).acos();
                sharpness_profile(2.0, *p, *delta_target, theta)
            }
        };
        Ok(self.amplitude * u)
    }
}

/// Support radius `r = δ^{p/(2p−2n+pn)}` of the sharpness profile.
pub fn sharpness_radius(n: f64, p: f64, delta: f64) -> f64 {
    delta.powf(p / (2.0 * p - 2.0 * n + p * n))
}

/// The sharpness profile `φ(|x|)` on `ℝ^n` at distance `s` from its center.
pub fn sharpness_profile(n: f64, p: f64, delta: f64, s: f64) -> f64 {
    let r = sharpness_radius(n, p, delta);
    let e = 2.0 - n / p;
    let s = s.abs();
    if s >= r {
        0.0
    } else if s >= 0.5 * r {
        (r - s).powf(e) / 3.0
    } else {
        (2.0 * (0.5 * r).powf(e) - s.powf(e)) / 3.0
    }
}

/// Base mesh (unit sphere directions and faces) used for a graph function.
/// Harmonic graphs live on the icosphere; the sharpness bump, whose support
/// shrinks with δ, lives on a polar mesh refined to resolve it.
pub fn graph_base(u: &GraphFunction, level: u32) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    match &u.profile {
        Profile::Harmonic { .. } => unit_icosphere(level),
        Profile::Sharpness { p, delta_target } => {
            let r = sharpness_radius(2.0, *p, *delta_target);
            let coarse = icosphere_edge(level);
            let fine = (r / 24.0).min(coarse);
            polar_sphere(1.25 * r, fine, coarse)
        }
    }
}

/// Typical edge length of the unit icosphere at `level`.
pub fn icosphere_edge(level: u32) -> f64 {
    1.0514622242382672 / f64::from(1u32 << level.min(30))
}

/// Radial graph `{(1 + u(x))x}` over the unit sphere.
pub fn nearly_spherical(u: &GraphFunction, level: u32) -> Result<BoundaryMesh> {
    let (dirs, faces) = graph_base(u, level)?;
    let mut vertices = Vec::with_capacity(dirs.len());
    for d in &dirs {
        let val = u.eval(d)?;
        if !(val.abs() < 0.5) {
            return Err(Error::invalid(format!(
                "graph function reaches |u| = {:.3} >= 1/2; amplitude too large",
                val.abs()
            )));
        }
        vertices.push(d * (1.0 + val));
    }
    Ok(BoundaryMesh::triangles(vertices, faces))
}

/// The unperturbed mesh `nearly_spherical` builds `u` on.
pub fn unperturbed(u: &GraphFunction, level: u32) -> Result<BoundaryMesh> {
    let (dirs, faces) = graph_base(u, level)?;
    Ok(BoundaryMesh::triangles(dirs, faces))
}

/// Concatenation of meshes whose bounding spheres are pairwise disjoint.
pub fn disjoint_union(parts: &[BoundaryMesh]) -> Result<BoundaryMesh> {
    let spheres: Vec<(Vec3, f64)> = parts
        .iter()
        .map(|m| {
            let (lo, hi) = m.bounding_box();
            let c = (lo + hi) * 0.5;
            let r = m.vertices().iter().map(|v| (v - c).norm()).fold(0.0, f64::max);
            (c, r)
        })
        .collect();
    for i in 0..spheres.len() {
        for j in i + 1..spheres.len() {
            if (spheres[i].0 - spheres[j].0).norm() <= spheres[i].1 + spheres[j].1 {
                return Err(Error::invalid(format!("union members {i} and {j} may overlap")));
            }
        }
    }
    BoundaryMesh::concat(parts)
}

/// Unit ball at the origin plus `k` balls of radius `radii[i]/k` centered at
/// distance `2(i+1)` along the x axis.
pub fn satellites(radii: &[f64], level: u32) -> Result<BoundaryMesh> {
    let k = radii.len().max(1) as f64;
    let mut parts = vec![icosphere(Vec3::zeros(), 1.0, level)?];
    for (i, r) in radii.iter().enumerate() {
        parts.push(icosphere(Vec3::new(2.0 * (i + 1) as f64, 0.0, 0.0), r / k, level)?);
    }
    disjoint_union(&parts)
}

/// Two unit balls at distance `separation` between centers.
pub fn two_balls(separation: f64, level: u32) -> Result<BoundaryMesh> {
    disjoint_union(&[
        icosphere(Vec3::new(-0.5 * separation, 0.0, 0.0), 1.0, level)?,
        icosphere(Vec3::new(0.5 * separation, 0.0, 0.0), 1.0, level)?,
    ])
}

/// Random star-shaped mesh: icosphere radially perturbed by a random
/// combination of harmonics of degree 1–4 with `|u| ≤ amplitude`.
pub fn random_star_mesh(seed: u64, level: u32, amplitude: f64) -> Result<BoundaryMesh> {
    if !(0.0..0.5).contains(&amplitude) {
        return Err(Error::invalid("random mesh amplitude must lie in [0, 1/2)"));
    }
    let mut rng = stream_rng(seed, 0, 1);
    let mut terms = Vec::new();
    for l in 1..=4u32 {
        for m in -(l as i32)..=(l as i32) {
            terms.push((l, m, 2.0 * rng.random::<f64>() - 1.0));
        }
    }
    let (dirs, faces) = unit_icosphere(level)?;
    let f = GraphFunction { profile: Profile::Harmonic { terms }, amplitude: 1.0 };
    let raw: Vec<f64> = dirs.iter().map(|d| f.eval(d)).collect::<Result<_>>()?;
    let peak = raw.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(f64::MIN_POSITIVE);
    let vertices = dirs.iter().zip(&raw).map(|(d, u)| d * (1.0 + amplitude * u / peak)).collect();
    Ok(BoundaryMesh::triangles(vertices, faces))
}

/// `count` nearly uniform directions on the sphere (Fibonacci lattice).
pub fn fibonacci_directions(count: usize) -> Vec<Vec3> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            let s = (1.0 - z * z).sqrt();
            let t = golden * i as f64;
            Vec3::new(s * t.cos(), s * t.sin(), z)
        })
        .collect()
}

fn default_level() -> u32 {
    4
}

fn default_segments() -> usize {
    256
}

/// A named family with its parameters, as read from a generator config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum Family {
    Icosphere {
        #[serde(default)]
        center: [f64; 3],
        radius: f64,
    },
    Ellipsoid { axes: [f64; 3] },
    Circle {
        #[serde(default)]
        center: [f64; 2],
        radius: f64,
        #[serde(default = "default_segments")]
        segments: usize,
    },
    Polygon { points: Vec<[f64; 2]> },
    Rectangle { width: f64, height: f64 },
    RandomStarPolygon { seed: u64, vertices: usize, roughness: f64 },
    RandomStarMesh { seed: u64, amplitude: f64 },
    NearlySpherical { u: GraphFunction },
    Harmonic { l: u32, m: i32, amplitude: f64 },
    Sharpness { p: f64, delta_target: f64 },
    TubeTree { ball_radius: f64, tree: TreeSpec },
    SpikyBall { count: usize, height: f64, eps: f64 },
    Satellites { radii: Vec<f64> },
    TwoBalls { separation: f64 },
}

/// Generator config: `{"family": name, "params": {...}, "level": k}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    #[serde(flatten)]
    pub family: Family,
    #[serde(default = "default_level")]
    pub level: u32,
}

impl GeneratorConfig {
    pub fn generate(&self) -> Result<BoundaryMesh> {
        generate(&self.family, self.level)
    }
}

pub fn generate(family: &Family, level: u32) -> Result<BoundaryMesh> {
    let mesh = match family {
        Family::Icosphere { center, radius } => icosphere(Vec3::from(*center), *radius, level)?,
        Family::Ellipsoid { axes } => ellipsoid(Vec3::zeros(), *axes, level)?,
        Family::Circle { center, radius, segments } => circle(*center, *radius, *segments)?,
        Family::Polygon { points } => polygon(points)?,
        Family::Rectangle { width, height } => rectangle(*width, *height)?,
        Family::RandomStarPolygon { seed, vertices, roughness } => {
            random_star_polygon(*seed, *vertices, *roughness)?
        }
        Family::RandomStarMesh { seed, amplitude } => random_star_mesh(*seed, level, *amplitude)?,
        Family::NearlySpherical { u } => nearly_spherical(u, level)?,
        Family::Harmonic { l, m, amplitude } => {
            nearly_spherical(&GraphFunction::harmonic(*l, *m, *amplitude), level)?
        }
        Family::Sharpness { p, delta_target } => {
            nearly_spherical(&GraphFunction::sharpness(*p, *delta_target), level)?
        }
        Family::TubeTree { ball_radius, tree } => tube_tree_domain(*ball_radius, tree, level)?,
        Family::SpikyBall { count, height, eps } => {
            spiky_ball(1.0, &fibonacci_directions(*count), *height, *eps, level)?
        }
        Family::Satellites { radii } => satellites(radii, level)?,
        Family::TwoBalls { separation } => two_balls(*separation, level)?,
    };
    mesh.ensure_valid()?;
    Ok(mesh)
}
