//! Numerical laboratory for quantitative stability of the isoperimetric
//! inequality on discretized domains.
//!
//! Domains are closed piecewise-linear boundaries: polygons in the plane and
//! oriented triangle meshes in space. Every quantity that enters the
//! stability estimates (deficit, Fraenkel asymmetry, Hausdorff, Lipschitz and
//! Preiss distances to the model sphere, discrete mean curvature and the
//! first Laplace–Beltrami eigenvalue) is computed here, and the
//! [`experiments`] module sweeps parametrized families to fit exponents and
//! evaluate inequality checks.

pub mod bvh;
pub mod clip2d;
pub mod curvature;
pub mod distances;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod generators;
pub mod geometry;
pub mod io;
pub mod measures;
pub mod mesh;
pub mod optimize;
pub mod sampling;
pub mod spectral;
pub mod winding;

pub use error::{Error, Result};
pub use geometry::{
    enclosed_volume, isoperimetric_summary, perimeter, AnnulusSpec, IsoperimetricSummary,
};
pub use mesh::{AmbientDim, BoundaryMesh, Cells, Defect, Vec3};
