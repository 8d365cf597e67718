//! Stability measurements: sphere fit, Fraenkel asymmetry, annulus
//! concentration, boundary densities and test-function discrepancies.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::clip2d;
use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{
    perimeter_unchecked, signed_volume, summary_unchecked, unit_ball_volume, unit_sphere_area,
    volume_centroid_unchecked, volume_radius, AnnulusSpec,
};
use crate::mesh::{AmbientDim, BoundaryMesh, ElementPoints, Vec3};
use crate::optimize::NelderMead;
use crate::sampling::{stream_rng, uniform_in_box, SamplerConfig};
use crate::winding::Classifier;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    VolumeCentroid,
    BoundaryLeastSquares,
    AsymmetryRefined,
}

impl std::str::FromStr for FitMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centroid" | "volume-centroid" => Ok(FitMethod::VolumeCentroid),
            "boundary" | "boundary-least-squares" => Ok(FitMethod::BoundaryLeastSquares),
            "asymmetry" | "asymmetry-refined" => Ok(FitMethod::AsymmetryRefined),
            other => Err(Error::invalid(format!("unknown fit method '{other}'"))),
        }
    }
}

/// Model sphere: fitted center, volume-pinned radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereFit {
    pub center: [f64; 3],
    pub radius: f64,
    /// `(1/P) ∫ ||x − center| − radius| dHⁿ`.
    pub l1_boundary_gap: f64,
    pub method: FitMethod,
}

impl SphereFit {
    pub fn center(&self) -> Vec3 {
        Vec3::from(self.center)
    }

    pub fn annulus(&self, eta: f64) -> Result<AnnulusSpec> {
        AnnulusSpec::new(self.center(), self.radius, eta)
    }
}

fn require_positive_volume(mesh: &BoundaryMesh) -> Result<f64> {
    mesh.ensure_valid()?;
    let v = signed_volume(mesh);
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::NonPositiveVolume(v))
    }
}

/// Area weights per vertex: a third of each adjacent triangle (3D) or half
/// of each adjacent segment (2D).
pub fn barycentric_vertex_weights(mesh: &BoundaryMesh) -> Vec<f64> {
    let mut w = vec![0.0; mesh.vertices().len()];
    match mesh.dim() {
        AmbientDim::Two => {
            for (e, s) in mesh.segments().iter().enumerate() {
                let l = mesh.element_measure(e);
                w[s[0]] += 0.5 * l;
                w[s[1]] += 0.5 * l;
            }
        }
        AmbientDim::Three => {
            for (e, t) in mesh.tris().iter().enumerate() {
                let a = mesh.element_measure(e) / 3.0;
                for &i in t {
                    w[i] += a;
                }
            }
        }
    }
    w
}

/// Area-weighted mean of element centroids, `(1/P) ∫ x dHⁿ`.
pub fn boundary_moment(mesh: &BoundaryMesh) -> Result<Vec3> {
    mesh.ensure_valid()?;
    Ok(boundary_moment_unchecked(mesh))
}

pub(crate) fn boundary_moment_unchecked(mesh: &BoundaryMesh) -> Vec3 {
    let (lo, hi) = mesh.bounding_box();
    let o = (lo + hi) * 0.5;
    let mut s = Vec3::zeros();
    let mut total = 0.0;
    for e in 0..mesh.num_elements() {
        let a = mesh.element_measure(e);
        s += (mesh.element_centroid(e) - o) * a;
        total += a;
    }
    o + s / total
}

/// Fits the model sphere. The radius is always the volume radius; only
/// the center depends on `method`.
pub fn fit_sphere(mesh: &BoundaryMesh, method: FitMethod, sampler: &SamplerConfig) -> Result<SphereFit> {
    let volume = require_positive_volume(mesh)?;
    let radius = volume_radius(mesh.dim(), volume);
    let center = match method {
        FitMethod::VolumeCentroid => volume_centroid_unchecked(mesh).1,
        FitMethod::BoundaryLeastSquares => least_squares_center(mesh, radius)?,
        FitMethod::AsymmetryRefined => {
            let start = least_squares_center(mesh, radius)?;
            let sd = SymDiff::new(mesh, volume, sampler)?;
            refine_center(&sd, &start, radius).0
        }
    };
    Ok(SphereFit {
        center: center.into(),
        radius,
        l1_boundary_gap: l1_boundary_gap(mesh, &center, radius),
        method,
    })
}

/// Gauss–Newton for `min_c Σ w_i (|v_i − c| − R)²` with vertex-area weights,
/// started at the volume centroid, in coordinates relative to it.
///
/// A damped phase (step halving on increase) runs until the objective stops
/// ranking steps, which happens around `√ε` relative accuracy in the center.
/// Plain Gauss–Newton steps then polish the center to rounding level for as
/// long as they contract, so the fit moves with the mesh under rigid motions.
/// Growing steps mean a saddle (two equal balls) and end the polish.
fn least_squares_center(mesh: &BoundaryMesh, radius: f64) -> Result<Vec3> {
    let w = barycentric_vertex_weights(mesh);
    let origin = volume_centroid_unchecked(mesh).1;
    let v: Vec<Vec3> = mesh.vertices().iter().map(|p| p - origin).collect();
    let planar = mesh.dim() == AmbientDim::Two;
    let objective = |c: &Vec3| -> f64 {
        v.iter().zip(&w).map(|(p, wi)| wi * ((p - c).norm() - radius).powi(2)).sum()
    };
    let gauss_newton = |c: &Vec3| -> Option<Vec3> {
        let mut jtj = nalgebra::Matrix3::<f64>::zeros();
        let mut jtr = Vec3::zeros();
        for (p, wi) in v.iter().zip(&w) {
            let d = p - c;
            let n = d.norm();
            if n == 0.0 {
                continue;
            }
            let j = -d / n;
            jtj += j * j.transpose() * *wi;
            jtr += j * (*wi * (n - radius));
        }
        if planar {
            jtj[(2, 2)] = 1.0;
            jtr.z = 0.0;
        }
        jtj.try_inverse().map(|inv| -(inv * jtr))
    };
    let singular = |c: &Vec3, iterations: usize| Error::NonConvergence {
        what: "boundary least-squares center",
        iterations,
        residual: f64::NAN,
        best: Some((origin + c).iter().copied().collect()),
    };

    let mut c = Vec3::zeros();
    let mut f = objective(&c);
    let mut damped_done = false;
    for it in 0..10_000 {
        let mut step = gauss_newton(&c).ok_or_else(|| singular(&c, it))?;
        let mut accepted = false;
        for _ in 0..60 {
            let trial = c + step;
            let ft = objective(&trial);
            if ft <= f {
                c = trial;
                f = ft;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted || step.norm() <= 1e-10 * radius {
            damped_done = true;
            break;
        }
    }
    if !damped_done {
        return Err(Error::NonConvergence {
            what: "boundary least-squares center",
            iterations: 10_000,
            residual: f,
            best: Some((origin + c).iter().copied().collect()),
        });
    }
    let mut last = f64::INFINITY;
    for _ in 0..100 {
        let Some(step) = gauss_newton(&c) else { break };
        let n = step.norm();
        if !(n < last) {
            break;
        }
        c += step;
        last = n;
        if n <= 4.0 * f64::EPSILON * radius {
            break;
        }
    }
    Ok(origin + c)
}

/// `(1/P) ∫ ||x − c| − R| dHⁿ`, integrated per element with the kink of
/// the absolute value resolved by subdivision.
pub fn l1_boundary_gap(mesh: &BoundaryMesh, center: &Vec3, radius: f64) -> f64 {
    let g = |x: &Vec3| (x - center).norm() - radius;
    let per: Vec<f64> = exec::map_range(mesh.num_elements(), |e| match mesh.element_points(e) {
        ElementPoints::Segment([a, b]) => abs_integral_segment(&g, &a, &b, 0),
        ElementPoints::Triangle([a, b, c]) => abs_integral_triangle(&g, &a, &b, &c, 0),
    });
    per.iter().sum::<f64>() / perimeter_unchecked(mesh)
}

const GAUSS3: [(f64, f64); 3] = [
    (0.1127016653792583, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.8872983346207417, 5.0 / 18.0),
];

fn abs_integral_segment(g: &impl Fn(&Vec3) -> f64, a: &Vec3, b: &Vec3, depth: u32) -> f64 {
    let len = (b - a).norm();
    let (ga, gb, gm) = (g(a), g(b), g(&((a + b) * 0.5)));
    // 1-Lipschitz: no sign change if |g(mid)| exceeds half the length
    if gm.abs() > 0.5 * len || depth >= 24 {
        let s: f64 = GAUSS3.iter().map(|(t, w)| w * g(&(a + (b - a) * *t)).abs()).sum();
        return s * len;
    }
    if ga.signum() == gb.signum() && ga.signum() == gm.signum() && depth >= 6 {
        let s: f64 = GAUSS3.iter().map(|(t, w)| w * g(&(a + (b - a) * *t)).abs()).sum();
        return s * len;
    }
    let m = (a + b) * 0.5;
    abs_integral_segment(g, a, &m, depth + 1) + abs_integral_segment(g, &m, b, depth + 1)
}

fn abs_integral_triangle(g: &impl Fn(&Vec3) -> f64, a: &Vec3, b: &Vec3, c: &Vec3, depth: u32) -> f64 {
    let area = 0.5 * (b - a).cross(&(c - a)).norm();
    let centroid = (a + b + c) / 3.0;
    let reach = (a - centroid).norm().max((b - centroid).norm()).max((c - centroid).norm());
    let gc = g(&centroid);
    if gc.abs() > reach || depth >= 7 {
        // edge-midpoint rule, exact for quadratics
        let s = g(&((a + b) * 0.5)).abs() + g(&((b + c) * 0.5)).abs() + g(&((c + a) * 0.5)).abs();
        return area * s / 3.0;
    }
    let (ab, bc, ca) = ((a + b) * 0.5, (b + c) * 0.5, (c + a) * 0.5);
    abs_integral_triangle(g, a, &ab, &ca, depth + 1)
        + abs_integral_triangle(g, &ab, b, &bc, depth + 1)
        + abs_integral_triangle(g, &ca, &bc, c, depth + 1)
        + abs_integral_triangle(g, &ab, &bc, &ca, depth + 1)
}

/// Integral over the boundary part where `g > 0` of the piecewise-linear
/// interpolant of `values` (or of 1). `g` must be 1-Lipschitz. Elements
/// straddling `g = 0` are subdivided until their diameter drops below
/// `resolution` and then classified by barycenter.
pub(crate) fn integrate_where(
    mesh: &BoundaryMesh,
    values: Option<&[f64]>,
    g: &(impl Fn(&Vec3) -> f64 + Sync),
    resolution: f64,
) -> f64 {
    let per = exec::map_range(mesh.num_elements(), |e| {
        let pts = mesh.element_points(e);
        match (pts, mesh.cells()) {
            (ElementPoints::Segment([a, b]), crate::mesh::Cells::Segments(s)) => {
                let f = values.map_or([1.0, 1.0], |v| [v[s[e][0]], v[s[e][1]]]);
                where_segment(g, (a, f[0]), (b, f[1]), resolution)
            }
            (ElementPoints::Triangle([a, b, c]), crate::mesh::Cells::Triangles(t)) => {
                let f = values.map_or([1.0; 3], |v| [v[t[e][0]], v[t[e][1]], v[t[e][2]]]);
                where_triangle(g, (a, f[0]), (b, f[1]), (c, f[2]), resolution, 0)
            }
            _ => unreachable!(),
        }
    });
    per.iter().sum()
}

fn where_segment(g: &impl Fn(&Vec3) -> f64, a: (Vec3, f64), b: (Vec3, f64), res: f64) -> f64 {
    let len = (b.0 - a.0).norm();
    let m = ((a.0 + b.0) * 0.5, 0.5 * (a.1 + b.1));
    let gm = g(&m.0);
    if gm.abs() >= 0.5 * len || len < res {
        return if gm > 0.0 { len * m.1 } else { 0.0 };
    }
    where_segment(g, a, m, res) + where_segment(g, m, b, res)
}

fn where_triangle(
    g: &impl Fn(&Vec3) -> f64,
    a: (Vec3, f64),
    b: (Vec3, f64),
    c: (Vec3, f64),
    res: f64,
    depth: u32,
) -> f64 {
    let centroid = (a.0 + b.0 + c.0) / 3.0;
    let reach = (a.0 - centroid).norm().max((b.0 - centroid).norm()).max((c.0 - centroid).norm());
    let gc = g(&centroid);
    if gc.abs() >= reach || 2.0 * reach < res || depth >= 20 {
        if gc > 0.0 {
            let area = 0.5 * (b.0 - a.0).cross(&(c.0 - a.0)).norm();
            return area * (a.1 + b.1 + c.1) / 3.0;
        }
        return 0.0;
    }
    let mid = |p: &(Vec3, f64), q: &(Vec3, f64)| ((p.0 + q.0) * 0.5, 0.5 * (p.1 + q.1));
    let (ab, bc, ca) = (mid(&a, &b), mid(&b, &c), mid(&c, &a));
    where_triangle(g, a, ab, ca, res, depth + 1)
        + where_triangle(g, ab, b, bc, res, depth + 1)
        + where_triangle(g, ca, bc, c, res, depth + 1)
        + where_triangle(g, ab, bc, ca, res, depth + 1)
}

/// One row of a concentration table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRow {
    pub alpha: f64,
    pub eta: f64,
    pub outside_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationTable {
    pub rows: Vec<ConcentrationRow>,
    pub alpha_grid: Vec<f64>,
}

/// Boundary measure outside the annulus, `Hⁿ(∂Ω \ A_η)`, for the fit
/// sphere and width ratio `eta`.
pub fn measure_outside_annulus(mesh: &BoundaryMesh, fit: &SphereFit, eta: f64) -> f64 {
    let annulus = AnnulusSpec { center: fit.center, radius: fit.radius, width_ratio: eta };
    integrate_outside_annulus(mesh, None, &annulus)
}

pub(crate) fn integrate_outside_annulus(mesh: &BoundaryMesh, values: Option<&[f64]>, annulus: &AnnulusSpec) -> f64 {
    let g = |x: &Vec3| annulus.excess(x);
    integrate_where(mesh, values, &g, annulus.radius * 1e-4)
}

/// Fraction of the boundary outside `A_η` with `η = δ^α` for each α.
pub fn annulus_concentration(mesh: &BoundaryMesh, fit: &SphereFit, alphas: &[f64]) -> Result<ConcentrationTable> {
    mesh.ensure_valid()?;
    let s = summary_unchecked(mesh);
    let delta = s.deficit.max(0.0);
    let mut rows = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let eta = if alpha == 0.0 { 1.0 } else { delta.powf(alpha) };
        rows.push(ConcentrationRow {
            alpha,
            eta,
            outside_fraction: (measure_outside_annulus(mesh, fit, eta) / s.perimeter).clamp(0.0, 1.0),
        });
    }
    Ok(ConcentrationTable { rows, alpha_grid: alphas.to_vec() })
}

/// Outside fractions at explicit widths η.
pub fn outside_fractions(mesh: &BoundaryMesh, fit: &SphereFit, etas: &[f64]) -> Vec<f64> {
    let p = perimeter_unchecked(mesh);
    etas.iter().map(|&eta| (measure_outside_annulus(mesh, fit, eta) / p).clamp(0.0, 1.0)).collect()
}

/// Sampled or exact value with its standard error (zero when exact).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub standard_error: f64,
    pub samples: u64,
}

/// Evaluator of `|Ω Δ B_c(r)|` for a fixed domain and many balls.
///
/// In 2D the value is exact. In 3D, `|Ω Δ B| = |Ω| + |B| − 2|Ω ∩ B|` and
/// only `|Ω ∩ B|` is sampled: the bounding box of Ω is divided into cubic
/// cells, cells away from the boundary are classified once, and cells
/// near it carry a fixed set of seeded samples whose membership in Ω is
/// precomputed. Evaluating a new ball then costs one norm per sample, and
/// the estimate is a deterministic function of the center, so the
/// derivative-free center search sees a fixed objective.
pub struct SymDiff<'a> {
    mesh: &'a BoundaryMesh,
    volume: f64,
    sampled: Option<CellGrid>,
}

struct CellGrid {
    lo: Vec3,
    h: f64,
    cells: Vec<Cell>,
    per_cell: usize,
}

struct Cell {
    lo: Vec3,
    kind: CellKind,
}

enum CellKind {
    Inside(Vec<Vec3>),
    Mixed(Vec<Vec3>, Vec<bool>),
}

impl<'a> SymDiff<'a> {
    pub fn new(mesh: &'a BoundaryMesh, volume: f64, cfg: &SamplerConfig) -> Result<Self> {
        let sampled = match mesh.dim() {
            AmbientDim::Two => None,
            AmbientDim::Three => Some(Self::build_grid(mesh, volume, cfg)?),
        };
        Ok(SymDiff { mesh, volume, sampled })
    }

    fn build_grid(mesh: &BoundaryMesh, volume: f64, cfg: &SamplerConfig) -> Result<CellGrid> {
        let per_cell = 32usize;
        let classifier = Classifier::new(mesh);
        let (lo, hi) = mesh.bounding_box();
        let ext = hi - lo;
        let mut samples = cfg.samples.max(1 << 12);
        loop {
            let cells_target = (samples as f64 / per_cell as f64).max(1.0);
            let h = (ext.x * ext.y * ext.z / cells_target).cbrt().max(1e-12 * ext.norm());
            let n = [
                (ext.x / h).ceil().max(1.0) as usize,
                (ext.y / h).ceil().max(1.0) as usize,
                (ext.z / h).ceil().max(1.0) as usize,
            ];
            let grid = build_cells(&classifier, cfg.seed, lo, h, n, per_cell);
            // standard error of |Ω| itself measures the boundary-cell noise
            let (_, se) = grid.intersection(&Vec3::zeros(), f64::INFINITY);
            if 2.0 * se <= cfg.target_se_rel * volume || samples >= cfg.max_samples {
                if 2.0 * se > cfg.target_se_rel * volume {
                    let (est, _) = grid.intersection(&Vec3::zeros(), f64::INFINITY);
                    return Err(Error::SamplingTolerance {
                        estimate: est,
                        standard_error: 2.0 * se,
                        samples: grid.sample_count(),
                    });
                }
                return Ok(grid);
            }
            samples = (samples * 4).min(cfg.max_samples);
        }
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// `|Ω Δ B_center(r)|` with its standard error.
    pub fn eval(&self, center: &Vec3, r: f64) -> Estimate {
        let ball = unit_ball_volume(self.mesh.dim()) * r.powi(self.mesh.dim().ambient() as i32);
        match &self.sampled {
            None => Estimate {
                value: clip2d::disk_symmetric_difference(self.mesh, self.volume, center, r),
                standard_error: 0.0,
                samples: 0,
            },
            Some(grid) => {
                let (inter, se) = grid.intersection(center, r);
                Estimate {
                    value: (self.volume + ball - 2.0 * inter).max(0.0),
                    standard_error: 2.0 * se,
                    samples: grid.sample_count(),
                }
            }
        }
    }
}

fn build_cells(classifier: &Classifier, seed: u64, lo: Vec3, h: f64, n: [usize; 3], per_cell: usize) -> CellGrid {
    let half_diag = 0.5 * h * 3f64.sqrt();
    let total = n[0] * n[1] * n[2];
    let cells: Vec<Option<Cell>> = exec::map_range(total, |idx| {
        let (i, j, k) = (idx % n[0], (idx / n[0]) % n[1], idx / (n[0] * n[1]));
        let clo = lo + Vec3::new(i as f64, j as f64, k as f64) * h;
        let center = clo + Vec3::repeat(0.5 * h);
        let near = classifier.bvh().nearest_within(&center, half_diag * 1.0001).is_some();
        if !near {
            return classifier.inside(&center).then(|| {
                let mut rng = stream_rng(seed, 0, idx as u64);
                let pts = (0..per_cell).map(|_| uniform_in_box(&mut rng, &clo, &Vec3::repeat(h))).collect();
                Cell { lo: clo, kind: CellKind::Inside(pts) }
            });
        }
        let mut rng = stream_rng(seed, 0, idx as u64);
        let pts: Vec<Vec3> = (0..per_cell).map(|_| uniform_in_box(&mut rng, &clo, &Vec3::repeat(h))).collect();
        let inside: Vec<bool> = pts.iter().map(|p| classifier.inside(p)).collect();
        if inside.iter().any(|&b| b) {
            Some(Cell { lo: clo, kind: CellKind::Mixed(pts, inside) })
        } else {
            // keep the cell: an all-outside draw still carries variance
            Some(Cell { lo: clo, kind: CellKind::Mixed(pts, inside) })
        }
    });
    CellGrid { lo, h, cells: cells.into_iter().flatten().collect(), per_cell }
}

impl CellGrid {
    fn sample_count(&self) -> u64 {
        (self.cells.len() * self.per_cell) as u64
    }

    /// Estimate of `|Ω ∩ B_c(r)|` and its standard error.
    fn intersection(&self, c: &Vec3, r: f64) -> (f64, f64) {
        let _ = self.lo;
        let vol = self.h.powi(3);
        let hv = Vec3::repeat(self.h);
        let r2 = r * r;
        let mut est = 0.0;
        let mut var = 0.0;
        let n = self.per_cell as f64;
        for cell in &self.cells {
            // distance from c to the box, and to its farthest corner
            let mut near2 = 0.0;
            let mut far2 = 0.0;
            for k in 0..3 {
                let (a, b) = (cell.lo[k], cell.lo[k] + hv[k]);
                let d = if c[k] < a { a - c[k] } else if c[k] > b { c[k] - b } else { 0.0 };
                near2 += d * d;
                let f = (c[k] - a).abs().max((c[k] - b).abs());
                far2 += f * f;
            }
            if near2 > r2 {
                continue;
            }
            let whole_ball = far2 <= r2;
            let hits = match &cell.kind {
                CellKind::Inside(pts) => {
                    if whole_ball {
                        est += vol;
                        continue;
                    }
                    pts.iter().filter(|p| (*p - c).norm_squared() <= r2).count()
                }
                CellKind::Mixed(pts, inside) => pts
                    .iter()
                    .zip(inside)
                    .filter(|(p, &i)| i && (whole_ball || (*p - c).norm_squared() <= r2))
                    .count(),
            };
            let p = hits as f64 / n;
            est += vol * p;
            var += vol * vol * p * (1.0 - p) / (n - 1.0);
        }
        (est, var.sqrt())
    }
}

/// `|Ω Δ B_center(radius)|` with its standard error (exact in 2D).
pub fn symmetric_difference_volume(
    mesh: &BoundaryMesh,
    center: &Vec3,
    radius: f64,
    sampler: &SamplerConfig,
) -> Result<Estimate> {
    let volume = require_positive_volume(mesh)?;
    Ok(SymDiff::new(mesh, volume, sampler)?.eval(center, radius))
}

/// Result of the Fraenkel asymmetry search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Asymmetry {
    pub value: f64,
    pub standard_error: f64,
    pub center: [f64; 3],
    pub samples: u64,
}

fn refine_center(sd: &SymDiff, start: &Vec3, radius: f64) -> (Vec3, f64) {
    let planar = sd.mesh.dim() == AmbientDim::Two;
    let to_vec = |x: &[f64]| if planar { Vec3::new(x[0], x[1], 0.0) } else { Vec3::new(x[0], x[1], x[2]) };
    let x0: Vec<f64> = if planar { vec![start.x, start.y] } else { vec![start.x, start.y, start.z] };
    // simplex diameter tolerance: exact objective in 2D, sample spacing in 3D
    let xtol = if planar { 1e-10 * radius } else { 1e-4 * radius };
    let nm = NelderMead::new(0.1 * radius, xtol);
    let best = nm.minimize(|x| sd.eval(&to_vec(x), radius).value, &x0);
    (to_vec(&best.x), best.value)
}

/// Fraenkel asymmetry `inf_x |Ω Δ B_x(R_Ω)| / |Ω|` by multi-start
/// Nelder–Mead from the volume centroid, the boundary fit and every
/// component's centroid.
pub fn fraenkel_asymmetry(mesh: &BoundaryMesh, sampler: &SamplerConfig) -> Result<Asymmetry> {
    let volume = require_positive_volume(mesh)?;
    let radius = volume_radius(mesh.dim(), volume);
    let sd = SymDiff::new(mesh, volume, sampler)?;
    let mut starts = vec![volume_centroid_unchecked(mesh).1, least_squares_center(mesh, radius)?];
    let parts = mesh.components();
    if parts.len() > 1 {
        starts.extend(parts.iter().map(|p| volume_centroid_unchecked(p).1));
    }
    let results: Vec<(Vec3, f64)> = exec::map_slice(&starts, |s| refine_center(&sd, s, radius));
    let mut best = results[0];
    for &(c, v) in &results[1..] {
        let better = v < best.1 - 1e-12
            || ((v - best.1).abs() <= 1e-12
                && (c.x, c.y, c.z).partial_cmp(&(best.0.x, best.0.y, best.0.z)) == Some(std::cmp::Ordering::Less));
        if better {
            best = (c, v);
        }
    }
    let est = sd.eval(&best.0, radius);
    Ok(Asymmetry {
        value: est.value / volume,
        standard_error: est.standard_error / volume,
        center: best.0.into(),
        samples: est.samples,
    })
}

/// Circle closest to a planar curve in the Hausdorff sense among circles
/// centered inside it: for an interior center `c` the optimal radius is the
/// midrange of the distances to the curve and
/// `d_H = (max |x − c| − min |x − c|)/2` exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BonnesenCircle {
    pub center: [f64; 3],
    pub radius: f64,
    pub hausdorff: f64,
}

pub fn bonnesen_circle(mesh: &BoundaryMesh) -> Result<BonnesenCircle> {
    if mesh.dim() != AmbientDim::Two {
        return Err(Error::invalid("the Bonnesen circle is defined for planar curves"));
    }
    require_positive_volume(mesh)?;
    let classifier = Classifier::new(mesh);
    let half_range = |c: &Vec3| {
        let (rmin, rmax) = clip2d::radial_extent(mesh, c);
        0.5 * (rmax - rmin)
    };
    let diag = mesh.bbox_diagonal();
    let objective = |x: &[f64]| {
        let c = Vec3::new(x[0], x[1], 0.0);
        if classifier.winding(&c) == 0 {
            // outside the domain the formula does not apply; penalize
            return diag + classifier.bvh().distance(&c);
        }
        half_range(&c)
    };
    let mut starts = vec![volume_centroid_unchecked(mesh).1];
    let lsq = least_squares_center(mesh, volume_radius(AmbientDim::Two, signed_volume(mesh)))?;
    starts.push(lsq);
    let nm = NelderMead::new(0.05 * diag, 1e-12 * diag);
    let mut best: Option<(Vec3, f64)> = None;
    for s in starts {
        if classifier.winding(&s) == 0 {
            continue;
        }
        let m = nm.minimize(objective, &[s.x, s.y]);
        let c = Vec3::new(m.x[0], m.x[1], 0.0);
        if classifier.winding(&c) != 0 && best.map_or(true, |b| m.value < b.1) {
            best = Some((c, m.value));
        }
    }
    let (c, _) = best.ok_or_else(|| Error::invalid("no interior starting center found"))?;
    let (rmin, rmax) = clip2d::radial_extent(mesh, &c);
    Ok(BonnesenCircle { center: c.into(), radius: 0.5 * (rmin + rmax), hausdorff: 0.5 * (rmax - rmin) })
}

/// Density comparison at a point `x` of the model sphere and radius `rho`:
/// `|Hⁿ(B_x(ρ) ∩ S)/(Rⁿ|Sⁿ|) − Hⁿ(∂Ω ∩ B_x(ρ))/P|`.
pub fn density_discrepancy(mesh: &BoundaryMesh, fit: &SphereFit, x: &Vec3, rho: f64) -> f64 {
    let r = fit.radius;
    let sphere_fraction = match mesh.dim() {
        // arc of the circle inside the disk, over the circumference
        AmbientDim::Two => 2.0 * (rho / (2.0 * r)).min(1.0).asin() / PI,
        // spherical cap area π ρ² over 4π R²
        AmbientDim::Three => (rho * rho / (4.0 * r * r)).min(1.0),
    };
    let p = perimeter_unchecked(mesh);
    let inside = match mesh.dim() {
        AmbientDim::Two => clip2d::length_in_disk(mesh, x, rho),
        AmbientDim::Three => {
            let x = *x;
            integrate_where(mesh, None, &move |y: &Vec3| rho - (y - x).norm(), r * 1e-5)
        }
    };
    (sphere_fraction - inside / p).abs()
}

/// Unit directions of the icosahedron vertices (2D: 12 equally spaced angles).
pub fn grid_directions(dim: AmbientDim) -> Vec<Vec3> {
    match dim {
        AmbientDim::Two => (0..12)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 12.0;
                Vec3::new(t.cos(), t.sin(), 0.0)
            })
            .collect(),
        AmbientDim::Three => crate::generators::unit_icosphere(0).map(|(v, _)| v).unwrap_or_default(),
    }
}

pub const DENSITY_RADII: [f64; 3] = [0.1, 0.3, 0.6];

/// Largest density discrepancy over the 12 grid directions and the radii
/// `{0.1, 0.3, 0.6}·R_Ω`.
pub fn max_density_discrepancy(mesh: &BoundaryMesh, fit: &SphereFit) -> f64 {
    let dirs = grid_directions(mesh.dim());
    let jobs: Vec<(Vec3, f64)> = dirs
        .iter()
        .flat_map(|d| DENSITY_RADII.iter().map(move |s| (*d, *s)))
        .collect();
    let c = fit.center();
    exec::map_slice(&jobs, |(d, s)| density_discrepancy(mesh, fit, &(c + d * fit.radius), s * fit.radius))
        .into_iter()
        .fold(0.0, f64::max)
}

/// Test-function comparison for the bump `f(y) = (1 − |y − x|²/s²)²₊`:
/// `|(1/P)∫_{∂Ω} f − (1/(Rⁿ|Sⁿ|))∫_S f| / (‖f‖_∞ + ‖df‖_∞)` where
/// `‖df‖_∞ = sup |df_y(y − x_Ω)|` is bounded by `sup|∇f|·(|x − x_Ω| + s)`.
pub fn bump_discrepancy(mesh: &BoundaryMesh, fit: &SphereFit, x: &Vec3, s: f64) -> f64 {
    let f = |y: &Vec3| {
        let t = 1.0 - (y - x).norm_squared() / (s * s);
        if t > 0.0 { t * t } else { 0.0 }
    };
    let p = perimeter_unchecked(mesh);
    let boundary: f64 = exec::map_range(mesh.num_elements(), |e| match mesh.element_points(e) {
        ElementPoints::Segment([a, b]) => {
            (b - a).norm() * GAUSS3.iter().map(|(t, w)| w * f(&(a + (b - a) * *t))).sum::<f64>()
        }
        ElementPoints::Triangle([a, b, c]) => {
            // degree-4 accuracy is plenty after two uniform splits
            let mut acc = 0.0;
            quad_triangle(&f, &a, &b, &c, 2, &mut acc);
            acc
        }
    })
    .iter()
    .sum::<f64>()
        / p;
    let r = fit.radius;
    let d0 = (x - fit.center()).norm();
    let sphere = sphere_average_radial(mesh.dim(), r, d0, |d| {
        let t = 1.0 - d * d / (s * s);
        if t > 0.0 { t * t } else { 0.0 }
    });
    let grad_max = 8.0 / (3.0 * 3f64.sqrt() * s);
    (boundary - sphere).abs() / (1.0 + grad_max * (d0 + s))
}

fn quad_triangle(f: &impl Fn(&Vec3) -> f64, a: &Vec3, b: &Vec3, c: &Vec3, depth: u32, acc: &mut f64) {
    if depth == 0 {
        let area = 0.5 * (b - a).cross(&(c - a)).norm();
        // Strang–Fix 6-point degree-3 rule
        const W: [(f64, f64, f64, f64); 6] = [
            (0.659027622374092, 0.231933368553031, 0.109039009072877, 1.0 / 6.0),
            (0.659027622374092, 0.109039009072877, 0.231933368553031, 1.0 / 6.0),
            (0.231933368553031, 0.659027622374092, 0.109039009072877, 1.0 / 6.0),
            (0.231933368553031, 0.109039009072877, 0.659027622374092, 1.0 / 6.0),
            (0.109039009072877, 0.659027622374092, 0.231933368553031, 1.0 / 6.0),
            (0.109039009072877, 0.231933368553031, 0.659027622374092, 1.0 / 6.0),
        ];
        *acc += area * W.iter().map(|(u, v, w, wt)| wt * f(&(a * *u + b * *v + c * *w))).sum::<f64>();
        return;
    }
    let (ab, bc, ca) = ((a + b) * 0.5, (b + c) * 0.5, (c + a) * 0.5);
    quad_triangle(f, a, &ab, &ca, depth - 1, acc);
    quad_triangle(f, &ab, b, &bc, depth - 1, acc);
    quad_triangle(f, &ca, &bc, c, depth - 1, acc);
    quad_triangle(f, &ab, &bc, &ca, depth - 1, acc);
}

/// Average over the sphere `S_0(r)` of `g(|y − x|)` for a point `x` at
/// distance `d0` from the center, by Gauss–Legendre in the polar angle.
fn sphere_average_radial(dim: AmbientDim, r: f64, d0: f64, g: impl Fn(f64) -> f64) -> f64 {
    let n = 2000;
    let mut s = 0.0;
    let mut wsum = 0.0;
    for k in 0..n {
        // midpoint rule in θ is ample for the smooth compact bumps used
        let th = PI * (k as f64 + 0.5) / n as f64;
        let d = (r * r + d0 * d0 - 2.0 * r * d0 * th.cos()).max(0.0).sqrt();
        let w = match dim {
            AmbientDim::Two => 1.0,
            AmbientDim::Three => th.sin(),
        };
        s += w * g(d);
        wsum += w;
    }
    s / wsum
}

/// Largest bump discrepancy over bumps of width `R_Ω/2` centered at the
/// 12 grid directions on the model sphere.
pub fn max_bump_discrepancy(mesh: &BoundaryMesh, fit: &SphereFit) -> f64 {
    let c = fit.center();
    let dirs = grid_directions(mesh.dim());
    exec::map_slice(&dirs, |d| bump_discrepancy(mesh, fit, &(c + d * fit.radius), 0.5 * fit.radius))
        .into_iter()
        .fold(0.0, f64::max)
}

/// `‖du‖₂²` of the radial graph `u = |x − c|/R − 1` over the unit sphere of
/// directions about the fit center, with the sphere-normalized norm
/// `(1/|Sⁿ|)∫|∇u|²`. Gradients are taken on the piecewise-linear
/// interpolant over the projected mesh.
pub fn radial_graph_dirichlet(mesh: &BoundaryMesh, fit: &SphereFit) -> Result<f64> {
    let c = fit.center();
    let v = mesh.vertices();
    let dirs: Vec<Vec3> = v.iter().map(|p| (p - c).normalize()).collect();
    let u: Vec<f64> = v.iter().map(|p| (p - c).norm() / fit.radius - 1.0).collect();
    let mut num = 0.0;
    let mut den = 0.0;
    match mesh.dim() {
        AmbientDim::Two => {
            for &[a, b] in mesh.segments() {
                let l = (dirs[b] - dirs[a]).norm();
                let g = (u[b] - u[a]) / l;
                num += g * g * l;
                den += l;
            }
        }
        AmbientDim::Three => {
            for &[a, b, cc] in mesh.tris() {
                let (p, q, r) = (dirs[a], dirs[b], dirs[cc]);
                let n = (q - p).cross(&(r - p));
                let area2 = n.norm();
                if area2 == 0.0 {
                    continue;
                }
                // gradient of the linear interpolant on the flat triangle
                let nn = n / area2;
                let grad = (nn.cross(&(r - q)) * u[a] + nn.cross(&(p - r)) * u[b] + nn.cross(&(q - p)) * u[cc])
                    / area2;
                num += grad.norm_squared() * 0.5 * area2;
                den += 0.5 * area2;
            }
        }
    }
    if den == 0.0 {
        return Err(Error::invalid("degenerate projected mesh"));
    }
    // normalize by the projected area so the unit sphere counts as |Sⁿ|
    let _ = unit_sphere_area(mesh.dim());
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{circle, icosphere, rectangle, two_balls, nearly_spherical, GraphFunction};
    use crate::mesh::tests::unit_cube;

    fn cfg() -> SamplerConfig {
        SamplerConfig { samples: 1 << 18, ..SamplerConfig::default() }
    }

    #[test]
    fn least_squares_center_follows_rigid_motions() {
        let m = nearly_spherical(&GraphFunction::harmonic(3, 1, 0.1), 3).unwrap();
        let rot = nalgebra::Rotation3::from_euler_angles(0.3, 1.2, -0.7);
        let t = Vec3::new(5.0, -3.0, 0.25);
        let c0 = fit_sphere(&m, FitMethod::BoundaryLeastSquares, &cfg()).unwrap().center();
        let c1 = fit_sphere(&m.rigid_motion(&rot, &t), FitMethod::BoundaryLeastSquares, &cfg()).unwrap().center();
        assert!((rot * c0 + t - c1).norm() < 1e-13, "{}", (rot * c0 + t - c1).norm());
        // symmetric saddle: stays at the midpoint instead of wandering
        let two = two_balls(6.0, 2).unwrap();
        let c = fit_sphere(&two, FitMethod::BoundaryLeastSquares, &cfg()).unwrap().center();
        assert!(c.norm() < 1e-12, "{c:?}");
    }

    #[test]
    fn icosphere_fit_center() {
        let q = Vec3::new(0.3, -1.2, 2.5);
        let m = icosphere(q, 1.0, 4).unwrap();
        for method in [FitMethod::VolumeCentroid, FitMethod::BoundaryLeastSquares] {
            let f = fit_sphere(&m, method, &cfg()).unwrap();
            assert!((f.center() - q).norm() < 1e-9, "{method:?} {:?}", f.center);
            // volume-pinned radius sits between inscribed chords and vertices
            let dev = m.vertices().iter().map(|v| ((v - q).norm() - f.radius).abs()).fold(0.0, f64::max);
            assert!(f.l1_boundary_gap <= dev && f.l1_boundary_gap > 0.0);
        }
    }

    #[test]
    fn fit_is_translation_equivariant() {
        let m = nearly_spherical(&GraphFunction::harmonic(3, 1, 0.05), 3).unwrap();
        let t = Vec3::new(5.0, -3.0, 1.0);
        let a = fit_sphere(&m, FitMethod::BoundaryLeastSquares, &cfg()).unwrap();
        let b = fit_sphere(&m.translated(&t), FitMethod::BoundaryLeastSquares, &cfg()).unwrap();
        assert!((b.center() - a.center() - t).norm() < 1e-9);
        assert!((a.radius - b.radius).abs() < 1e-12);
    }

    #[test]
    fn two_balls_centroid_is_midpoint() {
        let m = two_balls(6.0, 3).unwrap();
        let f = fit_sphere(&m, FitMethod::VolumeCentroid, &cfg()).unwrap();
        assert!(f.center().norm() < 1e-9);
    }

    #[test]
    fn boundary_moment_examples() {
        let q = Vec3::new(1.0, 2.0, 3.0);
        let m = icosphere(q, 2.0, 3).unwrap();
        assert!((boundary_moment(&m).unwrap() - q).norm() < 1e-12);
        let cube = unit_cube().translated(&Vec3::repeat(-0.5));
        assert!(boundary_moment(&cube).unwrap().norm() < 1e-12);
    }

    #[test]
    fn square_asymmetry_matches_centered_disk() {
        let sq = rectangle(1.0, 1.0).unwrap();
        let a = fraenkel_asymmetry(&sq, &cfg()).unwrap();
        let r = 1.0 / PI.sqrt();
        let exact = clip2d::disk_symmetric_difference(&sq, 1.0, &Vec3::new(0.5, 0.5, 0.0), r);
        assert!((a.value - exact).abs() < 1e-9, "{} vs {exact}", a.value);
        assert!((a.value - 0.18138).abs() < 1e-3);
        assert!((Vec3::from(a.center) - Vec3::new(0.5, 0.5, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn self_symmetric_difference_is_small() {
        let m = icosphere(Vec3::zeros(), 1.0, 4).unwrap();
        let v = signed_volume(&m);
        let r = volume_radius(AmbientDim::Three, v);
        let e = symmetric_difference_volume(&m, &Vec3::zeros(), r, &cfg()).unwrap();
        assert!(e.standard_error < 1e-3 * v);
        // the true value is the thin sliver between chords and sphere
        assert!(e.value < 0.01 * v, "{e:?}");
    }

    #[test]
    fn sampled_symmetric_difference_is_deterministic() {
        let m = icosphere(Vec3::zeros(), 1.0, 3).unwrap();
        let c = Vec3::new(0.3, 0.1, 0.0);
        let a = symmetric_difference_volume(&m, &c, 1.0, &cfg()).unwrap();
        let b = symmetric_difference_volume(&m, &c, 1.0, &cfg()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn disjoint_disk_symmetric_difference() {
        let m = circle([0.0, 0.0], 1.0, 4096).unwrap();
        let e = symmetric_difference_volume(&m, &Vec3::new(2.0, 0.0, 0.0), 1.0, &cfg()).unwrap();
        assert_eq!(e.standard_error, 0.0);
        assert!((e.value - signed_volume(&m) - PI).abs() < 1e-9);
    }

    #[test]
    fn annulus_outside_fraction_of_icosphere() {
        let m = icosphere(Vec3::zeros(), 1.0, 4).unwrap();
        let f = fit_sphere(&m, FitMethod::BoundaryLeastSquares, &cfg()).unwrap();
        let dev = m.vertices().iter().map(|v| (v.norm() - f.radius).abs()).fold(0.0, f64::max);
        let fr = outside_fractions(&m, &f, &[0.0, 0.5 * dev, 2.0 * dev, 1.0]);
        assert!(fr[0] > 0.99);
        assert!(fr[1] > 0.0);
        assert_eq!(fr[2], 0.0);
        assert_eq!(fr[3], 0.0);
    }

    #[test]
    fn density_on_fine_sphere_is_small() {
        let m = icosphere(Vec3::zeros(), 1.0, 4).unwrap();
        let f = fit_sphere(&m, FitMethod::BoundaryLeastSquares, &cfg()).unwrap();
        assert!(max_density_discrepancy(&m, &f) < 3e-2);
        assert!(max_bump_discrepancy(&m, &f) < 1e-2);
    }

    #[test]
    fn dirichlet_energy_of_y20() {
        // ∫|∇Y₂₀|² = 6 on the unit sphere, so ‖du‖₂² = 6a²/(4π)
        let a = 0.02;
        let m = nearly_spherical(&GraphFunction::harmonic(2, 0, a), 5).unwrap();
        let f = fit_sphere(&m, FitMethod::BoundaryLeastSquares, &cfg()).unwrap();
        let e = radial_graph_dirichlet(&m, &f).unwrap();
        let expected = 6.0 * a * a / (4.0 * PI);
        assert!((e / expected - 1.0).abs() < 0.03, "{e} vs {expected}");
    }
}
