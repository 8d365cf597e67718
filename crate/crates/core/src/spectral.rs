//! First nonzero Laplace–Beltrami eigenvalue of the boundary and the
//! Chavel deficit `γ = n/(n+1)²·(P/|Ω|)²/λ₁ − 1`.

use std::collections::BTreeMap;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{signed_volume, summary_unchecked};
use crate::mesh::{AmbientDim, BoundaryMesh};

pub const DEFAULT_TOL: f64 = 1e-8;
const MAX_ITER: usize = 2000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub lambda1: f64,
    /// Smallest nonzero eigenvalues, nondecreasing.
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues within 1% of λ₁.
    pub eigen_multiplicity_estimate: usize,
    pub chavel_bound: f64,
    pub gamma: f64,
    /// `(n+1)|Ω|/P`.
    pub rho_omega: f64,
    /// Smallest Rayleigh quotient of a recentered coordinate function, an
    /// upper bound for λ₁.
    pub coordinate_rayleigh: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Sparse symmetric stiffness (cotangent weights, or `1/ℓ` on curves) and
/// lumped mass (a third of adjacent triangle areas, half of adjacent edge
/// lengths).
pub struct Operators {
    pub stiffness: BTreeMap<(usize, usize), f64>,
    pub mass: Vec<f64>,
}

impl Operators {
    pub fn assemble(mesh: &BoundaryMesh) -> Self {
        let v = mesh.vertices();
        let mut stiffness = BTreeMap::new();
        let mut mass = vec![0.0; v.len()];
        let mut add = |i: usize, j: usize, w: f64| {
            *stiffness.entry((i, j)).or_insert(0.0) -= w;
            *stiffness.entry((j, i)).or_insert(0.0) -= w;
            *stiffness.entry((i, i)).or_insert(0.0) += w;
            *stiffness.entry((j, j)).or_insert(0.0) += w;
        };
        match mesh.dim() {
            AmbientDim::Two => {
                for &[a, b] in mesh.segments() {
                    let l = (v[b] - v[a]).norm();
                    add(a, b, 1.0 / l);
                    mass[a] += 0.5 * l;
                    mass[b] += 0.5 * l;
                }
            }
            AmbientDim::Three => {
                let per = exec::map_slice(mesh.tris(), |t| {
                    let p = [v[t[0]], v[t[1]], v[t[2]]];
                    let cot = |k: usize| {
                        let u = p[(k + 1) % 3] - p[k];
                        let w = p[(k + 2) % 3] - p[k];
                        u.dot(&w) / u.cross(&w).norm()
                    };
                    let area = 0.5 * (p[1] - p[0]).cross(&(p[2] - p[0])).norm();
                    ([cot(0), cot(1), cot(2)], area)
                });
                for (t, (cots, area)) in mesh.tris().iter().zip(per) {
                    for k in 0..3 {
                        // the edge opposite corner k
                        add(t[(k + 1) % 3], t[(k + 2) % 3], 0.5 * cots[k]);
                        mass[t[k]] += area / 3.0;
                    }
                }
            }
        }
        Operators { stiffness, mass }
    }

    fn apply_stiffness(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut y = DMatrix::zeros(x.nrows(), x.ncols());
        for (&(i, j), &w) in &self.stiffness {
            for c in 0..x.ncols() {
                y[(i, c)] += w * x[(j, c)];
            }
        }
        y
    }

    fn apply_mass(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut y = x.clone();
        for (i, m) in self.mass.iter().enumerate() {
            y.row_mut(i).scale_mut(*m);
        }
        y
    }
}

fn chavel_bound(dim: AmbientDim, perimeter: f64, volume: f64) -> f64 {
    let n = dim.n() as f64;
    n / ((n + 1.0) * (n + 1.0)) * (perimeter / volume).powi(2)
}

/// The `k` smallest nonzero eigenvalues of `L x = λ M x` by shift-invert
/// block subspace iteration with the constant mode deflated, plus the
/// Chavel quantities.
pub fn laplace_spectrum(mesh: &BoundaryMesh, k: usize, tol: f64) -> Result<SpectralReport> {
    mesh.ensure_valid()?;
    let components = mesh.component_count();
    if components != 1 {
        return Err(Error::Disconnected { components });
    }
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("eigenvalue tolerance must be positive, got {tol}")));
    }
    let k = k.max(1);
    let nv = mesh.vertices().len();
    if nv < k + 2 {
        return Err(Error::invalid(format!("{nv} vertices cannot carry {k} nonzero eigenvalues")));
    }
    let summary = summary_unchecked(mesh);
    let volume = signed_volume(mesh);
    let bound = chavel_bound(mesh.dim(), summary.perimeter, volume);
    let ops = Operators::assemble(mesh);

    // shift well below λ₁ so that L + σM is positive definite
    let sigma = 0.01 * bound;
    let triplets: Vec<Triplet<usize, usize, f64>> = ops
        .stiffness
        .iter()
        .filter(|((i, j), _)| i >= j)
        .map(|(&(i, j), &w)| Triplet::new(i, j, if i == j { w + sigma * ops.mass[i] } else { w }))
        .collect();
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(nv, nv, &triplets)
        .map_err(|e| Error::invalid(format!("sparse assembly failed: {e:?}")))?;
    let llt = a.sp_cholesky(Side::Lower).map_err(|_| Error::NonConvergence {
        what: "shifted stiffness factorization",
        iterations: 0,
        residual: f64::NAN,
        best: None,
    })?;

    let block = (k + 4).max(8).min(nv - 1);
    let total_mass: f64 = ops.mass.iter().sum();
    let deflate = |x: &mut DMatrix<f64>| {
        for c in 0..x.ncols() {
            let s: f64 = (0..nv).map(|i| ops.mass[i] * x[(i, c)]).sum::<f64>() / total_mass;
            for i in 0..nv {
                x[(i, c)] -= s;
            }
        }
    };
    // deterministic start: low-degree polynomials in the coordinates
    let v = mesh.vertices();
    let mut x = DMatrix::from_fn(nv, block, |i, c| {
        let p = v[i];
        let t = (c as f64 + 1.0) * 0.7548776662466927;
        (p.x * t.cos() + p.y * t.sin() + p.z * (1.3 * t).cos()).powi(1 + (c / 3) as i32)
            + 1e-3 * ((i * 2654435761 + c * 40503) % 1000) as f64
    });
    deflate(&mut x);

    let mut prev: Vec<f64> = vec![f64::INFINITY; k];
    let mut residual = f64::INFINITY;
    for iter in 1..=MAX_ITER {
        let mx = ops.apply_mass(&x);
        let mut rhs = Mat::<f64>::from_fn(nv, block, |i, c| mx[(i, c)]);
        llt.solve_in_place(rhs.as_mut());
        let mut y = DMatrix::from_fn(nv, block, |i, c| rhs[(i, c)]);
        deflate(&mut y);

        let (vals, vecs) = rayleigh_ritz(&ops, &y)?;
        x = &y * vecs;
        let lam: Vec<f64> = vals.iter().take(k).copied().collect();

        let lx = ops.apply_stiffness(&x.columns(0, k).into_owned());
        let mxk = ops.apply_mass(&x.columns(0, k).into_owned());
        residual = (0..k)
            .map(|c| {
                let r: f64 = (0..nv).map(|i| (lx[(i, c)] - lam[c] * mxk[(i, c)]).powi(2) / ops.mass[i]).sum();
                r.sqrt() / (lam[c] * mxk.column(c).dot(&x.column(c)).sqrt())
            })
            .fold(0.0, f64::max);
        let change = lam.iter().zip(&prev).map(|(a, b)| ((a - b) / a).abs()).fold(0.0, f64::max);
        prev = lam;
        if change < tol && residual < tol.sqrt() {
            let lambda1 = prev[0];
            let rho = (mesh.dim().n() as f64 + 1.0) * volume / summary.perimeter;
            return Ok(SpectralReport {
                lambda1,
                eigen_multiplicity_estimate: prev.iter().filter(|l| **l <= 1.01 * lambda1).count(),
                eigenvalues: prev,
                chavel_bound: bound,
                gamma: bound / lambda1 - 1.0,
                rho_omega: rho,
                coordinate_rayleigh: coordinate_rayleigh(mesh, &ops),
                iterations: iter,
                residual,
            });
        }
    }
    Err(Error::NonConvergence {
        what: "Laplace–Beltrami eigenvalues",
        iterations: MAX_ITER,
        residual,
        best: Some(prev),
    })
}

/// Ritz values (ascending) and coefficient vectors of the pencil
/// `(YᵀLY, YᵀMY)`.
fn rayleigh_ritz(ops: &Operators, y: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let ly = ops.apply_stiffness(y);
    let my = ops.apply_mass(y);
    let ks = y.transpose() * ly;
    let ms = y.transpose() * my;
    let ks = (&ks + ks.transpose()) * 0.5;
    let ms = (&ms + ms.transpose()) * 0.5;
    let chol = ms.cholesky().ok_or_else(|| Error::NonConvergence {
        what: "subspace basis orthonormalization",
        iterations: 0,
        residual: f64::NAN,
        best: None,
    })?;
    let linv = chol.l().try_inverse().ok_or_else(|| Error::invalid("singular subspace basis"))?;
    let c = &linv * ks * linv.transpose();
    let eig = SymmetricEigen::new((&c + c.transpose()) * 0.5);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(c.nrows(), order.len(), |r, j| eig.eigenvectors[(r, order[j])]);
    Ok((vals, linv.transpose() * vecs))
}

fn coordinate_rayleigh(mesh: &BoundaryMesh, ops: &Operators) -> f64 {
    let total: f64 = ops.mass.iter().sum();
    let mut best = f64::INFINITY;
    for d in 0..mesh.dim().ambient() {
        let mean: f64 = mesh.vertices().iter().zip(&ops.mass).map(|(p, m)| p[d] * m).sum::<f64>() / total;
        let x = DVector::from_iterator(mesh.vertices().len(), mesh.vertices().iter().map(|p| p[d] - mean));
        let xm = DMatrix::from_column_slice(x.len(), 1, x.as_slice());
        let num = ops.apply_stiffness(&xm).column(0).dot(&x);
        let den: f64 = x.iter().zip(&ops.mass).map(|(a, m)| a * a * m).sum();
        best = best.min(num / den);
    }
    best
}

/// Spectrum with the default tolerance and eight eigenvalues; translation
/// does not change any reported quantity.
pub fn chavel_deficit(mesh: &BoundaryMesh) -> Result<SpectralReport> {
    laplace_spectrum(mesh, 8, DEFAULT_TOL)
}
