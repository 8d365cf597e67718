//! Preiss distance between discrete measures,
//! `d_P = Σ_i 2^{-i} min(1, F_i)` with
//! `F_i = sup { ∫ f d(μ − ν) : f ≥ 0, Lip f ≤ 1, spt f ⊂ B_0(i) }`.
//!
//! On atoms the constraints reduce to `0 ≤ f_k ≤ dist(x_k, S_0(i))` inside
//! the ball, `f_k = 0` outside, and `|f_j − f_k| ≤ |x_j − x_k|`. This is a
//! system of difference constraints, so its LP dual is an uncapacitated
//! min-cost flow on the atoms plus a ground node standing for `f = 0`.
//! Pairwise arcs start from k-nearest neighbours and are added by pricing
//! until every pair is dual feasible.

use rstar::primitives::GeomWithData;
use rstar::RTree;
use serde::{Deserialize, Serialize};

use super::netsimplex::{NetworkSimplex, Status};
use crate::error::{Error, Result};
use crate::exec;
use crate::generators::unit_icosphere;
use crate::measures::barycentric_vertex_weights;
use crate::mesh::{BoundaryMesh, Vec3};

pub const DEFAULT_MAX_ATOMS: usize = 2000;
const NEIGHBOURS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub atoms: Vec<([f64; 3], f64)>,
    pub total_mass: f64,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<([f64; 3], f64)>) -> Result<Self> {
        if let Some((_, m)) = atoms.iter().find(|(_, m)| !(*m >= 0.0)) {
            return Err(Error::invalid(format!("atom masses must be nonnegative, got {m}")));
        }
        let total_mass = atoms.iter().map(|(_, m)| m).sum();
        Ok(DiscreteMeasure { atoms, total_mass })
    }

    /// Normalized boundary measure `|Dχ_Ω|/P`: vertex areas over the perimeter.
    pub fn from_boundary(mesh: &BoundaryMesh) -> Result<Self> {
        mesh.ensure_valid()?;
        let w = barycentric_vertex_weights(mesh);
        let p: f64 = w.iter().sum();
        Self::new(mesh.vertices().iter().zip(&w).map(|(v, m)| ((*v).into(), m / p)).collect())
    }

    /// Normalized area measure of the round sphere, discretized on the
    /// vertices of a projected icosphere with spherical-triangle areas.
    pub fn sphere(center: &Vec3, radius: f64, level: u32) -> Result<Self> {
        let (v, f) = unit_icosphere(level)?;
        let mut w = vec![0.0; v.len()];
        for t in &f {
            let a = spherical_triangle_area(&v[t[0]], &v[t[1]], &v[t[2]]);
            for &i in t {
                w[i] += a / 3.0;
            }
        }
        let total: f64 = w.iter().sum();
        Self::new(v.iter().zip(&w).map(|(x, m)| ((center + x * radius).into(), m / total)).collect())
    }

    pub fn translated(&self, t: &Vec3) -> Self {
        DiscreteMeasure {
            atoms: self.atoms.iter().map(|(x, m)| ((Vec3::from(*x) + t).into(), *m)).collect(),
            total_mass: self.total_mass,
        }
    }
}

fn spherical_triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    // Van Oosterom–Strackee on unit vectors
    let num = a.dot(&b.cross(c)).abs();
    let den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
    2.0 * num.atan2(den)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreissResult {
    /// `Σ_{i ≤ i_max} 2^{-i} min(1, F_i)`.
    pub value: f64,
    /// `value + 2^{-i_max}`, bounding the untruncated series.
    pub upper_bound: f64,
    pub f_values: Vec<f64>,
    pub origin: [f64; 3],
    pub atoms: usize,
}

/// Signed atoms `μ − ν` with coincident atoms merged and zero ones dropped.
/// Dropping is exact: any feasible `f` on the remaining atoms extends to
/// the dropped ones by `min(u, min_k f_k + |x − x_k|)`.
fn signed_atoms(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Vec<(Vec3, f64)> {
    let mut all: Vec<([f64; 3], f64)> = mu.atoms.clone();
    all.extend(nu.atoms.iter().map(|(x, m)| (*x, -m)));
    all.sort_by(|a, b| {
        a.0[0].total_cmp(&b.0[0]).then(a.0[1].total_cmp(&b.0[1])).then(a.0[2].total_cmp(&b.0[2]))
    });
    let mut out: Vec<(Vec3, f64)> = Vec::new();
    let mut last: Option<[f64; 3]> = None;
    for (x, m) in all {
        if last == Some(x) {
            out.last_mut().unwrap().1 += m;
        } else {
            out.push((Vec3::from(x), m));
            last = Some(x);
        }
    }
    let scale = mu.total_mass.max(nu.total_mass);
    out.retain(|(_, m)| m.abs() > 1e-15 * scale);
    out
}

type Indexed = GeomWithData<[f64; 3], usize>;

/// `F_i` for each `i = 1..=i_max` and the truncated series.
pub fn preiss_distance(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    i_max: u32,
    origin: &Vec3,
    max_atoms: usize,
) -> Result<PreissResult> {
    for (name, m) in [("first", mu), ("second", nu)] {
        if m.atoms.len() > max_atoms {
            return Err(Error::AtomLimit { atoms: m.atoms.len(), limit: max_atoms });
        }
        if m.atoms.iter().any(|(x, _)| x.iter().any(|c| !c.is_finite())) {
            return Err(Error::invalid(format!("{name} measure has non-finite atoms")));
        }
    }
    if i_max == 0 {
        return Err(Error::invalid("i_max must be at least 1"));
    }
    let atoms = signed_atoms(mu, nu);
    let mut f_values = Vec::with_capacity(i_max as usize);
    if atoms.is_empty() {
        f_values.resize(i_max as usize, 0.0);
    } else {
        let mut lp = FlowLp::new(&atoms, origin);
        for i in 1..=i_max {
            f_values.push(lp.solve(i as f64)?);
        }
    }
    let value: f64 = f_values.iter().enumerate().map(|(k, f)| 0.5f64.powi(k as i32 + 1) * f.min(1.0)).sum();
    Ok(PreissResult {
        value,
        upper_bound: value + 0.5f64.powi(i_max as i32),
        f_values,
        origin: (*origin).into(),
        atoms: atoms.len(),
    })
}

struct FlowLp<'a> {
    atoms: &'a [(Vec3, f64)],
    radial: Vec<f64>,
    tree: RTree<Indexed>,
    ns: NetworkSimplex,
    ground_in: Vec<usize>,
    scale: f64,
}

impl<'a> FlowLp<'a> {
    fn new(atoms: &'a [(Vec3, f64)], origin: &Vec3) -> Self {
        let m = atoms.len();
        let ground = m;
        // node v must send out −b_v where b = μ − ν is the objective weight
        let mut supply: Vec<f64> = atoms.iter().map(|(_, b)| -b).collect();
        supply.push(atoms.iter().map(|(_, b)| b).sum());
        let mut ns = NetworkSimplex::rooted(supply);
        // f_k − f_g ≤ u_k: arc g → k; f_g − f_k ≤ 0: arc k → g
        let ground_in: Vec<usize> = (0..m).map(|k| ns.add_arc(ground, k, 0.0)).collect();
        for k in 0..m {
            ns.add_arc(k, ground, 0.0);
        }
        let tree = RTree::bulk_load(atoms.iter().enumerate().map(|(i, (x, _))| Indexed::new((*x).into(), i)).collect());
        for (k, (x, _)) in atoms.iter().enumerate() {
            for nb in tree.nearest_neighbor_iter(&(*x).into()).skip(1).take(NEIGHBOURS) {
                let j = nb.data;
                let d = (atoms[j].0 - x).norm();
                ns.add_arc(k, j, d);
            }
        }
        let radial = atoms.iter().map(|(x, _)| (x - origin).norm()).collect();
        let scale = atoms.iter().map(|(x, _)| (x - origin).norm()).fold(1.0, f64::max);
        FlowLp { atoms, radial, tree, ns, ground_in, scale }
    }

    fn solve(&mut self, ball: f64) -> Result<f64> {
        for k in 0..self.atoms.len() {
            // f_k ≤ dist(x_k, S_0(i)) inside the ball, f_k = 0 outside
            let u = (ball - self.radial[k]).max(0.0);
            self.ns.set_cost(self.ground_in[k], u);
        }
        let eps = 1e-13 * self.scale;
        let ground = self.atoms.len();
        for _round in 0..64 {
            if self.ns.solve(eps) == Status::Infeasible {
                return Err(Error::NonConvergence {
                    what: "Preiss flow problem",
                    iterations: self.ns.pivots,
                    residual: f64::NAN,
                    best: None,
                });
            }
            let f = self.ns.potentials(ground);
            let added = self.price_pairs(&f, eps);
            if added == 0 {
                let primal = self.ns.total_cost();
                let dual: f64 = self.atoms.iter().zip(&f).map(|((_, b), fk)| b * fk).sum();
                debug_assert!((primal - dual).abs() <= 1e-9 * primal.abs().max(1e-12), "{primal} vs {dual}");
                return Ok(dual.max(0.0));
            }
        }
        Err(Error::NonConvergence {
            what: "Preiss column generation",
            iterations: 64,
            residual: f64::NAN,
            best: None,
        })
    }

    /// Adds the most violated Lipschitz constraint per atom; only pairs
    /// closer than the spread of the potentials can be violated.
    fn price_pairs(&mut self, f: &[f64], eps: f64) -> usize {
        let m = self.atoms.len();
        let (lo, hi) = f[..m].iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        let spread = hi - lo;
        if spread <= eps {
            return 0;
        }
        let atoms = self.atoms;
        let tree = &self.tree;
        let violations: Vec<Option<(usize, usize, f64)>> = exec::map_range(m, |k| {
            let x = atoms[k].0;
            let mut worst: Option<(usize, f64, f64)> = None;
            for nb in tree.locate_within_distance(x.into(), spread * spread) {
                let j = nb.data;
                if j == k {
                    continue;
                }
                let d = (atoms[j].0 - x).norm();
                // arc k → j encodes f_j − f_k ≤ d
                let viol = f[j] - f[k] - d;
                if viol > eps && worst.map_or(true, |w| viol > w.1) {
                    worst = Some((j, viol, d));
                }
            }
            worst.map(|(j, _, d)| (k, j, d))
        });
        let mut added = 0;
        for (k, j, d) in violations.into_iter().flatten() {
            self.ns.add_arc(k, j, d);
            added += 1;
        }
        added
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::icosphere;

    fn unit(x: [f64; 3]) -> DiscreteMeasure {
        DiscreteMeasure::new(vec![(x, 1.0)]).unwrap()
    }

    #[test]
    fn identical_measures_are_at_distance_zero() {
        let m = DiscreteMeasure::from_boundary(&icosphere(Vec3::zeros(), 1.0, 2).unwrap()).unwrap();
        let r = preiss_distance(&m, &m, 10, &Vec3::zeros(), DEFAULT_MAX_ATOMS).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.f_values.iter().all(|f| *f == 0.0));
    }

    #[test]
    fn two_atoms() {
        let r = preiss_distance(&unit([1.0, 0.0, 0.0]), &unit([2.0, 0.0, 0.0]), 10, &Vec3::zeros(), 10).unwrap();
        assert_eq!(r.f_values[0], 0.0);
        for f in &r.f_values[1..] {
            assert!((f - 1.0).abs() < 1e-12, "{:?}", r.f_values);
        }
        let expected: f64 = (2..=10).map(|i| 0.5f64.powi(i)).sum();
        assert!((r.value - expected).abs() < 1e-12);
        assert!((r.upper_bound - r.value - 0.5f64.powi(10)).abs() < 1e-15);
    }

    #[test]
    fn atom_guard() {
        let m = DiscreteMeasure::from_boundary(&icosphere(Vec3::zeros(), 1.0, 3).unwrap()).unwrap();
        assert!(matches!(
            preiss_distance(&m, &m, 4, &Vec3::zeros(), 100),
            Err(Error::AtomLimit { atoms: 642, limit: 100 })
        ));
    }

    /// Dense primal LP over all pairs, solved independently.
    fn primal_oracle(mu: &DiscreteMeasure, nu: &DiscreteMeasure, ball: f64) -> f64 {
        use minilp::{ComparisonOp, OptimizationDirection, Problem};
        let atoms = signed_atoms(mu, nu);
        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let vars: Vec<_> =
            atoms.iter().map(|(x, b)| lp.add_var(*b, (0.0, (ball - x.norm()).max(0.0)))).collect();
        for j in 0..atoms.len() {
            for k in 0..atoms.len() {
                if j != k {
                    let d = (atoms[j].0 - atoms[k].0).norm();
                    lp.add_constraint(&[(vars[j], 1.0), (vars[k], -1.0)], ComparisonOp::Le, d);
                }
            }
        }
        lp.solve().unwrap().objective()
    }

    #[test]
    fn matches_dense_primal_lp() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..6 {
            let mut random = |n: usize| {
                let atoms = (0..n)
                    .map(|_| {
                        let x = [rng.random_range(-2.5..2.5), rng.random_range(-2.5..2.5), rng.random_range(-2.5..2.5)];
                        (x, rng.random_range(0.0..1.0))
                    })
                    .collect();
                DiscreteMeasure::new(atoms).unwrap()
            };
            let (mu, nu) = (random(14), random(11));
            let r = preiss_distance(&mu, &nu, 5, &Vec3::zeros(), 100).unwrap();
            for (i, f) in r.f_values.iter().enumerate() {
                let want = primal_oracle(&mu, &nu, (i + 1) as f64);
                assert!((f - want).abs() <= 1e-9 * want.abs().max(1.0), "i={} {f} vs {want}", i + 1);
            }
        }
    }

    #[test]
    fn sphere_measure_is_normalized() {
        let s = DiscreteMeasure::sphere(&Vec3::new(1.0, 2.0, 3.0), 2.0, 3).unwrap();
        assert!((s.total_mass - 1.0).abs() < 1e-12);
    }
}
