//! Family sweeps: generate each domain of a parameter grid, measure it,
//! fit log–log exponents and evaluate the registered checks.
//!
//! The deficit estimator matters at desk scale. A level-4 icosphere already
//! has `δ ≈ 2.5e−4`, which swamps the deficit of small perturbations. The
//! `paired` estimator subtracts the deficit (and Chavel deficit) of the
//! unperturbed mesh the family is built on, which cancels the
//! discretization bias to first order; `raw` keeps the mesh's own value.

mod checks;
mod fit;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub use checks::{
    evaluate, outside_column, registered_checks, CatalogEntry, Check, CheckOutcome, Verdict, Witness, ALL_CHECKS,
    STABILITY_FACTOR,
};
pub use fit::{
    curve_hausdorff_constant, fit_exponent, ExponentFit, ExponentTable, LogCorrection, BONNESEN_FACTOR,
    PLANAR_ISOPERIMETRIC,
};

use crate::curvature::{curvature, outside_annulus_curvature_integral, z_field};
use crate::distances::{
    hausdorff_to_model, lipschitz_distance_to_sphere, preiss_distance, DiscreteMeasure, DEFAULT_MAX_ATOMS,
};
use crate::error::{Error, Result};
use crate::exec;
use crate::generators::{
    fibonacci_directions, generate, icosphere, unperturbed, Family, GraphFunction, TreeSpec,
};
use crate::geometry::{isoperimetric_summary, IsoperimetricSummary};
use crate::measures::{
    bonnesen_circle, fit_sphere, fraenkel_asymmetry, max_bump_discrepancy, max_density_discrepancy,
    outside_fractions, radial_graph_dirichlet, FitMethod, SphereFit,
};
use crate::mesh::{AmbientDim, BoundaryMesh, Vec3};
use crate::sampling::{SamplerConfig, DEFAULT_SEED};
use crate::spectral::chavel_deficit;

/// Named measurement groups; each contributes a fixed set of columns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measurement {
    Deficit,
    Fit,
    Asymmetry,
    HausdorffToModel,
    Tree,
    Lipschitz,
    Curvature,
    Concentration,
    ZField,
    Spectrum,
    Density,
    Dirichlet,
    Preiss,
    Bonnesen,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Deterministic discrete computation.
    Exact,
    /// Monte Carlo estimate; its standard error is in a companion column.
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error_column: Option<String>,
}

impl Measurement {
    pub fn columns(self, cfg: &SweepConfig) -> Vec<Column> {
        let exact = |names: &[&str]| -> Vec<Column> {
            names.iter().map(|n| Column { name: n.to_string(), provenance: Provenance::Exact, error_column: None }).collect()
        };
        match self {
            Measurement::Deficit => {
                exact(&["volume", "perimeter", "volume_radius", "components", "deficit", "deficit_baseline", "delta"])
            }
            Measurement::Fit => exact(&["fit_radius", "fit_offset", "l1_gap"]),
            Measurement::Asymmetry => vec![
                Column {
                    name: "asymmetry".into(),
                    provenance: Provenance::Sampled,
                    error_column: Some("asymmetry_se".into()),
                },
                Column { name: "asymmetry_se".into(), provenance: Provenance::Sampled, error_column: None },
            ],
            Measurement::HausdorffToModel => exact(&["hausdorff", "hausdorff_err"]),
            Measurement::Tree => {
                exact(&["tree_length", "tube_radius", "reach", "hausdorff_tree", "hausdorff_tree_err"])
            }
            Measurement::Lipschitz => exact(&["lipschitz"]),
            Measurement::Curvature => {
                let mut names: Vec<String> = Vec::new();
                for p in &cfg.p {
                    names.push(format!("mean_l{p}"));
                    names.push(format!("sff_l{p}"));
                    names.push(format!("budget_l{p}"));
                }
                names.extend(["mean_linf".into(), "curvature_outside".into(), "low_confidence".into()]);
                names.into_iter().map(|name| Column { name, provenance: Provenance::Exact, error_column: None }).collect()
            }
            Measurement::Concentration => cfg
                .alphas
                .iter()
                .map(|a| Column { name: outside_column(*a), provenance: Provenance::Exact, error_column: None })
                .collect(),
            Measurement::ZField => exact(&["z_l2", "z_sup"]),
            Measurement::Spectrum => exact(&["lambda1", "multiplicity", "gamma_raw", "gamma_baseline", "gamma"]),
            Measurement::Density => exact(&["density_max", "bump_max"]),
            Measurement::Dirichlet => exact(&["dirichlet"]),
            Measurement::Preiss => exact(&["preiss", "preiss_upper"]),
            Measurement::Bonnesen => exact(&["bonnesen_hausdorff", "bonnesen_margin", "diameter"]),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeficitEstimator {
    /// Paired with the unperturbed mesh when the family has one, raw otherwise.
    #[default]
    Auto,
    Raw,
    Paired,
}

/// Requested log–log fit of column `y` against column `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRequest {
    pub x: String,
    pub y: String,
    #[serde(default)]
    pub correction: LogCorrection,
}

fn default_level() -> u32 {
    4
}
fn default_delta_max() -> f64 {
    0.5
}
fn default_alphas() -> Vec<f64> {
    vec![0.25]
}
fn default_p() -> Vec<f64> {
    vec![1.0, 2.0, 4.0]
}
fn default_preiss_level() -> u32 {
    4
}
fn default_preiss_terms() -> u32 {
    4
}
fn default_max_atoms() -> usize {
    DEFAULT_MAX_ATOMS
}
fn default_fit_method() -> FitMethod {
    FitMethod::BoundaryLeastSquares
}

/// Sweep config: `{"family", "grid", "measurements", "checks", "seed", ...}`.
///
/// Grid entries are either objects merged into `base`, or scalars assigned
/// to the (possibly dotted) `parameter` path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub family: String,
    #[serde(default)]
    pub base: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameter: Option<String>,
    pub grid: Vec<Value>,
    #[serde(default = "default_level")]
    pub level: u32,
    #[serde(default)]
    pub measurements: Vec<Measurement>,
    #[serde(default)]
    pub checks: Vec<Check>,
    #[serde(default)]
    pub fits: Vec<FitRequest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Samples with `δ` above this are discarded.
    #[serde(default = "default_delta_max")]
    pub delta_max: f64,
    #[serde(default)]
    pub deficit: DeficitEstimator,
    #[serde(default = "default_fit_method")]
    pub fit_method: FitMethod,
    /// Concentration exponents `α`, annulus `A_{δ^α}`.
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    /// Curvature norm exponents.
    #[serde(default = "default_p")]
    pub p: Vec<f64>,
    /// Icosphere level of the sphere measure the Preiss distance compares to.
    #[serde(default = "default_preiss_level")]
    pub preiss_level: u32,
    #[serde(default = "default_preiss_terms")]
    pub preiss_terms: u32,
    #[serde(default = "default_max_atoms")]
    pub preiss_max_atoms: usize,
}

impl SweepConfig {
    /// Minimal config with defaults for everything but the grid.
    pub fn new(family: &str, parameter: Option<&str>, grid: Vec<Value>) -> Self {
        SweepConfig {
            family: family.into(),
            base: Map::new(),
            parameter: parameter.map(Into::into),
            grid,
            level: default_level(),
            measurements: Vec::new(),
            checks: Vec::new(),
            fits: Vec::new(),
            seed: None,
            delta_max: default_delta_max(),
            deficit: DeficitEstimator::Auto,
            fit_method: default_fit_method(),
            alphas: default_alphas(),
            p: default_p(),
            preiss_level: default_preiss_level(),
            preiss_terms: default_preiss_terms(),
            preiss_max_atoms: default_max_atoms(),
        }
    }

    /// Validates the config and returns the family of every grid entry.
    pub fn families(&self) -> Result<Vec<Family>> {
        if self.grid.is_empty() {
            return Err(Error::invalid("sweep grid is empty"));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && **a < 0.5)) {
            return Err(Error::invalid(format!("concentration exponents must lie in (0, 1/2), got {a}")));
        }
        if !(self.delta_max > 0.0) {
            return Err(Error::invalid("delta_max must be positive"));
        }
        for check in &self.checks {
            for m in check.measurements() {
                if !self.measurements.contains(m) {
                    return Err(Error::invalid(format!(
                        "check {check} needs measurement {:?}",
                        serde_json::to_value(m)?.as_str().unwrap_or_default()
                    )));
                }
            }
        }
        if let Some(p) = &self.parameter {
            let taken = self.columns().iter().skip(1).any(|c| &c.name == p);
            if taken {
                return Err(Error::invalid(format!("parameter {p:?} clashes with a measurement column")));
            }
        }
        self.grid.iter().enumerate().map(|(i, entry)| self.family_at(i, entry)).collect()
    }

    fn family_at(&self, i: usize, entry: &Value) -> Result<Family> {
        let mut params = Value::Object(self.base.clone());
        match (entry, &self.parameter) {
            (Value::Object(o), _) => {
                for (k, v) in o {
                    set_path(&mut params, k, v.clone())?;
                }
            }
            (v, Some(path)) => set_path(&mut params, path, v.clone())?,
            (_, None) => {
                return Err(Error::invalid(format!("grid entry {i} is a scalar but no \"parameter\" is named")))
            }
        }
        let doc = serde_json::json!({ "family": self.family, "params": params });
        serde_json::from_value(doc).map_err(|e| Error::invalid(format!("grid entry {i}: {e}")))
    }

    /// Sort key of a grid entry: the parameter value when it is numeric.
    fn key_at(&self, i: usize) -> f64 {
        let entry = &self.grid[i];
        let scalar = match (entry, &self.parameter) {
            (Value::Object(o), Some(p)) => o.get(p.as_str()),
            (v, Some(_)) => Some(v),
            _ => None,
        };
        scalar.and_then(Value::as_f64).unwrap_or(i as f64)
    }

    pub fn columns(&self) -> Vec<Column> {
        let mut out = Vec::new();
        if let Some(p) = &self.parameter {
            out.push(Column { name: p.clone(), provenance: Provenance::Exact, error_column: None });
        }
        let mut seen = Vec::new();
        for m in std::iter::once(Measurement::Deficit).chain(self.measurements.iter().copied()) {
            if !seen.contains(&m) {
                seen.push(m);
                out.extend(m.columns(self));
            }
        }
        out
    }
}

fn set_path(target: &mut Value, path: &str, v: Value) -> Result<()> {
    let mut cur = target;
    let mut parts = path.split('.').peekable();
    while let Some(part) = parts.next() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::invalid(format!("parameter path {path:?} crosses a non-object")))?;
        if parts.peek().is_none() {
            obj.insert(part.to_string(), v);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleStatus {
    Ok,
    /// `δ` above the sweep's threshold; only the deficit columns are kept.
    Discarded,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: usize,
    pub key: f64,
    pub params: Value,
    pub status: SampleStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub values: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOutcome {
    pub x: String,
    pub y: String,
    pub correction: LogCorrection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<ExponentFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub family: String,
    pub parameter: Option<String>,
    pub grid: Vec<Value>,
    pub columns: Vec<Column>,
    pub samples: Vec<SampleRecord>,
    pub fits: Vec<FitOutcome>,
    pub checks: Vec<CheckOutcome>,
    pub failed: usize,
    pub discarded: usize,
}

impl SweepResult {
    pub fn outcome(&self, check: Check) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.check == check)
    }

    pub fn fit(&self, x: &str, y: &str) -> Option<&FitOutcome> {
        self.fits.iter().find(|f| f.x == x && f.y == y)
    }

    /// Values of one column over the usable samples, in grid order.
    pub fn column(&self, name: &str) -> Vec<f64> {
        self.samples
            .iter()
            .filter(|s| s.status == SampleStatus::Ok)
            .filter_map(|s| s.values.get(name).copied())
            .collect()
    }
}

/// Per-sample seed: a splitmix64 step away from the sweep seed.
fn sample_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs the sweep. Samples run concurrently; records come back in grid
/// order, so the result does not depend on the thread count.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    let families = cfg.families()?;
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    let samples: Vec<SampleRecord> = exec::map_range(families.len(), |i| {
        let key = cfg.key_at(i);
        let params = serde_json::to_value(&families[i]).unwrap_or(Value::Null);
        let mut values = BTreeMap::new();
        if let Some(p) = &cfg.parameter {
            values.insert(p.clone(), key);
        }
        let (status, message) = match measure_sample(cfg, &families[i], sample_seed(seed, i), &mut values) {
            Ok(status) => (status, None),
            Err(e) => (SampleStatus::Failed, Some(e.to_string())),
        };
        SampleRecord { index: i, key, params, status, message, values }
    });
    let failed = samples.iter().filter(|s| s.status == SampleStatus::Failed).count();
    if 2 * failed > samples.len() {
        let first = samples.iter().find_map(|s| s.message.clone()).unwrap_or_default();
        return Err(Error::SweepFailed { failed, total: samples.len(), first });
    }
    let discarded = samples.iter().filter(|s| s.status == SampleStatus::Discarded).count();
    let fits = cfg.fits.iter().map(|req| fit_columns(&samples, req)).collect();
    let checks = assess(cfg, &samples);
    Ok(SweepResult {
        family: cfg.family.clone(),
        parameter: cfg.parameter.clone(),
        grid: cfg.grid.clone(),
        columns: cfg.columns(),
        samples,
        fits,
        checks,
        failed,
        discarded,
    })
}

/// Check verdicts from the records alone.
pub fn assess(cfg: &SweepConfig, samples: &[SampleRecord]) -> Vec<CheckOutcome> {
    cfg.checks.iter().flat_map(|c| evaluate(*c, samples, &cfg.alphas)).collect()
}

pub fn fit_columns(samples: &[SampleRecord], req: &FitRequest) -> FitOutcome {
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for s in samples.iter().filter(|s| s.status == SampleStatus::Ok) {
        if let (Some(x), Some(y)) = (s.values.get(&req.x), s.values.get(&req.y)) {
            xs.push(*x);
            ys.push(*y);
        }
    }
    match fit_exponent(&xs, &ys, req.correction) {
        Ok(f) => FitOutcome {
            x: req.x.clone(),
            y: req.y.clone(),
            correction: req.correction,
            interval: Some(f.interval()),
            fit: Some(f),
            error: None,
        },
        Err(e) => FitOutcome {
            x: req.x.clone(),
            y: req.y.clone(),
            correction: req.correction,
            fit: None,
            interval: None,
            error: Some(e.to_string()),
        },
    }
}

/// Mesh the family is a perturbation of, with the same discretization.
pub fn baseline(family: &Family, level: u32) -> Result<Option<BoundaryMesh>> {
    Ok(match family {
        Family::Ellipsoid { .. } | Family::RandomStarMesh { .. } => Some(icosphere(Vec3::zeros(), 1.0, level)?),
        Family::Icosphere { center, radius } => Some(icosphere(Vec3::from(*center), *radius, level)?),
        Family::NearlySpherical { u } => Some(unperturbed(u, level)?),
        Family::Harmonic { l, m, amplitude } => Some(unperturbed(&GraphFunction::harmonic(*l, *m, *amplitude), level)?),
        Family::Sharpness { p, delta_target } => Some(unperturbed(&GraphFunction::sharpness(*p, *delta_target), level)?),
        Family::TubeTree { ball_radius, .. } => Some(icosphere(Vec3::zeros(), *ball_radius, level)?),
        Family::SpikyBall { .. } => Some(icosphere(Vec3::zeros(), 1.0, level)?),
        _ => None,
    })
}

/// The tree a tube family is built around.
pub fn family_tree(family: &Family) -> Option<TreeSpec> {
    match family {
        Family::TubeTree { tree, .. } => Some(tree.clone()),
        Family::SpikyBall { count, height, eps } => Some(TreeSpec {
            segments: fibonacci_directions(*count)
                .iter()
                .map(|d| [d.normalize().into(), (d.normalize() * (1.0 + height)).into()])
                .collect(),
            tube_radius: *eps,
            attach_to_ball: true,
        }),
        _ => None,
    }
}

/// Normalized measure of a round sphere (or circle) for the Preiss distance.
pub fn sphere_measure(dim: AmbientDim, fit: &SphereFit, level: u32) -> Result<DiscreteMeasure> {
    match dim {
        AmbientDim::Three => DiscreteMeasure::sphere(&fit.center(), fit.radius, level),
        AmbientDim::Two => {
            let m = 16usize << level.min(16);
            let c = fit.center();
            DiscreteMeasure::new(
                (0..m)
                    .map(|k| {
                        let t = 2.0 * PI * k as f64 / m as f64;
                        ((c + Vec3::new(t.cos(), t.sin(), 0.0) * fit.radius).into(), 1.0 / m as f64)
                    })
                    .collect(),
            )
        }
    }
}

fn deficit_columns(values: &mut BTreeMap<String, f64>, s: &IsoperimetricSummary) {
    values.insert("volume".into(), s.volume);
    values.insert("perimeter".into(), s.perimeter);
    values.insert("volume_radius".into(), s.radius);
    values.insert("components".into(), s.component_count as f64);
    values.insert("deficit".into(), s.deficit);
}

fn measure_sample(
    cfg: &SweepConfig,
    family: &Family,
    seed: u64,
    values: &mut BTreeMap<String, f64>,
) -> Result<SampleStatus> {
    let mesh = generate(family, cfg.level)?;
    let summary = isoperimetric_summary(&mesh)?;
    deficit_columns(values, &summary);
    let base = match cfg.deficit {
        DeficitEstimator::Raw => None,
        DeficitEstimator::Auto => baseline(family, cfg.level)?,
        DeficitEstimator::Paired => Some(
            baseline(family, cfg.level)?
                .ok_or_else(|| Error::invalid(format!("family {} has no paired baseline", cfg.family)))?,
        ),
    };
    let base_deficit = match &base {
        Some(b) => isoperimetric_summary(b)?.deficit,
        None => 0.0,
    };
    let delta = summary.deficit - base_deficit;
    values.insert("deficit_baseline".into(), base_deficit);
    values.insert("delta".into(), delta);
    if delta > cfg.delta_max {
        return Ok(SampleStatus::Discarded);
    }
    let sampler = SamplerConfig { seed, ..SamplerConfig::default() };
    let n = mesh.dim().n() as f64;
    let mut fit: Option<SphereFit> = None;
    let get_fit = |fit: &mut Option<SphereFit>| -> Result<SphereFit> {
        if fit.is_none() {
            *fit = Some(fit_sphere(&mesh, cfg.fit_method, &sampler)?);
        }
        Ok(fit.clone().expect("set above"))
    };
    // A_{δ^{1/4}}; a nonpositive paired deficit means the mesh is at the
    // discretization floor, where the annulus degenerates to width 0
    let quarter = delta.max(0.0).powf(0.25);
    for m in &cfg.measurements {
        match m {
            Measurement::Deficit => {}
            Measurement::Fit => {
                let f = get_fit(&mut fit)?;
                values.insert("fit_radius".into(), f.radius);
                values.insert("fit_offset".into(), f.center().norm());
                values.insert("l1_gap".into(), f.l1_boundary_gap);
            }
            Measurement::Asymmetry => {
                let a = fraenkel_asymmetry(&mesh, &sampler)?;
                values.insert("asymmetry".into(), a.value);
                values.insert("asymmetry_se".into(), a.standard_error);
            }
            Measurement::HausdorffToModel => {
                let h = hausdorff_to_model(&mesh, &get_fit(&mut fit)?, &[])?;
                values.insert("hausdorff".into(), h.value);
                values.insert("hausdorff_err".into(), h.error_bound);
            }
            Measurement::Tree => {
                let tree = family_tree(family)
                    .ok_or_else(|| Error::invalid(format!("family {} has no tree", cfg.family)))?;
                let f = get_fit(&mut fit)?;
                let c = f.center();
                let spacing = 0.5 * tree.tube_radius;
                // only the part of the tree outside the model ball adds to the model set
                let extra: Vec<Vec3> =
                    tree.polyline_points(spacing).into_iter().filter(|p| (p - c).norm() > f.radius).collect();
                let reach = tree
                    .segments
                    .iter()
                    .flat_map(|s| s.iter())
                    .map(|p| (Vec3::from(*p) - c).norm() - f.radius)
                    .fold(0.0, f64::max);
                let h = hausdorff_to_model(&mesh, &f, &extra)?;
                values.insert("tree_length".into(), tree.total_length());
                values.insert("tube_radius".into(), tree.tube_radius);
                values.insert("reach".into(), reach);
                values.insert("hausdorff_tree".into(), h.value);
                values.insert("hausdorff_tree_err".into(), h.error_bound + 0.5 * spacing);
            }
            Measurement::Lipschitz => {
                let l = lipschitz_distance_to_sphere(&mesh, &get_fit(&mut fit)?)?;
                values.insert("lipschitz".into(), l.value);
            }
            Measurement::Curvature => {
                let field = curvature(&mesh, &cfg.p)?;
                for p in &cfg.p {
                    let agg = field.aggregate(*p).expect("aggregates cover the requested p");
                    values.insert(format!("mean_l{p}"), agg.mean);
                    values.insert(format!("sff_l{p}"), agg.second_fundamental_form);
                    values.insert(format!("budget_l{p}"), agg.budget);
                }
                values.insert("mean_linf".into(), field.mean_norm(f64::INFINITY));
                let annulus = get_fit(&mut fit)?.annulus(quarter)?;
                let outside = outside_annulus_curvature_integral(&mesh, &field, &annulus, n - 1.0)?;
                values.insert("curvature_outside".into(), outside);
                values.insert("low_confidence".into(), field.low_confidence.len() as f64);
            }
            Measurement::Concentration => {
                let f = get_fit(&mut fit)?;
                let etas: Vec<f64> = cfg.alphas.iter().map(|a| delta.max(0.0).powf(*a)).collect();
                for (a, frac) in cfg.alphas.iter().zip(outside_fractions(&mesh, &f, &etas)) {
                    values.insert(outside_column(*a), frac);
                }
            }
            Measurement::ZField => {
                let z = z_field(&mesh, &get_fit(&mut fit)?)?;
                values.insert("z_l2".into(), z.l2);
                values.insert("z_sup".into(), z.sup);
            }
            Measurement::Spectrum => {
                let s = chavel_deficit(&mesh)?;
                let g0 = match &base {
                    Some(b) => chavel_deficit(b)?.gamma,
                    None => 0.0,
                };
                values.insert("lambda1".into(), s.lambda1);
                values.insert("multiplicity".into(), s.eigen_multiplicity_estimate as f64);
                values.insert("gamma_raw".into(), s.gamma);
                values.insert("gamma_baseline".into(), g0);
                values.insert("gamma".into(), s.gamma - g0);
            }
            Measurement::Density => {
                let f = get_fit(&mut fit)?;
                values.insert("density_max".into(), max_density_discrepancy(&mesh, &f));
                values.insert("bump_max".into(), max_bump_discrepancy(&mesh, &f));
            }
            Measurement::Dirichlet => {
                values.insert("dirichlet".into(), radial_graph_dirichlet(&mesh, &get_fit(&mut fit)?)?);
            }
            Measurement::Preiss => {
                let f = get_fit(&mut fit)?;
                let model = sphere_measure(mesh.dim(), &f, cfg.preiss_level)?;
                let mu = DiscreteMeasure::from_boundary(&mesh)?;
                let r = preiss_distance(&model, &mu, cfg.preiss_terms, &Vec3::zeros(), cfg.preiss_max_atoms)?;
                values.insert("preiss".into(), r.value);
                values.insert("preiss_upper".into(), r.upper_bound);
            }
            Measurement::Bonnesen => {
                let b = bonnesen_circle(&mesh)?;
                let (p, a) = (summary.perimeter, summary.volume);
                values.insert("bonnesen_hausdorff".into(), b.hausdorff);
                values.insert("bonnesen_margin".into(), p * p - PLANAR_ISOPERIMETRIC * a - BONNESEN_FACTOR * b.hausdorff.powi(2));
                values.insert("diameter".into(), diameter(&mesh));
            }
        }
    }
    Ok(SampleStatus::Ok)
}

/// Largest vertex distance; exact for polygons and polyhedra.
pub fn diameter(mesh: &BoundaryMesh) -> f64 {
    let v = mesh.vertices();
    exec::map_range(v.len(), |i| v[i + 1..].iter().map(|w| (w - v[i]).norm()).fold(0.0, f64::max))
        .into_iter()
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn config_parsing_and_paths() {
        let cfg: SweepConfig = serde_json::from_value(json!({
            "family": "tube_tree",
            "base": {"ball_radius": 1.0, "tree": {"segments": [[[1.0, 0.0, 0.0], [1.5, 0.0, 0.0]]], "attach_to_ball": true}},
            "parameter": "tree.tube_radius",
            "grid": [0.04, 0.02],
            "level": 2,
            "seed": 3
        }))
        .unwrap();
        let fams = cfg.families().unwrap();
        match &fams[1] {
            Family::TubeTree { tree, .. } => assert_eq!(tree.tube_radius, 0.02),
            f => panic!("{f:?}"),
        }
        assert_eq!(cfg.key_at(0), 0.04);
        assert!(serde_json::from_value::<SweepConfig>(json!({"family": "x", "grid": [], "bogus": 1})).is_err());
    }

    #[test]
    fn check_requires_its_measurements() {
        let mut cfg = SweepConfig::new("harmonic", Some("amplitude"), vec![json!(0.01)]);
        cfg.base.insert("l".into(), json!(2));
        cfg.base.insert("m".into(), json!(0));
        cfg.checks = vec![Check::Fuglede];
        assert!(cfg.families().is_err());
        cfg.measurements = vec![Measurement::Dirichlet];
        assert!(cfg.families().is_ok());
    }

    #[test]
    fn empty_measurement_list_gives_records_only() {
        let mut cfg = SweepConfig::new("icosphere", Some("radius"), vec![json!(1.0), json!(2.0)]);
        cfg.level = 1;
        let r = run_sweep(&cfg).unwrap();
        assert_eq!(r.samples.len(), 2);
        assert!(r.fits.is_empty() && r.checks.is_empty());
        let names: Vec<&str> = r.columns.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names[..2], ["radius", "volume"]);
        // the paired deficit of an icosphere against itself is exactly zero
        assert_eq!(r.column("delta"), vec![0.0, 0.0]);
    }

    #[test]
    fn per_sample_failures_are_recorded() {
        // amplitude 2 pushes |u| past the admissible 1/2
        let mut cfg = SweepConfig::new("harmonic", Some("amplitude"), vec![json!(0.01), json!(0.02), json!(2.0)]);
        cfg.base.insert("l".into(), json!(2));
        cfg.base.insert("m".into(), json!(0));
        cfg.level = 1;
        let r = run_sweep(&cfg).unwrap();
        assert_eq!(r.failed, 1);
        assert!(r.samples[2].message.as_deref().unwrap().contains("amplitude"));
        cfg.grid = vec![json!(2.0), json!(3.0), json!(0.01)];
        assert!(matches!(run_sweep(&cfg), Err(Error::SweepFailed { failed: 2, total: 3, .. })));
    }

    #[test]
    fn large_deficit_is_discarded() {
        let mut cfg = SweepConfig::new("two_balls", Some("separation"), vec![json!(3.0)]);
        cfg.level = 1;
        cfg.delta_max = 0.1;
        let r = run_sweep(&cfg).unwrap();
        assert_eq!(r.discarded, 1);
        assert_eq!(r.samples[0].status, SampleStatus::Discarded);
    }

    #[test]
    fn planar_sweep_with_exact_checks() {
        let mut cfg = SweepConfig::new("random_star_polygon", Some("seed"), (0..6).map(|s| json!(s)).collect());
        cfg.base.insert("vertices".into(), json!(64));
        cfg.base.insert("roughness".into(), json!(0.05));
        cfg.measurements = vec![Measurement::Bonnesen, Measurement::Asymmetry];
        cfg.checks = vec![Check::BonnesenFuglede, Check::CurveHausdorff];
        let r = run_sweep(&cfg).unwrap();
        assert_eq!((r.failed, r.discarded), (0, 0), "{:?}", r.samples[0]);
        for c in &r.checks {
            assert!(c.verdict.holds(), "{c:?}");
        }
        // planar asymmetry is exact
        assert!(r.column("asymmetry_se").iter().all(|s| *s == 0.0));
        // verdicts are reproducible from the records
        assert_eq!(assess(&cfg, &r.samples), r.checks);
    }

    #[test]
    fn sweep_is_thread_count_independent() {
        let mut cfg = SweepConfig::new("random_star_mesh", Some("seed"), (0..3).map(|s| json!(s)).collect());
        cfg.base.insert("amplitude".into(), json!(0.1));
        cfg.level = 2;
        cfg.measurements = vec![Measurement::Asymmetry, Measurement::Fit];
        let a = exec::with_threads(Some(1), || run_sweep(&cfg).unwrap());
        let b = exec::with_threads(Some(4), || run_sweep(&cfg).unwrap());
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn diameter_of_square() {
        let m = crate::generators::rectangle(1.0, 1.0).unwrap();
        assert!((diameter(&m) - 2f64.sqrt()).abs() < 1e-15);
    }
}
