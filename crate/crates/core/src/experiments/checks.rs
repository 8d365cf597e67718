//! Registered inequality checks and their verdicts over sweep records.
//!
//! Exact inequalities are tested sample by sample. Inequalities with a
//! non-explicit constant, `lhs ≤ C·base^q`, are tested through the fitted
//! constant `C_fit = max lhs/base^q`: the bound is falsified when the ratio
//! grows by 10× or more as `base` decreases across dyadic ranges.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::fit::{curve_hausdorff_constant, BONNESEN_FACTOR, PLANAR_ISOPERIMETRIC};
use super::{Measurement, SampleRecord, SampleStatus};
use crate::error::{Error, Result};

/// Largest tolerated growth of the fitted constant toward small `base`.
pub const STABILITY_FACTOR: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Check {
    /// `16π d_H² ≤ P² − 4π|Ω|` for planar curves.
    #[serde(rename = "C1")]
    BonnesenFuglede,
    /// `d_H/diam ≤ √(3π)/4 · δ^{1/2}` for planar curves with `δ ≤ 1`.
    #[serde(rename = "C2")]
    CurveHausdorff,
    /// Boundary fraction outside `A_{δ^α}` is `≤ C·δ^{1/2−α}`.
    #[serde(rename = "C3")]
    Concentration,
    /// Density discrepancy on the 12×3 grid is `≤ C·δ^{1/4}`.
    #[serde(rename = "C4")]
    Equidensity,
    /// Normalized bump-function discrepancy is `≤ C·δ^{1/2}`.
    #[serde(rename = "C5")]
    TestFunctions,
    /// `‖Z‖₂² ≤ C·δ^{1/2}` (mean-normalized).
    #[serde(rename = "C6")]
    NormalDeviation,
    /// `δ ≤ C·γ^{1/2}`.
    #[serde(rename = "C7")]
    Chavel,
    /// `d_P ≤ C·δ^{1/2}`.
    #[serde(rename = "C8")]
    Preiss,
    /// `∫_{∂Ω∖A_{δ^{1/4}}} |H|^{n−1}` within a factor 2 of `π·H¹(T)`.
    #[serde(rename = "C9")]
    TubeTree,
    /// `A(Ω) ≤ C·δ^{1/2}`.
    #[serde(rename = "C10")]
    Fraenkel,
    /// `‖du‖₂² ≤ 10δ` for nearly spherical graphs.
    #[serde(rename = "fuglede_gradient")]
    Fuglede,
}

pub const ALL_CHECKS: [Check; 11] = [
    Check::BonnesenFuglede,
    Check::CurveHausdorff,
    Check::Concentration,
    Check::Equidensity,
    Check::TestFunctions,
    Check::NormalDeviation,
    Check::Chavel,
    Check::Preiss,
    Check::TubeTree,
    Check::Fraenkel,
    Check::Fuglede,
];

impl Check {
    pub fn id(self) -> &'static str {
        match self {
            Check::BonnesenFuglede => "C1",
            Check::CurveHausdorff => "C2",
            Check::Concentration => "C3",
            Check::Equidensity => "C4",
            Check::TestFunctions => "C5",
            Check::NormalDeviation => "C6",
            Check::Chavel => "C7",
            Check::Preiss => "C8",
            Check::TubeTree => "C9",
            Check::Fraenkel => "C10",
            Check::Fuglede => "fuglede_gradient",
        }
    }

    /// The result the check tests.
    pub fn tag(self) -> &'static str {
        match self {
            Check::BonnesenFuglede => "planar Bonnesen–Fuglede inequality",
            Check::CurveHausdorff => "planar Hausdorff bound via the isodiametric inequality",
            Check::Concentration => "concentration lemma for the annulus A_η",
            Check::Equidensity => "equidensity theorem",
            Check::TestFunctions => "test-function comparison with the model sphere",
            Check::NormalDeviation => "L² normal deviation lemma",
            Check::Chavel => "Chavel eigenvalue pinching theorem",
            Check::Preiss => "Preiss distance bound",
            Check::TubeTree => "tube-tree sharpness of the model-set theorem",
            Check::Fraenkel => "Fraenkel asymmetry remark",
            Check::Fuglede => "Fuglede gradient bound for nearly spherical domains",
        }
    }

    pub fn statement(self) -> &'static str {
        match self {
            Check::BonnesenFuglede => "16π d_H² ≤ P² − 4π|Ω|",
            Check::CurveHausdorff => "d_H/diam ≤ √(3π)/4 · δ^{1/2} when δ ≤ 1",
            Check::Concentration => "H^n(∂Ω ∖ A_{δ^α})/P ≤ C·δ^{1/2−α}",
            Check::Equidensity => "max density discrepancy ≤ C·δ^{1/4}",
            Check::TestFunctions => "max |⟨f, μ_Ω − μ_S⟩|/(‖f‖∞ + ‖df‖∞) ≤ C·δ^{1/2}",
            Check::NormalDeviation => "(1/P)∫|ν − (x−x_Ω)/|x−x_Ω||² ≤ C·δ^{1/2}",
            Check::Chavel => "δ ≤ C·γ^{1/2}",
            Check::Preiss => "d_P(μ_S, μ_Ω) ≤ C·δ^{1/2}",
            Check::TubeTree => "1/2 ≤ ∫_{∂Ω∖A_{δ^{1/4}}}|H|^{n−1} / (π·H¹(T)) ≤ 2",
            Check::Fraenkel => "A(Ω) ≤ C·δ^{1/2}",
            Check::Fuglede => "‖du‖₂² ≤ 10δ",
        }
    }

    /// Measurements whose columns the check reads (besides the deficit).
    pub fn measurements(self) -> &'static [Measurement] {
        match self {
            Check::BonnesenFuglede | Check::CurveHausdorff => &[Measurement::Bonnesen],
            Check::Concentration => &[Measurement::Concentration],
            Check::Equidensity | Check::TestFunctions => &[Measurement::Density],
            Check::NormalDeviation => &[Measurement::ZField],
            Check::Chavel => &[Measurement::Spectrum],
            Check::Preiss => &[Measurement::Preiss],
            Check::TubeTree => &[Measurement::Tree, Measurement::Curvature],
            Check::Fraenkel => &[Measurement::Asymmetry],
            Check::Fuglede => &[Measurement::Dirichlet],
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Check {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ALL_CHECKS
            .iter()
            .copied()
            .find(|c| c.id().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown check {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub id: String,
    pub tag: String,
    pub statement: String,
    pub measurements: Vec<Measurement>,
}

pub fn registered_checks() -> Vec<CatalogEntry> {
    ALL_CHECKS
        .iter()
        .map(|c| CatalogEntry {
            id: c.id().into(),
            tag: c.tag().into(),
            statement: c.statement().into(),
            measurements: c.measurements().to_vec(),
        })
        .collect()
}

/// A sample that falsifies a check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub sample: usize,
    pub key: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated { witness: Witness },
    Inconclusive { reason: String },
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub check: Check,
    /// Distinguishes instances of one check, e.g. `"alpha=0.25"`.
    pub variant: Option<String>,
    pub verdict: Verdict,
    /// `max lhs/base^q` for fitted-constant checks.
    pub c_fit: Option<f64>,
    /// Largest ratio of a dyadic range's max to that of a range of larger `base`.
    pub growth: Option<f64>,
    /// Largest over smallest dyadic-range max.
    pub spread: Option<f64>,
    /// Smallest slack `rhs − lhs` for exact checks, smallest ratio band
    /// distance for band checks.
    pub margin: Option<f64>,
    pub evaluated: usize,
    pub skipped: usize,
}

type Values = BTreeMap<String, f64>;

fn col(v: &Values, name: &str) -> Option<f64> {
    v.get(name).copied().filter(|x| x.is_finite())
}

/// Evaluates `check` on the usable records; `alphas` are the concentration
/// exponents of the sweep.
pub fn evaluate(check: Check, records: &[SampleRecord], alphas: &[f64]) -> Vec<CheckOutcome> {
    let usable: Vec<&SampleRecord> = records.iter().filter(|r| r.status == SampleStatus::Ok).collect();
    match check {
        Check::BonnesenFuglede => vec![per_sample(check, &usable, |v| {
            let (d, p, a) = (col(v, "bonnesen_hausdorff")?, col(v, "perimeter")?, col(v, "volume")?);
            Some((BONNESEN_FACTOR * d * d, p * p - PLANAR_ISOPERIMETRIC * a, p * p))
        })],
        Check::CurveHausdorff => vec![per_sample(check, &usable, |v| {
            let (d, diam, delta) = (col(v, "bonnesen_hausdorff")?, col(v, "diameter")?, col(v, "delta")?);
            (delta <= 1.0).then(|| (d / diam, curve_hausdorff_constant() * delta.max(0.0).sqrt(), 1.0))
        })],
        Check::Concentration => alphas
            .iter()
            .map(|&alpha| {
                let name = outside_column(alpha);
                let mut out = fitted(check, &usable, |v| col(v, &name), "delta", 0.5 - alpha);
                out.variant = Some(format!("alpha={alpha}"));
                out
            })
            .collect(),
        Check::Equidensity => vec![fitted(check, &usable, |v| col(v, "density_max"), "delta", 0.25)],
        Check::TestFunctions => vec![fitted(check, &usable, |v| col(v, "bump_max"), "delta", 0.5)],
        Check::NormalDeviation => vec![fitted(check, &usable, |v| col(v, "z_l2").map(|z| z * z), "delta", 0.5)],
        Check::Chavel => vec![fitted(check, &usable, |v| col(v, "delta"), "gamma", 0.5)],
        Check::Preiss => vec![fitted(check, &usable, |v| col(v, "preiss"), "delta", 0.5)],
        Check::TubeTree => vec![band(check, &usable, 0.5, 2.0, |v| {
            Some(col(v, "curvature_outside")? / (PI * col(v, "tree_length")?))
        })],
        Check::Fraenkel => vec![fitted(check, &usable, |v| col(v, "asymmetry"), "delta", 0.5)],
        Check::Fuglede => vec![per_sample(check, &usable, |v| {
            let (d, delta) = (col(v, "dirichlet")?, col(v, "delta")?);
            Some((d, 10.0 * delta, 10.0 * delta.abs()))
        })],
    }
}

pub fn outside_column(alpha: f64) -> String {
    format!("outside_alpha_{alpha}")
}

fn outcome(check: Check, verdict: Verdict, evaluated: usize, skipped: usize) -> CheckOutcome {
    CheckOutcome {
        check,
        variant: None,
        verdict,
        c_fit: None,
        growth: None,
        spread: None,
        margin: None,
        evaluated,
        skipped,
    }
}

/// `lhs ≤ rhs` at every sample, up to rounding `1e−12·scale`.
fn per_sample(
    check: Check,
    records: &[&SampleRecord],
    f: impl Fn(&Values) -> Option<(f64, f64, f64)>,
) -> CheckOutcome {
    let mut evaluated = 0;
    let mut margin = f64::INFINITY;
    let mut witness = None;
    for r in records {
        let Some((lhs, rhs, scale)) = f(&r.values) else { continue };
        evaluated += 1;
        margin = margin.min(rhs - lhs);
        if !(lhs <= rhs + 1e-12 * scale) && witness.is_none() {
            witness = Some(Witness { sample: r.index, key: r.key, lhs, rhs });
        }
    }
    let skipped = records.len() - evaluated;
    let verdict = match witness {
        Some(witness) => Verdict::Violated { witness },
        None if evaluated == 0 => Verdict::Inconclusive { reason: "no sample carries the needed columns".into() },
        None => Verdict::Holds,
    };
    CheckOutcome { margin: (evaluated > 0).then_some(margin), ..outcome(check, verdict, evaluated, skipped) }
}

/// Ratio within `[lo, hi]` at every sample.
fn band(check: Check, records: &[&SampleRecord], lo: f64, hi: f64, f: impl Fn(&Values) -> Option<f64>) -> CheckOutcome {
    let mut evaluated = 0;
    let mut margin = f64::INFINITY;
    let mut witness = None;
    for r in records {
        let Some(ratio) = f(&r.values) else { continue };
        evaluated += 1;
        margin = margin.min((ratio / lo).min(hi / ratio));
        if !(lo <= ratio && ratio <= hi) && witness.is_none() {
            let rhs = if ratio < lo { lo } else { hi };
            witness = Some(Witness { sample: r.index, key: r.key, lhs: ratio, rhs });
        }
    }
    let skipped = records.len() - evaluated;
    let verdict = match witness {
        Some(witness) => Verdict::Violated { witness },
        None if evaluated == 0 => Verdict::Inconclusive { reason: "no sample carries the needed columns".into() },
        None => Verdict::Holds,
    };
    CheckOutcome { margin: (evaluated > 0).then_some(margin), ..outcome(check, verdict, evaluated, skipped) }
}

/// `lhs ≤ C·base^q` with one sweep-wide constant.
fn fitted(
    check: Check,
    records: &[&SampleRecord],
    lhs: impl Fn(&Values) -> Option<f64>,
    base: &str,
    q: f64,
) -> CheckOutcome {
    // (bin, ratio, record, lhs, base)
    let mut points: Vec<(i32, f64, &SampleRecord, f64, f64)> = Vec::new();
    for r in records {
        let (Some(l), Some(b)) = (lhs(&r.values), col(&r.values, base)) else { continue };
        if b <= 0.0 {
            // the bound forces lhs = 0 here; anything else is a violation
            if l > 0.0 {
                let witness = Witness { sample: r.index, key: r.key, lhs: l, rhs: 0.0 };
                let mut out = outcome(check, Verdict::Violated { witness }, points.len() + 1, 0);
                out.c_fit = Some(f64::INFINITY);
                return out;
            }
            continue;
        }
        points.push((b.log2().floor() as i32, l / b.powf(q), r, l, b));
    }
    let evaluated = points.len();
    let skipped = records.len() - evaluated;
    if evaluated < 2 {
        let reason = format!("{evaluated} usable sample(s); at least 2 are needed");
        return outcome(check, Verdict::Inconclusive { reason }, evaluated, skipped);
    }
    let c_fit = points.iter().map(|p| p.1).fold(0.0, f64::max);
    let mut bins: BTreeMap<i32, usize> = BTreeMap::new();
    for (k, p) in points.iter().enumerate() {
        let e = bins.entry(p.0).or_insert(k);
        if p.1 > points[*e].1 {
            *e = k;
        }
    }
    let mut out = outcome(check, Verdict::Holds, evaluated, skipped);
    out.c_fit = Some(c_fit);
    if bins.len() < 2 {
        out.verdict = Verdict::Inconclusive { reason: "all samples fall in one dyadic range of the base".into() };
        return out;
    }
    let maxima: Vec<usize> = bins.values().copied().collect();
    let lo = maxima.iter().map(|&k| points[k].1).fold(f64::INFINITY, f64::min);
    out.spread = Some(if lo > 0.0 { c_fit / lo } else { f64::INFINITY });
    // growth toward small base: bins are ordered by increasing base
    let mut growth = 0.0f64;
    let mut worst = maxima[0];
    for (i, &small) in maxima.iter().enumerate() {
        for &large in &maxima[i + 1..] {
            let g = if points[large].1 > 0.0 {
                points[small].1 / points[large].1
            } else if points[small].1 > 0.0 {
                f64::INFINITY
            } else {
                1.0
            };
            if g > growth {
                growth = g;
                worst = small;
            }
        }
    }
    out.growth = Some(growth);
    if !(growth < STABILITY_FACTOR) {
        let (_, _, r, l, b) = points[worst];
        let reference = c_fit / growth.max(1.0);
        out.verdict =
            Verdict::Violated { witness: Witness { sample: r.index, key: r.key, lhs: l, rhs: reference * b.powf(q) } };
    }
    out
}
