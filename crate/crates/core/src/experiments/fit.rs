//! Log–log regression and the exponents the stability estimates predict.

use std::f64::consts::PI;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Model for `fit_exponent`: `y = e^b x^s`, or `y = e^b x^s √(−ln x)` for
/// the borderline planar rates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogCorrection {
    #[default]
    None,
    SqrtNegLog,
}

impl FromStr for LogCorrection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(LogCorrection::None),
            "sqrt_neg_log" => Ok(LogCorrection::SqrtNegLog),
            _ => Err(Error::invalid(format!("unknown log correction {s:?} (none|sqrt_neg_log)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    /// Natural log of the constant.
    pub intercept: f64,
    /// Standard error of the slope from the residuals.
    pub stderr: f64,
    pub points: usize,
}

impl ExponentFit {
    /// 95% confidence interval for the slope.
    pub fn interval(&self) -> (f64, f64) {
        let t = student_t95(self.points.saturating_sub(2));
        (self.slope - t * self.stderr, self.slope + t * self.stderr)
    }
}

/// Two-sided 95% quantile of Student's t.
fn student_t95(dof: usize) -> f64 {
    const TABLE: [f64; 30] = [
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179, 2.160, 2.145,
        2.131, 2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048,
        2.045, 2.042,
    ];
    match dof {
        0 => f64::INFINITY,
        d if d <= 30 => TABLE[d - 1],
        _ => 1.96,
    }
}

/// Least squares of `ln y` (or `ln(y/√(−ln x))`) against `ln x`.
pub fn fit_exponent(xs: &[f64], ys: &[f64], correction: LogCorrection) -> Result<ExponentFit> {
    if xs.len() != ys.len() {
        return Err(Error::invalid(format!("{} x values but {} y values", xs.len(), ys.len())));
    }
    let n = xs.len();
    if n < 4 {
        return Err(Error::invalid(format!("exponent fit needs at least 4 points, got {n}")));
    }
    if let Some(v) = xs.iter().chain(ys).find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::invalid(format!("exponent fit needs positive finite values, got {v}")));
    }
    if correction == LogCorrection::SqrtNegLog {
        if let Some(x) = xs.iter().find(|x| **x >= 1.0) {
            return Err(Error::invalid(format!("sqrt_neg_log correction needs x < 1, got {x}")));
        }
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| match correction {
            LogCorrection::None => y.ln(),
            LogCorrection::SqrtNegLog => y.ln() - 0.5 * (-x.ln()).ln(),
        })
        .collect();
    let mx = lx.iter().sum::<f64>() / n as f64;
    let my = ly.iter().sum::<f64>() / n as f64;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 1e-24 * mx.abs().max(1.0) {
        return Err(Error::invalid("exponent fit needs at least two distinct x values"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = (ssr / (n - 2) as f64 / sxx).sqrt();
    Ok(ExponentFit { slope, intercept, stderr, points: n })
}

/// Exponents appearing in the stability theorems for hypersurfaces of
/// dimension `n` with curvature in `L^p`. The Hausdorff, Lipschitz and
/// cardinal rates are meaningful for `p > n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentTable {
    pub n: u32,
    pub p: f64,
    pub beta: f64,
    pub hausdorff: f64,
    pub lipschitz: f64,
    pub curvature: f64,
    pub cardinal: f64,
}

/// `16π` in `16π d_H² ≤ P² − 4π|Ω|`.
pub const BONNESEN_FACTOR: f64 = 16.0 * PI;
/// `4π` in the planar isoperimetric inequality.
pub const PLANAR_ISOPERIMETRIC: f64 = 4.0 * PI;

/// `√(3π)/4` in `d_H/diam ≤ √(3π)/4 · δ^{1/2}`.
pub fn curve_hausdorff_constant() -> f64 {
    (3.0 * PI).sqrt() / 4.0
}

impl ExponentTable {
    pub fn new(n: u32, p: f64) -> Self {
        ExponentTable {
            n,
            p,
            beta: Self::beta(n),
            hausdorff: Self::hausdorff_exp(n, p),
            lipschitz: Self::lipschitz_exp(n, p),
            curvature: Self::curvature_exp(n, p),
            cardinal: Self::cardinal_exp(n, p),
        }
    }

    /// `min(1/(4n), 1/8)`.
    pub fn beta(n: u32) -> f64 {
        (1.0 / (4.0 * n as f64)).min(0.125)
    }

    /// `(2p − n)/(2p − 2n + np)`.
    pub fn hausdorff_exp(n: u32, p: f64) -> f64 {
        let n = n as f64;
        (2.0 * p - n) / (2.0 * p - 2.0 * n + n * p)
    }

    /// `2(p − n)/(p(n + 2) − 2n)`.
    pub fn lipschitz_exp(n: u32, p: f64) -> f64 {
        let n = n as f64;
        2.0 * (p - n) / (p * (n + 2.0) - 2.0 * n)
    }

    /// `(p − n + 1)/(4p)`.
    pub fn curvature_exp(n: u32, p: f64) -> f64 {
        (p - n as f64 + 1.0) / (4.0 * p)
    }

    /// `(p − n)/(4p)`.
    pub fn cardinal_exp(n: u32, p: f64) -> f64 {
        (p - n as f64) / (4.0 * p)
    }
}
