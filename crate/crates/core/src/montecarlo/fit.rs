use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// One `(n, |error|, standard error)` observation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FitPoint {
    pub n: usize,
    pub error: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum OrderFit {
    /// `log|error| = intercept + slope log(1/n)`, with a 95% half-width on the slope.
    Fitted {
        slope: f64,
        intercept: f64,
        half_width: f64,
        used: Vec<usize>,
    },
    /// Every point sits at the noise floor.
    Indeterminate { reason: String },
}

impl OrderFit {
    pub fn slope(&self) -> Option<f64> {
        match self {
            OrderFit::Fitted { slope, .. } => Some(*slope),
            OrderFit::Indeterminate { .. } => None,
        }
    }

    pub fn half_width(&self) -> Option<f64> {
        match self {
            OrderFit::Fitted { half_width, .. } => Some(*half_width),
            OrderFit::Indeterminate { .. } => None,
        }
    }
}

/// Points with `|error| < 2 stderr` (or exactly zero error) are at the noise floor.
pub fn at_noise_floor(p: &FitPoint) -> bool {
    p.error == 0.0 || p.error.abs() < 2.0 * p.stderr
}

/// Weighted least squares of `log|error|` against `log(1/n)`. Weights are the
/// inverse variances `(|error| / stderr)^2` of the logarithm; when no point has a
/// positive standard error the fit is unweighted.
pub fn fit_order(points: &[FitPoint]) -> Result<OrderFit> {
    if points
        .iter()
        .any(|p| p.n == 0 || !p.error.is_finite() || !(p.stderr >= 0.0))
    {
        return Err(Error::Domain(
            "fit points need n >= 1, finite errors and stderr >= 0".into(),
        ));
    }
    let usable: Vec<&FitPoint> = points.iter().filter(|p| !at_noise_floor(p)).collect();
    if usable.is_empty() {
        return Ok(OrderFit::Indeterminate {
            reason: format!("all {} points are within 2 standard errors of zero", points.len()),
        });
    }
    if usable.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} usable points above the noise floor, need at least 3",
            usable.len()
        )));
    }
    let weighted = usable.iter().any(|p| p.stderr > 0.0);
    let xs: Vec<f64> = usable.iter().map(|p| -(p.n as f64).ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|p| p.error.abs().ln()).collect();
    let ws: Vec<f64> = usable
        .iter()
        .map(|p| {
            if weighted {
                let rel = p.stderr / p.error.abs();
                1.0 / rel.max(1e-12).powi(2)
            } else {
                1.0
            }
        })
        .collect();
    let sw: f64 = ws.iter().sum();
    let xm = ws.iter().zip(&xs).map(|(w, x)| w * x).sum::<f64>() / sw;
    let ym = ws.iter().zip(&ys).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = ws.iter().zip(&xs).map(|(w, x)| w * (x - xm).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData("fit needs at least two distinct n".into()));
    }
    let sxy: f64 = ws
        .iter()
        .zip(xs.iter().zip(&ys))
        .map(|(w, (x, y))| w * (x - xm) * (y - ym))
        .sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let dof = usable.len() - 2;
    let chi2: f64 = ws
        .iter()
        .zip(xs.iter().zip(&ys))
        .map(|(w, (x, y))| w * (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / dof as f64;
    // Known variances: scale only up, never below the stated errors.
    let scale = if weighted { chi2.max(1.0) } else { chi2 };
    let se = (scale / sxx).sqrt();
    let q = StudentsT::new(0.0, 1.0, dof as f64)
        .map_err(|e| Error::Domain(format!("Student t: {e}")))?
        .inverse_cdf(0.975);
    Ok(OrderFit::Fitted {
        slope,
        intercept,
        half_width: q * se,
        used: usable.iter().map(|p| p.n).collect(),
    })
}

/// `(2^m E_{2n} - E_n) / (2^m - 1)`.
pub fn romberg_combine(e_n: f64, e_2n: f64, m: u32) -> Result<f64> {
    if m == 0 {
        return Err(Error::Domain("Romberg order m must be at least 1".into()));
    }
    let k = 2f64.powi(m as i32);
    Ok((k * e_2n - e_n) / (k - 1.0))
}
