use serde::{Deserialize, Serialize};

use super::quad::{power_closed, power_weighted};
use crate::error::{Error, Result};

/// `nu(dy) = |y|^{-1-alpha} (c+ e^{-lambda+ |y|} 1{y>0} + c- e^{-lambda- |y|} 1{y<0}) dy`,
/// optionally restricted to `|y| <= y_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemperedStable {
    pub alpha: f64,
    pub c_plus: f64,
    pub c_minus: f64,
    #[serde(default)]
    pub lambda_plus: f64,
    #[serde(default)]
    pub lambda_minus: f64,
    #[serde(default)]
    pub y_max: Option<f64>,
}

impl TemperedStable {
    pub fn symmetric(alpha: f64, c: f64, lambda: f64) -> Self {
        TemperedStable {
            alpha,
            c_plus: c,
            c_minus: c,
            lambda_plus: lambda,
            lambda_minus: lambda,
            y_max: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("tempered stable: {m}")));
        if !(0.0..2.0).contains(&self.alpha) {
            return bad(format!("alpha = {} outside [0, 2)", self.alpha));
        }
        if self.c_plus < 0.0 || self.c_minus < 0.0 || !(self.c_plus > 0.0 || self.c_minus > 0.0) {
            return bad("need c_plus, c_minus >= 0 with at least one positive".into());
        }
        if self.lambda_plus < 0.0 || self.lambda_minus < 0.0 {
            return bad("tempering rates must be nonnegative".into());
        }
        if let Some(m) = self.y_max {
            if !(m > 0.0) {
                return bad(format!("y_max = {m} must be positive"));
            }
        }
        let capped = self.y_max.is_some();
        for (c, l, side) in [
            (self.c_plus, self.lambda_plus, "+"),
            (self.c_minus, self.lambda_minus, "-"),
        ] {
            if c > 0.0 && l == 0.0 && self.alpha >= 1.0 && !capped {
                return bad(format!(
                    "lambda{side} = 0 with alpha >= 1 needs y_max (tail integrals diverge)"
                ));
            }
        }
        Ok(())
    }
}

/// Jump-size law of a compound Poisson measure `nu = intensity * law`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpDist {
    /// `(value, probability)` pairs.
    Atoms(Vec<(f64, f64)>),
    Normal {
        mean: f64,
        std: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompoundPoisson {
    pub intensity: f64,
    pub jump_dist: JumpDist,
}

impl CompoundPoisson {
    pub fn atom(intensity: f64, value: f64) -> Self {
        CompoundPoisson {
            intensity,
            jump_dist: JumpDist::Atoms(vec![(value, 1.0)]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.intensity >= 0.0) || !self.intensity.is_finite() {
            return Err(Error::Config(format!(
                "compound Poisson intensity {} must be finite and nonnegative",
                self.intensity
            )));
        }
        match &self.jump_dist {
            JumpDist::Atoms(a) => {
                let total: f64 = a.iter().map(|(_, p)| *p).sum();
                if a.is_empty() || a.iter().any(|(_, p)| *p < 0.0) || (total - 1.0).abs() > 1e-9 {
                    return Err(Error::Config(
                        "jump atoms need nonnegative probabilities summing to 1".into(),
                    ));
                }
            }
            JumpDist::Normal { std, .. } => {
                if !(*std > 0.0) {
                    return Err(Error::Config("normal jump std must be positive".into()));
                }
            }
        }
        Ok(())
    }
}

/// One-dimensional Lévy measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure1d {
    Zero,
    TemperedStable(TemperedStable),
    CompoundPoisson(CompoundPoisson),
}

/// Side of the real line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

fn normal_pdf(y: f64, mean: f64, std: f64) -> f64 {
    let z = (y - mean) / std;
    (-0.5 * z * z).exp() / (std * (2.0 * std::f64::consts::PI).sqrt())
}

impl Measure1d {
    pub fn validate(&self) -> Result<()> {
        match self {
            Measure1d::Zero => Ok(()),
            Measure1d::TemperedStable(ts) => ts.validate(),
            Measure1d::CompoundPoisson(cp) => cp.validate(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Measure1d::Zero => true,
            Measure1d::CompoundPoisson(cp) => cp.intensity == 0.0,
            Measure1d::TemperedStable(_) => false,
        }
    }

    pub fn infinite_activity(&self) -> bool {
        matches!(self, Measure1d::TemperedStable(_))
    }

    /// Blumenthal–Getoor-type index: `alpha` for tempered stable, 0 otherwise.
    pub fn activity_index(&self) -> f64 {
        match self {
            Measure1d::TemperedStable(ts) => ts.alpha,
            _ => 0.0,
        }
    }

    /// `int_{lo < |y| <= hi, sign(y) = side} |y|^q nu(dy)`.
    pub fn side_power(&self, side: Side, q: f64, lo: f64, hi: f64) -> Result<f64> {
        if hi <= lo {
            return Ok(0.0);
        }
        match self {
            Measure1d::Zero => Ok(0.0),
            Measure1d::TemperedStable(ts) => {
                let (c, lam) = match side {
                    Side::Plus => (ts.c_plus, ts.lambda_plus),
                    Side::Minus => (ts.c_minus, ts.lambda_minus),
                };
                if c == 0.0 {
                    return Ok(0.0);
                }
                let hi = ts.y_max.map_or(hi, |m| hi.min(m));
                if hi <= lo {
                    return Ok(0.0);
                }
                let e = q - 1.0 - ts.alpha;
                let v = if lam == 0.0 {
                    power_closed(e, lo, hi)?
                } else {
                    power_weighted(e, |y| (-lam * y).exp(), lo, hi)?
                };
                Ok(c * v)
            }
            Measure1d::CompoundPoisson(cp) => match &cp.jump_dist {
                JumpDist::Atoms(atoms) => Ok(atoms
                    .iter()
                    .filter(|(y, _)| *y != 0.0 && (*y > 0.0) == (side == Side::Plus))
                    .filter(|(y, _)| y.abs() > lo && y.abs() <= hi)
                    .map(|(y, p)| cp.intensity * p * y.abs().powf(q))
                    .sum()),
                JumpDist::Normal { mean, std } => {
                    let s = side.sign();
                    let reach = mean.abs() + 40.0 * std;
                    let hi = hi.min(reach);
                    if hi <= lo {
                        return Ok(0.0);
                    }
                    let v = power_weighted(q, |y| normal_pdf(s * y, *mean, *std), lo, hi)?;
                    Ok(cp.intensity * v)
                }
            },
        }
    }

    /// `int_{lo < |y| <= hi} |y|^q nu(dy)`.
    pub fn abs_power(&self, q: f64, lo: f64, hi: f64) -> Result<f64> {
        Ok(self.side_power(Side::Plus, q, lo, hi)? + self.side_power(Side::Minus, q, lo, hi)?)
    }

    /// `int_{lo < |y| <= hi} y^k nu(dy)` for integer `k`.
    pub fn signed_power(&self, k: u32, lo: f64, hi: f64) -> Result<f64> {
        let q = k as f64;
        let plus = self.side_power(Side::Plus, q, lo, hi)?;
        let minus = self.side_power(Side::Minus, q, lo, hi)?;
        Ok(if k % 2 == 0 { plus + minus } else { plus - minus })
    }
}
