use crate::error::{Error, Result};
use crate::flows::{stratonovich_drift, FieldShape, VectorField};
use crate::jumps::JumpCoefficient;
use crate::levy::{LevyMeasure, LevyTriplet};

/// `dX = V~_0(X) dt + sum_i V_i(X) dB^i + h(X-) dY` with `Y` a Lévy process
/// with triplet `(b, 0, nu)`.
#[derive(Clone, Debug)]
pub struct SdeModel {
    drift: VectorField,
    diffusion: Vec<VectorField>,
    stratonovich: VectorField,
    jump: JumpCoefficient,
    triplet: LevyTriplet,
}

/// Coefficients of a one-dimensional model whose maps are all linear in `x`:
/// `V~_0 = mu x`, `V_i = sigma_i x`, `h = eta x`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearCoefficients {
    pub mu: f64,
    pub sigmas: Vec<f64>,
    pub eta: f64,
}

fn linear_1d(v: &VectorField) -> Option<f64> {
    match v.shape() {
        FieldShape::Affine { a, c } if a.len() == 1 && c[0] == 0.0 => Some(a[0]),
        _ => None,
    }
}

impl SdeModel {
    pub fn new(
        drift: VectorField,
        diffusion: Vec<VectorField>,
        jump: JumpCoefficient,
        triplet: LevyTriplet,
    ) -> Result<Self> {
        let n = drift.dim();
        if n == 0 {
            return Err(Error::Config("state dimension must be at least 1".into()));
        }
        if let Some(v) = diffusion.iter().find(|v| v.dim() != n) {
            return Err(Error::Config(format!(
                "diffusion field of dimension {} in a {n}-dimensional model",
                v.dim()
            )));
        }
        if jump.dim() != n {
            return Err(Error::Config(format!(
                "jump coefficient has {} rows in a {n}-dimensional model",
                jump.dim()
            )));
        }
        if jump.driver_dim() != triplet.dim() {
            return Err(Error::Config(format!(
                "jump coefficient has {} columns but the Lévy driver is {}-dimensional",
                jump.driver_dim(),
                triplet.dim()
            )));
        }
        triplet.measure.validate()?;
        let stratonovich = stratonovich_drift(&drift, &diffusion)?;
        Ok(SdeModel {
            drift,
            diffusion,
            stratonovich,
            jump,
            triplet,
        })
    }

    /// No jumps: zero coefficient against a zero one-dimensional driver.
    pub fn diffusion_only(drift: VectorField, diffusion: Vec<VectorField>) -> Result<Self> {
        let n = drift.dim();
        let triplet = LevyTriplet::new(vec![0.0], LevyMeasure::zero(1))?;
        SdeModel::new(drift, diffusion, JumpCoefficient::zero(n, 1), triplet)
    }

    /// `dX = mu X dt + sigma X dB`.
    pub fn gbm(mu: f64, sigma: f64) -> Result<Self> {
        SdeModel::diffusion_only(
            VectorField::affine_1d(mu, 0.0),
            vec![VectorField::affine_1d(sigma, 0.0)],
        )
    }

    /// `dX = mu X dt + sigma X dB + eta X- dY` (the Brownian part is dropped when `sigma = 0`).
    pub fn linear_jump(mu: f64, sigma: f64, eta: f64, triplet: LevyTriplet) -> Result<Self> {
        let diffusion = if sigma == 0.0 {
            Vec::new()
        } else {
            vec![VectorField::affine_1d(sigma, 0.0)]
        };
        SdeModel::new(
            VectorField::affine_1d(mu, 0.0),
            diffusion,
            JumpCoefficient::affine_1d(eta, 0.0),
            triplet,
        )
    }

    pub fn dim(&self) -> usize {
        self.drift.dim()
    }

    /// Number of Brownian components `d`.
    pub fn brownian_dim(&self) -> usize {
        self.diffusion.len()
    }

    /// Itô drift `V~_0`.
    pub fn drift(&self) -> &VectorField {
        &self.drift
    }

    pub fn diffusion(&self) -> &[VectorField] {
        &self.diffusion
    }

    /// `V_0 = V~_0 - 1/2 sum_i (dV_i) V_i`.
    pub fn stratonovich_drift(&self) -> &VectorField {
        &self.stratonovich
    }

    pub fn jump(&self) -> &JumpCoefficient {
        &self.jump
    }

    pub fn triplet(&self) -> &LevyTriplet {
        &self.triplet
    }

    pub fn has_jumps(&self) -> bool {
        !(self.triplet.measure.is_zero() && self.triplet.drift.iter().all(|b| *b == 0.0)) && !self.jump.is_zero()
    }

    /// Linear one-dimensional structure, if present.
    pub fn linear_coefficients(&self) -> Option<LinearCoefficients> {
        if self.dim() != 1 {
            return None;
        }
        let mu = linear_1d(&self.drift)?;
        let sigmas = self.diffusion.iter().map(linear_1d).collect::<Option<Vec<_>>>()?;
        let eta = match self.jump.as_affine_1d() {
            Some((a, c)) if c == 0.0 => a,
            _ if self.jump.is_zero() => 0.0,
            _ => return None,
        };
        Some(LinearCoefficients { mu, sigmas, eta })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gbm_structure() {
        let m = SdeModel::gbm(0.05, 0.2).unwrap();
        assert_eq!(m.brownian_dim(), 1);
        assert!(!m.has_jumps());
        let v0 = m.stratonovich_drift().eval(&[2.0]);
        assert!((v0[0] - 2.0 * (0.05 - 0.02)).abs() < 1e-15);
        assert_eq!(
            m.linear_coefficients(),
            Some(LinearCoefficients {
                mu: 0.05,
                sigmas: vec![0.2],
                eta: 0.0
            })
        );
    }

    #[test]
    fn dimension_mismatch() {
        let trip = LevyTriplet::new(vec![0.0, 0.0], LevyMeasure::zero(2)).unwrap();
        assert!(SdeModel::new(
            VectorField::affine_1d(0.0, 0.0),
            vec![],
            JumpCoefficient::affine_1d(1.0, 0.0),
            trip
        )
        .is_err());
        assert!(SdeModel::new(
            VectorField::affine_1d(0.0, 0.0),
            vec![VectorField::zero(2)],
            JumpCoefficient::affine_1d(1.0, 0.0),
            LevyTriplet::new(vec![0.0], LevyMeasure::zero(1)).unwrap()
        )
        .is_err());
    }
}
