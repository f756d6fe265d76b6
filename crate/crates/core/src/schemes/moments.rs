//! Per-step moments for one-dimensional linear models. Every coordinate map is
//! then `x -> F x` with `F` independent of `x`, so `E[(X^{(n)})^p] = x^p M_p^n`.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::hermite::GaussHermite;

use super::{to_f64, Scheme, StepPlan, VariantKind};
use crate::error::{Error, Result};
use crate::flows::{NoiseKind, THREE_POINT_ATOMS};

/// Node count of the Gauss–Hermite rule for Brownian factors.
pub const HERMITE_NODES: usize = 64;

fn hermite() -> &'static GaussHermite {
    static RULE: OnceLock<GaussHermite> = OnceLock::new();
    RULE.get_or_init(|| GaussHermite::new(NonZeroUsize::new(HERMITE_NODES).expect("nonzero")))
}

/// `E[g(Z)]` for a unit-variance noise variable of the given kind.
pub fn noise_expectation(kind: NoiseKind, mut g: impl FnMut(f64) -> f64) -> f64 {
    match kind {
        NoiseKind::Gaussian => {
            let s = std::f64::consts::SQRT_2;
            hermite().integrate(|x| g(s * x)) / std::f64::consts::PI.sqrt()
        }
        NoiseKind::ThreePoint => THREE_POINT_ATOMS.iter().map(|(z, w)| w * g(*z)).sum(),
    }
}

/// Moments `E[Z^j]`, `j = 0..=p`.
fn noise_moments(kind: NoiseKind, p: u32) -> Vec<f64> {
    (0..=p).map(|j| noise_expectation(kind, |z| z.powi(j as i32))).collect()
}

/// Moments of `A + B` from those of independent `A` and `B`.
fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    (0..a.len())
        .map(|k| {
            (0..=k)
                .map(|j| crate::jumps::binomial(k as u32, j as u32) * a[j] * b[k - j])
                .sum()
        })
        .collect()
}

impl Scheme {
    /// `M_p = E[F^p]` for one step of variant `variant`.
    pub fn linear_step_moment(&self, plan: &StepPlan, variant: usize, p: u32) -> Result<f64> {
        let lin = self
            .model
            .linear_coefficients()
            .ok_or_else(|| Error::Unsupported("moment propagation needs a one-dimensional linear model".into()))?;
        let v = self
            .variants
            .get(variant)
            .ok_or_else(|| Error::Config(format!("variant {variant} out of range")))?;
        if p == 0 {
            return Ok(1.0);
        }
        let t = plan.t;
        let pi = p as i32;
        let d = self.model.brownian_dim() as u8;
        let measure = &self.model.triplet().measure;
        match &v.kind {
            VariantKind::Mixture(terms) => {
                let mut total = 0.0;
                for (w, seq) in terms {
                    let mut prod = 1.0;
                    for (g, c) in seq {
                        let tc = t * to_f64(c);
                        prod *= if *g == 0 {
                            self.flow.apply(self.model.stratonovich_drift(), tc, &[1.0])?[0].powi(pi)
                        } else if *g <= d {
                            let field = &self.model.diffusion()[*g as usize - 1];
                            let s = tc.sqrt();
                            let mut failure = None;
                            let m =
                                noise_expectation(self.cfg.noise, |z| match self.flow.apply(field, s * z, &[1.0]) {
                                    Ok(y) => y[0].powi(pi),
                                    Err(e) => {
                                        failure.get_or_insert(e);
                                        f64::NAN
                                    }
                                });
                            if let Some(e) = failure {
                                return Err(e);
                            }
                            m
                        } else {
                            plan.jumps_for(c).linear_moment(measure, tc, p, &self.flow)?
                        };
                    }
                    total += w * prod;
                }
                Ok(total)
            }
            VariantKind::Euler => {
                if self.model.has_jumps() {
                    return Err(Error::Unsupported(
                        "moment propagation of euler_maruyama with jumps".into(),
                    ));
                }
                let z = noise_moments(self.cfg.noise, p);
                let mut acc: Vec<f64> = (0..=p).map(|j| (1.0 + lin.mu * t).powi(j as i32)).collect();
                for s in &lin.sigmas {
                    let scale = s * t.sqrt();
                    let part: Vec<f64> = (0..=p as usize).map(|j| scale.powi(j as i32) * z[j]).collect();
                    acc = convolve(&acc, &part);
                }
                Ok(acc[p as usize])
            }
            VariantKind::OneJump => {
                let one = num_traits::One::one();
                let jump = plan.jumps_for(&one).linear_moment(measure, t, p, &self.flow)?;
                let mut brown = 1.0;
                for s in &lin.sigmas {
                    let (s, r) = (*s, t.sqrt());
                    brown *= noise_expectation(self.cfg.noise, |z| (1.0 + s * r * z + 0.5 * s * s * t).powi(pi));
                }
                let v0 = lin.mu - 0.5 * lin.sigmas.iter().map(|s| s * s).sum::<f64>();
                Ok(jump * brown * (1.0 + v0 * t).powi(pi))
            }
        }
    }
}
