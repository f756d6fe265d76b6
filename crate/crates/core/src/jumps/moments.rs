//! Moments `E[F^p]` of the random factor `F` with `x' = F x` produced by the
//! jump coordinate when `h(x) = eta x` in one dimension.

use super::{JumpProbabilities, PreparedJumps};
use crate::error::{Error, Result};
use crate::flows::{FlowMethod, NoiseKind, THREE_POINT_ATOMS};
use crate::levy::{LevyMeasure, Localization, Measure1d, Side};

pub fn binomial(p: u32, j: u32) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (p - i) as f64 / (i + 1) as f64)
}

/// `int_{lo < |y| <= hi} sign(y)^j |y|^{j + extra} nu(dy)`.
fn signed_weighted(m: &Measure1d, j: u32, extra: f64, lo: f64, hi: f64) -> Result<f64> {
    let q = j as f64 + extra;
    let plus = m.side_power(Side::Plus, q, lo, hi)?;
    let minus = m.side_power(Side::Minus, q, lo, hi)?;
    Ok(if j % 2 == 0 { plus + minus } else { plus - minus })
}

fn one_d(measure: &LevyMeasure) -> Result<&Measure1d> {
    measure
        .as_1d()
        .ok_or_else(|| Error::Unsupported("moment propagation needs a one-dimensional driver".into()))
}

/// `int_{|y| > eps} ((1 + eta y)^p - 1) nu(dy)`.
fn tail_generator(m: &Measure1d, eta: f64, p: u32, eps: f64) -> Result<f64> {
    (1..=p).try_fold(0.0, |acc, j| {
        Ok(acc + binomial(p, j) * eta.powi(j as i32) * signed_weighted(m, j, 0.0, eps, f64::INFINITY)?)
    })
}

/// `E[(1 + eta Z / l(Z))^p]` with `Z ~ l nu / C` on `|y| > eps`.
fn localized_jump_moment(m: &Measure1d, eta: f64, p: u32, eps: f64, l: Localization, c: f64) -> Result<f64> {
    let q = l.exponent();
    let mut total = 1.0;
    for j in 1..=p {
        // l(y) (y / l(y))^j = sign^j |y|^{j + q (1 - j)}
        let v = signed_weighted(m, j, q * (1.0 - j as f64), eps, f64::INFINITY)?;
        total += binomial(p, j) * eta.powi(j as i32) * v / c;
    }
    Ok(total)
}

/// `E[xi^j]` for the standard normal.
fn normal_moment(j: u32) -> f64 {
    if j % 2 == 1 {
        return 0.0;
    }
    (1..j).step_by(2).map(|k| k as f64).product()
}

fn noise_exp_moment(noise: NoiseKind, a: f64) -> f64 {
    match noise {
        NoiseKind::Gaussian => (0.5 * a * a).exp(),
        NoiseKind::ThreePoint => THREE_POINT_ATOMS.iter().map(|(z, w)| w * (a * z).exp()).sum(),
    }
}

fn deterministic(flow: &FlowMethod, f: Option<&crate::flows::VectorField>, t: f64, p: u32) -> Result<f64> {
    Ok(match f {
        Some(f) => flow.apply(f, t, &[1.0])?[0].powi(p as i32),
        None => 1.0,
    })
}

impl PreparedJumps {
    /// `E[F^p]` for one application over time `t`, where the map is `x -> F x`.
    /// Requires `h(x) = eta x` and a one-dimensional driver; random drift
    /// sub-intervals need exact flows.
    pub fn linear_moment(&self, measure: &LevyMeasure, t: f64, p: u32, flow: &FlowMethod) -> Result<f64> {
        if p == 0 {
            return Ok(1.0);
        }
        let eta_of = |h: &super::JumpCoefficient| match h.as_affine_1d() {
            Some((a, c)) if c == 0.0 => Ok(a),
            _ => Err(Error::Unsupported("moment propagation needs h(x) = eta x".into())),
        };
        let exact = matches!(flow, FlowMethod::Exact(_));
        match self {
            PreparedJumps::Null => Ok(1.0),
            PreparedJumps::CompoundPoisson { h, spec, max_jumps } => {
                let eta = eta_of(h)?;
                let m = one_d(measure)?;
                let lam = spec.intensity();
                if lam == 0.0 {
                    return Ok(1.0);
                }
                let mj = 1.0 + tail_generator(m, eta, p, 0.0)? / lam;
                let mean = lam * t;
                match max_jumps {
                    None => Ok((mean * (mj - 1.0)).exp()),
                    Some(cap) => {
                        // P(N = k) for k < cap, remaining mass on cap jumps.
                        let mut pk = (-mean).exp();
                        let mut below = 0.0;
                        let mut total = 0.0;
                        for k in 0..*cap {
                            total += pk * mj.powi(k as i32);
                            below += pk;
                            pk *= mean / (k + 1) as f64;
                        }
                        Ok(total + (1.0 - below).max(0.0) * mj.powi(*cap as i32))
                    }
                }
            }
            PreparedJumps::Ignore(c) | PreparedJumps::Ar(c, _) => {
                let eta = eta_of(&c.h)?;
                let m = one_d(measure)?;
                if c.drift_field.is_some() && !exact {
                    return Err(Error::Unsupported(
                        "moment propagation of cutoff drivers needs exact flows".into(),
                    ));
                }
                let jumps = (t * tail_generator(m, eta, p, c.eps)?).exp();
                let pf = p as f64;
                match (self, &c.sigma_sqrt) {
                    (PreparedJumps::Ar(_, inner), Some(s)) => {
                        if !exact {
                            return Err(Error::Unsupported(
                                "moment propagation of cutoff drivers needs exact flows".into(),
                            ));
                        }
                        let k = eta * s[(0, 0)];
                        let dt = t / inner.substeps as f64;
                        let drift = (pf * (eta * c.drift[0] - 0.5 * k * k) * t).exp();
                        let gauss = noise_exp_moment(inner.noise, pf * k * dt.sqrt()).powi(inner.substeps as i32);
                        Ok(drift * gauss * jumps)
                    }
                    _ => Ok((pf * eta * c.drift[0] * t).exp() * jumps),
                }
            }
            PreparedJumps::Decomposed(d) => {
                let eta = eta_of(&d.h)?;
                let m = one_d(measure)?;
                let params = d.tail.params();
                let tail = if params.tail_mass == 0.0 {
                    1.0
                } else {
                    let mj = localized_jump_moment(m, eta, p, params.eps, params.localization, params.tail_mass)?;
                    match params.probabilities {
                        JumpProbabilities::One { p: q } => 1.0 - q + q * mj,
                        JumpProbabilities::Two { p1, p2 } => 1.0 - p1 + p1 * (1.0 - p2) * mj + p1 * p2 * mj * mj,
                    }
                };
                let small = if d.small.lambda == 0.0 {
                    1.0
                } else {
                    // E[(1 + eta xi sqrt(t lambda) Y l(Y)^{-1/2})^p], Y ~ l nu / lambda on |y| <= eps.
                    let q = d.small.l.exponent();
                    let lam = d.small.lambda;
                    let mut total = 1.0;
                    for j in (2..=p).step_by(2) {
                        let v = signed_weighted(m, j, q * (1.0 - 0.5 * j as f64), 0.0, params.eps)?;
                        total +=
                            binomial(p, j) * eta.powi(j as i32) * normal_moment(j) * (t * lam).powf(0.5 * j as f64) * v
                                / lam;
                    }
                    total
                };
                Ok(tail * small * deterministic(flow, d.drift_field.as_ref(), t, p)?)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jumps::{BernoulliMode, JumpApprox, JumpCoefficient};
    use crate::levy::{CompoundPoisson, EpsRule, LevyTriplet, TemperedStable};

    #[test]
    fn binomials_and_normal_moments() {
        assert_eq!(binomial(6, 3), 20.0);
        assert_eq!(binomial(4, 0), 1.0);
        assert_eq!(normal_moment(4), 3.0);
        assert_eq!(normal_moment(6), 15.0);
        assert_eq!(normal_moment(3), 0.0);
    }

    #[test]
    fn compound_poisson_mean_matches_generating_function() {
        let nu = LevyMeasure::one_d(Measure1d::CompoundPoisson(CompoundPoisson::atom(1.0, 0.1)));
        let trip = LevyTriplet::pure_jump(nu.clone()).unwrap();
        let h = JumpCoefficient::affine_1d(1.0, 0.0);
        let t = 0.25;
        let full = JumpApprox::CpTruncate { max_jumps: None }
            .prepare(&h, &trip, t)
            .unwrap();
        let m = full.linear_moment(&nu, t, 1, &FlowMethod::exact()).unwrap();
        assert!((m - (0.1 * t).exp()).abs() < 1e-15);
        let one = JumpApprox::CpTruncate { max_jumps: Some(1) }
            .prepare(&h, &trip, t)
            .unwrap();
        let m1 = one.linear_moment(&nu, t, 1, &FlowMethod::exact()).unwrap();
        let want = (-t).exp() + 1.1 * (1.0 - (-t).exp());
        assert!((m1 - want).abs() < 1e-15);
        // Second moment with no truncation: exp(lambda t ((1.1)^2 - 1)).
        let m2 = full.linear_moment(&nu, t, 2, &FlowMethod::exact()).unwrap();
        assert!((m2 - (t * 0.21).exp()).abs() < 1e-14);
    }

    #[test]
    fn decomposed_one_jump_mean() {
        let ts = TemperedStable::symmetric(0.0, 1.0, 1.0);
        let nu = LevyMeasure::one_d(Measure1d::TemperedStable(ts));
        let trip = LevyTriplet::new(vec![1.0], nu.clone()).unwrap();
        let h = JumpCoefficient::affine_1d(1.0, 0.0);
        let t = 0.125;
        let approx = JumpApprox::Decomposed {
            mode: BernoulliMode::OneJump,
            eps: EpsRule::Power(1.0 / 3.0),
            localization: Localization::Power(2.0),
            tail_localization: Localization::One,
        };
        let prep = approx.prepare(&h, &trip, t).unwrap();
        let m = prep.linear_moment(&nu, t, 1, &FlowMethod::rk(1).unwrap()).unwrap();
        // Symmetric measure: jumps and Gaussian are mean-free, drift step gives 1 + b t.
        assert!((m - (1.0 + t)).abs() < 1e-12, "{m}");
    }
}
