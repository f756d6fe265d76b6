//! Success probabilities for the one-jump and two-jump Bernoulli steps.

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::{tail_mass, LevyMeasure, Localization, MassRegion};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BernoulliMode {
    OneJump,
    TwoJump,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum JumpProbabilities {
    One { p: f64 },
    Two { p1: f64, p2: f64 },
}

impl JumpProbabilities {
    pub fn mode(&self) -> BernoulliMode {
        match self {
            JumpProbabilities::One { .. } => BernoulliMode::OneJump,
            JumpProbabilities::Two { .. } => BernoulliMode::TwoJump,
        }
    }

    fn check(self) -> Result<Self> {
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        let valid = match self {
            JumpProbabilities::One { p } => ok(p),
            JumpProbabilities::Two { p1, p2 } => ok(p1) && ok(p2),
        };
        if valid {
            Ok(self)
        } else {
            Err(Error::Domain(format!("jump probabilities {self:?} leave [0, 1]")))
        }
    }
}

/// One-jump: `p = 1 - e^{-Ct}`, so `C^{-1} p = t - C t^2 / 2 + O(t^3)`.
/// Two-jump: `P1 = Ct - C^2 t^2 / 2`, `P2 = Ct / (2 - Ct)`, giving
/// `P1 (1 + P2) = Ct` and `P1 P2 = C^2 t^2 / 2` exactly.
pub fn solve_bernoulli(c: f64, t: f64, mode: BernoulliMode) -> Result<JumpProbabilities> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("tail mass C = {c} must be positive and finite")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("step t = {t} must be positive")));
    }
    let ct = c * t;
    match mode {
        BernoulliMode::OneJump => JumpProbabilities::One { p: -(-ct).exp_m1() }.check(),
        BernoulliMode::TwoJump => {
            if ct >= 1.0 {
                return Err(Error::Domain(format!(
                    "two-jump parameters need C t < 1, got C t = {ct}"
                )));
            }
            JumpProbabilities::Two {
                p1: ct - 0.5 * ct * ct,
                p2: ct / (2.0 - ct),
            }
            .check()
        }
    }
}

/// Two-jump probabilities in exact arithmetic.
pub fn solve_two_jump_exact(c: &BigRational, t: &BigRational) -> Result<(BigRational, BigRational)> {
    let ct = c * t;
    if !(ct > BigRational::zero()) || ct >= BigRational::one() {
        return Err(Error::Domain(format!("two-jump parameters need 0 < C t < 1, got {ct}")));
    }
    let two = BigRational::from_integer(2.into());
    let p1 = &ct - &ct * &ct / &two;
    let p2 = &ct / (&two - &ct);
    Ok((p1, p2))
}

/// Alternative parameterisation for tempered-stable tails with `C_eps ~ eps^{-alpha}` and
/// `eps = t^{1/(3 - alpha)}`. One-jump: `P[S = 1] = exp(-C_eps a)`,
/// `a = -eps^alpha log((t^2 + t) eps^{-alpha})`. Two-jump:
/// `P1 = t^{(6-3alpha)/(3-alpha)} (t+1)(1 + t^{alpha/(3-alpha)})`, `P2 = 1 / (2 (1 + t^{alpha/(3-alpha)}))`.
///
/// The constants hidden in `C_eps ~ eps^{-alpha}` are not fixed, so this is not the default.
pub fn tempered_stable_asymptotic(alpha: f64, c_eps: f64, t: f64, mode: BernoulliMode) -> Result<JumpProbabilities> {
    if !(0.0..2.0).contains(&alpha) || !(t > 0.0 && t < 1.0) || !(c_eps > 0.0) {
        return Err(Error::Domain(format!(
            "asymptotic parameters need alpha in [0, 2), t in (0, 1), C > 0; got {alpha}, {t}, {c_eps}"
        )));
    }
    let k = 3.0 - alpha;
    let eps = t.powf(1.0 / k);
    match mode {
        BernoulliMode::OneJump => {
            let a = -eps.powf(alpha) * ((t * t + t) * eps.powf(-alpha)).ln();
            JumpProbabilities::One { p: (-c_eps * a).exp() }.check()
        }
        BernoulliMode::TwoJump => {
            let s = t.powf(alpha / k);
            JumpProbabilities::Two {
                p1: t.powf((6.0 - 3.0 * alpha) / k) * (t + 1.0) * (1.0 + s),
                p2: 1.0 / (2.0 * (1.0 + s)),
            }
            .check()
        }
    }
}

/// Parameters of a Bernoulli jump step for one step size.
#[derive(Clone, Debug, PartialEq)]
pub struct BernoulliJumpParams {
    pub eps: f64,
    pub localization: Localization,
    pub t: f64,
    /// `C_{eps,l} = int_{|y| > eps} l dnu`.
    pub tail_mass: f64,
    pub probabilities: JumpProbabilities,
}

impl BernoulliJumpParams {
    /// Default construction; the two-jump step requires `l = 1`.
    pub fn new(model: &LevyMeasure, eps: f64, l: Localization, t: f64, mode: BernoulliMode) -> Result<Self> {
        if mode == BernoulliMode::TwoJump && l != Localization::One {
            return Err(Error::Config("the two-jump step uses localization l = 1".into()));
        }
        let c = tail_mass(model, eps, l, MassRegion::Tail)?;
        let probabilities = if c == 0.0 {
            match mode {
                BernoulliMode::OneJump => JumpProbabilities::One { p: 0.0 },
                BernoulliMode::TwoJump => JumpProbabilities::Two { p1: 0.0, p2: 0.0 },
            }
        } else {
            solve_bernoulli(c, t, mode)?
        };
        Ok(BernoulliJumpParams {
            eps,
            localization: l,
            t,
            tail_mass: c,
            probabilities,
        })
    }

    /// One-jump: `|C^{-1} p - t|`. Two-jump: `|C^{-1} p_eps - t|` and
    /// `|2 C^{-2} q_eps - t^2|` with `p_eps = P1 (1 + P2)`, `q_eps = P1 P2`.
    pub fn premise_defects(&self) -> (f64, Option<f64>) {
        let c = self.tail_mass;
        let t = self.t;
        match self.probabilities {
            JumpProbabilities::One { p } => ((p / c - t).abs(), None),
            JumpProbabilities::Two { p1, p2 } => {
                let p = p1 * (1.0 + p2);
                let q = p1 * p2;
                ((p / c - t).abs(), Some((2.0 * q / (c * c) - t * t).abs()))
            }
        }
    }
}
