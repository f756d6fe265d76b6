//! One-step maps for the jump coordinate: truncated compound Poisson flows,
//! small-jump cutoff with and without the Gaussian correction, and the
//! drift / small-jump Gaussian / Bernoulli-jump decomposition.
//!
//! The truncation is `tau(y) = y 1{|y| <= 1}` throughout, so a triplet drift `b`
//! is always stated relative to it.

mod bernoulli;
mod coefficient;
mod defect;
mod moments;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

pub use bernoulli::{
    solve_bernoulli, solve_two_jump_exact, tempered_stable_asymptotic, BernoulliJumpParams, BernoulliMode,
    JumpProbabilities,
};
pub use coefficient::JumpCoefficient;
pub use defect::{per_step_defect, MAX_DEFECT_DEGREE};
pub use moments::binomial;

use crate::error::{Error, Result};
use crate::flows::{sample_noise, stratonovich_drift, FlowMethod, NoiseKind, VectorField};
use crate::levy::{
    sigma_matrix, sqrt_psd, tail_mass, CutoffMode, EpsRule, LevyMeasure, LevyTriplet, Localization, MassRegion, Region,
    RegionSampler,
};
use crate::Point;

/// `N ~ Poisson(mean)`; zero mean gives zero.
pub fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<u64> {
    if mean == 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(mean).map_err(|e| Error::Domain(format!("Poisson mean {mean}: {e}")))?;
    Ok(d.sample(rng) as u64)
}

fn is_zero_vec(v: &[f64]) -> bool {
    v.iter().all(|x| *x == 0.0)
}

/// Finite-activity driver `Y_t = sum_{i <= N_t} J_i`.
#[derive(Clone, Debug)]
pub struct CompoundPoissonSpec {
    measure: LevyMeasure,
    jumps: RegionSampler,
}

impl CompoundPoissonSpec {
    pub fn new(measure: &LevyMeasure) -> Result<Self> {
        measure.validate()?;
        if measure.infinite_activity() {
            return Err(Error::Domain("compound Poisson driver needs a finite measure".into()));
        }
        let jumps = measure.sampler(Region::all(), Localization::One)?;
        Ok(CompoundPoissonSpec {
            measure: measure.clone(),
            jumps,
        })
    }

    pub fn intensity(&self) -> f64 {
        self.jumps.mass()
    }

    /// `E[J]`.
    pub fn mean_jump(&self) -> Result<Vec<f64>> {
        let lam = self.intensity();
        Ok(self
            .measure
            .first_moment(Region::all())?
            .into_iter()
            .map(|m| if lam > 0.0 { m / lam } else { 0.0 })
            .collect())
    }

    /// `E[|J|^p]`.
    pub fn abs_moment(&self, p: f64) -> Result<f64> {
        let lam = self.intensity();
        if lam == 0.0 {
            return Ok(0.0);
        }
        Ok(self.measure.abs_moment(p, Region::all())? / lam)
    }

    pub fn sample_jump<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Point> {
        self.jumps.sample(rng)
    }
}

/// `G_i = G_{i-1} + h(G_{i-1}) J_i` for `min(N, M)` steps, `N ~ Poisson(lambda t)`;
/// `max_jumps = None` means no truncation. Returns the state and the jumps applied.
pub fn compound_poisson_flow_counted<R: Rng + ?Sized>(
    h: &JumpCoefficient,
    cp: &CompoundPoissonSpec,
    t: f64,
    x: &[f64],
    max_jumps: Option<usize>,
    rng: &mut R,
) -> Result<(Point, usize)> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("jump time {t} must be nonnegative")));
    }
    let mut g = Point::from_slice(x);
    if max_jumps == Some(0) {
        return Ok((g, 0));
    }
    let n = sample_poisson(cp.intensity() * t, rng)? as usize;
    let n = max_jumps.map_or(n, |m| n.min(m));
    for _ in 0..n {
        let y = cp.sample_jump(rng)?;
        g = h.apply(&g, &y)?;
    }
    Ok((g, n))
}

pub fn compound_poisson_flow<R: Rng + ?Sized>(
    h: &JumpCoefficient,
    cp: &CompoundPoissonSpec,
    t: f64,
    x: &[f64],
    max_jumps: Option<usize>,
    rng: &mut R,
) -> Result<Point> {
    Ok(compound_poisson_flow_counted(h, cp, t, x, max_jumps, rng)?.0)
}

/// Inner discretisation of the Gaussian-corrected driver: each substep is
/// drift half / Gaussian full / jumps full / drift half.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArInner {
    #[serde(default = "one")]
    pub substeps: usize,
    #[serde(default)]
    pub noise: NoiseKind,
}

fn one() -> usize {
    1
}

impl Default for ArInner {
    fn default() -> Self {
        ArInner {
            substeps: 1,
            noise: NoiseKind::Gaussian,
        }
    }
}

/// Driver with jumps below `eps` removed (and optionally replaced by a Gaussian
/// with covariance `Sigma_eps`), prepared for one coefficient `h`.
#[derive(Clone, Debug)]
pub struct CutoffDriver {
    h: JumpCoefficient,
    eps: f64,
    /// `beta = b - int_{eps < |y| <= 1} y nu(dy)`.
    drift: Vec<f64>,
    drift_field: Option<VectorField>,
    tail: RegionSampler,
    /// `Sigma_eps^{1/2}` when the correction is active and nonzero.
    sigma_sqrt: Option<DMatrix<f64>>,
    gaussian_fields: Vec<VectorField>,
    corrected_drift: Option<VectorField>,
}

impl CutoffDriver {
    pub fn new(h: &JumpCoefficient, triplet: &LevyTriplet, eps: f64, mode: CutoffMode) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::Domain(format!("cutoff eps = {eps} must be positive")));
        }
        if h.driver_dim() != triplet.dim() {
            return Err(Error::Config(format!(
                "jump coefficient has {} columns but the driver is {}-dimensional",
                h.driver_dim(),
                triplet.dim()
            )));
        }
        let drift = triplet.compensated_drift(eps)?;
        let drift_field = (!is_zero_vec(&drift)).then(|| h.field(&drift));
        let tail = triplet.measure.sampler(Region::tail(eps), Localization::One)?;
        let mut out = CutoffDriver {
            h: h.clone(),
            eps,
            drift,
            drift_field,
            tail,
            sigma_sqrt: None,
            gaussian_fields: Vec::new(),
            corrected_drift: None,
        };
        if mode == CutoffMode::Ar {
            let sigma = sigma_matrix(&triplet.measure, eps)?;
            if sigma.amax() > 0.0 {
                let s = sqrt_psd(&sigma)?;
                let fields: Vec<VectorField> = (0..s.ncols())
                    .filter(|&j| s.column(j).amax() > 0.0)
                    .map(|j| h.field(s.column(j).as_slice()))
                    .collect();
                let base = out.drift_field.clone().unwrap_or_else(|| VectorField::zero(h.dim()));
                out.corrected_drift = Some(stratonovich_drift(&base, &fields)?);
                out.gaussian_fields = fields;
                out.sigma_sqrt = Some(s);
            }
        }
        Ok(out)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn drift(&self) -> &[f64] {
        &self.drift
    }

    /// `C_eps = nu(|y| > eps)`.
    pub fn tail_mass(&self) -> f64 {
        self.tail.mass()
    }

    pub fn sigma_sqrt(&self) -> Option<&DMatrix<f64>> {
        self.sigma_sqrt.as_ref()
    }

    /// Exact-structure simulation of the cutoff driver: drift flow between jumps
    /// placed at the order statistics of `N ~ Poisson(C_eps t)` uniforms.
    pub fn ignore_flow<R: Rng + ?Sized>(
        &self,
        t: f64,
        x: &[f64],
        flow: &FlowMethod,
        rng: &mut R,
    ) -> Result<(Point, usize)> {
        let n = sample_poisson(self.tail.mass() * t, rng)? as usize;
        let mut times: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * t).collect();
        times.sort_by(f64::total_cmp);
        let mut state = Point::from_slice(x);
        let mut s = 0.0;
        for tau in times {
            if let Some(f) = &self.drift_field {
                state = flow.apply(f, tau - s, &state)?;
            }
            let y = self.tail.sample(rng)?;
            state = self.h.apply(&state, &y)?;
            s = tau;
        }
        if let Some(f) = &self.drift_field {
            state = flow.apply(f, t - s, &state)?;
        }
        Ok((state, n))
    }

    /// Gaussian-corrected driver; falls back to `ignore_flow` when `Sigma_eps = 0`.
    pub fn ar_flow<R: Rng + ?Sized>(
        &self,
        t: f64,
        x: &[f64],
        inner: &ArInner,
        flow: &FlowMethod,
        rng: &mut R,
    ) -> Result<(Point, usize)> {
        let Some(drift) = &self.corrected_drift else {
            return self.ignore_flow(t, x, flow, rng);
        };
        if inner.substeps == 0 {
            return Err(Error::Config("AR inner substeps must be at least 1".into()));
        }
        let dt = t / inner.substeps as f64;
        let mut state = Point::from_slice(x);
        let mut jumps = 0;
        for _ in 0..inner.substeps {
            state = flow.apply(drift, 0.5 * dt, &state)?;
            for g in &self.gaussian_fields {
                let w = sample_noise(inner.noise, dt, rng)?;
                state = flow.apply(g, w, &state)?;
            }
            let n = sample_poisson(self.tail.mass() * dt, rng)? as usize;
            for _ in 0..n {
                let y = self.tail.sample(rng)?;
                state = self.h.apply(&state, &y)?;
            }
            jumps += n;
            state = flow.apply(drift, 0.5 * dt, &state)?;
        }
        Ok((state, jumps))
    }

    /// Driver increment over `t`: `beta t + sum of tail jumps (+ Sigma^{1/2} W_t)`.
    pub fn increment<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> Result<(Point, usize)> {
        let mut dy: Point = self.drift.iter().map(|b| b * t).collect();
        let n = sample_poisson(self.tail.mass() * t, rng)? as usize;
        for _ in 0..n {
            for (o, v) in dy.iter_mut().zip(self.tail.sample(rng)?) {
                *o += v;
            }
        }
        if let Some(s) = &self.sigma_sqrt {
            for j in 0..s.ncols() {
                let w = sample_noise(NoiseKind::Gaussian, t, rng)?;
                for i in 0..s.nrows() {
                    dy[i] += s[(i, j)] * w;
                }
            }
        }
        Ok((dy, n))
    }
}

/// Small jumps dropped; see [`CutoffDriver::ignore_flow`].
pub fn ignore_small_flow<R: Rng + ?Sized>(
    h: &JumpCoefficient,
    triplet: &LevyTriplet,
    eps: f64,
    t: f64,
    x: &[f64],
    flow: &FlowMethod,
    rng: &mut R,
) -> Result<Point> {
    Ok(CutoffDriver::new(h, triplet, eps, CutoffMode::Ignore)?
        .ignore_flow(t, x, flow, rng)?
        .0)
}

/// Small jumps replaced by a Gaussian; see [`CutoffDriver::ar_flow`].
#[allow(clippy::too_many_arguments)]
pub fn ar_flow<R: Rng + ?Sized>(
    h: &JumpCoefficient,
    triplet: &LevyTriplet,
    eps: f64,
    t: f64,
    x: &[f64],
    inner: &ArInner,
    flow: &FlowMethod,
    rng: &mut R,
) -> Result<Point> {
    Ok(CutoffDriver::new(h, triplet, eps, CutoffMode::Ar)?
        .ar_flow(t, x, inner, flow, rng)?
        .0)
}

/// Deterministic part `x' = h(x) (b - int_{eps < |y| <= 1} y nu)`.
pub fn decomposed_drift_step(
    h: &JumpCoefficient,
    triplet: &LevyTriplet,
    eps: f64,
    t: f64,
    x: &[f64],
    flow: &FlowMethod,
) -> Result<Point> {
    let beta = triplet.compensated_drift(eps)?;
    if is_zero_vec(&beta) {
        return Ok(Point::from_slice(x));
    }
    flow.apply(&h.field(&beta), t, x)
}

/// Rank-one Gaussian replacement of the jumps below `eps`:
/// `x + h(x) Y xi sqrt(t lambda_eps / l(Y))` with `Y ~ F_eps^l`, `xi ~ N(0, 1)`.
#[derive(Clone, Debug)]
pub struct SmallJumpGaussian {
    l: Localization,
    lambda: f64,
    sampler: Option<RegionSampler>,
}

impl SmallJumpGaussian {
    pub fn new(model: &LevyMeasure, eps: f64, l: Localization) -> Result<Self> {
        let lambda = tail_mass(model, eps, l, MassRegion::Small)?;
        let sampler = if lambda > 0.0 {
            Some(model.sampler(Region::small(eps), l)?)
        } else {
            None
        };
        Ok(SmallJumpGaussian { l, lambda, sampler })
    }

    /// `lambda_eps = int_{|y| <= eps} l dnu`.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// The driver increment `Y xi sqrt(t lambda / l(Y))`, or `None` without small-jump mass.
    pub fn increment<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> Result<Option<Point>> {
        let Some(s) = &self.sampler else {
            return Ok(None);
        };
        let y = s.sample(rng)?;
        let xi: f64 = rng.sample(StandardNormal);
        let scale = xi * (t * self.lambda / self.l.weight(&y)).sqrt();
        Ok(Some(y.iter().map(|v| v * scale).collect()))
    }

    pub fn step<R: Rng + ?Sized>(&self, h: &JumpCoefficient, t: f64, x: &[f64], rng: &mut R) -> Result<Point> {
        match self.increment(t, rng)? {
            Some(dy) => h.apply(x, &dy),
            None => Ok(Point::from_slice(x)),
        }
    }
}

pub fn small_jump_gaussian_step<R: Rng + ?Sized>(
    h: &JumpCoefficient,
    model: &LevyMeasure,
    eps: f64,
    l: Localization,
    t: f64,
    x: &[f64],
    rng: &mut R,
) -> Result<Point> {
    SmallJumpGaussian::new(model, eps, l)?.step(h, t, x, rng)
}

/// Bernoulli jumps drawn from `G_{eps,l}`, prepared for one parameter set.
#[derive(Clone, Debug)]
pub struct TailJumps {
    params: BernoulliJumpParams,
    sampler: Option<RegionSampler>,
}

impl TailJumps {
    pub fn new(model: &LevyMeasure, params: BernoulliJumpParams) -> Result<Self> {
        let sampler = if params.tail_mass > 0.0 {
            Some(model.sampler(Region::tail(params.eps), params.localization)?)
        } else {
            None
        };
        Ok(TailJumps { params, sampler })
    }

    pub fn params(&self) -> &BernoulliJumpParams {
        &self.params
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Point> {
        let s = self
            .sampler
            .as_ref()
            .ok_or_else(|| Error::SamplerFailure("no tail mass to draw jumps from".into()))?;
        let z = s.sample(rng)?;
        let w = self.params.localization.weight(&z);
        Ok(z.iter().map(|v| v / w).collect())
    }

    /// Driver increments to apply in order (zero, one or two of them).
    pub fn increments<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<Point>> {
        let u: f64 = rng.random();
        match self.params.probabilities {
            JumpProbabilities::One { p } => {
                if u < p {
                    Ok(vec![self.draw(rng)?])
                } else {
                    Ok(Vec::new())
                }
            }
            JumpProbabilities::Two { p1, p2 } => {
                if u >= p1 {
                    return Ok(Vec::new());
                }
                let second = rng.random::<f64>() < p2;
                let mut out = vec![self.draw(rng)?];
                if second {
                    out.push(self.draw(rng)?);
                }
                Ok(out)
            }
        }
    }

    /// `x` if no jump fires, `x + h(x) l(Z)^{-1} Z` after one, and
    /// `x1 + h(x1) Z2` with `x1 = x + h(x) Z1` after two.
    pub fn step<R: Rng + ?Sized>(&self, h: &JumpCoefficient, x: &[f64], rng: &mut R) -> Result<(Point, usize)> {
        let mut state = Point::from_slice(x);
        let incs = self.increments(rng)?;
        for y in &incs {
            state = h.apply(&state, y)?;
        }
        Ok((state, incs.len()))
    }
}

fn check_mode(params: &BernoulliJumpParams, t: f64, mode: BernoulliMode) -> Result<()> {
    if params.probabilities.mode() != mode {
        return Err(Error::Config(format!(
            "parameters were built for {:?}",
            params.probabilities.mode()
        )));
    }
    if (params.t - t).abs() > 1e-12 * t.max(1.0) {
        return Err(Error::Config(format!(
            "parameters were built for t = {} but the step is t = {t}",
            params.t
        )));
    }
    Ok(())
}

pub fn one_jump_step<R: Rng + ?Sized>(
    h: &JumpCoefficient,
    model: &LevyMeasure,
    params: &BernoulliJumpParams,
    t: f64,
    x: &[f64],
    rng: &mut R,
) -> Result<Point> {
    check_mode(params, t, BernoulliMode::OneJump)?;
    Ok(TailJumps::new(model, params.clone())?.step(h, x, rng)?.0)
}

pub fn two_jump_step<R: Rng + ?Sized>(
    h: &JumpCoefficient,
    model: &LevyMeasure,
    params: &BernoulliJumpParams,
    t: f64,
    x: &[f64],
    rng: &mut R,
) -> Result<Point> {
    check_mode(params, t, BernoulliMode::TwoJump)?;
    if params.localization != Localization::One {
        return Err(Error::Config("the two-jump step uses localization l = 1".into()));
    }
    Ok(TailJumps::new(model, params.clone())?.step(h, x, rng)?.0)
}

/// Jump-coordinate approximation selected by name in the configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpApprox {
    /// Finite activity only; at most `max_jumps` jumps per step (`None` = all).
    CpTruncate {
        #[serde(default)]
        max_jumps: Option<usize>,
    },
    Ignore {
        eps: EpsRule,
    },
    Ar {
        eps: EpsRule,
        #[serde(default)]
        inner: ArInner,
    },
    /// Drift step, small-jump Gaussian with localization `localization`, then
    /// Bernoulli tail jumps with `tail_localization`.
    Decomposed {
        mode: BernoulliMode,
        eps: EpsRule,
        #[serde(default)]
        localization: Localization,
        #[serde(default)]
        tail_localization: Localization,
    },
}

impl JumpApprox {
    /// Cutoff-moment family used when `eps` follows an order rule.
    pub fn cutoff_mode(&self) -> CutoffMode {
        match self {
            JumpApprox::Ignore { .. } | JumpApprox::CpTruncate { .. } => CutoffMode::Ignore,
            JumpApprox::Ar { .. } | JumpApprox::Decomposed { .. } => CutoffMode::Ar,
        }
    }

    /// Cross-checks against the driver that do not depend on the step size.
    pub fn validate(&self, triplet: &LevyTriplet) -> Result<()> {
        match self {
            JumpApprox::CpTruncate { .. } => {
                if triplet.measure.infinite_activity() {
                    return Err(Error::Config(
                        "cp_truncate needs a finite-activity measure; use ignore, ar or decomposed".into(),
                    ));
                }
                let beta = triplet.compensated_drift(0.0)?;
                if beta.iter().any(|b| b.abs() > 1e-12) {
                    return Err(Error::Config(format!(
                        "cp_truncate needs a pure-jump driver (drift equal to the mean of jumps with |y| <= 1); \
                         the net drift is {beta:?}"
                    )));
                }
                Ok(())
            }
            JumpApprox::Ar { inner, .. } if inner.substeps == 0 => {
                Err(Error::Config("ar inner.substeps must be at least 1".into()))
            }
            JumpApprox::Decomposed {
                mode: BernoulliMode::TwoJump,
                tail_localization,
                ..
            } if *tail_localization != Localization::One => Err(Error::Config(
                "decomposed two_jump requires tail_localization = one".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Step-size-dependent data for steps of length `t`.
    pub fn prepare(&self, h: &JumpCoefficient, triplet: &LevyTriplet, t: f64) -> Result<PreparedJumps> {
        self.validate(triplet)?;
        if triplet.measure.is_zero() && is_zero_vec(&triplet.drift) {
            return Ok(PreparedJumps::Null);
        }
        let mode = self.cutoff_mode();
        Ok(match self {
            JumpApprox::CpTruncate { max_jumps } => PreparedJumps::CompoundPoisson {
                h: h.clone(),
                spec: CompoundPoissonSpec::new(&triplet.measure)?,
                max_jumps: *max_jumps,
            },
            JumpApprox::Ignore { eps } => {
                let eps = eps.resolve(&triplet.measure, t, mode)?;
                PreparedJumps::Ignore(CutoffDriver::new(h, triplet, eps, mode)?)
            }
            JumpApprox::Ar { eps, inner } => {
                let eps = eps.resolve(&triplet.measure, t, mode)?;
                PreparedJumps::Ar(CutoffDriver::new(h, triplet, eps, mode)?, *inner)
            }
            JumpApprox::Decomposed {
                mode: bmode,
                eps,
                localization,
                tail_localization,
            } => {
                let eps = eps.resolve(&triplet.measure, t, mode)?;
                let beta = triplet.compensated_drift(eps)?;
                let params = BernoulliJumpParams::new(&triplet.measure, eps, *tail_localization, t, *bmode)?;
                PreparedJumps::Decomposed(Box::new(Decomposed {
                    h: h.clone(),
                    drift_field: (!is_zero_vec(&beta)).then(|| h.field(&beta)),
                    drift: beta,
                    small: SmallJumpGaussian::new(&triplet.measure, eps, *localization)?,
                    tail: TailJumps::new(&triplet.measure, params)?,
                }))
            }
        })
    }
}

#[derive(Clone, Debug)]
pub struct Decomposed {
    h: JumpCoefficient,
    drift: Vec<f64>,
    drift_field: Option<VectorField>,
    small: SmallJumpGaussian,
    tail: TailJumps,
}

impl Decomposed {
    pub fn tail(&self) -> &TailJumps {
        &self.tail
    }

    pub fn small(&self) -> &SmallJumpGaussian {
        &self.small
    }
}

/// A jump-coordinate approximation prepared for one step size.
#[derive(Clone, Debug)]
pub enum PreparedJumps {
    /// Zero measure and zero drift.
    Null,
    CompoundPoisson {
        h: JumpCoefficient,
        spec: CompoundPoissonSpec,
        max_jumps: Option<usize>,
    },
    Ignore(CutoffDriver),
    Ar(CutoffDriver, ArInner),
    Decomposed(Box<Decomposed>),
}

impl PreparedJumps {
    /// The jump-coordinate flow over `t`; the Bernoulli decomposition applies
    /// tail jumps first, then the small-jump Gaussian, then the drift.
    pub fn apply<R: Rng + ?Sized>(&self, t: f64, x: &[f64], flow: &FlowMethod, rng: &mut R) -> Result<(Point, usize)> {
        match self {
            PreparedJumps::Null => Ok((Point::from_slice(x), 0)),
            PreparedJumps::CompoundPoisson { h, spec, max_jumps } => {
                compound_poisson_flow_counted(h, spec, t, x, *max_jumps, rng)
            }
            PreparedJumps::Ignore(c) => c.ignore_flow(t, x, flow, rng),
            PreparedJumps::Ar(c, inner) => c.ar_flow(t, x, inner, flow, rng),
            PreparedJumps::Decomposed(d) => {
                let (state, n) = d.tail.step(&d.h, x, rng)?;
                let state = d.small.step(&d.h, t, &state, rng)?;
                let state = match &d.drift_field {
                    Some(f) => flow.apply(f, t, &state)?,
                    None => state,
                };
                Ok((state, n))
            }
        }
    }

    /// Driver increment `Delta Y` over `t` for the Euler–Maruyama step.
    pub fn increment<R: Rng + ?Sized>(&self, t: f64, dim: usize, rng: &mut R) -> Result<(Point, usize)> {
        match self {
            PreparedJumps::Null => Ok((smallvec::smallvec![0.0; dim], 0)),
            PreparedJumps::CompoundPoisson { spec, max_jumps, .. } => {
                let mut dy: Point = smallvec::smallvec![0.0; dim];
                if *max_jumps == Some(0) {
                    return Ok((dy, 0));
                }
                let n = sample_poisson(spec.intensity() * t, rng)? as usize;
                let n = max_jumps.map_or(n, |m| n.min(m));
                for _ in 0..n {
                    for (o, v) in dy.iter_mut().zip(spec.sample_jump(rng)?) {
                        *o += v;
                    }
                }
                Ok((dy, n))
            }
            PreparedJumps::Ignore(c) | PreparedJumps::Ar(c, _) => c.increment(t, rng),
            PreparedJumps::Decomposed(d) => {
                let mut dy: Point = d.drift.iter().map(|b| b * t).collect();
                let incs = d.tail.increments(rng)?;
                for y in &incs {
                    for (o, v) in dy.iter_mut().zip(y) {
                        *o += v;
                    }
                }
                if let Some(s) = d.small.increment(t, rng)? {
                    for (o, v) in dy.iter_mut().zip(s) {
                        *o += v;
                    }
                }
                Ok((dy, incs.len()))
            }
        }
    }
}
