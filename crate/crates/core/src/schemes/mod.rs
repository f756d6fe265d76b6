//! Composition schemes built from coordinate one-step maps, and full paths
//! `X_T^{(n)} = Y^n o ... o Y^1 (x)`.
//!
//! The maps of a product term are applied in the order the exponentials are
//! written: in `e^{c_1 t L_{g_1}} ... e^{c_k t L_{g_k}}` the `g_1` map acts
//! first. Generator `0` is the Stratonovich drift, `1..=d` the Brownian
//! coordinates and `d+1` the jump coordinate.
//!
//! Combinations with weights that are not a probability vector (the global
//! Ninomiya–Victoir average and the fourth-order extrapolation) are split into
//! variants; each variant is simulated on its own and the estimates are combined
//! with the variant weights.

mod model;
mod moments;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use model::{LinearCoefficients, SdeModel};
pub use moments::{noise_expectation, HERMITE_NODES};

use crate::algebra::{Factor, SchemeExpr, Term};
use crate::error::{numerical, Error, Result};
use crate::flows::{sample_noise, ButcherTableau, FlowMethod, NoiseKind, ReferenceSolver};
use crate::jumps::{JumpApprox, PreparedJumps};
use crate::rng::{PathStreams, SLOTS_PER_STEP};
use crate::Point;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    EulerMaruyama,
    NvA,
    NvB,
    Splitting,
    NvExtrapolated,
    Fujiwara4,
    OneJumpFirstOrder,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 7] = [
        SchemeKind::EulerMaruyama,
        SchemeKind::NvA,
        SchemeKind::NvB,
        SchemeKind::Splitting,
        SchemeKind::NvExtrapolated,
        SchemeKind::Fujiwara4,
        SchemeKind::OneJumpFirstOrder,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::EulerMaruyama => "euler_maruyama",
            SchemeKind::NvA => "nv_a",
            SchemeKind::NvB => "nv_b",
            SchemeKind::Splitting => "splitting",
            SchemeKind::NvExtrapolated => "nv_extrapolated",
            SchemeKind::Fujiwara4 => "fujiwara4",
            SchemeKind::OneJumpFirstOrder => "one_jump_first_order",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme '{s}'")))
    }

    /// Documented weak order.
    pub fn formal_order(self) -> usize {
        match self {
            SchemeKind::EulerMaruyama | SchemeKind::OneJumpFirstOrder => 1,
            SchemeKind::Fujiwara4 => 4,
            _ => 2,
        }
    }
}

/// How coordinate flows `exp(tV)` are realised.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FlowChoice {
    Exact,
    Taylor { order: usize },
    Rk { order: usize },
}

impl FlowChoice {
    pub fn method(self) -> Result<FlowMethod> {
        match self {
            FlowChoice::Exact => Ok(FlowMethod::Exact(ReferenceSolver::default())),
            FlowChoice::Taylor { order } => {
                if order == 0 {
                    return Err(Error::Config("Taylor flow order must be at least 1".into()));
                }
                Ok(FlowMethod::Taylor(order))
            }
            FlowChoice::Rk { order } => Ok(FlowMethod::RungeKutta(ButcherTableau::of_order(order)?)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub scheme: SchemeKind,
    pub flow: FlowChoice,
    #[serde(default)]
    pub noise: NoiseKind,
    pub jumps: JumpApprox,
}

/// Result of one step. On failure `x` is the last accepted state.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub x: Point,
    pub jumps: usize,
    /// Index of the product term taken (0 when there is only one).
    pub branch: usize,
    pub aborted: Option<Error>,
}

/// Terminal state of one path.
#[derive(Clone, Debug, PartialEq)]
pub struct PathOutcome {
    pub x: Point,
    pub jumps: usize,
    /// Step index and cause of an abort.
    pub aborted: Option<(usize, Error)>,
}

#[derive(Clone, Debug)]
enum VariantKind {
    /// Products chosen with the given probabilities.
    Mixture(Vec<(f64, Vec<(u8, BigRational)>)>),
    Euler,
    OneJump,
}

/// One independently simulated component of a scheme, with its weight in the
/// final combination.
#[derive(Clone, Debug)]
pub struct Variant {
    pub weight: f64,
    kind: VariantKind,
}

/// A validated scheme bound to a model.
#[derive(Clone, Debug)]
pub struct Scheme {
    cfg: SchemeConfig,
    model: SdeModel,
    flow: FlowMethod,
    variants: Vec<Variant>,
}

/// Step-size-dependent data, prepared once per `t`.
#[derive(Clone, Debug)]
pub struct StepPlan {
    t: f64,
    jumps: Vec<(BigRational, PreparedJumps)>,
}

impl StepPlan {
    pub fn t(&self) -> f64 {
        self.t
    }

    fn jumps_for(&self, c: &BigRational) -> &PreparedJumps {
        &self
            .jumps
            .iter()
            .find(|(f, _)| f == c)
            .expect("jump data prepared for every fraction")
            .1
    }
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("small rationals convert")
}

fn mixture_of(expr: &SchemeExpr) -> VariantKind {
    VariantKind::Mixture(
        expr.terms()
            .iter()
            .map(|t| {
                let seq = t
                    .factors
                    .iter()
                    .map(|f| (f.generators[0], f.fraction.clone()))
                    .collect();
                (to_f64(&t.weight), seq)
            })
            .collect(),
    )
}

fn single(factors: Vec<Factor>) -> SchemeExpr {
    SchemeExpr::single(factors)
}

/// Symbolic form of a scheme for `d` Brownian components. The global
/// Ninomiya–Victoir average is represented by its one-step mixture.
pub fn build_scheme_expr(kind: SchemeKind, d: usize) -> Result<SchemeExpr> {
    Ok(match kind {
        SchemeKind::EulerMaruyama => {
            return Err(Error::Unsupported(
                "euler_maruyama is not a product of coordinate exponentials".into(),
            ))
        }
        SchemeKind::NvA | SchemeKind::NvExtrapolated => SchemeExpr::nv_a(d),
        SchemeKind::NvB => SchemeExpr::nv_b(d),
        SchemeKind::Splitting => SchemeExpr::splitting(d),
        SchemeKind::Fujiwara4 => SchemeExpr::fujiwara4(d),
        // Jumps first, then the Brownian coordinates downwards, then the drift.
        SchemeKind::OneJumpFirstOrder => single((0..=d as u8 + 1).rev().map(Factor::whole).collect()),
    })
}

/// Minimum local flow order for a scheme of weak order `m`: `2m + 1`.
fn required_flow_order(kind: SchemeKind) -> usize {
    match kind {
        SchemeKind::EulerMaruyama | SchemeKind::OneJumpFirstOrder => 1,
        k => 2 * k.formal_order() + 1,
    }
}

impl Scheme {
    pub fn new(cfg: SchemeConfig, model: SdeModel) -> Result<Self> {
        let flow = cfg.flow.method()?;
        let need = required_flow_order(cfg.scheme);
        if let Some(have) = flow.local_order() {
            if have < need {
                return Err(Error::Config(format!(
                    "{} needs coordinate flows of local order >= {need}, got {have}",
                    cfg.scheme.name()
                )));
            }
        }
        cfg.jumps.validate(model.triplet())?;
        if cfg.scheme == SchemeKind::OneJumpFirstOrder && !matches!(cfg.jumps, JumpApprox::Decomposed { .. }) {
            return Err(Error::Config(
                "one_jump_first_order needs jumps.kind = decomposed".into(),
            ));
        }
        let d = model.brownian_dim();
        let variants = match cfg.scheme {
            SchemeKind::EulerMaruyama => vec![Variant {
                weight: 1.0,
                kind: VariantKind::Euler,
            }],
            SchemeKind::OneJumpFirstOrder => vec![Variant {
                weight: 1.0,
                kind: VariantKind::OneJump,
            }],
            SchemeKind::NvA | SchemeKind::NvB | SchemeKind::Splitting => vec![Variant {
                weight: 1.0,
                kind: mixture_of(&build_scheme_expr(cfg.scheme, d)?),
            }],
            SchemeKind::NvExtrapolated => SchemeExpr::nv_a(d)
                .terms()
                .iter()
                .map(|t| Variant {
                    weight: to_f64(&t.weight),
                    kind: mixture_of(
                        &SchemeExpr::new(vec![Term {
                            weight: BigRational::one(),
                            factors: t.factors.clone(),
                        }])
                        .expect("unit weight"),
                    ),
                })
                .collect(),
            SchemeKind::Fujiwara4 => vec![
                Variant {
                    weight: 4.0 / 3.0,
                    kind: mixture_of(&SchemeExpr::nv_b_half_squared(d)),
                },
                Variant {
                    weight: -1.0 / 3.0,
                    kind: mixture_of(&SchemeExpr::nv_b(d)),
                },
            ],
        };
        let scheme = Scheme {
            cfg,
            model,
            flow,
            variants,
        };
        let slots = scheme.max_slot();
        if slots >= SLOTS_PER_STEP {
            return Err(Error::Capacity(format!(
                "scheme needs {slots} random streams per step, at most {} available",
                SLOTS_PER_STEP - 1
            )));
        }
        Ok(scheme)
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.cfg
    }

    pub fn model(&self) -> &SdeModel {
        &self.model
    }

    pub fn flow(&self) -> &FlowMethod {
        &self.flow
    }

    /// The same scheme with every randomized step forced onto product `branch`.
    /// Stream slots are unchanged, so paths stay coupled to the original.
    pub fn fixed_branch(&self, branch: usize) -> Result<Scheme> {
        let mut out = self.clone();
        for v in &mut out.variants {
            if let VariantKind::Mixture(terms) = &mut v.kind {
                if terms.len() > 1 {
                    let chosen = terms
                        .get(branch)
                        .ok_or_else(|| Error::Config(format!("branch {branch} out of range")))?;
                    *terms = vec![(1.0, chosen.1.clone())];
                }
            }
        }
        Ok(out)
    }

    pub fn variants(&self) -> &[Variant] {
        &self.variants
    }

    fn generators(&self) -> u64 {
        self.model.brownian_dim() as u64 + 2
    }

    /// Stream slot of the `occ`-th occurrence of generator `g` within a step.
    fn slot(&self, g: u8, occ: usize) -> u64 {
        1 + occ as u64 * self.generators() + g as u64
    }

    fn max_slot(&self) -> u64 {
        let mut top = self.slot(self.generators() as u8 - 1, 0);
        for v in &self.variants {
            if let VariantKind::Mixture(terms) = &v.kind {
                for (_, seq) in terms {
                    let g = self.generators() as usize;
                    let mut occ = vec![0usize; g];
                    for (gen, _) in seq {
                        top = top.max(self.slot(*gen, occ[*gen as usize]));
                        occ[*gen as usize] += 1;
                    }
                }
            }
        }
        top
    }

    fn jump_fractions(&self) -> Vec<BigRational> {
        let jump = self.model.brownian_dim() as u8 + 1;
        let mut out: Vec<BigRational> = vec![BigRational::one()];
        for v in &self.variants {
            if let VariantKind::Mixture(terms) = &v.kind {
                for (_, seq) in terms {
                    for (g, c) in seq {
                        if *g == jump && !out.contains(c) {
                            out.push(c.clone());
                        }
                    }
                }
            }
        }
        out
    }

    /// Prepare the jump data for steps of length `t`.
    pub fn plan(&self, t: f64) -> Result<StepPlan> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("step t = {t} must be positive")));
        }
        let jumps = self
            .jump_fractions()
            .into_iter()
            .map(|c| {
                let tc = t * to_f64(&c);
                let p = self.cfg.jumps.prepare(self.model.jump(), self.model.triplet(), tc)?;
                Ok((c, p))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(StepPlan { t, jumps })
    }

    fn coordinate(
        &self,
        plan: &StepPlan,
        g: u8,
        c: &BigRational,
        x: &[f64],
        rng: &mut impl Rng,
    ) -> Result<(Point, usize)> {
        let t = plan.t * to_f64(c);
        let d = self.model.brownian_dim() as u8;
        if g == 0 {
            Ok((self.flow.apply(self.model.stratonovich_drift(), t, x)?, 0))
        } else if g <= d {
            let b = sample_noise(self.cfg.noise, t, rng)?;
            Ok((self.flow.apply(&self.model.diffusion()[g as usize - 1], b, x)?, 0))
        } else {
            plan.jumps_for(c).apply(t, x, &self.flow, rng)
        }
    }

    fn run_step(
        &self,
        plan: &StepPlan,
        variant: usize,
        x: &mut Point,
        streams: &PathStreams,
        step: u64,
    ) -> Result<(usize, usize)> {
        let v = self
            .variants
            .get(variant)
            .ok_or_else(|| Error::Config(format!("variant {variant} out of range")))?;
        let t = plan.t;
        let d = self.model.brownian_dim();
        match &v.kind {
            VariantKind::Mixture(terms) => {
                let branch = if terms.len() == 1 {
                    0
                } else {
                    let u: f64 = streams.stream(step, 0).random();
                    let mut acc = 0.0;
                    terms
                        .iter()
                        .position(|(w, _)| {
                            acc += w;
                            u < acc
                        })
                        .unwrap_or(terms.len() - 1)
                };
                let mut occ = vec![0usize; d + 2];
                let mut jumps = 0;
                for (g, c) in &terms[branch].1 {
                    let mut rng = streams.stream(step, self.slot(*g, occ[*g as usize]));
                    occ[*g as usize] += 1;
                    let (y, k) = self.coordinate(plan, *g, c, x, &mut rng)?;
                    *x = y;
                    jumps += k;
                }
                Ok((branch, jumps))
            }
            VariantKind::Euler => {
                let n = self.model.dim();
                let mut out: Point = x
                    .iter()
                    .zip(self.model.drift().eval(x))
                    .map(|(a, b)| a + b * t)
                    .collect();
                for (i, v) in self.model.diffusion().iter().enumerate() {
                    let mut rng = streams.stream(step, self.slot(i as u8 + 1, 0));
                    let b = sample_noise(self.cfg.noise, t, &mut rng)?;
                    for (o, vi) in out.iter_mut().zip(v.eval(x)) {
                        *o += vi * b;
                    }
                }
                let mut rng = streams.stream(step, self.slot(d as u8 + 1, 0));
                let one = BigRational::one();
                let (dy, k) = plan
                    .jumps_for(&one)
                    .increment(t, self.model.triplet().dim(), &mut rng)?;
                if dy.iter().any(|v| *v != 0.0) {
                    let h = self.model.jump().eval(x)?;
                    for i in 0..n {
                        out[i] += (0..dy.len()).map(|j| h[(i, j)] * dy[j]).sum::<f64>();
                    }
                }
                *x = out;
                Ok((0, k))
            }
            VariantKind::OneJump => {
                let one = BigRational::one();
                let mut rng = streams.stream(step, self.slot(d as u8 + 1, 0));
                let (mut y, k) = plan.jumps_for(&one).apply(t, x, &self.flow, &mut rng)?;
                // Itô-corrected Euler steps for the Brownian coordinates, top index first.
                for i in (0..d).rev() {
                    let v = &self.model.diffusion()[i];
                    let mut rng = streams.stream(step, self.slot(i as u8 + 1, 0));
                    let b = sample_noise(self.cfg.noise, t, &mut rng)?;
                    let val = v.eval(&y);
                    let jac = v.jacobian(&y)?;
                    let n = y.len();
                    for r in 0..n {
                        let corr: f64 = (0..n).map(|c| jac[(r, c)] * val[c]).sum();
                        y[r] += val[r] * b + 0.5 * corr * t;
                    }
                }
                let v0 = self.model.stratonovich_drift().eval(&y);
                for (o, v) in y.iter_mut().zip(v0) {
                    *o += v * t;
                }
                *x = y;
                Ok((0, k))
            }
        }
    }

    /// One step of variant `variant` using the streams of `step`.
    pub fn step_with(
        &self,
        plan: &StepPlan,
        variant: usize,
        x: &[f64],
        streams: &PathStreams,
        step: u64,
    ) -> StepOutcome {
        let mut y = Point::from_slice(x);
        match self.run_step(plan, variant, &mut y, streams, step) {
            Ok((branch, jumps)) if y.iter().all(|v| v.is_finite()) => StepOutcome {
                x: y,
                jumps,
                branch,
                aborted: None,
            },
            Ok((branch, jumps)) => StepOutcome {
                aborted: Some(numerical("non-finite state after a step", &y)),
                x: Point::from_slice(x),
                jumps,
                branch,
            },
            Err(e) => StepOutcome {
                x: Point::from_slice(x),
                jumps: 0,
                branch: 0,
                aborted: Some(e),
            },
        }
    }

    /// `n` steps of length `t_end / n` from `x0` on path `path`.
    pub fn path_with(
        &self,
        plan: &StepPlan,
        n: usize,
        x0: &[f64],
        variant: usize,
        streams: &PathStreams,
    ) -> PathOutcome {
        let mut x = Point::from_slice(x0);
        let mut jumps = 0;
        for k in 0..n {
            let out = self.step_with(plan, variant, &x, streams, k as u64);
            jumps += out.jumps;
            if let Some(e) = out.aborted {
                return PathOutcome {
                    x: out.x,
                    jumps,
                    aborted: Some((k, e)),
                };
            }
            x = out.x;
        }
        PathOutcome {
            x,
            jumps,
            aborted: None,
        }
    }
}

/// One step of length `t` for a path keyed by `(seed, path)`.
pub fn one_step(scheme: &Scheme, variant: usize, t: f64, x: &[f64], streams: &PathStreams) -> Result<StepOutcome> {
    let plan = scheme.plan(t)?;
    Ok(scheme.step_with(&plan, variant, x, streams, 0))
}

/// `X_T^{(n)}` on path `path` of seed `seed`.
pub fn simulate_path(
    scheme: &Scheme,
    t_end: f64,
    n: usize,
    x0: &[f64],
    variant: usize,
    seed: u64,
    path: u64,
) -> Result<PathOutcome> {
    if n == 0 {
        return Err(Error::Domain("number of steps must be at least 1".into()));
    }
    let plan = scheme.plan(t_end / n as f64)?;
    Ok(scheme.path_with(&plan, n, x0, variant, &PathStreams::new(seed, path)))
}
