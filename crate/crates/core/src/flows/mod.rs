//! One-step flow maps for the drift and Brownian coordinates.
//!
//! A Brownian coordinate with field `V_i` is moved by `exp(B V_i) x`, the time-`B`
//! flow of the ODE `z' = V_i(z)` with a signed Brownian amplitude `B`. The exact
//! flow may be replaced by its Taylor polynomial `b_m` or an explicit Runge–Kutta
//! map `c_m`; both are local order `m` in `|B|`.

mod field;
mod solver;
mod trig;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use field::{affine_from, FieldShape, VectorField};
pub use solver::ReferenceSolver;

use crate::error::{numerical, Error, Result};
use crate::Point;

pub(crate) fn check_finite(x: Point, what: &str) -> Result<Point> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(numerical(format!("non-finite state after {what}"), &x))
    }
}

/// Exact flow `exp(tV) x`: closed form if present, otherwise the reference solver.
pub fn exp_map(v: &VectorField, t: f64, x: &[f64]) -> Result<Point> {
    exp_map_with(v, t, x, &ReferenceSolver::default())
}

pub fn exp_map_with(v: &VectorField, t: f64, x: &[f64], solver: &ReferenceSolver) -> Result<Point> {
    if !t.is_finite() {
        return Err(Error::Domain(format!("flow time {t} is not finite")));
    }
    match v.closed_flow(t, x) {
        Some(y) => check_finite(y, "exact flow"),
        None => solver.solve(v, t, x),
    }
}

/// Taylor flow `b_m(t, V) x = sum_{k<=m} t^k/k! (V^k e_j)(x)`.
pub fn taylor_flow(v: &VectorField, m: usize, t: f64, x: &[f64]) -> Result<Point> {
    let mut out = Point::from_slice(x);
    if t == 0.0 {
        return Ok(out);
    }
    let mut coef = 1.0;
    for k in 1..=m {
        coef *= t / k as f64;
        let d = v.iterated(k, x)?;
        for (o, dv) in out.iter_mut().zip(d) {
            *o += coef * dv;
        }
    }
    check_finite(out, "Taylor flow")
}

/// Explicit Runge–Kutta tableau: `a` strictly lower triangular, weights `b`.
#[derive(Clone, Debug, PartialEq)]
pub struct ButcherTableau {
    pub name: &'static str,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub order: usize,
}

impl ButcherTableau {
    pub fn new(name: &'static str, a: Vec<Vec<f64>>, b: Vec<f64>, order: usize) -> Result<Self> {
        let s = b.len();
        if s == 0 || a.len() != s {
            return Err(Error::Config(format!("tableau {name}: stage count mismatch")));
        }
        for (i, row) in a.iter().enumerate() {
            if row.len() > i {
                return Err(Error::Config(format!(
                    "tableau {name}: row {i} is not strictly lower triangular"
                )));
            }
        }
        let sum: f64 = b.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("tableau {name}: weights sum to {sum}")));
        }
        Ok(ButcherTableau { name, a, b, order })
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    pub fn euler() -> Self {
        ButcherTableau::new("euler", vec![vec![]], vec![1.0], 1).expect("valid")
    }

    pub fn midpoint() -> Self {
        ButcherTableau::new("midpoint", vec![vec![], vec![0.5]], vec![0.0, 1.0], 2).expect("valid")
    }

    pub fn kutta3() -> Self {
        ButcherTableau::new(
            "kutta3",
            vec![vec![], vec![0.5], vec![-1.0, 2.0]],
            vec![1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
            3,
        )
        .expect("valid")
    }

    pub fn classical4() -> Self {
        ButcherTableau::new(
            "classical4",
            vec![vec![], vec![0.5], vec![0.0, 0.5], vec![0.0, 0.0, 1.0]],
            vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
            4,
        )
        .expect("valid")
    }

    /// Butcher's six-stage fifth-order method.
    pub fn butcher5() -> Self {
        ButcherTableau::new(
            "butcher5",
            vec![
                vec![],
                vec![0.25],
                vec![0.125, 0.125],
                vec![0.0, -0.5, 1.0],
                vec![3.0 / 16.0, 0.0, 0.0, 9.0 / 16.0],
                vec![-3.0 / 7.0, 2.0 / 7.0, 12.0 / 7.0, -12.0 / 7.0, 8.0 / 7.0],
            ],
            vec![7.0 / 90.0, 0.0, 32.0 / 90.0, 12.0 / 90.0, 32.0 / 90.0, 7.0 / 90.0],
            5,
        )
        .expect("valid")
    }

    /// Built-in tableau of the given order (1 to 5).
    pub fn of_order(order: usize) -> Result<Self> {
        match order {
            1 => Ok(Self::euler()),
            2 => Ok(Self::midpoint()),
            3 => Ok(Self::kutta3()),
            4 => Ok(Self::classical4()),
            5 => Ok(Self::butcher5()),
            _ => Err(Error::Config(format!(
                "no built-in Runge-Kutta tableau of order {order} (1..=5)"
            ))),
        }
    }
}

/// Runge–Kutta flow `c_m(t, V) x = x + t sum_i b_i k_i`.
pub fn rk_flow(tab: &ButcherTableau, v: &VectorField, t: f64, x: &[f64]) -> Result<Point> {
    if t == 0.0 {
        return Ok(Point::from_slice(x));
    }
    let n = x.len();
    let mut k: Vec<Point> = Vec::with_capacity(tab.stages());
    for row in &tab.a {
        let xi: Point = (0..n)
            .map(|m| x[m] + t * row.iter().zip(&k).map(|(a, kj)| a * kj[m]).sum::<f64>())
            .collect();
        k.push(v.eval(&xi));
    }
    let out: Point = (0..n)
        .map(|m| x[m] + t * tab.b.iter().zip(&k).map(|(b, kj)| b * kj[m]).sum::<f64>())
        .collect();
    check_finite(out, "Runge-Kutta flow")
}

/// How a coordinate flow `exp(tV)` is realised.
#[derive(Clone, Debug, PartialEq)]
pub enum FlowMethod {
    Exact(ReferenceSolver),
    Taylor(usize),
    RungeKutta(ButcherTableau),
}

impl FlowMethod {
    pub fn exact() -> Self {
        FlowMethod::Exact(ReferenceSolver::default())
    }

    pub fn rk(order: usize) -> Result<Self> {
        Ok(FlowMethod::RungeKutta(ButcherTableau::of_order(order)?))
    }

    /// Local order in `|t|`; `None` means exact.
    pub fn local_order(&self) -> Option<usize> {
        match self {
            FlowMethod::Exact(_) => None,
            FlowMethod::Taylor(m) => Some(*m),
            FlowMethod::RungeKutta(tab) => Some(tab.order),
        }
    }

    pub fn apply(&self, v: &VectorField, t: f64, x: &[f64]) -> Result<Point> {
        match self {
            FlowMethod::Exact(s) => exp_map_with(v, t, x, s),
            FlowMethod::Taylor(m) => taylor_flow(v, *m, t, x),
            FlowMethod::RungeKutta(tab) => rk_flow(tab, v, t, x),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    Gaussian,
    ThreePoint,
}

/// Atoms and probabilities of the three-point variable.
pub const THREE_POINT_ATOMS: [(f64, f64); 3] = [
    (-1.732_050_807_568_877_2, 1.0 / 6.0),
    (0.0, 2.0 / 3.0),
    (1.732_050_807_568_877_2, 1.0 / 6.0),
];

/// Unit-variance draw of the given kind.
pub fn sample_standard<R: Rng + ?Sized>(kind: NoiseKind, rng: &mut R) -> f64 {
    match kind {
        NoiseKind::Gaussian => rng.sample(StandardNormal),
        NoiseKind::ThreePoint => {
            let u: f64 = rng.random();
            if u < 1.0 / 6.0 {
                -3f64.sqrt()
            } else if u < 1.0 / 3.0 {
                3f64.sqrt()
            } else {
                0.0
            }
        }
    }
}

/// Brownian increment over `t`: `N(0, t)` or `sqrt(t) Z` with `Z` three-point.
pub fn sample_noise<R: Rng + ?Sized>(kind: NoiseKind, t: f64, rng: &mut R) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("noise time {t} must be nonnegative")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(t.sqrt() * sample_standard(kind, rng))
}

/// Stratonovich drift `V_0 = V~_0 - 1/2 sum_i (dV_i) V_i`.
pub fn stratonovich_drift(v0: &VectorField, fields: &[VectorField]) -> Result<VectorField> {
    let n = v0.dim();
    if let Some(f) = fields.iter().find(|f| f.dim() != n) {
        return Err(Error::Config(format!(
            "diffusion field of dimension {} does not match drift dimension {n}",
            f.dim()
        )));
    }
    let active: Vec<&VectorField> = fields
        .iter()
        .filter(|f| match f.as_affine() {
            Some((a, _)) => a.iter().any(|v| *v != 0.0),
            None => true,
        })
        .collect();
    if active.is_empty() {
        return Ok(v0.clone());
    }
    if let (Some((a0, c0)), Some(parts)) = (
        v0.as_affine(),
        active.iter().map(|f| f.as_affine()).collect::<Option<Vec<_>>>(),
    ) {
        // J_{V_i} V_i = A_i (A_i x + c_i).
        let mut a = a0.to_vec();
        let mut c = c0.to_vec();
        for (ai, ci) in parts {
            for r in 0..n {
                for col in 0..n {
                    let aa: f64 = (0..n).map(|k| ai[r * n + k] * ai[k * n + col]).sum();
                    a[r * n + col] -= 0.5 * aa;
                }
                let ac: f64 = (0..n).map(|k| ai[r * n + k] * ci[k]).sum();
                c[r] -= 0.5 * ac;
            }
        }
        return Ok(VectorField::affine(a, c));
    }
    for f in &active {
        f.jacobian(&vec![0.0; n])?;
    }
    let base = v0.clone();
    let diff: Vec<VectorField> = active.into_iter().cloned().collect();
    let out = VectorField::general(n, move |x| {
        let mut y = base.eval(x);
        for f in &diff {
            let j = f.jacobian(x).expect("jacobian availability checked");
            let v = f.eval(x);
            for r in 0..n {
                y[r] -= 0.5 * (0..n).map(|k| j[(r, k)] * v[k]).sum::<f64>();
            }
        }
        y
    })
    .with_linear_growth(v0.linear_growth() && fields.iter().all(|f| f.linear_growth()))
    .allow_finite_differences();
    Ok(out)
}
