//! Weak-error estimation: reference values, parallel Monte Carlo with error
//! bars, order fitting, Romberg combination and noise-free moment propagation
//! for linear models.
//!
//! Paths are split into fixed batches. Each batch is summed pairwise and batches
//! are merged in index order, so a report depends only on the seed and the batch
//! size, never on the number of worker threads.

mod fit;
mod output;

use std::fmt;
use std::sync::Arc;

use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

pub use fit::{at_noise_floor, fit_order, romberg_combine, FitPoint, OrderFit};
pub use output::{plot_script, write_csv, write_plot_script, CSV_HEADER};

use crate::error::{Error, Result};
use crate::flows::NoiseKind;
use crate::jumps::{binomial, JumpApprox, MAX_DEFECT_DEGREE};
use crate::levy::{Measure1d, Side};
use crate::poly::Polynomial;
use crate::rng::{seeded, PathStreams};
use crate::schemes::{FlowChoice, Scheme, SchemeConfig, SchemeKind, SdeModel};

/// `f: R^N -> R` with `|f(x)| <= C (1 + |x|^p)`.
#[derive(Clone)]
pub struct TestFunction {
    name: String,
    degree: u32,
    constant: f64,
    poly: Option<Polynomial>,
    eval: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("degree", &self.degree)
            .field("constant", &self.constant)
            .finish()
    }
}

impl TestFunction {
    /// Polynomial in the first coordinate.
    pub fn polynomial(name: impl Into<String>, p: Polynomial) -> Self {
        let constant = p.coeffs().iter().map(|c| c.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
        let q = p.clone();
        TestFunction {
            name: name.into(),
            degree: p.degree() as u32,
            constant,
            poly: Some(p),
            eval: Arc::new(move |x| q.eval(x[0])),
        }
    }

    /// `x^p` of the first coordinate.
    pub fn monomial(p: usize) -> Self {
        let name = match p {
            0 => "1".to_string(),
            1 => "x".to_string(),
            _ => format!("x^{p}"),
        };
        TestFunction::polynomial(name, Polynomial::monomial(p))
    }

    pub fn constant(c: f64) -> Self {
        TestFunction::polynomial(format!("{c}"), Polynomial::new(vec![c]))
    }

    pub fn custom(
        name: impl Into<String>,
        degree: u32,
        constant: f64,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        TestFunction {
            name: name.into(),
            degree,
            constant,
            poly: None,
            eval: Arc::new(f),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn as_polynomial(&self) -> Option<&Polynomial> {
        self.poly.as_ref()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    /// Checks the growth bound on points along each axis and the diagonal.
    pub fn spot_check(&self, dim: usize) -> Result<()> {
        let radii = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0];
        let mut probes: Vec<Vec<f64>> = Vec::new();
        for &r in &radii {
            for s in [1.0, -1.0] {
                for k in 0..dim {
                    let mut x = vec![0.0; dim];
                    x[k] = s * r;
                    probes.push(x);
                }
                probes.push(vec![s * r; dim]);
            }
        }
        for x in probes {
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let bound = self.constant * (1.0 + norm.powi(self.degree as i32));
            let v = self.eval(&x);
            if !(v.abs() <= bound * (1.0 + 1e-12)) {
                return Err(Error::Config(format!(
                    "test function {} violates |f| <= {} (1 + |x|^{}) at {x:?}",
                    self.name, self.constant, self.degree
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    /// Closed form whose Lévy integrals are evaluated by quadrature.
    Quadrature,
    FineGrid {
        n_ref: usize,
        paths: usize,
    },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::ClosedForm => write!(f, "closed_form"),
            Provenance::Quadrature => write!(f, "quadrature"),
            Provenance::FineGrid { n_ref, paths } => write!(f, "fine_grid(n_ref={n_ref}, paths={paths})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Reference {
    pub value: f64,
    /// Zero for deterministic oracles.
    pub stderr: f64,
    pub provenance: Provenance,
}

/// Euler–Maruyama fallback reference on a refined grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FineGridSpec {
    pub n_ref: usize,
    pub paths: usize,
    pub seed: u64,
    pub jumps: JumpApprox,
}

impl FineGridSpec {
    /// `n_ref = 64 max(n_list)` with 8 times the paths.
    pub fn default_for(n_list: &[usize], paths: usize, seed: u64, jumps: JumpApprox) -> Self {
        FineGridSpec {
            n_ref: 64 * n_list.iter().copied().max().unwrap_or(1),
            paths: 8 * paths,
            seed: seed ^ 0x5eed_f1e5,
            jumps,
        }
    }
}

/// `E[X_T^p] = x^p exp(T kappa(p))` for `dX = mu X dt + sum sigma_i X dB^i + eta X- dY`.
fn linear_log_moment(model: &SdeModel, p: u32) -> Result<Option<f64>> {
    let Some(lin) = model.linear_coefficients() else {
        return Ok(None);
    };
    let pf = p as f64;
    let s2: f64 = lin.sigmas.iter().map(|s| s * s).sum();
    let mut kappa = pf * lin.mu + 0.5 * pf * (pf - 1.0) * s2;
    if lin.eta != 0.0 {
        let trip = model.triplet();
        let Some(m) = trip.measure.as_1d() else {
            return Ok(None);
        };
        kappa += pf * lin.eta * trip.drift[0];
        let signed = |j: u32, lo: f64, hi: f64| -> Result<f64> {
            let plus = m.side_power(Side::Plus, j as f64, lo, hi)?;
            let minus = m.side_power(Side::Minus, j as f64, lo, hi)?;
            Ok(if j % 2 == 0 { plus + minus } else { plus - minus })
        };
        for j in 1..=p {
            let c = binomial(p, j) * lin.eta.powi(j as i32);
            // Compensated inside the unit ball.
            if j >= 2 {
                kappa += c * signed(j, 0.0, 1.0)?;
            }
            kappa += c * signed(j, 1.0, f64::INFINITY)?;
        }
    }
    Ok(Some(kappa))
}

fn closed_form_provenance(model: &SdeModel) -> Provenance {
    match model.triplet().measure.as_1d() {
        Some(Measure1d::TemperedStable(_)) if model.has_jumps() => Provenance::Quadrature,
        Some(Measure1d::CompoundPoisson(cp))
            if model.has_jumps() && matches!(cp.jump_dist, crate::levy::JumpDist::Normal { .. }) =>
        {
            Provenance::Quadrature
        }
        _ => Provenance::ClosedForm,
    }
}

/// `E[f(X_T(x0))]` from the closed-form registry, else from the fine-grid
/// fallback when one is given.
pub fn reference_value(
    model: &SdeModel,
    f: &TestFunction,
    t_end: f64,
    x0: &[f64],
    fallback: Option<&FineGridSpec>,
) -> Result<Reference> {
    if x0.len() != model.dim() {
        return Err(Error::Config(format!(
            "initial point has {} coordinates, model has {}",
            x0.len(),
            model.dim()
        )));
    }
    if let Some(p) = f.as_polynomial() {
        if p.degree() == 0 {
            return Ok(Reference {
                value: p.coeffs().first().copied().unwrap_or(0.0),
                stderr: 0.0,
                provenance: Provenance::ClosedForm,
            });
        }
        if model.dim() == 1 {
            let mut value = 0.0;
            let mut ok = true;
            for (k, c) in p.coeffs().iter().enumerate() {
                if *c == 0.0 {
                    continue;
                }
                match linear_log_moment(model, k as u32) {
                    Ok(Some(kappa)) if kappa.is_finite() => value += c * x0[0].powi(k as i32) * (t_end * kappa).exp(),
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                return Ok(Reference {
                    value,
                    stderr: 0.0,
                    provenance: closed_form_provenance(model),
                });
            }
        }
    }
    let Some(spec) = fallback else {
        return Err(Error::ReferenceUnavailable(format!(
            "no closed form for f = {} on this model and the fine-grid fallback is disabled",
            f.name()
        )));
    };
    let scheme = Scheme::new(
        SchemeConfig {
            scheme: SchemeKind::EulerMaruyama,
            flow: FlowChoice::Rk { order: 1 },
            noise: NoiseKind::Gaussian,
            jumps: spec.jumps.clone(),
        },
        model.clone(),
    )?;
    let est = estimate_mean(
        &scheme,
        f,
        t_end,
        x0,
        spec.n_ref,
        spec.paths,
        spec.seed,
        &EstimateOptions::default(),
    )?;
    Ok(Reference {
        value: est.mean,
        stderr: est.stderr,
        provenance: Provenance::FineGrid {
            n_ref: spec.n_ref,
            paths: spec.paths,
        },
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateOptions {
    /// Paths per batch; fixes the summation tree.
    pub batch_size: usize,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Largest tolerated fraction of aborted paths.
    pub abort_limit: f64,
    /// Reference used when the closed-form registry has no entry.
    pub fallback: Option<FineGridSpec>,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            batch_size: 4096,
            threads: None,
            abort_limit: 1e-3,
            fallback: None,
        }
    }
}

/// Runs `f` on a pool with `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Moments {
    count: usize,
    mean: f64,
    m2: f64,
    aborted: usize,
}

impl Moments {
    fn of(values: &[f64], aborted: usize) -> Self {
        if values.is_empty() {
            return Moments {
                aborted,
                ..Moments::default()
            };
        }
        let mean = pairwise_sum(values) / values.len() as f64;
        let dev: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
        Moments {
            count: values.len(),
            mean,
            m2: pairwise_sum(&dev),
            aborted,
        }
    }

    fn merge(self, o: Moments) -> Moments {
        let n = self.count + o.count;
        if n == 0 {
            return Moments {
                aborted: self.aborted + o.aborted,
                ..self
            };
        }
        let d = o.mean - self.mean;
        let (na, nb) = (self.count as f64, o.count as f64);
        Moments {
            count: n,
            mean: self.mean + d * nb / n as f64,
            m2: self.m2 + o.m2 + d * d * na * nb / n as f64,
            aborted: self.aborted + o.aborted,
        }
    }
}

/// Mean of `f(X_T^{(n)})` with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    /// Zero when fewer than two paths were kept.
    pub stderr: f64,
    pub paths: usize,
    pub aborted: usize,
}

fn variant_seed(seed: u64, n: usize, variant: usize) -> u64 {
    seeded(seed, ((n as u64) << 8) | variant as u64).next_u64()
}

#[allow(clippy::too_many_arguments)]
fn run_variant(
    scheme: &Scheme,
    f: &TestFunction,
    t_end: f64,
    x0: &[f64],
    n: usize,
    variant: usize,
    paths: usize,
    seed: u64,
    batch: usize,
) -> Result<Moments> {
    let plan = scheme.plan(t_end / n as f64)?;
    let batches = paths.div_ceil(batch);
    let parts: Vec<Moments> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let lo = b * batch;
            let hi = paths.min(lo + batch);
            let mut values = Vec::with_capacity(hi - lo);
            let mut aborted = 0;
            for path in lo..hi {
                let out = scheme.path_with(&plan, n, x0, variant, &PathStreams::new(seed, path as u64));
                if out.aborted.is_some() {
                    aborted += 1;
                } else {
                    values.push(f.eval(&out.x));
                }
            }
            Moments::of(&values, aborted)
        })
        .collect();
    Ok(parts.into_iter().fold(Moments::default(), Moments::merge))
}

/// `sum_v w_v E_v[f(X_T^{(n)})]` over the scheme's variants, `paths` paths each.
#[allow(clippy::too_many_arguments)]
pub fn estimate_mean(
    scheme: &Scheme,
    f: &TestFunction,
    t_end: f64,
    x0: &[f64],
    n: usize,
    paths: usize,
    seed: u64,
    opts: &EstimateOptions,
) -> Result<MeanEstimate> {
    if n == 0 || paths == 0 || opts.batch_size == 0 {
        return Err(Error::Domain("n, paths and batch size must be at least 1".into()));
    }
    if x0.len() != scheme.model().dim() {
        return Err(Error::Config(format!(
            "initial point has {} coordinates, model has {}",
            x0.len(),
            scheme.model().dim()
        )));
    }
    let variants = scheme.variants().len();
    let runs = with_threads(opts.threads, || {
        (0..variants)
            .map(|v| {
                run_variant(
                    scheme,
                    f,
                    t_end,
                    x0,
                    n,
                    v,
                    paths,
                    variant_seed(seed, n, v),
                    opts.batch_size,
                )
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let mut mean = 0.0;
    let mut var = 0.0;
    let mut aborted = 0;
    for (v, m) in scheme.variants().iter().zip(&runs) {
        aborted += m.aborted;
        if m.count == 0 {
            return Err(Error::ExcessiveAborts {
                aborted: m.aborted,
                paths,
                limit_pct: 100.0 * opts.abort_limit,
            });
        }
        mean += v.weight * m.mean;
        if m.count > 1 {
            var += v.weight * v.weight * m.m2 / ((m.count - 1) as f64 * m.count as f64);
        }
    }
    let total = paths * variants;
    if aborted as f64 > opts.abort_limit * total as f64 {
        return Err(Error::ExcessiveAborts {
            aborted,
            paths: total,
            limit_pct: 100.0 * opts.abort_limit,
        });
    }
    Ok(MeanEstimate {
        mean,
        stderr: var.sqrt(),
        paths,
        aborted,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub n: usize,
    pub paths: usize,
    pub estimate: f64,
    /// Monte Carlo and reference errors combined.
    pub stderr: f64,
    pub reference: f64,
    /// `|estimate - reference|`.
    pub error: f64,
    pub aborted: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeakErrorReport {
    pub scheme: String,
    pub function: String,
    pub seed: u64,
    pub reference: Reference,
    pub rows: Vec<ReportRow>,
    pub fit: OrderFit,
}

impl WeakErrorReport {
    pub fn fit_points(&self) -> Vec<FitPoint> {
        self.rows
            .iter()
            .map(|r| FitPoint {
                n: r.n,
                error: r.error,
                stderr: r.stderr,
            })
            .collect()
    }

    /// Romberg-combined errors for consecutive rows with `n_{k+1} = 2 n_k`.
    pub fn romberg(&self, m: u32) -> Result<Vec<FitPoint>> {
        let k = 2f64.powi(m as i32);
        let mut out = Vec::new();
        for w in self.rows.windows(2) {
            if w[1].n != 2 * w[0].n {
                continue;
            }
            let e = romberg_combine(w[0].estimate, w[1].estimate, m)?;
            out.push(FitPoint {
                n: w[0].n,
                error: (e - self.reference.value).abs(),
                stderr: ((k * w[1].stderr).powi(2) + w[0].stderr.powi(2)).sqrt() / (k - 1.0),
            });
        }
        Ok(out)
    }

    fn finish(scheme: &Scheme, f: &TestFunction, seed: u64, reference: Reference, rows: Vec<ReportRow>) -> Self {
        let mut report = WeakErrorReport {
            scheme: scheme.config().scheme.name().to_string(),
            function: f.name().to_string(),
            seed,
            reference,
            rows,
            fit: OrderFit::Indeterminate { reason: String::new() },
        };
        report.fit =
            fit_order(&report.fit_points()).unwrap_or_else(|e| OrderFit::Indeterminate { reason: e.to_string() });
        report
    }
}

fn check_n_list(n_list: &[usize]) -> Result<()> {
    if n_list.is_empty() || n_list[0] == 0 || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!(
            "n_list {n_list:?} must be nonempty, positive and strictly increasing"
        )));
    }
    Ok(())
}

/// Weak errors of `scheme` over `n_list` against `reference_value`.
#[allow(clippy::too_many_arguments)]
pub fn estimate(
    scheme: &Scheme,
    f: &TestFunction,
    t_end: f64,
    x0: &[f64],
    n_list: &[usize],
    paths: usize,
    seed: u64,
    opts: &EstimateOptions,
) -> Result<WeakErrorReport> {
    check_n_list(n_list)?;
    let reference = reference_value(scheme.model(), f, t_end, x0, opts.fallback.as_ref())?;
    estimate_against(scheme, f, t_end, x0, n_list, paths, seed, opts, reference)
}

#[allow(clippy::too_many_arguments)]
pub fn estimate_against(
    scheme: &Scheme,
    f: &TestFunction,
    t_end: f64,
    x0: &[f64],
    n_list: &[usize],
    paths: usize,
    seed: u64,
    opts: &EstimateOptions,
    reference: Reference,
) -> Result<WeakErrorReport> {
    check_n_list(n_list)?;
    let rows = n_list
        .iter()
        .map(|&n| {
            let e = estimate_mean(scheme, f, t_end, x0, n, paths, seed, opts)?;
            Ok(ReportRow {
                n,
                paths,
                estimate: e.mean,
                stderr: e.stderr.hypot(reference.stderr),
                reference: reference.value,
                error: (e.mean - reference.value).abs(),
                aborted: e.aborted,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WeakErrorReport::finish(scheme, f, seed, reference, rows))
}

/// `E[f(X_T^{(n)})]` without sampling, for a one-dimensional linear model and a
/// polynomial `f` of degree at most 6.
pub fn deterministic_linear_propagation(scheme: &Scheme, f: &Polynomial, t_end: f64, x0: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("number of steps must be at least 1".into()));
    }
    if f.degree() > MAX_DEFECT_DEGREE {
        return Err(Error::Config(format!(
            "propagation supports degree <= {MAX_DEFECT_DEGREE}, got {}",
            f.degree()
        )));
    }
    if scheme.model().dim() != 1 || scheme.model().linear_coefficients().is_none() {
        return Err(Error::Unsupported(
            "propagation needs a one-dimensional linear model".into(),
        ));
    }
    let plan = scheme.plan(t_end / n as f64)?;
    let mut total = 0.0;
    for (k, c) in f.coeffs().iter().enumerate() {
        if *c == 0.0 {
            continue;
        }
        let mut moment = 0.0;
        for (v, var) in scheme.variants().iter().enumerate() {
            let m = scheme.linear_step_moment(&plan, v, k as u32)?;
            moment += var.weight * m.powi(n as i32);
        }
        total += c * x0.powi(k as i32) * moment;
    }
    Ok(total)
}

/// Relative size below which a propagated weak error is rounding, not bias.
pub const PROPAGATION_FLOOR: f64 = 1e-12;

/// Report built from `deterministic_linear_propagation`; standard errors are zero.
/// Errors below `PROPAGATION_FLOOR` relative to the reference are left out of the fit.
pub fn propagation_report(
    scheme: &Scheme,
    f: &TestFunction,
    t_end: f64,
    x0: f64,
    n_list: &[usize],
) -> Result<WeakErrorReport> {
    check_n_list(n_list)?;
    let p = f
        .as_polynomial()
        .ok_or_else(|| Error::Unsupported("propagation needs a polynomial test function".into()))?;
    let reference = reference_value(scheme.model(), f, t_end, &[x0], None)?;
    let rows = n_list
        .iter()
        .map(|&n| {
            let e = deterministic_linear_propagation(scheme, p, t_end, x0, n)?;
            Ok(ReportRow {
                n,
                paths: 0,
                estimate: e,
                stderr: reference.stderr,
                reference: reference.value,
                error: (e - reference.value).abs(),
                aborted: 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let floor = PROPAGATION_FLOOR * reference.value.abs().max(1.0);
    let mut report = WeakErrorReport::finish(scheme, f, 0, reference, rows);
    let points: Vec<FitPoint> = report.fit_points().into_iter().filter(|p| p.error > floor).collect();
    report.fit = if points.is_empty() {
        OrderFit::Indeterminate {
            reason: format!("every error is below the rounding floor {floor:.1e}"),
        }
    } else {
        fit_order(&points).unwrap_or_else(|e| OrderFit::Indeterminate { reason: e.to_string() })
    };
    Ok(report)
}
