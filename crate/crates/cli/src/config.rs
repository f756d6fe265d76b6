//! Flat TOML experiment configuration and its resolution into library objects.
//!
//! Every key is optional at the parsing stage so that a missing key is reported
//! by name, together with the command or model that needs it.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

use weaksplit::flows::{NoiseKind, VectorField};
use weaksplit::jumps::JumpApprox;
use weaksplit::levy::{CompoundPoisson, LevyMeasure, LevyTriplet, Measure1d, TemperedStable};
use weaksplit::montecarlo::TestFunction;
use weaksplit::poly::Polynomial;
use weaksplit::schemes::{FlowChoice, Scheme, SchemeConfig, SchemeKind, SdeModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    /// `dX = mu X dt + sigma X dB`.
    Gbm,
    /// `dX = mu X dt + sigma X dB + eta X- dY`.
    LinearJump,
    /// `dX = (a + b sin X + c cos X) dt + sum_i (a_i + b_i sin X + c_i cos X) dB^i`.
    Trig,
}

impl ModelName {
    pub fn name(self) -> &'static str {
        match self {
            ModelName::Gbm => "gbm",
            ModelName::LinearJump => "linear_jump",
            ModelName::Trig => "trig",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    MonteCarlo,
    /// Noise-free moment propagation; one-dimensional linear models only.
    Propagation,
}

/// The Lévy measure table, tagged by `family`.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MeasureSpec {
    Zero,
    TemperedStable(TemperedStable),
    CompoundPoisson(CompoundPoisson),
}

impl From<MeasureSpec> for Measure1d {
    fn from(m: MeasureSpec) -> Self {
        match m {
            MeasureSpec::Zero => Measure1d::Zero,
            MeasureSpec::TemperedStable(ts) => Measure1d::TemperedStable(ts),
            MeasureSpec::CompoundPoisson(cp) => Measure1d::CompoundPoisson(cp),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: Option<ModelName>,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub eta: Option<f64>,
    /// Drift `b` of the driver; absent means the pure-jump drift.
    pub levy_drift: Option<f64>,
    pub measure: Option<MeasureSpec>,
    pub drift_trig: Option<[f64; 3]>,
    pub diffusion_trig: Option<Vec<[f64; 3]>>,

    pub scheme: Option<SchemeKind>,
    pub schemes: Option<Vec<SchemeKind>>,
    pub flow: Option<FlowChoice>,
    pub noise: Option<NoiseKind>,
    pub jump_approx: Option<JumpApprox>,

    pub test_functions: Option<Vec<String>>,
    pub t_end: Option<f64>,
    pub x0: Option<f64>,
    pub n_list: Option<Vec<usize>>,
    pub paths: Option<usize>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub method: Option<Method>,
    pub eps_list: Option<Vec<f64>>,
    /// Allow the Euler–Maruyama fine-grid reference when no closed form exists.
    pub fine_grid: Option<bool>,
}

fn need<T: Clone>(v: &Option<T>, key: &str, why: &str) -> Result<T> {
    v.clone().ok_or_else(|| anyhow!("missing required key `{key}` ({why})"))
}

fn unused<T>(v: &Option<T>, key: &str, model: ModelName) -> Result<()> {
    if v.is_some() {
        bail!("key `{key}` is not used by model = \"{}\"; remove it", model.name());
    }
    Ok(())
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn model_name(&self) -> Result<ModelName> {
        need(&self.model, "model", "one of gbm, linear_jump, trig")
    }

    pub fn build_model(&self) -> Result<SdeModel> {
        let name = self.model_name()?;
        let why = |k: &str| format!("model = \"{}\" needs {k}", name.name());
        let model = match name {
            ModelName::Gbm => {
                for (v, k) in [(&self.eta, "eta"), (&self.levy_drift, "levy_drift")] {
                    unused(v, k, name)?;
                }
                unused(&self.measure, "measure", name)?;
                self.no_trig(name)?;
                SdeModel::gbm(
                    need(&self.mu, "mu", &why("mu"))?,
                    need(&self.sigma, "sigma", &why("sigma"))?,
                )?
            }
            ModelName::LinearJump => {
                self.no_trig(name)?;
                let measure = LevyMeasure::one_d(need(&self.measure, "measure", &why("a [measure] table"))?.into());
                let triplet = match self.levy_drift {
                    Some(b) => LevyTriplet::new(vec![b], measure)?,
                    None => LevyTriplet::pure_jump(measure)?,
                };
                SdeModel::linear_jump(
                    need(&self.mu, "mu", &why("mu"))?,
                    need(&self.sigma, "sigma", &why("sigma"))?,
                    need(&self.eta, "eta", &why("eta"))?,
                    triplet,
                )?
            }
            ModelName::Trig => {
                for (v, k) in [
                    (&self.mu, "mu"),
                    (&self.sigma, "sigma"),
                    (&self.eta, "eta"),
                    (&self.levy_drift, "levy_drift"),
                ] {
                    unused(v, k, name)?;
                }
                unused(&self.measure, "measure", name)?;
                let [a, b, c] = need(&self.drift_trig, "drift_trig", &why("drift_trig = [a, b, c]"))?;
                let diffusion = need(
                    &self.diffusion_trig,
                    "diffusion_trig",
                    &why("diffusion_trig = [[a, b, c], ...]"),
                )?
                .into_iter()
                .map(|[a, b, c]| VectorField::trig(a, b, c))
                .collect();
                SdeModel::diffusion_only(VectorField::trig(a, b, c), diffusion)?
            }
        };
        Ok(model)
    }

    fn no_trig(&self, name: ModelName) -> Result<()> {
        unused(&self.drift_trig, "drift_trig", name)?;
        unused(&self.diffusion_trig, "diffusion_trig", name)
    }

    /// Scheme configuration for `kind`; `jump_approx` is required only when the
    /// model has jumps and defaults to keeping every compound Poisson jump.
    pub fn scheme_config(&self, kind: SchemeKind, model: &SdeModel) -> Result<SchemeConfig> {
        let jumps = match &self.jump_approx {
            Some(j) => j.clone(),
            None if model.has_jumps() && model.triplet().measure.infinite_activity() => {
                bail!("missing required key `jump_approx` (the measure has infinite activity)")
            }
            None => JumpApprox::CpTruncate { max_jumps: None },
        };
        Ok(SchemeConfig {
            scheme: kind,
            flow: self.flow.unwrap_or(FlowChoice::Exact),
            noise: self.noise.unwrap_or_default(),
            jumps,
        })
    }

    pub fn build_scheme(&self, kind: SchemeKind, model: &SdeModel) -> Result<Scheme> {
        let cfg = self.scheme_config(kind, model)?;
        Scheme::new(cfg, model.clone()).with_context(|| format!("scheme {}", kind.name()))
    }

    pub fn test_functions(&self) -> Result<Vec<TestFunction>> {
        let list = need(&self.test_functions, "test_functions", "e.g. [\"x\", \"x^2\"]")?;
        if list.is_empty() {
            bail!("`test_functions` is empty");
        }
        list.iter().map(|s| parse_test_function(s)).collect()
    }

    pub fn n_list(&self) -> Result<Vec<usize>> {
        let n = need(&self.n_list, "n_list", "step counts, e.g. [4, 8, 16]")?;
        if n.len() < 3 || n[0] == 0 || n.windows(2).any(|w| w[1] <= w[0]) {
            bail!("`n_list` = {n:?} must hold at least 3 positive, strictly increasing step counts");
        }
        Ok(n)
    }

    pub fn t_end(&self) -> Result<f64> {
        let t = need(&self.t_end, "t_end", "the horizon T")?;
        if !(t > 0.0 && t.is_finite()) {
            bail!("`t_end` = {t} must be positive and finite");
        }
        Ok(t)
    }

    pub fn x0(&self) -> Result<f64> {
        let x = need(&self.x0, "x0", "the initial point")?;
        if !x.is_finite() {
            bail!("`x0` must be finite");
        }
        Ok(x)
    }

    pub fn paths(&self) -> Result<usize> {
        let p = need(&self.paths, "paths", "Monte Carlo sample size")?;
        if p < 100 {
            bail!("`paths` = {p} is below the minimum of 100");
        }
        Ok(p)
    }

    pub fn eps_list(&self) -> Result<Vec<f64>> {
        let eps = self.eps_list.clone().unwrap_or_else(|| vec![1e-1, 1e-2, 1e-3]);
        if eps.len() < 2 {
            bail!("`eps_list` needs at least 2 cutoffs");
        }
        if let Some(e) = eps.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
            bail!("`eps_list` entry {e} outside (0, 1]");
        }
        Ok(eps)
    }
}

/// Parses `1`, `x`, `x^p` or a polynomial such as `2*x^3 - x + 0.5`.
pub fn parse_test_function(src: &str) -> Result<TestFunction> {
    let compact: String = src.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        bail!("empty test function");
    }
    let bad = |msg: &str| anyhow!("test function \"{src}\": {msg}");
    let mut terms = Vec::new();
    let mut start = 0;
    let bytes = compact.as_bytes();
    for i in 1..bytes.len() {
        let c = bytes[i];
        let prev = bytes[i - 1];
        // A sign after an exponent marker belongs to the number.
        if (c == b'+' || c == b'-') && !matches!(prev, b'e' | b'E' | b'^' | b'*') {
            terms.push(&compact[start..i]);
            start = i;
        }
    }
    terms.push(&compact[start..]);
    let mut coeffs: Vec<f64> = Vec::new();
    for term in terms {
        let (sign, body) = match term.as_bytes()[0] {
            b'-' => (-1.0, &term[1..]),
            b'+' => (1.0, &term[1..]),
            _ => (1.0, term),
        };
        let (coef, power) = match body.find('x') {
            None => (
                body.parse::<f64>()
                    .map_err(|_| bad(&format!("bad constant '{body}'")))?,
                0,
            ),
            Some(at) => {
                let head = body[..at].strip_suffix('*').unwrap_or(&body[..at]);
                let coef = if head.is_empty() {
                    1.0
                } else {
                    head.parse::<f64>()
                        .map_err(|_| bad(&format!("bad coefficient '{head}'")))?
                };
                let tail = &body[at + 1..];
                let power = if tail.is_empty() {
                    1
                } else {
                    tail.strip_prefix('^')
                        .and_then(|p| p.parse::<usize>().ok())
                        .ok_or_else(|| bad(&format!("bad power '{tail}'")))?
                };
                (coef, power)
            }
        };
        if coeffs.len() <= power {
            coeffs.resize(power + 1, 0.0);
        }
        coeffs[power] += sign * coef;
    }
    Ok(TestFunction::polynomial(compact, Polynomial::new(coeffs)))
}

/// File-name-safe form of a label.
pub fn sanitize(label: &str) -> String {
    let s: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' })
        .collect();
    s.trim_matches('_').to_string()
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::MonteCarlo => "monte_carlo",
            Method::Propagation => "propagation",
        })
    }
}
