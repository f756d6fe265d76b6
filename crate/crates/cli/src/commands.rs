use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};

use weaksplit::algebra::{order_of, OrderReport, SchemeExpr};
use weaksplit::jumps::{per_step_defect, JumpCoefficient, MAX_DEFECT_DEGREE};
use weaksplit::levy::CutoffMode;
use weaksplit::montecarlo::{
    estimate_against, propagation_report, reference_value, write_csv, write_plot_script, EstimateOptions, FineGridSpec,
    OrderFit, Reference, TestFunction, WeakErrorReport,
};
use weaksplit::schemes::{build_scheme_expr, FlowChoice, Scheme, SchemeKind, SdeModel};
use weaksplit::Error;

use crate::config::{sanitize, Config, Method, ModelName};

/// Flags shared by every subcommand.
#[derive(Clone, Debug, Default)]
pub struct Globals {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub dry_run: bool,
}

fn describe(r: &OrderReport) -> String {
    match r.first_defect() {
        Some(d) => {
            let more = match r.defects.len() {
                1 => String::new(),
                k => format!(" (+{} more)", k - 1),
            };
            format!(
                "order {}, defect at degree {}: word {} scheme {} vs target {}{more}",
                r.order, d.degree, d.word, d.scheme, d.target
            )
        }
        None => format!("order >= {0} (matches through degree {0})", r.max_order),
    }
}

pub fn verify_algebra(schemes: &[String], exprs: &[String], d: usize, max_order: usize) -> Result<ExitCode> {
    let mut failed = Vec::new();
    for name in schemes {
        let kind = SchemeKind::from_name(name)?;
        if kind == SchemeKind::EulerMaruyama {
            println!("{name}: not a product of coordinate exponentials, skipped");
            continue;
        }
        let expr = build_scheme_expr(kind, d)?;
        let r = order_of(&expr, d, max_order)?;
        let want = kind.formal_order().min(max_order);
        let verdict = if r.order < want {
            failed.push(name.clone());
            format!("  FAIL: documented order {}", kind.formal_order())
        } else {
            String::new()
        };
        println!("{name}: {}{verdict}", describe(&r));
    }
    for (i, src) in exprs.iter().enumerate() {
        let expr = SchemeExpr::parse(src).map_err(|e| match e {
            Error::Parse { pos, msg } => {
                anyhow::anyhow!(
                    "expression {}: parse error at byte {pos}: {msg}\n  {src}\n  {:>w$}",
                    i + 1,
                    "^",
                    w = pos + 1
                )
            }
            e => e.into(),
        })?;
        let r = order_of(&expr, d, max_order)?;
        println!("expr {}: {}", i + 1, describe(&r));
    }
    if failed.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("below documented order: {}", failed.join(", "));
        Ok(ExitCode::FAILURE)
    }
}

enum RefPlan {
    Known(Reference),
    FineGrid(FineGridSpec),
}

/// A fully validated `run` or `convergence` experiment.
struct Experiment {
    model_name: ModelName,
    model: SdeModel,
    schemes: Vec<Scheme>,
    functions: Vec<TestFunction>,
    references: Vec<RefPlan>,
    t_end: f64,
    x0: f64,
    n_list: Vec<usize>,
    paths: usize,
    seed: u64,
    method: Method,
    out_dir: PathBuf,
}

fn out_dir(cfg: &Config, g: &Globals) -> PathBuf {
    g.out_dir
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn seed(cfg: &Config, g: &Globals) -> u64 {
    g.seed.or(cfg.seed).unwrap_or(0)
}

impl Experiment {
    fn resolve(cfg: &Config, kinds: Vec<SchemeKind>, g: &Globals) -> Result<Self> {
        let model_name = cfg.model_name()?;
        let model = cfg.build_model()?;
        let schemes = kinds
            .iter()
            .map(|&k| cfg.build_scheme(k, &model))
            .collect::<Result<Vec<_>>>()?;
        let functions = cfg.test_functions()?;
        let t_end = cfg.t_end()?;
        let x0 = cfg.x0()?;
        let n_list = cfg.n_list()?;
        let method = cfg.method.unwrap_or_default();
        let seed = seed(cfg, g);
        let paths = match method {
            Method::MonteCarlo => cfg.paths()?,
            Method::Propagation => 0,
        };
        for f in &functions {
            f.spot_check(model.dim())?;
        }
        if method == Method::Propagation {
            if cfg.fine_grid == Some(true) {
                bail!("`fine_grid` cannot be combined with method = \"propagation\"");
            }
            if model.linear_coefficients().is_none() {
                bail!("method = \"propagation\" needs a linear model (gbm or linear_jump)");
            }
            if let Some(f) = functions.iter().find(|f| f.degree() as usize > MAX_DEFECT_DEGREE) {
                bail!(
                    "method = \"propagation\" supports degree <= {MAX_DEFECT_DEGREE}; {} has degree {}",
                    f.name(),
                    f.degree()
                );
            }
            for s in &schemes {
                let plan = s.plan(t_end / n_list[0] as f64)?;
                s.linear_step_moment(&plan, 0, 1).with_context(|| {
                    format!(
                        "method = \"propagation\" is unavailable for scheme {}",
                        s.config().scheme.name()
                    )
                })?;
            }
        }
        let mut references = Vec::new();
        for f in &functions {
            match reference_value(&model, f, t_end, &[x0], None) {
                Ok(r) => references.push(RefPlan::Known(r)),
                Err(Error::ReferenceUnavailable(_)) if cfg.fine_grid == Some(true) => {
                    let jumps = schemes[0].config().jumps.clone();
                    let spec = FineGridSpec::default_for(&n_list, paths, seed, jumps);
                    let mut c = cfg.scheme_config(SchemeKind::EulerMaruyama, &model)?;
                    c.flow = FlowChoice::Rk { order: 1 };
                    Scheme::new(c, model.clone())
                        .and_then(|s| s.plan(t_end / spec.n_ref as f64))
                        .context("fine-grid reference (Euler–Maruyama with the configured jump_approx)")?;
                    references.push(RefPlan::FineGrid(spec));
                }
                Err(Error::ReferenceUnavailable(_)) => bail!(
                    "no closed-form reference for f = {} on model = \"{}\"; set `fine_grid = true` to use a fine-grid Monte Carlo reference",
                    f.name(),
                    model_name.name()
                ),
                Err(e) => return Err(e.into()),
            }
        }
        Ok(Experiment {
            model_name,
            model,
            schemes,
            functions,
            references,
            t_end,
            x0,
            n_list,
            paths,
            seed,
            method,
            out_dir: out_dir(cfg, g),
        })
    }

    fn print_plan(&self) {
        println!("plan (dry run, nothing computed)");
        println!(
            "  model: {} (dimension {}, {} Brownian, jumps: {})",
            self.model_name.name(),
            self.model.dim(),
            self.model.brownian_dim(),
            if self.model.has_jumps() { "yes" } else { "no" }
        );
        for s in &self.schemes {
            let c = s.config();
            println!(
                "  scheme: {} flow={:?} noise={:?} jumps={:?}",
                c.scheme.name(),
                c.flow,
                c.noise,
                c.jumps
            );
        }
        for (f, r) in self.functions.iter().zip(&self.references) {
            match r {
                RefPlan::Known(r) => println!("  f = {}: reference {} ({})", f.name(), r.value, r.provenance),
                RefPlan::FineGrid(s) => {
                    println!(
                        "  f = {}: reference fine_grid(n_ref={}, paths={})",
                        f.name(),
                        s.n_ref,
                        s.paths
                    )
                }
            }
        }
        println!("  t_end = {}, x0 = {}, n_list = {:?}", self.t_end, self.x0, self.n_list);
        match self.method {
            Method::MonteCarlo => println!("  method = monte_carlo, paths = {}, seed = {}", self.paths, self.seed),
            Method::Propagation => println!("  method = propagation"),
        }
        println!("  out_dir = {}", self.out_dir.display());
    }

    fn reference(&self, i: usize) -> Result<Reference> {
        Ok(match &self.references[i] {
            RefPlan::Known(r) => r.clone(),
            RefPlan::FineGrid(spec) => {
                reference_value(&self.model, &self.functions[i], self.t_end, &[self.x0], Some(spec))?
            }
        })
    }

    fn report(&self, s: &Scheme, f: &TestFunction, reference: &Reference) -> Result<WeakErrorReport> {
        Ok(match self.method {
            Method::MonteCarlo => estimate_against(
                s,
                f,
                self.t_end,
                &[self.x0],
                &self.n_list,
                self.paths,
                self.seed,
                &EstimateOptions::default(),
                reference.clone(),
            )?,
            Method::Propagation => propagation_report(s, f, self.t_end, self.x0, &self.n_list)?,
        })
    }
}

fn fit_text(fit: &OrderFit) -> String {
    match fit {
        OrderFit::Fitted {
            slope,
            half_width,
            used,
            ..
        } => {
            format!("{slope:.3} ± {half_width:.3} ({} points)", used.len())
        }
        OrderFit::Indeterminate { reason } => format!("indeterminate: {reason}"),
    }
}

fn write_outputs(reports: &[WeakErrorReport], dir: &Path, stem: &str) -> Result<()> {
    let csv = dir.join(format!("{stem}.csv"));
    let gp = dir.join(format!("{stem}.gp"));
    write_csv(reports, &csv)?;
    write_plot_script(reports, &format!("{stem}.csv"), &gp)?;
    println!("  wrote {} and {}", csv.display(), gp.display());
    Ok(())
}

pub fn run(path: &Path, g: &Globals) -> Result<ExitCode> {
    let cfg = Config::load(path)?;
    let kind = cfg
        .scheme
        .ok_or_else(|| anyhow::anyhow!("missing required key `scheme` (the scheme to run)"))?;
    let exp = Experiment::resolve(&cfg, vec![kind], g)?;
    if g.dry_run {
        exp.print_plan();
        return Ok(ExitCode::SUCCESS);
    }
    fs::create_dir_all(&exp.out_dir).with_context(|| format!("creating {}", exp.out_dir.display()))?;
    let s = &exp.schemes[0];
    for (i, f) in exp.functions.iter().enumerate() {
        let reference = exp.reference(i)?;
        let r = exp.report(s, f, &reference)?;
        println!(
            "{} f = {}: reference {} ({})",
            r.scheme,
            f.name(),
            reference.value,
            reference.provenance
        );
        println!("  {:>6} {:>22} {:>12} {:>12}", "n", "estimate", "stderr", "error");
        for row in &r.rows {
            println!(
                "  {:>6} {:>22.15} {:>12.3e} {:>12.3e}",
                row.n, row.estimate, row.stderr, row.error
            );
        }
        println!("  fitted order {}", fit_text(&r.fit));
        write_outputs(
            std::slice::from_ref(&r),
            &exp.out_dir,
            &sanitize(&format!("{}_{}", r.scheme, f.name())),
        )?;
    }
    Ok(ExitCode::SUCCESS)
}

pub fn convergence(path: &Path, g: &Globals) -> Result<ExitCode> {
    let cfg = Config::load(path)?;
    let kinds = cfg
        .schemes
        .clone()
        .ok_or_else(|| anyhow::anyhow!("missing required key `schemes` (the schemes to compare)"))?;
    if kinds.is_empty() {
        bail!("`schemes` is empty");
    }
    let exp = Experiment::resolve(&cfg, kinds, g)?;
    if g.dry_run {
        exp.print_plan();
        return Ok(ExitCode::SUCCESS);
    }
    fs::create_dir_all(&exp.out_dir).with_context(|| format!("creating {}", exp.out_dir.display()))?;
    for (i, f) in exp.functions.iter().enumerate() {
        let reference = exp.reference(i)?;
        let reports = exp
            .schemes
            .iter()
            .map(|s| exp.report(s, f, &reference))
            .collect::<Result<Vec<_>>>()?;
        println!(
            "f = {}: reference {} ({})",
            f.name(),
            reference.value,
            reference.provenance
        );
        let mut head = format!("  {:>6}", "n");
        for r in &reports {
            head.push_str(&format!(" {:>22}", r.scheme));
        }
        println!("{head}");
        for (k, n) in exp.n_list.iter().enumerate() {
            let mut line = format!("  {n:>6}");
            for r in &reports {
                line.push_str(&format!(" {:>22.3e}", r.rows[k].error));
            }
            println!("{line}");
        }
        let mut line = format!("  {:>6}", "order");
        for r in &reports {
            let cell = match &r.fit {
                OrderFit::Fitted { slope, half_width, .. } => format!("{slope:.2} ± {half_width:.2}"),
                OrderFit::Indeterminate { .. } => "n/a".to_string(),
            };
            line.push_str(&format!(" {cell:>22}"));
        }
        println!("{line}");
        write_outputs(&reports, &exp.out_dir, &sanitize(&format!("convergence_{}", f.name())))?;
    }
    Ok(ExitCode::SUCCESS)
}

/// Least-squares slope of `log|d|` against `log eps` over nonzero defects.
fn eps_exponent(eps: &[f64], d: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = eps
        .iter()
        .zip(d)
        .filter(|(_, v)| **v != 0.0)
        .map(|(e, v)| (e.ln(), v.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

pub fn defect_scan(path: &Path, g: &Globals) -> Result<ExitCode> {
    let cfg = Config::load(path)?;
    let name = cfg.model_name()?;
    if name != ModelName::LinearJump {
        bail!(
            "unsupported model shape: defect-scan needs a one-dimensional jump model (model = \"linear_jump\"), got \"{}\"",
            name.name()
        );
    }
    let model = cfg.build_model()?;
    let eta = cfg.eta.unwrap_or(0.0);
    let h = JumpCoefficient::affine_1d(eta, 0.0);
    let x = cfg.x0()?;
    let eps = cfg.eps_list()?;
    let functions = cfg.test_functions()?;
    let mut polys = Vec::new();
    for f in &functions {
        let p = f.as_polynomial().expect("config test functions are polynomials");
        if p.degree() > MAX_DEFECT_DEGREE {
            bail!(
                "unsupported function: {} has degree {}, defect-scan supports degree <= {MAX_DEFECT_DEGREE}",
                f.name(),
                p.degree()
            );
        }
        polys.push(p.clone());
    }
    let dir = out_dir(&cfg, g);
    if g.dry_run {
        println!("plan (dry run, nothing computed)");
        println!("  model: linear_jump with h(x) = {eta} x, evaluated at x = {x}");
        println!("  measure: {:?}", model.triplet().measure);
        println!("  eps = {eps:?}");
        for f in &functions {
            println!("  f = {}", f.name());
        }
        println!("  out_dir = {}", dir.display());
        return Ok(ExitCode::SUCCESS);
    }
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let measure = &model.triplet().measure;
    for (f, p) in functions.iter().zip(&polys) {
        let mut ignore = Vec::new();
        let mut ar = Vec::new();
        for &e in &eps {
            ignore.push(per_step_defect(measure, &h, p, x, e, CutoffMode::Ignore)?);
            ar.push(per_step_defect(measure, &h, p, x, e, CutoffMode::Ar)?);
        }
        println!("f = {}: generator defects at x = {x}", f.name());
        println!("  {:>10} {:>14} {:>14}", "eps", "ignore", "ar");
        let mut text = String::from("eps,ignore,ar\n");
        for k in 0..eps.len() {
            println!("  {:>10.3e} {:>14.6e} {:>14.6e}", eps[k], ignore[k], ar[k]);
            text.push_str(&format!("{},{},{}\n", eps[k], ignore[k], ar[k]));
        }
        let show = |v: Option<f64>| v.map_or("n/a".to_string(), |k| format!("{k:.3}"));
        println!(
            "  eps-exponent: ignore {}, ar {}",
            show(eps_exponent(&eps, &ignore)),
            show(eps_exponent(&eps, &ar))
        );
        let file = dir.join(format!("{}.csv", sanitize(&format!("defect_scan_{}", f.name()))));
        fs::write(&file, text).with_context(|| format!("writing {}", file.display()))?;
        println!("  wrote {}", file.display());
    }
    Ok(ExitCode::SUCCESS)
}
