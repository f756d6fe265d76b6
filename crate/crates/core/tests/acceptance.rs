//! Acceptance suite. Each criterion runs under 1, 4 and 16 worker threads; the
//! first run is reported and the digests of all three must agree bitwise.
//!
//! Run with `cargo test -p weaksplit --test acceptance --release`; one line per
//! criterion is written straight to stderr so it survives output capture.

use std::io::Write;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use statrs::function::gamma::{gamma, gamma_lr};

use weaksplit::algebra::{matrix_oracle_check, order_of, symbolic_matches, SchemeExpr};
use weaksplit::flows::{rk_flow, ButcherTableau, NoiseKind, VectorField, THREE_POINT_ATOMS};
use weaksplit::jumps::JumpCoefficient;
use weaksplit::jumps::{
    per_step_defect, solve_bernoulli, solve_two_jump_exact, ArInner, BernoulliMode, JumpApprox, JumpProbabilities,
};
use weaksplit::levy::{
    CompoundPoisson, CutoffMode, EpsRule, JumpDist, LevyMeasure, LevyTriplet, Localization, Measure1d, TemperedStable,
};
use weaksplit::montecarlo::{
    deterministic_linear_propagation, estimate, estimate_mean, propagation_report, with_threads, EstimateOptions,
    MeanEstimate, TestFunction,
};
use weaksplit::poly::Polynomial;
use weaksplit::rng::seeded;
use weaksplit::schemes::{FlowChoice, Scheme, SchemeConfig, SchemeKind, SdeModel};

struct Outcome {
    pass: bool,
    detail: String,
    /// Bit patterns of every number the verdict depends on.
    digest: Vec<u64>,
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

fn say(line: &str) {
    let mut e = std::io::stderr().lock();
    let _ = writeln!(e, "{line}");
}

fn scheme(kind: SchemeKind, flow: FlowChoice, noise: NoiseKind, jumps: JumpApprox, model: SdeModel) -> Scheme {
    Scheme::new(
        SchemeConfig {
            scheme: kind,
            flow,
            noise,
            jumps,
        },
        model,
    )
    .unwrap()
}

fn no_jumps() -> JumpApprox {
    JumpApprox::CpTruncate { max_jumps: None }
}

// Symbolic order of the three second-order schemes and the forward product.
fn c1() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    let mut digest = Vec::new();
    for d in 1..=3 {
        for (name, e) in [
            ("nv_a", SchemeExpr::nv_a(d)),
            ("nv_b", SchemeExpr::nv_b(d)),
            ("splitting", SchemeExpr::splitting(d)),
        ] {
            let t0 = Instant::now();
            let r = order_of(&e, d, 3).unwrap();
            let dt = t0.elapsed();
            ok &= r.order == 2 && dt < Duration::from_secs(1);
            digest.push(r.order as u64);
            if r.order != 2 || dt >= Duration::from_secs(1) {
                notes.push(format!("{name} d={d}: order {} in {dt:?}", r.order));
            }
        }
        let r = order_of(&SchemeExpr::forward_product(d), d, 3).unwrap();
        let first = r.first_defect().unwrap();
        ok &= r.order == 1 && first.degree == 2;
        digest.extend([r.order as u64, first.degree as u64]);
        if d == 1 {
            notes.push(format!(
                "forward d=1: order {}, degree-2 defect at {} ({} vs {})",
                r.order, first.word, first.scheme, first.target
            ));
        }
    }
    Outcome {
        pass: ok,
        detail: notes.join("; "),
        digest,
    }
}

// Global Ninomiya–Victoir average, the fourth-order combination and the matrix oracle.
fn c2() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    let mut digest = Vec::new();
    // The half/half average of the two orderings (one-step form of the global average).
    let mixture =
        SchemeExpr::parse("1/2*exp(1/2,0) exp(1,1) exp(1,2) exp(1/2,0) + 1/2*exp(1/2,0) exp(1,2) exp(1,1) exp(1/2,0)")
            .unwrap();
    let r = order_of(&mixture, 1, 3).unwrap();
    ok &= r.order == 2 && mixture == SchemeExpr::nv_a(1);
    digest.push(r.order as u64);
    notes.push(format!("mixture order {}", r.order));
    for d in 0..=1 {
        let r = order_of(&SchemeExpr::fujiwara4(d), d, 5).unwrap();
        ok &= r.order >= 3;
        digest.push(r.order as u64);
        let deg4 = if r.order >= 4 { "match" } else { "differ" };
        let next = r
            .first_defect()
            .map(|f| format!(", first defect degree {} word {}", f.degree, f.word))
            .unwrap_or_default();
        notes.push(format!(
            "fujiwara4 d={d}: order {} (degree-4 coefficients {deg4}{next})",
            r.order
        ));
    }
    let mut rng = seeded(2024, 2);
    let mut agree = 0;
    let mut total = 0;
    for d in 1..=2 {
        let builtins = [
            SchemeExpr::nv_a(d),
            SchemeExpr::nv_b(d),
            SchemeExpr::splitting(d),
            SchemeExpr::forward_product(d),
            SchemeExpr::fujiwara4(d),
        ];
        for e in &builtins {
            let top = if d == 1 { 5 } else { 4 };
            for m in 1..=top {
                let sym = symbolic_matches(e, d, m).unwrap();
                let mat = matrix_oracle_check(e, d, m, 3, &mut rng);
                total += 1;
                if sym == mat {
                    agree += 1;
                }
                digest.push(sym as u64);
            }
        }
    }
    ok &= agree == total;
    notes.push(format!("matrix oracle agrees on {agree}/{total}"));
    Outcome {
        pass: ok,
        detail: notes.join("; "),
        digest,
    }
}

// Diffusion weak order with RK5 flows and three-point noise, no sampling.
fn c3() -> Outcome {
    let s = scheme(
        SchemeKind::NvB,
        FlowChoice::Rk { order: 5 },
        NoiseKind::ThreePoint,
        no_jumps(),
        SdeModel::gbm(0.05, 0.2).unwrap(),
    );
    let ns = [2, 4, 8, 16, 32];
    let mut ok = true;
    let mut notes = Vec::new();
    let mut digest = Vec::new();
    for p in 1..=3 {
        let r = propagation_report(&s, &TestFunction::monomial(p), 1.0, 1.0, &ns).unwrap();
        let slope = r.fit.slope().unwrap_or(f64::NAN);
        ok &= slope >= 1.8;
        notes.push(format!("x^{p}: slope {slope:.3}"));
        digest.extend(bits(&r.rows.iter().map(|r| r.estimate).collect::<Vec<_>>()));
    }
    // Independent per-step mean for f = x. On x' = k x one RK5 step multiplies by
    // R(k h), a degree-6 polynomial agreeing with exp to order 5; the three
    // atoms are enumerated directly.
    let (mu, sig, n) = (0.05f64, 0.2f64, 8);
    let t = 1.0 / n as f64;
    let tab = ButcherTableau::of_order(5).unwrap();
    let unit = VectorField::affine_1d(1.0, 0.0);
    let r = |h: f64| rk_flow(&tab, &unit, h, &[1.0]).unwrap()[0];
    let taylor = |h: f64| {
        (0..=5)
            .map(|k| h.powi(k) / (1..=k).product::<i32>().max(1) as f64)
            .sum::<f64>()
    };
    for h in [0.05, -0.1, 0.2] {
        ok &= (r(h) - taylor(h)).abs() <= h.powi(6);
    }
    let drift = r((mu - 0.5 * sig * sig) * t);
    let z = 3f64.sqrt();
    let diffusion = r(sig * t.sqrt() * z) / 6.0 + 2.0 / 3.0 + r(-sig * t.sqrt() * z) / 6.0;
    let oracle = (drift * diffusion).powi(n);
    let got = deterministic_linear_propagation(&s, &Polynomial::monomial(1), 1.0, 1.0, n as usize).unwrap();
    ok &= (got - oracle).abs() < 1e-13;
    notes.push(format!("oracle gap {:.1e}", (got - oracle).abs()));
    Outcome {
        pass: ok,
        detail: notes.join("; "),
        digest,
    }
}

fn linear_cp_model() -> SdeModel {
    let nu = LevyMeasure::one_d(Measure1d::CompoundPoisson(CompoundPoisson::atom(1.0, 0.1)));
    SdeModel::linear_jump(0.0, 0.0, 1.0, LevyTriplet::pure_jump(nu).unwrap()).unwrap()
}

// Compound Poisson truncation order M.
fn c4() -> Outcome {
    let ns = [2, 4, 8, 16, 32];
    let mut ok = true;
    let mut notes = Vec::new();
    let mut digest = Vec::new();
    for m in 1..=3usize {
        let s = scheme(
            SchemeKind::NvB,
            FlowChoice::Exact,
            NoiseKind::Gaussian,
            JumpApprox::CpTruncate { max_jumps: Some(m) },
            linear_cp_model(),
        );
        let r = propagation_report(&s, &TestFunction::monomial(1), 1.0, 1.0, &ns).unwrap();
        let slope = r.fit.slope().unwrap_or(f64::NAN);
        ok &= slope >= m as f64 - 0.2;
        notes.push(format!("M={m}: slope {slope:.3}"));
        digest.extend(bits(&r.rows.iter().map(|r| r.estimate).collect::<Vec<_>>()));
        if m == 1 {
            // Independent enumeration: no jump with probability e^{-t}, else one jump of 0.1.
            for &n in &ns {
                let t = 1.0 / n as f64;
                let step = (-t).exp() + 1.1 * (1.0 - (-t).exp());
                let row = r.rows.iter().find(|r| r.n == n).unwrap();
                ok &= (row.estimate - step.powi(n as i32)).abs() < 1e-13;
            }
        }
    }
    Outcome {
        pass: ok,
        detail: notes.join("; "),
        digest,
    }
}

fn one_sided_ts() -> LevyMeasure {
    LevyMeasure::one_d(Measure1d::TemperedStable(TemperedStable {
        alpha: 0.5,
        c_plus: 1.0,
        c_minus: 0.0,
        lambda_plus: 1.0,
        lambda_minus: 0.0,
        y_max: None,
    }))
}

fn log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.abs().ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

// Generator defects: eps-exponent 2 - alpha without, 3 - alpha with the Gaussian correction.
fn c5() -> Outcome {
    let nu = one_sided_ts();
    let h = JumpCoefficient::affine_1d(1.0, 0.0);
    let eps = [1e-1, 1e-2, 1e-3];
    let x = 1.0;
    let mut ok = true;
    let mut notes = Vec::new();
    let mut digest = Vec::new();
    for p in [3usize, 4] {
        let f = Polynomial::monomial(p);
        for (mode, want) in [(CutoffMode::Ignore, 1.5), (CutoffMode::Ar, 2.5)] {
            let ds: Vec<f64> = eps
                .iter()
                .map(|&e| per_step_defect(&nu, &h, &f, x, e, mode).unwrap())
                .collect();
            let k = log_slope(&eps, &ds);
            ok &= ((k - want) / want).abs() <= 0.10;
            notes.push(format!("x^{p} {mode:?}: {k:.3}"));
            digest.extend(bits(&ds));
        }
        // Independent values: int_0^eps y^j y^{-3/2} e^{-y} dy = gamma(j - 1/2) P(j - 1/2, eps).
        let moment = |j: i32, e: f64| gamma(j as f64 - 0.5) * gamma_lr(j as f64 - 0.5, e);
        let pf = p as f64;
        for &e in &eps {
            let ign = per_step_defect(&nu, &h, &f, x, e, CutoffMode::Ignore).unwrap();
            let want: f64 = (2..=p as i32)
                .map(|j| {
                    let c = (0..j).map(|i| pf - i as f64).product::<f64>() / (1..=j).product::<i32>() as f64;
                    c * moment(j, e)
                })
                .sum();
            ok &= (ign - want).abs() <= 1e-9 * want.abs();
        }
    }
    Outcome {
        pass: ok,
        detail: notes.join("; "),
        digest,
    }
}

fn vg_model() -> SdeModel {
    let vg = LevyMeasure::one_d(Measure1d::TemperedStable(TemperedStable::symmetric(0.0, 1.0, 1.0)));
    SdeModel::linear_jump(0.0, 0.0, 1.0, LevyTriplet::new(vec![1.0], vg).unwrap()).unwrap()
}

fn one_jump_scheme() -> Scheme {
    scheme(
        SchemeKind::OneJumpFirstOrder,
        FlowChoice::Rk { order: 1 },
        NoiseKind::Gaussian,
        JumpApprox::Decomposed {
            mode: BernoulliMode::OneJump,
            eps: EpsRule::Power(1.0 / 3.0),
            localization: Localization::Power(2.0),
            tail_localization: Localization::One,
        },
        vg_model(),
    )
}

// First-order one-jump scheme on a variance-gamma-type driver, by Monte Carlo.
fn c6() -> Outcome {
    let s = one_jump_scheme();
    let ns = [4, 8, 16, 32];
    let f = TestFunction::monomial(1);
    let r = estimate(
        &s,
        &f,
        1.0,
        &[1.0],
        &ns,
        1_000_000,
        20_060_301,
        &EstimateOptions::default(),
    )
    .unwrap();
    let slope = r.fit.slope().unwrap_or(f64::NAN);
    let mut ok = (slope - 1.0).abs() <= 0.3;
    // Noise-free cross-check of the same scheme: within 4 standard errors at each n.
    let mut worst: f64 = 0.0;
    for row in &r.rows {
        let exact = deterministic_linear_propagation(&s, &Polynomial::monomial(1), 1.0, 1.0, row.n).unwrap();
        worst = worst.max((row.estimate - exact).abs() / row.stderr);
    }
    ok &= worst < 4.0;
    ok &= (r.reference.value - std::f64::consts::E).abs() < 1e-12;
    let mut digest = bits(&r.rows.iter().flat_map(|r| [r.estimate, r.stderr]).collect::<Vec<_>>());
    digest.push(slope.to_bits());
    Outcome {
        pass: ok,
        detail: format!(
            "slope {slope:.3} +- {:.3}; errors {:?}; max |MC - propagation| {worst:.2} se",
            r.fit.half_width().unwrap_or(f64::NAN),
            r.rows.iter().map(|r| format!("{:.4}", r.error)).collect::<Vec<_>>()
        ),
        digest,
    }
}

fn stability_cases() -> Vec<(String, Scheme)> {
    let normal = LevyMeasure::one_d(Measure1d::CompoundPoisson(CompoundPoisson {
        intensity: 2.0,
        jump_dist: JumpDist::Normal { mean: 0.0, std: 0.3 },
    }));
    let cp = SdeModel::linear_jump(0.05, 0.2, 0.5, LevyTriplet::pure_jump(normal).unwrap()).unwrap();
    let ts = LevyMeasure::one_d(Measure1d::TemperedStable(TemperedStable::symmetric(0.5, 1.0, 2.0)));
    let tsm = SdeModel::linear_jump(0.05, 0.2, 0.5, LevyTriplet::new(vec![0.0], ts).unwrap()).unwrap();
    let mut out = Vec::new();
    for kind in [
        SchemeKind::EulerMaruyama,
        SchemeKind::NvA,
        SchemeKind::NvB,
        SchemeKind::Splitting,
        SchemeKind::NvExtrapolated,
        SchemeKind::Fujiwara4,
    ] {
        let flow = if kind == SchemeKind::EulerMaruyama {
            FlowChoice::Rk { order: 1 }
        } else {
            FlowChoice::Exact
        };
        out.push((
            format!("{}/cp", kind.name()),
            scheme(kind, flow, NoiseKind::Gaussian, no_jumps(), cp.clone()),
        ));
    }
    let decomposed = |mode, eps| JumpApprox::Decomposed {
        mode,
        eps,
        localization: Localization::Power(2.0),
        tail_localization: Localization::One,
    };
    let ts_cases = [
        (
            "nv_b/ignore",
            SchemeKind::NvB,
            FlowChoice::Exact,
            JumpApprox::Ignore { eps: EpsRule::Order(2) },
        ),
        (
            "splitting/ar",
            SchemeKind::Splitting,
            FlowChoice::Rk { order: 5 },
            JumpApprox::Ar {
                eps: EpsRule::Order(2),
                inner: ArInner::default(),
            },
        ),
        (
            "nv_a/decomposed_one",
            SchemeKind::NvA,
            FlowChoice::Exact,
            decomposed(BernoulliMode::OneJump, EpsRule::Order(2)),
        ),
        (
            "nv_b/decomposed_two",
            SchemeKind::NvB,
            FlowChoice::Exact,
            decomposed(BernoulliMode::TwoJump, EpsRule::Fixed(0.5)),
        ),
        (
            "one_jump_first_order",
            SchemeKind::OneJumpFirstOrder,
            FlowChoice::Rk { order: 1 },
            decomposed(BernoulliMode::OneJump, EpsRule::Power(1.0 / 3.0)),
        ),
        (
            "euler_maruyama/ar",
            SchemeKind::EulerMaruyama,
            FlowChoice::Rk { order: 1 },
            JumpApprox::Ar {
                eps: EpsRule::Order(1),
                inner: ArInner::default(),
            },
        ),
    ];
    for (label, kind, flow, jumps) in ts_cases {
        out.push((
            format!("{label}/ts"),
            scheme(kind, flow, NoiseKind::Gaussian, jumps, tsm.clone()),
        ));
    }
    out
}

// Fourth moments stay under the (1 + K t)^n envelope fitted from one step.
fn c7() -> Outcome {
    let f = TestFunction::monomial(4);
    let opts = EstimateOptions {
        abort_limit: 1e-4,
        ..EstimateOptions::default()
    };
    let paths = 20_000;
    let mut ok = true;
    let mut notes = Vec::new();
    let mut digest = Vec::new();
    let mut aborted = 0;
    let mut total = 0;
    for (ci, (label, s)) in stability_cases().into_iter().enumerate() {
        let seed = 7_000 + ci as u64;
        let mut k_fit: f64 = 0.0;
        for &t in &[1.0 / 8.0, 1.0 / 64.0] {
            for &x in &[0.5f64, 1.0, 2.0] {
                let m: MeanEstimate = estimate_mean(&s, &f, t, &[x], 1, paths, seed, &opts).unwrap();
                aborted += m.aborted;
                total += paths * s.variants().len();
                let x4 = x.powi(4);
                k_fit = k_fit.max((m.mean + 3.0 * m.stderr - x4) / (t * (1.0 + x4)));
                digest.push(m.mean.to_bits());
            }
        }
        for n in [8usize, 64] {
            let t = 1.0 / n as f64;
            let m = estimate_mean(&s, &f, 1.0, &[1.0], n, paths, seed + 1_000, &opts).unwrap();
            aborted += m.aborted;
            total += paths * s.variants().len();
            let envelope = (1.0 + k_fit * t).powi(n as i32) * 2.0 - 1.0;
            let fine = m.mean.is_finite() && m.mean - 3.0 * m.stderr <= envelope;
            ok &= fine;
            digest.push(m.mean.to_bits());
            if !fine || n == 64 {
                notes.push(format!("{label}: K={k_fit:.2}, E[X^4]={:.3} <= {envelope:.3}", m.mean));
            }
        }
    }
    let rate = aborted as f64 / total as f64;
    ok &= rate < 1e-4;
    notes.insert(0, format!("aborted {aborted}/{total}"));
    digest.push(aborted as u64);
    Outcome {
        pass: ok,
        detail: notes.join("; "),
        digest,
    }
}

/// `a + b sqrt(3)` with rational parts.
#[derive(Clone, Debug, PartialEq)]
struct QSqrt3(BigRational, BigRational);

impl QSqrt3 {
    fn mul(&self, o: &QSqrt3) -> QSqrt3 {
        let three = BigRational::from_integer(BigInt::from(3));
        QSqrt3(&self.0 * &o.0 + three * &self.1 * &o.1, &self.0 * &o.1 + &self.1 * &o.0)
    }

    fn pow(&self, k: u32) -> QSqrt3 {
        (0..k).fold(QSqrt3(BigRational::one(), BigRational::zero()), |acc, _| acc.mul(self))
    }
}

// Exact moments of the three-point variable against the standard normal.
fn c8() -> Outcome {
    let r = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
    let atoms = [
        (QSqrt3(r(0, 1), r(-1, 1)), r(1, 6)),
        (QSqrt3(r(0, 1), r(0, 1)), r(2, 3)),
        (QSqrt3(r(0, 1), r(1, 1)), r(1, 6)),
    ];
    let gaussian = [r(1, 1), r(0, 1), r(1, 1), r(0, 1), r(3, 1), r(0, 1)];
    let mut ok = true;
    let mut digest = Vec::new();
    for (k, want) in gaussian.iter().enumerate() {
        let mut m = QSqrt3(r(0, 1), r(0, 1));
        for (z, w) in &atoms {
            let v = z.pow(k as u32);
            m = QSqrt3(&m.0 + &v.0 * w, &m.1 + &v.1 * w);
        }
        ok &= m.0 == *want && m.1.is_zero();
        digest.push((m.0 == *want) as u64);
    }
    // The floating atoms used for sampling agree with sqrt(3), 1/6, 2/3.
    ok &= (THREE_POINT_ATOMS[2].0 - 3f64.sqrt()).abs() < 1e-15 && THREE_POINT_ATOMS[1].1 == 2.0 / 3.0;
    // Sixth moment differs (5 vs 15): matching stops at five.
    let six: f64 = THREE_POINT_ATOMS.iter().map(|(z, w)| w * z.powi(6)).sum();
    Outcome {
        pass: ok,
        detail: format!("orders 0..=5 exact; E[Z^6] = {six:.1} vs 15"),
        digest,
    }
}

// Bernoulli parameter premises.
fn c9() -> Outcome {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    let mut digest = Vec::new();
    for &c in &[1e-3, 0.1, 1.0, 7.5, 100.0, 1e4] {
        for &t in &[1e-6, 1e-4, 1e-3, 1e-2, 0.1, 0.5, 1.0] {
            let JumpProbabilities::One { p } = solve_bernoulli(c, t, BernoulliMode::OneJump).unwrap() else {
                unreachable!()
            };
            let gap = (p / c - t).abs();
            let bound = c * t * t / 2.0;
            ok &= gap <= bound * (1.0 + 1e-9);
            worst = worst.max(gap / bound);
            digest.push(p.to_bits());
        }
    }
    let r = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
    let mut exact = 0;
    for (c, t) in [
        (r(1, 1), r(1, 10)),
        (r(7, 3), r(1, 5)),
        (r(100, 1), r(1, 1000)),
        (r(3, 7), r(2, 1)),
        (r(1, 2), r(1, 3)),
    ] {
        let (p1, p2) = solve_two_jump_exact(&c, &t).unwrap();
        let p = &p1 * (BigRational::one() + &p2);
        let q = &p1 * &p2;
        let zero_p = &p / &c - &t;
        let zero_q = r(2, 1) * &q / (&c * &c) - &t * &t;
        if zero_p.is_zero() && zero_q.is_zero() {
            exact += 1;
        }
    }
    ok &= exact == 5;
    Outcome {
        pass: ok,
        detail: format!("one-jump worst gap / (C t^2 / 2) = {worst:.6}; two-jump exact zero defect {exact}/5"),
        digest,
    }
}

type Criterion = fn() -> Outcome;

#[test]
fn acceptance() {
    let criteria: [(u8, &str, Criterion, Option<Duration>); 9] = [
        (1, "symbolic order of nv_a, nv_b, splitting; forward product", c1, None),
        (2, "extrapolated schemes and matrix oracle", c2, None),
        (
            3,
            "diffusion weak order 2 (GBM, RK5, three-point)",
            c3,
            Some(Duration::from_secs(10)),
        ),
        (
            4,
            "compound Poisson truncation order",
            c4,
            Some(Duration::from_secs(10)),
        ),
        (5, "generator-defect separation", c5, Some(Duration::from_secs(5))),
        (6, "first-order one-jump scheme", c6, Some(Duration::from_secs(600))),
        (7, "fourth-moment stability", c7, None),
        (8, "three-point noise moments", c8, None),
        (9, "Bernoulli parameter premises", c9, None),
    ];
    say("");
    let mut failed = Vec::new();
    let mut reproducible = true;
    let mut repro_notes = Vec::new();
    for (id, name, run, limit) in criteria {
        let mut runs = Vec::new();
        for threads in [1, 4, 16] {
            let t0 = Instant::now();
            let o = with_threads(Some(threads), run).unwrap();
            runs.push((o, t0.elapsed()));
        }
        let (first, elapsed) = &runs[0];
        let in_time = limit.is_none_or(|l| *elapsed <= l);
        let pass = first.pass && in_time;
        let same = runs
            .iter()
            .all(|(o, _)| o.digest == first.digest && o.pass == first.pass);
        reproducible &= same;
        repro_notes.push(format!("{id}:{}", if same { "same" } else { "DIFFERS" }));
        say(&format!(
            "criterion {id:>2} {} {name} [{elapsed:.2?}] {}",
            if pass { "PASS" } else { "FAIL" },
            first.detail
        ));
        if !pass {
            failed.push(id);
        }
    }
    say(&format!(
        "criterion 10 {} reproducibility under 1/4/16 threads [{}]",
        if reproducible { "PASS" } else { "FAIL" },
        repro_notes.join(" ")
    ));
    if !reproducible {
        failed.push(10);
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
