use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand_chacha::ChaCha8Rng;

use weaksplit::flows::FlowMethod;
use weaksplit::jumps::{
    compound_poisson_flow, ignore_small_flow, per_step_defect, solve_two_jump_exact, ArInner, BernoulliJumpParams,
    BernoulliMode, CompoundPoissonSpec, CutoffDriver, JumpCoefficient, TailJumps,
};
use weaksplit::levy::{
    CompoundPoisson, CutoffMode, JumpDist, LevyMeasure, LevyTriplet, Localization, Measure1d, TemperedStable,
};
use weaksplit::poly::Polynomial;
use weaksplit::rng::seeded;

const SAMPLES: usize = 100_000;

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

type OneStep = Box<dyn Fn(f64, &mut ChaCha8Rng) -> f64>;

const MAPS: [&str; 5] = ["compound_poisson", "ignore", "ar", "one_jump", "two_jump"];

/// The named one-step map at step `t`, with samplers built once.
fn one_step_map(name: &str, t: f64) -> OneStep {
    let h = JumpCoefficient::affine_1d(0.5, 0.0);
    let ts = LevyMeasure::one_d(Measure1d::TemperedStable(TemperedStable::symmetric(0.5, 1.0, 2.0)));
    let trip = LevyTriplet::new(vec![0.2], ts.clone()).unwrap();
    let eps = 0.1;
    match name {
        "compound_poisson" => {
            let cp = LevyMeasure::one_d(Measure1d::CompoundPoisson(CompoundPoisson {
                intensity: 2.0,
                jump_dist: JumpDist::Normal { mean: 0.0, std: 0.3 },
            }));
            let spec = CompoundPoissonSpec::new(&cp).unwrap();
            Box::new(move |x, rng| compound_poisson_flow(&h, &spec, t, &[x], None, rng).unwrap()[0])
        }
        "ignore" | "ar" => {
            let mode = if name == "ar" {
                CutoffMode::Ar
            } else {
                CutoffMode::Ignore
            };
            let driver = CutoffDriver::new(&h, &trip, eps, mode).unwrap();
            let flow = FlowMethod::exact();
            Box::new(move |x, rng| match mode {
                CutoffMode::Ar => driver.ar_flow(t, &[x], &ArInner::default(), &flow, rng).unwrap().0[0],
                CutoffMode::Ignore => driver.ignore_flow(t, &[x], &flow, rng).unwrap().0[0],
            })
        }
        _ => {
            let mode = if name == "two_jump" {
                BernoulliMode::TwoJump
            } else {
                BernoulliMode::OneJump
            };
            let params = BernoulliJumpParams::new(&ts, 0.5, Localization::One, t, mode).unwrap();
            let tail = TailJumps::new(&ts, params).unwrap();
            Box::new(move |x, rng| tail.step(&h, &[x], rng).unwrap().0[0])
        }
    }
}

#[test]
fn fourth_moments_grow_at_most_linearly_in_t() {
    // E|X_t|^4 <= (1 + K t)|x|^4 + K t, K fitted at t = 0.1 and reused at smaller t.
    let xs = [-1.0, 0.5, 2.0];
    for (mi, name) in MAPS.iter().enumerate() {
        let moment = |t: f64, x: f64, tag: u64| {
            let step = one_step_map(name, t);
            let mut rng = seeded(400 + mi as u64, tag);
            let v: Vec<f64> = (0..SAMPLES).map(|_| step(x, &mut rng).powi(4)).collect();
            mean_and_se(&v)
        };
        let mut k: f64 = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let (m, se) = moment(0.1, x, i as u64);
            k = k.max((m + 3.0 * se - x.powi(4)) / (0.1 * (x.powi(4) + 1.0)));
        }
        for (j, &t) in [0.05, 0.025].iter().enumerate() {
            for (i, &x) in xs.iter().enumerate() {
                let (m, se) = moment(t, x, 10 * (j as u64 + 1) + i as u64);
                let bound = (1.0 + k * t) * x.powi(4) + k * t;
                assert!(m - 3.0 * se <= bound, "{name}: t={t} x={x}: {m} > {bound} (K={k})");
            }
        }
    }
}

#[test]
fn cutoff_defects_scale_with_eps() {
    let h = JumpCoefficient::affine_1d(1.0, 0.0);
    let eps = [1e-1, 1e-2, 1e-3];
    for alpha in [0.3, 0.5, 0.7] {
        // One-sided, so the odd moment driving the x^4 defect is nonzero.
        let nu = LevyMeasure::one_d(Measure1d::TemperedStable(TemperedStable {
            alpha,
            c_plus: 1.0,
            c_minus: 0.0,
            lambda_plus: 1.0,
            lambda_minus: 0.0,
            y_max: None,
        }));
        for (p, mode, want) in [(3, CutoffMode::Ignore, 2.0 - alpha), (4, CutoffMode::Ar, 3.0 - alpha)] {
            let f = Polynomial::monomial(p);
            let d: Vec<f64> = eps
                .iter()
                .map(|&e| per_step_defect(&nu, &h, &f, 1.0, e, mode).unwrap().abs())
                .collect();
            for w in d.windows(2) {
                let k = (w[0] / w[1]).log10();
                assert!((k / want - 1.0).abs() <= 0.10, "alpha={alpha} {mode:?}: {k} vs {want}");
            }
        }
    }
}

#[test]
fn ignore_flow_reproduces_compound_poisson_for_an_atom() {
    // Single atom at 0.5 above eps; drift b = 1 cancels the compensator on eps < |y| <= 1.
    let atom = LevyMeasure::one_d(Measure1d::CompoundPoisson(CompoundPoisson::atom(2.0, 0.5)));
    let spec = CompoundPoissonSpec::new(&atom).unwrap();
    let trip = LevyTriplet::new(vec![1.0], atom).unwrap();
    let h = JumpCoefficient::affine_1d(0.5, 0.2);
    let (t, x) = (0.7, 1.0);
    let mut r1 = seeded(500, 0);
    let mut r2 = seeded(500, 1);
    let a: Vec<f64> = (0..SAMPLES)
        .map(|_| ignore_small_flow(&h, &trip, 0.1, t, &[x], &FlowMethod::exact(), &mut r1).unwrap()[0])
        .collect();
    let b: Vec<f64> = (0..SAMPLES)
        .map(|_| compound_poisson_flow(&h, &spec, t, &[x], None, &mut r2).unwrap()[0])
        .collect();
    for p in [1, 2] {
        let (ma, sa) = mean_and_se(&a.iter().map(|v| v.powi(p)).collect::<Vec<_>>());
        let (mb, sb) = mean_and_se(&b.iter().map(|v| v.powi(p)).collect::<Vec<_>>());
        assert!(
            (ma - mb).abs() <= 4.0 * (sa * sa + sb * sb).sqrt(),
            "moment {p}: {ma} vs {mb}"
        );
    }
}

proptest! {
    #[test]
    fn exact_two_jump_parameters_have_zero_defect(cn in 1i64..400, cd in 1i64..50, tn in 1i64..50, td in 1i64..400) {
        let c = BigRational::new(BigInt::from(cn), BigInt::from(cd));
        let t = BigRational::new(BigInt::from(tn), BigInt::from(td));
        // Outside the admissible region the solve reports an error instead.
        if let Ok((p1, p2)) = solve_two_jump_exact(&c, &t) {
            prop_assert!(p1 >= BigRational::zero() && p1 <= BigRational::one());
            prop_assert!(p2 >= BigRational::zero() && p2 <= BigRational::one());
            let first = &p1 * (BigRational::one() + &p2) / &c - &t;
            let second = BigRational::from_integer(BigInt::from(2)) * &p1 * &p2 / (&c * &c) - &t * &t;
            prop_assert!(first.is_zero());
            prop_assert!(second.is_zero());
        }
    }
}
