use proptest::prelude::*;
use smallvec::smallvec;

use weaksplit::flows::{exp_map, rk_flow, taylor_flow, ButcherTableau, NoiseKind, VectorField, THREE_POINT_ATOMS};
use weaksplit::jumps::binomial;
use weaksplit::schemes::noise_expectation;

/// `V(x) = 2 + sin x` with its closed-form flow on `(-pi, pi)`.
fn sin_plus_two() -> VectorField {
    let s3 = 3f64.sqrt();
    VectorField::trig(2.0, 1.0, 0.0).with_flow(move |t, x| {
        let theta = ((2.0 * (x[0] / 2.0).tan() + 1.0) / s3).atan() + 0.5 * s3 * t;
        smallvec![2.0 * ((s3 * theta.tan() - 1.0) / 2.0).atan()]
    })
}

fn log_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0.ln()).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0.ln() - mx) * (p.1.ln() - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0.ln() - mx).powi(2)).sum();
    sxy / sxx
}

/// Points `(t, |err(t)|)` for `t = 2^-4 .. 2^-10`, dropping those lost in rounding.
fn error_curve(err: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
    (4..=10)
        .map(|k| 2f64.powi(-k))
        .map(|t| (t, err(t).abs()))
        .filter(|(_, e)| *e > 1e-13)
        .collect()
}

#[test]
fn closed_form_matches_reference_solver() {
    let v = sin_plus_two();
    let plain = VectorField::trig(2.0, 1.0, 0.0);
    for t in [-0.3, 0.1, 0.5] {
        let a = exp_map(&v, t, &[0.3]).unwrap()[0];
        let b = exp_map(&plain, t, &[0.3]).unwrap()[0];
        assert!((a - b).abs() < 1e-10, "t={t}: {a} vs {b}");
    }
}

#[test]
fn taylor_and_rk_local_orders() {
    let v = sin_plus_two();
    let x = [1.0];
    let exact = |t: f64| exp_map(&v, t, &x).unwrap()[0];
    for m in 1..=5 {
        let pts = error_curve(|t| taylor_flow(&v, m, t, &x).unwrap()[0] - exact(t));
        assert!(pts.len() >= 3, "taylor m={m}: only {} points", pts.len());
        let k = log_slope(&pts);
        assert!(k >= m as f64 + 1.0 - 0.1, "taylor m={m}: slope {k}");

        let tab = ButcherTableau::of_order(m).unwrap();
        let pts = error_curve(|t| rk_flow(&tab, &v, t, &x).unwrap()[0] - exact(t));
        assert!(pts.len() >= 3, "rk m={m}: only {} points", pts.len());
        let k = log_slope(&pts);
        assert!(k >= m as f64 + 1.0 - 0.1, "rk m={m}: slope {k}");
    }
}

#[test]
fn rk_on_linear_fields_is_the_exponential_polynomial() {
    let unit = VectorField::affine_1d(1.0, 0.0);
    let taylor = |m: usize, z: f64| {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..=m {
            term *= z / k as f64;
            sum += term;
        }
        sum
    };
    for m in 1..=4 {
        let tab = ButcherTableau::of_order(m).unwrap();
        for z in [-0.7, -0.1, 0.05, 0.4, 1.3] {
            let got = rk_flow(&tab, &unit, z, &[1.0]).unwrap()[0];
            assert!(
                (got - taylor(m, z)).abs() <= 4.0 * f64::EPSILON * got.abs(),
                "m={m} z={z}"
            );
        }
    }
    // Six stages: exact through degree 5, plus b^T A^5 1 = 1/640 at degree 6.
    let tab = ButcherTableau::of_order(5).unwrap();
    for z in [-0.7, 0.4, 1.3] {
        let got = rk_flow(&tab, &unit, z, &[1.0]).unwrap()[0];
        let want = taylor(5, z) + z.powi(6) / 640.0;
        assert!((got - want).abs() <= 8.0 * f64::EPSILON * got.abs(), "z={z}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn flows_compose(s in -0.5f64..0.5, t in -0.5f64..0.5, x in -1.5f64..1.5) {
        let v = VectorField::trig(0.5, 1.0, -0.3);
        let two = exp_map(&v, s, &exp_map(&v, t, &[x]).unwrap()).unwrap()[0];
        let one = exp_map(&v, s + t, &[x]).unwrap()[0];
        prop_assert!((two - one).abs() < 1e-9 * (1.0 + one.abs()), "{two} vs {one}");
    }

    #[test]
    fn three_point_substitutes_for_gaussian(x in -3.0f64..3.0, t in 0.0f64..2.0, k in 0u32..=5) {
        // E[(x + sqrt(t) Z)^k] by enumeration against the Gaussian moment formula.
        let s = t.sqrt();
        let enumerated: f64 = THREE_POINT_ATOMS.iter().map(|(z, w)| w * (x + s * z).powi(k as i32)).sum();
        let gaussian: f64 = (0..=k)
            .step_by(2)
            .map(|j| {
                let double_fact: f64 = (1..j).step_by(2).map(|i| i as f64).product();
                binomial(k, j) * x.powi((k - j) as i32) * s.powi(j as i32) * double_fact
            })
            .sum();
        prop_assert!((enumerated - gaussian).abs() <= 1e-12 * (1.0 + gaussian.abs()));
        let quad = noise_expectation(NoiseKind::Gaussian, |z| (x + s * z).powi(k as i32));
        prop_assert!((quad - gaussian).abs() <= 1e-10 * (1.0 + gaussian.abs()));
    }
}
