use weaksplit::algebra::order_of;
use weaksplit::flows::{NoiseKind, VectorField};
use weaksplit::jumps::{JumpApprox, JumpCoefficient};
use weaksplit::levy::{CompoundPoisson, LevyMeasure, LevyTriplet, Measure1d};
use weaksplit::montecarlo::{estimate_mean, EstimateOptions, TestFunction};
use weaksplit::schemes::{build_scheme_expr, simulate_path, FlowChoice, Scheme, SchemeConfig, SchemeKind, SdeModel};

fn config(scheme: SchemeKind, flow: FlowChoice) -> SchemeConfig {
    SchemeConfig {
        scheme,
        flow,
        noise: NoiseKind::Gaussian,
        jumps: JumpApprox::CpTruncate { max_jumps: None },
    }
}

#[test]
fn symbolic_order_matches_documented_order() {
    for kind in SchemeKind::ALL {
        if kind == SchemeKind::EulerMaruyama {
            assert!(build_scheme_expr(kind, 1).is_err());
            continue;
        }
        for d in 1..=2 {
            let e = build_scheme_expr(kind, d).unwrap();
            let r = order_of(&e, d, 3).unwrap();
            let want = kind.formal_order().min(3);
            assert!(r.order >= want, "{} d={d}: order {} < {want}", kind.name(), r.order);
            if kind.formal_order() <= 2 {
                assert_eq!(r.order, kind.formal_order(), "{} d={d}", kind.name());
            }
        }
    }
}

/// Two non-commuting Brownian fields, so the two orderings differ.
fn nonlinear_model() -> SdeModel {
    SdeModel::diffusion_only(
        VectorField::trig(0.1, 0.2, 0.0),
        vec![VectorField::trig(0.3, 0.0, 0.4), VectorField::trig(0.1, 0.5, 0.0)],
    )
    .unwrap()
}

#[test]
fn randomized_order_is_the_half_half_mixture() {
    let f = TestFunction::monomial(2);
    let opts = EstimateOptions::default();
    let paths = 200_000;
    for kind in [SchemeKind::NvA, SchemeKind::NvB] {
        let s = Scheme::new(config(kind, FlowChoice::Rk { order: 5 }), nonlinear_model()).unwrap();
        let mixed = estimate_mean(&s, &f, 1.0, &[0.3], 1, paths, 77, &opts).unwrap();
        let fwd = estimate_mean(&s.fixed_branch(0).unwrap(), &f, 1.0, &[0.3], 1, paths, 77, &opts).unwrap();
        let bwd = estimate_mean(&s.fixed_branch(1).unwrap(), &f, 1.0, &[0.3], 1, paths, 77, &opts).unwrap();
        let avg = 0.5 * (fwd.mean + bwd.mean);
        let tol = 4.0 * (mixed.stderr.powi(2) + fwd.stderr.powi(2) + bwd.stderr.powi(2)).sqrt();
        assert!(
            (mixed.mean - avg).abs() <= tol,
            "{}: {} vs {avg} (tol {tol})",
            kind.name(),
            mixed.mean
        );
        // The orderings must be distinguishable for the check to mean anything.
        assert!((fwd.mean - bwd.mean).abs() > tol, "{}: branches coincide", kind.name());
    }
}

#[test]
fn commuting_generators_give_identical_paths() {
    // Every coordinate map is multiplication by a random factor.
    let atom = LevyMeasure::one_d(Measure1d::CompoundPoisson(CompoundPoisson::atom(3.0, 0.4)));
    let model = SdeModel::new(
        VectorField::affine_1d(0.05, 0.0),
        vec![VectorField::affine_1d(0.2, 0.0), VectorField::affine_1d(-0.1, 0.0)],
        JumpCoefficient::affine_1d(0.5, 0.0),
        LevyTriplet::pure_jump(atom).unwrap(),
    )
    .unwrap();
    for kind in [SchemeKind::NvA, SchemeKind::NvB] {
        let s = Scheme::new(config(kind, FlowChoice::Exact), model.clone()).unwrap();
        let (a, b) = (s.fixed_branch(0).unwrap(), s.fixed_branch(1).unwrap());
        for path in 0..50 {
            let x = simulate_path(&a, 1.0, 8, &[1.0], 0, 5, path).unwrap();
            let y = simulate_path(&b, 1.0, 8, &[1.0], 0, 5, path).unwrap();
            assert_eq!(x.jumps, y.jumps);
            assert!(
                (x.x[0] - y.x[0]).abs() <= 1e-12 * x.x[0].abs(),
                "{}: {} vs {}",
                kind.name(),
                x.x[0],
                y.x[0]
            );
        }
    }
}
