use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use proptest::prelude::*;

use weaksplit::algebra::{
    expand, matrix_oracle_check, order_of, symbolic_matches, target_series, Factor, SchemeExpr, Series, Term, Word,
};
use weaksplit::rng::seeded;

fn r(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// One product: every generator once with fraction 1, in a random order, the drift
/// optionally split into two halves at random positions.
fn product(d: usize) -> impl Strategy<Value = Vec<Factor>> {
    let gens: Vec<u8> = (0..=(d as u8 + 1)).collect();
    (Just(gens).prop_shuffle(), any::<bool>(), any::<prop::sample::Index>()).prop_map(|(order, split, at)| {
        let mut out: Vec<Factor> = order
            .into_iter()
            .map(|g| {
                if split && g == 0 {
                    Factor::half(0)
                } else {
                    Factor::whole(g)
                }
            })
            .collect();
        if split {
            let i = at.index(out.len() + 1);
            out.insert(i, Factor::half(0));
        }
        out
    })
}

/// Weighted sum of up to three products; weights are small rationals summing to 1.
fn random_expr() -> impl Strategy<Value = (usize, SchemeExpr)> {
    (1usize..=2).prop_flat_map(|d| {
        (
            Just(d),
            prop::collection::vec(product(d), 1..=3),
            prop::collection::vec(-4i64..=4, 2),
        )
            .prop_map(|(d, products, nums)| {
                let k = products.len();
                let mut weights: Vec<BigRational> = nums.iter().take(k - 1).map(|&n| r(n, 3)).collect();
                let rest = BigRational::one() - weights.iter().cloned().sum::<BigRational>();
                weights.push(rest);
                let terms = weights
                    .into_iter()
                    .zip(products)
                    .map(|(weight, factors)| Term { weight, factors })
                    .collect();
                (d, SchemeExpr::new(terms).unwrap())
            })
    })
}

#[test]
fn builtins_are_second_order() {
    for d in 1..=3 {
        for e in [SchemeExpr::nv_a(d), SchemeExpr::nv_b(d), SchemeExpr::splitting(d)] {
            assert!(order_of(&e, d, 3).unwrap().order >= 2, "{e} at d={d}");
        }
    }
}

#[test]
fn single_exponential_is_the_target() {
    for d in 0..=2 {
        for m in 0..=5 {
            assert_eq!(
                expand(&SchemeExpr::full_generator(d), d, m).unwrap(),
                target_series(d, m).unwrap(),
                "d={d} m={m}"
            );
        }
    }
}

fn symmetric_average(e: &SchemeExpr, d: usize, m: usize) -> Series {
    let a = expand(e, d, m).unwrap();
    let b = expand(&e.reversed(), d, m).unwrap();
    let mut avg = Series::zero(d + 2, m);
    avg.add_scaled(&a, &r(1, 2));
    avg.add_scaled(&b, &r(1, 2));
    avg
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn oracle_agrees_with_symbolic((d, e) in random_expr(), seed in any::<u64>()) {
        let mut rng = seeded(seed, 0);
        for m in 1..=3 {
            prop_assert_eq!(
                matrix_oracle_check(&e, d, m, 2, &mut rng),
                symbolic_matches(&e, d, m).unwrap(),
                "{} at m={}", e, m
            );
        }
    }

    #[test]
    fn empty_word_has_unit_coefficient((d, e) in random_expr()) {
        let s = expand(&e, d, 3).unwrap();
        prop_assert!(s.coeff(&Word::empty()).is_one());
    }

    #[test]
    fn reversal_average_is_symmetric((d, e) in random_expr()) {
        let avg = symmetric_average(&e, d, 3);
        for (w, c) in avg.iter() {
            prop_assert_eq!(&avg.coeff(&w.reversed()), c, "word {}", w);
        }
    }
}
