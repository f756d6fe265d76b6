//! Polynomial-identity check for the symbolic engine: substitute random integer
//! matrices for the generators, evaluate the scheme as a matrix polynomial in `t`
//! at exact rational points and recover its coefficients by interpolation.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

use super::{expand, target_series, SchemeExpr};
use crate::error::Result;

const DIM: usize = 3;

type Mat = [[BigRational; DIM]; DIM];

fn zero_mat() -> Mat {
    std::array::from_fn(|_| std::array::from_fn(|_| BigRational::zero()))
}

fn identity() -> Mat {
    let mut m = zero_mat();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = BigRational::one();
    }
    m
}

fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    let mut c = zero_mat();
    for i in 0..DIM {
        for k in 0..DIM {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..DIM {
                c[i][j] += &a[i][k] * &b[k][j];
            }
        }
    }
    c
}

fn mat_add_scaled(acc: &mut Mat, m: &Mat, s: &BigRational) {
    for i in 0..DIM {
        for j in 0..DIM {
            acc[i][j] += &m[i][j] * s;
        }
    }
}

fn random_mat<R: Rng + ?Sized>(rng: &mut R) -> Mat {
    std::array::from_fn(|_| {
        std::array::from_fn(|_| BigRational::from_integer(BigInt::from(rng.random_range(-3i64..=3))))
    })
}

/// `sum_{q <= m} (c t)^q / q! * A^q` evaluated at a rational `t`.
fn truncated_exp_at(a: &Mat, c: &BigRational, t: &BigRational, m: usize) -> Mat {
    let mut out = identity();
    let mut power = identity();
    let mut scale = BigRational::one();
    let ct = c * t;
    for q in 1..=m {
        power = mat_mul(&power, a);
        scale = scale * &ct / BigRational::from_integer(BigInt::from(q));
        mat_add_scaled(&mut out, &power, &scale);
    }
    out
}

/// Monomial coefficients of the polynomial interpolating `(xs[i], ys[i])`
/// (Newton divided differences, then expansion of the Newton basis).
fn interpolate(xs: &[BigRational], ys: &[BigRational]) -> Vec<BigRational> {
    let n = xs.len();
    let mut dd: Vec<BigRational> = ys.to_vec();
    for level in 1..n {
        for i in (level..n).rev() {
            dd[i] = (&dd[i] - &dd[i - 1]) / (&xs[i] - &xs[i - level]);
        }
    }
    // Horner on the Newton form: p = dd[n-1]; p = p * (x - xs[i]) + dd[i].
    let mut coeffs = vec![BigRational::zero(); n];
    coeffs[0] = dd[n - 1].clone();
    let mut deg = 0;
    for i in (0..n - 1).rev() {
        let mut next = vec![BigRational::zero(); n];
        for k in 0..=deg {
            next[k + 1] += &coeffs[k];
            next[k] -= &coeffs[k] * &xs[i];
        }
        next[0] += &dd[i];
        coeffs = next;
        deg += 1;
    }
    coeffs
}

/// Coefficient matrices of degree `0..=m` of the matrix polynomial `f(t)` of
/// degree at most `max_degree`, recovered from `max_degree + 1` evaluations.
fn coefficient_matrices(f: impl Fn(&BigRational) -> Mat, max_degree: usize, m: usize) -> Vec<Mat> {
    let xs: Vec<BigRational> = (0..=max_degree)
        .map(|k| BigRational::from_integer(BigInt::from(k as i64)))
        .collect();
    let values: Vec<Mat> = xs.iter().map(&f).collect();
    let mut out = vec![zero_mat(); m + 1];
    for i in 0..DIM {
        for j in 0..DIM {
            let ys: Vec<BigRational> = values.iter().map(|v| v[i][j].clone()).collect();
            let c = interpolate(&xs, &ys);
            for (k, mat) in out.iter_mut().enumerate() {
                mat[i][j] = c.get(k).cloned().unwrap_or_else(BigRational::zero);
            }
        }
    }
    out
}

fn trial_matches<R: Rng + ?Sized>(expr: &SchemeExpr, d: usize, m: usize, rng: &mut R) -> bool {
    let mats: Vec<Mat> = (0..d + 2).map(|_| random_mat(rng)).collect();
    let mut full = zero_mat();
    for a in &mats {
        mat_add_scaled(&mut full, a, &BigRational::one());
    }
    let factor_mat = |gens: &[u8]| -> Mat {
        if gens.is_empty() {
            return full.clone();
        }
        let mut s = zero_mat();
        for &g in gens {
            mat_add_scaled(&mut s, &mats[g as usize], &BigRational::one());
        }
        s
    };
    let terms: Vec<(BigRational, Vec<(Mat, BigRational)>)> = expr
        .terms()
        .iter()
        .map(|t| {
            (
                t.weight.clone(),
                t.factors
                    .iter()
                    .map(|f| (factor_mat(&f.generators), f.fraction.clone()))
                    .collect(),
            )
        })
        .collect();
    let max_factors = terms.iter().map(|(_, f)| f.len()).max().unwrap_or(0);

    // The untruncated product of truncated exponentials has degree <= m * factors;
    // its coefficients through degree m are the truncated expansion.
    let scheme = coefficient_matrices(
        |t| {
            let mut acc = zero_mat();
            for (w, factors) in &terms {
                let mut p = identity();
                for (a, c) in factors {
                    p = mat_mul(&p, &truncated_exp_at(a, c, t, m));
                }
                mat_add_scaled(&mut acc, &p, w);
            }
            acc
        },
        m * max_factors.max(1),
        m,
    );
    let target = coefficient_matrices(|t| truncated_exp_at(&full, &BigRational::one(), t, m), m, m);
    scheme == target
}

/// Random-matrix evaluation of `expr` against the target semigroup through degree
/// `m`. Returns true iff every trial agrees with the target.
pub fn matrix_oracle_check<R: Rng + ?Sized>(expr: &SchemeExpr, d: usize, m: usize, trials: usize, rng: &mut R) -> bool {
    if m == 0 {
        return true;
    }
    (0..trials.max(1)).all(|_| trial_matches(expr, d, m, rng))
}

/// Symbolic verdict for the same question: expansion equals the target through `m`.
pub fn symbolic_matches(expr: &SchemeExpr, d: usize, m: usize) -> Result<bool> {
    Ok(expand(expr, d, m)? == target_series(d, m)?)
}
