//! Exact symbolic expansion of splitting-scheme expressions.
//!
//! A scheme is a weighted sum of products `e^{c t L_i}` of coordinate semigroups.
//! Expanding every exponential to order `m`, multiplying left to right and
//! truncating gives the degree-`<= m` part of its semigroup expansion, which is
//! compared word by word against `sum_k (t^k / k!) (L_0 + ... + L_{d+1})^k`.
//! All arithmetic is exact; a scheme certified to order `m` here has local error
//! `O(t^{m+1})` for any choice of (noncommuting) coordinate generators.

mod expr;
mod oracle;
mod series;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

pub use expr::{Factor, SchemeExpr, Term};
pub use oracle::{matrix_oracle_check, symbolic_matches};
pub use series::{ExpansionLimits, Generator, Series, Word};

use crate::error::{Error, Result};

fn check_generators(expr: &SchemeExpr, d: usize) -> Result<()> {
    if let Some(g) = expr.max_generator() {
        if g as usize > d + 1 {
            return Err(Error::Config(format!(
                "generator L{g} out of range for d = {d} (max L{})",
                d + 1
            )));
        }
    }
    Ok(())
}

fn full_generator_list(d: usize) -> Vec<u8> {
    (0..=d as u8 + 1).collect()
}

/// Expand `expr` to order `m` over generators `L_0..L_{d+1}`.
pub fn expand(expr: &SchemeExpr, d: usize, m: usize) -> Result<Series> {
    expand_with(expr, d, m, &ExpansionLimits::default())
}

pub fn expand_with(expr: &SchemeExpr, d: usize, m: usize, limits: &ExpansionLimits) -> Result<Series> {
    limits.check_order(m)?;
    check_generators(expr, d)?;
    let gens = d + 2;
    let mut total = Series::zero(gens, m);
    for term in expr.terms() {
        let mut product = Series::one(gens, m);
        for f in &term.factors {
            let g = if f.generators.is_empty() {
                full_generator_list(d)
            } else {
                f.generators.clone()
            };
            let x = Series::linear(gens, m, &g, &f.fraction);
            let e = Series::exp(&x, limits)?;
            product = product.mul(&e, limits)?;
        }
        total.add_scaled(&product, &term.weight);
        limits.check_words(total.len())?;
    }
    Ok(total)
}

/// `sum_{k <= m} (1/k!) (L_0 + ... + L_{d+1})^k`: every word of degree `k` gets `1/k!`.
pub fn target_series(d: usize, m: usize) -> Result<Series> {
    target_series_with(d, m, &ExpansionLimits::default())
}

pub fn target_series_with(d: usize, m: usize, limits: &ExpansionLimits) -> Result<Series> {
    limits.check_order(m)?;
    let gens = d + 2;
    let mut words: usize = 0;
    let mut layer = 1usize;
    for _ in 0..=m {
        words = words.saturating_add(layer);
        layer = layer.saturating_mul(gens);
    }
    limits.check_words(words)?;

    let mut s = Series::zero(gens, m);
    let mut current: Vec<Vec<u8>> = vec![Vec::new()];
    let mut fact = BigInt::one();
    for k in 0..=m {
        if k > 0 {
            fact *= BigInt::from(k);
            current = current
                .into_iter()
                .flat_map(|w| {
                    (0..gens as u8).map(move |g| {
                        let mut w = w.clone();
                        w.push(g);
                        w
                    })
                })
                .collect();
        }
        let c = BigRational::from_integer(fact.clone()).recip();
        for w in &current {
            s.add_term(Word::from_indices(w), c.clone());
        }
    }
    Ok(s)
}

/// A coefficient where a scheme expansion differs from the target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Defect {
    pub degree: usize,
    pub word: Word,
    pub scheme: BigRational,
    pub target: BigRational,
}

/// Measured formal order and every mismatching word at the first failing degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderReport {
    pub order: usize,
    pub max_order: usize,
    /// Mismatches at degree `order + 1`, in sorted word order. Empty when the
    /// scheme matches through `max_order`.
    pub defects: Vec<Defect>,
}

impl OrderReport {
    pub fn first_defect(&self) -> Option<&Defect> {
        self.defects.first()
    }
}

/// Largest `m <= m_max` with `J_{<=m}(scheme) = J_{<=m}(target)`.
pub fn order_of(expr: &SchemeExpr, d: usize, m_max: usize) -> Result<OrderReport> {
    order_of_with(expr, d, m_max, &ExpansionLimits::default())
}

pub fn order_of_with(expr: &SchemeExpr, d: usize, m_max: usize, limits: &ExpansionLimits) -> Result<OrderReport> {
    if m_max == 0 {
        return Err(Error::Config("m_max must be at least 1".into()));
    }
    let scheme = expand_with(expr, d, m_max, limits)?;
    let target = target_series_with(d, m_max, limits)?;
    for k in 0..=m_max {
        let defects = degree_defects(&scheme, &target, k);
        if !defects.is_empty() {
            return Ok(OrderReport {
                order: k.saturating_sub(1),
                max_order: m_max,
                defects,
            });
        }
    }
    Ok(OrderReport {
        order: m_max,
        max_order: m_max,
        defects: Vec::new(),
    })
}

fn degree_defects(scheme: &Series, target: &Series, k: usize) -> Vec<Defect> {
    let mut words: Vec<&Word> = scheme
        .degree_slice(k)
        .map(|(w, _)| w)
        .chain(target.degree_slice(k).map(|(w, _)| w))
        .collect();
    words.sort();
    words.dedup();
    words
        .into_iter()
        .filter_map(|w| {
            let a = scheme.coeff(w);
            let b = target.coeff(w);
            (a != b).then(|| Defect {
                degree: k,
                word: w.clone(),
                scheme: a,
                target: b,
            })
        })
        .collect()
}
