use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Index of an abstract generator `L_i`, `0 <= i <= d + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Generator(pub u8);

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.0)
    }
}

/// A monomial `L_{i_1} ... L_{i_k}`; its degree is its length.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(pub Vec<Generator>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn from_indices(indices: &[u8]) -> Self {
        Word(indices.iter().copied().map(Generator).collect())
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn reversed(&self) -> Self {
        Word(self.0.iter().rev().copied().collect())
    }

    fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.0.len() + other.0.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "(I)");
        }
        write!(f, "(")?;
        for (k, g) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{g}")?;
        }
        write!(f, ")")
    }
}

/// Caps on symbolic expansion. The word count grows like `(d + 2)^m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExpansionLimits {
    pub max_order: usize,
    pub max_words: usize,
}

impl Default for ExpansionLimits {
    fn default() -> Self {
        ExpansionLimits {
            max_order: 6,
            max_words: 1_000_000,
        }
    }
}

impl ExpansionLimits {
    pub(crate) fn check_order(&self, m: usize) -> Result<()> {
        if m > self.max_order {
            return Err(Error::Capacity(format!(
                "truncation order {m} exceeds cap {}",
                self.max_order
            )));
        }
        Ok(())
    }

    pub(crate) fn check_words(&self, n: usize) -> Result<()> {
        if n > self.max_words {
            return Err(Error::Capacity(format!("{n} words exceed cap {}", self.max_words)));
        }
        Ok(())
    }
}

/// Truncated noncommutative polynomial in the generators with exact rational
/// coefficients. The power of the step size attached to a word equals its degree,
/// so the degree-`k` slice is the `t^k` coefficient operator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Series {
    terms: BTreeMap<Word, BigRational>,
    order: usize,
    generators: usize,
}

impl Series {
    pub fn zero(generators: usize, order: usize) -> Self {
        Series {
            terms: BTreeMap::new(),
            order,
            generators,
        }
    }

    pub fn one(generators: usize, order: usize) -> Self {
        let mut s = Series::zero(generators, order);
        s.terms.insert(Word::empty(), BigRational::one());
        s
    }

    /// `c * (L_{g_1} + ... + L_{g_k})`, truncated (empty when `order == 0`).
    pub fn linear(generators: usize, order: usize, gens: &[u8], c: &BigRational) -> Self {
        let mut s = Series::zero(generators, order);
        if order >= 1 {
            for &g in gens {
                s.add_term(Word::from_indices(&[g]), c.clone());
            }
        }
        s
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn generator_count(&self) -> usize {
        self.generators
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, word: &Word) -> BigRational {
        self.terms.get(word).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Word, &BigRational)> {
        self.terms.iter()
    }

    /// Words of exactly degree `k` with their coefficients, in sorted order.
    pub fn degree_slice(&self, k: usize) -> impl Iterator<Item = (&Word, &BigRational)> {
        self.terms.iter().filter(move |(w, _)| w.degree() == k)
    }

    pub(crate) fn add_term(&mut self, word: Word, c: BigRational) {
        if word.degree() > self.order || c.is_zero() {
            return;
        }
        match self.terms.entry(word) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get() + c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &Series, c: &BigRational) {
        for (w, v) in other.iter() {
            self.add_term(w.clone(), v * c);
        }
    }

    /// Truncated product `self * other`.
    pub fn mul(&self, other: &Series, limits: &ExpansionLimits) -> Result<Series> {
        let order = self.order.min(other.order);
        let mut by_degree: Vec<Vec<(&Word, &BigRational)>> = vec![Vec::new(); order + 1];
        for (w, c) in other.iter() {
            if w.degree() <= order {
                by_degree[w.degree()].push((w, c));
            }
        }
        let mut out = Series::zero(self.generators.max(other.generators), order);
        for (wa, ca) in self.iter() {
            let da = wa.degree();
            if da > order {
                continue;
            }
            for bucket in by_degree.iter().take(order - da + 1) {
                for (wb, cb) in bucket {
                    out.add_term(wa.concat(wb), ca * *cb);
                }
            }
            limits.check_words(out.len())?;
        }
        Ok(out)
    }

    /// Truncated `exp(x) = sum_k x^k / k!`.
    pub fn exp(x: &Series, limits: &ExpansionLimits) -> Result<Series> {
        let mut out = Series::one(x.generators, x.order);
        let mut power = Series::one(x.generators, x.order);
        let mut fact = BigInt::one();
        for k in 1..=x.order {
            power = power.mul(x, limits)?;
            if power.is_empty() {
                break;
            }
            fact *= BigInt::from(k);
            out.add_scaled(&power, &BigRational::from_integer(fact.clone()).recip());
        }
        Ok(out)
    }

    /// Series with every word reversed.
    pub fn reversed(&self) -> Series {
        let mut out = Series::zero(self.generators, self.order);
        for (w, c) in self.iter() {
            out.add_term(w.reversed(), c.clone());
        }
        out
    }

    /// Restrict to words of degree `<= m`.
    pub fn truncate(&self, m: usize) -> Series {
        let mut out = Series::zero(self.generators, m.min(self.order));
        for (w, c) in self.iter() {
            out.add_term(w.clone(), c.clone());
        }
        out
    }
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (w, c) in self.iter() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}{w}")?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}
