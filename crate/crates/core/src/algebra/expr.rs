use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// `e^{c t (L_{g_1} + ... + L_{g_k})}`. Almost always a single generator; a sum is
/// used to write the target semigroup itself as an expression. An empty generator
/// list stands for the full generator `L_0 + ... + L_{d+1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factor {
    pub generators: Vec<u8>,
    pub fraction: BigRational,
}

impl Factor {
    pub fn new(generator: u8, fraction: BigRational) -> Self {
        Factor {
            generators: vec![generator],
            fraction,
        }
    }

    pub fn whole(generator: u8) -> Self {
        Factor::new(generator, BigRational::one())
    }

    pub fn half(generator: u8) -> Self {
        Factor::new(generator, ratio(1, 2))
    }
}

/// One weighted product `xi * prod_k e^{c_k t L_{g_k}}`, read left to right.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term {
    pub weight: BigRational,
    pub factors: Vec<Factor>,
}

/// Weighted sum of products of elementary exponentials. Weights sum to one and may
/// be negative (extrapolation); step fractions are positive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemeExpr {
    terms: Vec<Term>,
}

pub(crate) fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl SchemeExpr {
    pub fn new(terms: Vec<Term>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Config("scheme expression has no terms".into()));
        }
        let total: BigRational = terms.iter().map(|t| t.weight.clone()).sum();
        if !total.is_one() {
            return Err(Error::Config(format!("weights sum to {total}, expected 1")));
        }
        for t in &terms {
            for f in &t.factors {
                if !f.fraction.is_positive() {
                    return Err(Error::Config(format!("step fraction {} is not positive", f.fraction)));
                }
            }
        }
        Ok(SchemeExpr { terms })
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Largest generator index referenced.
    pub fn max_generator(&self) -> Option<u8> {
        self.terms
            .iter()
            .flat_map(|t| t.factors.iter())
            .flat_map(|f| f.generators.iter().copied())
            .max()
    }

    pub fn has_negative_weights(&self) -> bool {
        self.terms.iter().any(|t| t.weight.is_negative())
    }

    pub fn single(factors: Vec<Factor>) -> Self {
        SchemeExpr {
            terms: vec![Term {
                weight: BigRational::one(),
                factors,
            }],
        }
    }

    /// `sum_i w_i E_i` for expressions `E_i`, weights summing to one.
    pub fn combine(parts: Vec<(BigRational, SchemeExpr)>) -> Result<Self> {
        let mut terms = Vec::new();
        for (w, e) in parts {
            for t in e.terms {
                terms.push(Term {
                    weight: &w * &t.weight,
                    factors: t.factors,
                });
            }
        }
        SchemeExpr::new(terms)
    }

    /// `e^{t L_0} e^{t L_1} ... e^{t L_{d+1}}`.
    pub fn forward_product(d: usize) -> Self {
        SchemeExpr::single((0..=d as u8 + 1).map(Factor::whole).collect())
    }

    /// Ninomiya–Victoir (a): half drift steps around the ascending and descending
    /// inner products, each with weight 1/2.
    pub fn nv_a(d: usize) -> Self {
        let inner: Vec<u8> = (1..=d as u8 + 1).collect();
        let branch = |order: Vec<u8>| {
            let mut f = vec![Factor::half(0)];
            f.extend(order.into_iter().map(Factor::whole));
            f.push(Factor::half(0));
            f
        };
        SchemeExpr {
            terms: vec![
                Term {
                    weight: ratio(1, 2),
                    factors: branch(inner.clone()),
                },
                Term {
                    weight: ratio(1, 2),
                    factors: branch(inner.into_iter().rev().collect()),
                },
            ],
        }
    }

    /// Ninomiya–Victoir (b): forward and reversed full products, weight 1/2 each.
    pub fn nv_b(d: usize) -> Self {
        let gens: Vec<u8> = (0..=d as u8 + 1).collect();
        SchemeExpr {
            terms: vec![
                Term {
                    weight: ratio(1, 2),
                    factors: gens.iter().copied().map(Factor::whole).collect(),
                },
                Term {
                    weight: ratio(1, 2),
                    factors: gens.iter().rev().copied().map(Factor::whole).collect(),
                },
            ],
        }
    }

    /// Symmetric splitting: half steps of `L_0..L_d`, a full jump step, mirrored.
    pub fn splitting(d: usize) -> Self {
        let mut f: Vec<Factor> = (0..=d as u8).map(Factor::half).collect();
        f.push(Factor::whole(d as u8 + 1));
        f.extend((0..=d as u8).rev().map(Factor::half));
        SchemeExpr::single(f)
    }

    /// `4/3 * (1/2 A(t/2)^2 + 1/2 B(t/2)^2) - 1/3 * (1/2 A(t) + 1/2 B(t))` with
    /// `A` the forward and `B` the reversed product.
    pub fn fujiwara4(d: usize) -> Self {
        SchemeExpr::combine(vec![
            (ratio(4, 3), SchemeExpr::nv_b_half_squared(d)),
            (ratio(-1, 3), SchemeExpr::nv_b(d)),
        ])
        .expect("weights 4/3 - 1/3 sum to one")
    }

    /// `1/2 A(t/2)^2 + 1/2 B(t/2)^2`.
    pub fn nv_b_half_squared(d: usize) -> Self {
        let gens: Vec<u8> = (0..=d as u8 + 1).collect();
        let squared = |order: Vec<u8>| -> Vec<Factor> {
            let mut f: Vec<Factor> = order.iter().copied().map(Factor::half).collect();
            f.extend(order.iter().copied().map(Factor::half));
            f
        };
        SchemeExpr {
            terms: vec![
                Term {
                    weight: ratio(1, 2),
                    factors: squared(gens.clone()),
                },
                Term {
                    weight: ratio(1, 2),
                    factors: squared(gens.into_iter().rev().collect()),
                },
            ],
        }
    }

    /// `e^{t (L_0 + ... + L_{d+1})}` as a one-factor expression.
    pub fn full_generator(d: usize) -> Self {
        SchemeExpr::single(vec![Factor {
            generators: (0..=d as u8 + 1).collect(),
            fraction: BigRational::one(),
        }])
    }

    /// Each product reversed.
    pub fn reversed(&self) -> Self {
        SchemeExpr {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    weight: t.weight.clone(),
                    factors: t.factors.iter().rev().cloned().collect(),
                })
                .collect(),
        }
    }

    /// Parse the compact text grammar
    ///
    /// ```text
    /// expr    := term (('+' | '-') term)*
    /// term    := [weight '*'] factor+
    /// weight  := ['-'] int ['/' int]
    /// factor  := 'exp' '(' fraction ',' gens ')'
    /// gens    := 'L' | int ('+' int)*
    /// ```
    ///
    /// e.g. `1/2 * exp(1,0) exp(1,1) + 1/2 * exp(1,1) exp(1,0)`.
    pub fn parse(src: &str) -> Result<Self> {
        Parser { src, pos: 0 }.expr()
    }
}

impl fmt::Display for SchemeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, t) in self.terms.iter().enumerate() {
            let w = &t.weight;
            if k == 0 {
                write!(f, "{w} *")?;
            } else if w.is_negative() {
                write!(f, " - {} *", -w)?;
            } else {
                write!(f, " + {w} *")?;
            }
            for fac in &t.factors {
                let gens: Vec<String> = fac.generators.iter().map(|g| g.to_string()).collect();
                let gens = if gens.is_empty() {
                    "L".to_string()
                } else {
                    gens.join("+")
                };
                write!(f, " exp({},{})", fac.fraction, gens)?;
            }
        }
        Ok(())
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected '{c}'"))
        }
    }

    fn integer(&mut self) -> Result<BigInt> {
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected integer");
        }
        Ok(self.src[start..self.pos].parse().expect("digits"))
    }

    fn rational(&mut self) -> Result<BigRational> {
        let negative = self.eat('-');
        let num = self.integer()?;
        let den = if self.eat('/') {
            let at = self.pos;
            let d = self.integer()?;
            if d.is_zero() {
                return Err(Error::Parse {
                    pos: at,
                    msg: "zero denominator".into(),
                });
            }
            d
        } else {
            BigInt::one()
        };
        let r = BigRational::new(num, den);
        Ok(if negative { -r } else { r })
    }

    fn at_keyword(&mut self) -> bool {
        self.skip_ws();
        self.src[self.pos..].starts_with("exp")
    }

    fn factor(&mut self) -> Result<Factor> {
        self.skip_ws();
        if !self.src[self.pos..].starts_with("exp") {
            return self.err("expected 'exp('");
        }
        self.pos += 3;
        self.expect('(')?;
        let fraction = self.rational()?;
        self.expect(',')?;
        let generators = if self.eat('L') {
            Vec::new()
        } else {
            let mut g = vec![self.generator()?];
            while self.eat('+') {
                g.push(self.generator()?);
            }
            g
        };
        self.expect(')')?;
        Ok(Factor { generators, fraction })
    }

    fn generator(&mut self) -> Result<u8> {
        let at = self.pos;
        let n = self.integer()?;
        u8::try_from(n).or_else(|_| {
            Err(Error::Parse {
                pos: at,
                msg: "generator index out of range".into(),
            })
        })
    }

    fn term(&mut self, sign: BigRational) -> Result<Term> {
        let weight = if self.at_keyword() {
            BigRational::one()
        } else {
            let w = self.rational()?;
            self.expect('*')?;
            w
        };
        let mut factors = vec![self.factor()?];
        while self.at_keyword() {
            factors.push(self.factor()?);
        }
        Ok(Term {
            weight: sign * weight,
            factors,
        })
    }

    fn expr(mut self) -> Result<SchemeExpr> {
        self.skip_ws();
        if self.pos == self.src.len() {
            return self.err("empty expression");
        }
        let mut terms = vec![self.term(BigRational::one())?];
        loop {
            if self.eat('+') {
                terms.push(self.term(BigRational::one())?);
            } else if self.eat('-') {
                terms.push(self.term(-BigRational::one())?);
            } else {
                break;
            }
        }
        self.skip_ws();
        if self.pos != self.src.len() {
            return self.err("unexpected trailing input");
        }
        SchemeExpr::new(terms)
    }
}
