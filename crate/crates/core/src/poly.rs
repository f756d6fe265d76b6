//! Dense univariate polynomials with real coefficients.

use serde::{Deserialize, Serialize};

/// `sum_k coeffs[k] x^k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Polynomial { coeffs }
    }

    pub fn monomial(p: usize) -> Self {
        let mut c = vec![0.0; p + 1];
        c[p] = 1.0;
        Polynomial::new(c)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// `k`-th derivative.
    pub fn derivative(&self, k: usize) -> Polynomial {
        if k > self.degree() {
            return Polynomial::new(vec![0.0]);
        }
        let c = (k..self.coeffs.len())
            .map(|i| {
                let falling: f64 = ((i - k + 1)..=i).map(|v| v as f64).product();
                falling * self.coeffs[i]
            })
            .collect();
        Polynomial::new(c)
    }
}
