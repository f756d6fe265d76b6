//! Exact iterated Lie derivatives for `V(x) = a + b sin x + c cos x`.
//!
//! Functions are kept as polynomials in `(sin x, cos x)`; `d/dx` and the product
//! with `V` stay inside that class, so `V^k e = V (V^{k-1} e)'` is exact.

use std::collections::BTreeMap;

type TrigPoly = BTreeMap<(u32, u32), f64>;

fn add(p: &mut TrigPoly, key: (u32, u32), v: f64) {
    if v != 0.0 {
        *p.entry(key).or_insert(0.0) += v;
    }
}

fn derivative(p: &TrigPoly) -> TrigPoly {
    let mut out = TrigPoly::new();
    for (&(i, j), &v) in p {
        if i > 0 {
            add(&mut out, (i - 1, j + 1), v * i as f64);
        }
        if j > 0 {
            add(&mut out, (i + 1, j - 1), -v * j as f64);
        }
    }
    out
}

fn times_field(p: &TrigPoly, a: f64, b: f64, c: f64) -> TrigPoly {
    let mut out = TrigPoly::new();
    for (&(i, j), &v) in p {
        add(&mut out, (i, j), v * a);
        add(&mut out, (i + 1, j), v * b);
        add(&mut out, (i, j + 1), v * c);
    }
    out
}

fn eval(p: &TrigPoly, x: f64) -> f64 {
    let (s, c) = x.sin_cos();
    p.iter()
        .map(|(&(i, j), &v)| v * s.powi(i as i32) * c.powi(j as i32))
        .sum()
}

/// `(V^k e)(x)` for the identity coordinate `e`.
pub(crate) fn iterated(a: f64, b: f64, c: f64, k: usize, x: f64) -> f64 {
    if k == 0 {
        return x;
    }
    let mut g = TrigPoly::new();
    add(&mut g, (0, 0), a);
    add(&mut g, (1, 0), b);
    add(&mut g, (0, 1), c);
    for _ in 1..k {
        g = times_field(&derivative(&g), a, b, c);
    }
    eval(&g, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_and_third_derivatives_by_hand() {
        // V = sin + 2: V^2 e = (sin + 2) cos, V^3 e = (sin+2)(cos^2 - (sin+2) sin).
        let x = 0.4f64;
        let (s, c) = x.sin_cos();
        assert!((iterated(2.0, 1.0, 0.0, 2, x) - (s + 2.0) * c).abs() < 1e-14);
        let v3 = (s + 2.0) * (c * c - (s + 2.0) * s);
        assert!((iterated(2.0, 1.0, 0.0, 3, x) - v3).abs() < 1e-14);
    }
}
