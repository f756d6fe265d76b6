//! Adaptive Gauss–Kronrod quadrature and power-weighted integrals
//! `int_lo^hi y^e g(y) dy` with the substitutions needed near `0` and `inf`.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const REL_TOL: f64 = 1e-12;
const MAX_DEPTH: u32 = 60;

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adapt(f: &impl Fn(f64) -> f64, a: f64, b: f64, whole: f64, depth: u32) -> f64 {
    let (val, err) = gk15(f, a, b);
    if depth >= MAX_DEPTH || err <= REL_TOL * whole.abs().max(1e-300) || err < 1e-300 {
        return val;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, whole, depth + 1) + adapt(f, m, b, whole, depth + 1)
}

/// Adaptive integral of a smooth `f` over a finite `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (rough, _) = gk15(&f, a, b);
    // Refine against a coarse global estimate so tiny sub-intervals stop early.
    let mut coarse = 0.0;
    let pieces = 8;
    for i in 0..pieces {
        let lo = a + (b - a) * i as f64 / pieces as f64;
        let hi = a + (b - a) * (i + 1) as f64 / pieces as f64;
        coarse += gk15(&f, lo, hi).0.abs();
    }
    let scale = coarse.max(rough.abs());
    let mut total = 0.0;
    for i in 0..pieces {
        let lo = a + (b - a) * i as f64 / pieces as f64;
        let hi = a + (b - a) * (i + 1) as f64 / pieces as f64;
        total += adapt(&f, lo, hi, scale, 0);
    }
    total
}

/// `int_lo^hi y^e g(y) dy` for a smooth bounded `g >= 0` on `(lo, hi)`, `0 <= lo`,
/// `hi` possibly infinite. `g` must decay fast enough for infinite `hi`.
pub fn power_weighted(e: f64, g: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    let mut total = 0.0;
    let mut lo = lo;
    if lo == 0.0 {
        if e <= -1.0 {
            return Err(Error::Domain(format!("integral of y^{e} diverges at the origin")));
        }
        // u = y^{e+1}: y^e dy = du / (e+1), smooth in u.
        let m = hi.min(1.0);
        let p = e + 1.0;
        total += integrate(|u| g(u.powf(1.0 / p)), 0.0, m.powf(p)) / p;
        lo = m;
        if hi <= m {
            return Ok(total);
        }
    }
    let split = if hi.is_finite() { hi } else { lo.max(1.0) };
    if split > lo {
        // y = exp(s): y^e dy = y^{e+1} ds.
        total += integrate(
            |s| {
                let y = s.exp();
                y.powf(e + 1.0) * g(y)
            },
            lo.ln(),
            split.ln(),
        );
    }
    if !hi.is_finite() {
        // y = split + (1-u)/u on (0, 1].
        total += integrate(
            |u| {
                if u <= 0.0 {
                    return 0.0;
                }
                let y = split + (1.0 - u) / u;
                let v = y.powf(e) * g(y) / (u * u);
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            },
            0.0,
            1.0,
        );
    }
    if !total.is_finite() {
        return Err(Error::Domain("power-weighted integral is not finite".into()));
    }
    Ok(total)
}

/// Closed form `int_lo^hi y^e dy` (the `g = 1` case), `Domain` error if divergent.
pub fn power_closed(e: f64, lo: f64, hi: f64) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    let p = e + 1.0;
    if p == 0.0 {
        if lo == 0.0 || !hi.is_finite() {
            return Err(Error::Domain("logarithmic divergence of y^-1 integral".into()));
        }
        return Ok((hi / lo).ln());
    }
    if p < 0.0 && lo == 0.0 {
        return Err(Error::Domain(format!("integral of y^{e} diverges at the origin")));
    }
    if p > 0.0 && !hi.is_finite() {
        return Err(Error::Domain(format!("integral of y^{e} diverges at infinity")));
    }
    let top = if hi.is_finite() { hi.powf(p) } else { 0.0 };
    let bottom = if lo == 0.0 { 0.0 } else { lo.powf(p) };
    Ok((top - bottom) / p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::{gamma, gamma_ui};

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0);
        assert!((v - 0.0).abs() < 1e-13);
        let v = integrate(|x| x.powi(10), 0.0, 1.0);
        assert!((v - 1.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn closed_forms_match_quadrature() {
        for &(e, lo, hi) in &[
            (-0.5, 0.0, 0.3),
            (1.5, 0.1, 2.0),
            (-1.5, 0.25, f64::INFINITY),
            (-1.0, 0.5, 3.0),
        ] {
            let c = power_closed(e, lo, hi).unwrap();
            let q = power_weighted(e, |_| 1.0, lo, hi).unwrap();
            assert!((c - q).abs() < 1e-9 * c.abs(), "{e} {lo} {hi}: {c} vs {q}");
        }
        assert!(power_closed(-1.5, 0.0, 1.0).is_err());
        assert!(power_closed(0.5, 1.0, f64::INFINITY).is_err());
        assert!(power_weighted(-1.0, |_| 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn tempered_integrals_match_incomplete_gamma() {
        // int_lo^inf y^{p-1} e^{-y} dy = Gamma(p, lo), the unregularised upper function.
        for &(p, lo) in &[(0.5, 0.0), (1.5, 0.0), (2.5, 0.3), (0.5, 1e-3), (3.0, 4.0)] {
            let q = power_weighted(p - 1.0, |y| (-y).exp(), lo, f64::INFINITY).unwrap();
            let want = if lo == 0.0 { gamma(p) } else { gamma_ui(p, lo) };
            assert!((q - want).abs() < 1e-10 * want, "p={p} lo={lo}: {q} vs {want}");
        }
        // Finite window: Gamma(p, a) - Gamma(p, b).
        let (p, a, b) = (1.5f64, 0.2f64, 0.9f64);
        let q = power_weighted(p - 1.0, |y| (-y).exp(), a, b).unwrap();
        let want = gamma_ui(p, a) - gamma_ui(p, b);
        assert!((q - want).abs() < 1e-11 * want);
    }
}
