//! Exact samplers for restricted and reweighted one-dimensional Lévy measures.

use rand::Rng;
use rand_distr::StandardNormal;

use super::measure::{JumpDist, Measure1d, Side};
use super::quad::power_weighted;
use crate::error::{Error, Result};

/// Default rejection cap per draw.
pub const DEFAULT_MAX_ITER: usize = 1_000_000;

fn uniform_open<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // (0, 1]
    1.0 - rng.random::<f64>()
}

/// Inverse CDF of the density proportional to `y^beta` on `(lo, hi]`.
fn power_inv(beta: f64, lo: f64, hi: f64, u: f64) -> f64 {
    let g = beta + 1.0;
    if g.abs() < 1e-12 {
        return lo * (hi / lo).powf(u);
    }
    let a = if lo == 0.0 { 0.0 } else { lo.powf(g) };
    let b = if hi.is_finite() { hi.powf(g) } else { 0.0 };
    let y = (a + u * (b - a)).powf(1.0 / g);
    y.clamp(lo, hi)
}

/// Density proportional to `y^beta e^{-lam y}` on `(a, b]`, drawn exactly by
/// splitting into a power-law piece and an exponential piece, each with
/// rejection, chosen in proportion to their exact masses.
#[derive(Clone, Debug)]
pub(crate) struct PowerExp {
    beta: f64,
    lam: f64,
    a: f64,
    b: f64,
    c: f64,
    p_first: f64,
    peak: f64,
    pub(crate) mass: f64,
}

impl PowerExp {
    pub(crate) fn new(beta: f64, lam: f64, a: f64, b: f64) -> Result<Self> {
        if lam == 0.0 {
            if (a == 0.0 && beta <= -1.0) || (!b.is_finite() && beta >= -1.0) {
                return Err(Error::Domain(format!(
                    "density y^{beta} is not normalisable on ({a}, {b}]"
                )));
            }
            let mass = super::quad::power_closed(beta, a, b)?;
            return Ok(PowerExp {
                beta,
                lam,
                a,
                b,
                c: b,
                p_first: 1.0,
                peak: 0.0,
                mass,
            });
        }
        let c = b.min(a + 1.0 / lam);
        let m1 = power_weighted(beta, |y| (-lam * y).exp(), a, c)?;
        let m2 = if c < b {
            power_weighted(beta, |y| (-lam * y).exp(), c, b)?
        } else {
            0.0
        };
        let mass = m1 + m2;
        if !(mass > 0.0) {
            return Err(Error::Domain("empty sampling region".into()));
        }
        let peak = (2.0 * beta / lam).clamp(c, if b.is_finite() { b } else { f64::MAX });
        Ok(PowerExp {
            beta,
            lam,
            a,
            b,
            c,
            p_first: m1 / mass,
            peak,
            mass,
        })
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R, max_iter: usize) -> Result<f64> {
        // The piece is fixed before rejection so each piece keeps its exact mass.
        let first = self.p_first >= 1.0 || rng.random::<f64>() < self.p_first;
        for _ in 0..max_iter {
            if first {
                let y = power_inv(self.beta, self.a, self.c, uniform_open(rng));
                if self.lam == 0.0 {
                    return Ok(y);
                }
                let accept = (-self.lam * (y - self.a)).exp();
                if rng.random::<f64>() < accept {
                    return Ok(y);
                }
            } else {
                let rate = if self.beta > 0.0 { 0.5 * self.lam } else { self.lam };
                let span = self.b - self.c;
                let u = uniform_open(rng);
                let y = if span.is_finite() {
                    self.c - (1.0 - u * (1.0 - (-rate * span).exp())).ln() / rate
                } else {
                    self.c - u.ln() / rate
                };
                let accept = if self.beta > 0.0 {
                    (y / self.peak).powf(self.beta) * (-0.5 * self.lam * (y - self.peak)).exp()
                } else {
                    (y / self.c).powf(self.beta)
                };
                if y > self.c && y <= self.b && rng.random::<f64>() < accept {
                    return Ok(y);
                }
            }
        }
        Err(Error::SamplerFailure(format!(
            "power-exponential sampler exceeded {max_iter} iterations"
        )))
    }
}

#[derive(Clone, Debug)]
enum Piece {
    PowerExp(PowerExp),
    /// Normal law restricted to `|y|` in `(lo, hi]` on one side, weighted by `|y|^q`.
    Normal {
        mean: f64,
        std: f64,
        q: f64,
        lo: f64,
        hi: f64,
        peak: f64,
    },
}

/// Sampler for `|y|^q nu(dy)` restricted to `lo < |y| <= hi`, normalised.
#[derive(Clone, Debug)]
pub struct Sampler1d {
    sides: Vec<(Side, f64, Piece)>,
    atoms: Vec<(f64, f64)>,
    total: f64,
    max_iter: usize,
}

impl Sampler1d {
    pub fn new(m: &Measure1d, q: f64, lo: f64, hi: f64) -> Result<Self> {
        let mut s = Sampler1d {
            sides: Vec::new(),
            atoms: Vec::new(),
            total: 0.0,
            max_iter: DEFAULT_MAX_ITER,
        };
        match m {
            Measure1d::Zero => {}
            Measure1d::TemperedStable(ts) => {
                let hi = ts.y_max.map_or(hi, |c| hi.min(c));
                for (side, c, lam) in [
                    (Side::Plus, ts.c_plus, ts.lambda_plus),
                    (Side::Minus, ts.c_minus, ts.lambda_minus),
                ] {
                    if c == 0.0 || hi <= lo {
                        continue;
                    }
                    let pe = PowerExp::new(q - 1.0 - ts.alpha, lam, lo, hi)?;
                    let w = c * pe.mass;
                    s.total += w;
                    s.sides.push((side, w, Piece::PowerExp(pe)));
                }
            }
            Measure1d::CompoundPoisson(cp) => match &cp.jump_dist {
                JumpDist::Atoms(atoms) => {
                    for &(y, p) in atoms {
                        if y != 0.0 && y.abs() > lo && y.abs() <= hi && p > 0.0 {
                            let w = cp.intensity * p * y.abs().powf(q);
                            s.total += w;
                            s.atoms.push((y, w));
                        }
                    }
                }
                JumpDist::Normal { mean, std } => {
                    let reach = mean.abs() + 40.0 * std;
                    let hi = hi.min(reach);
                    for side in [Side::Plus, Side::Minus] {
                        let w = m.side_power(side, q, lo, hi)?;
                        if w > 0.0 {
                            let sm = side.sign() * mean;
                            let peak_y = sm.clamp(lo, hi);
                            let z = (peak_y - sm) / std;
                            let peak = (-0.5 * z * z).exp();
                            s.total += w;
                            s.sides.push((
                                side,
                                w,
                                Piece::Normal {
                                    mean: sm,
                                    std: *std,
                                    q,
                                    lo,
                                    hi,
                                    peak,
                                },
                            ));
                        }
                    }
                }
            },
        }
        Ok(s)
    }

    pub fn with_max_iter(mut self, n: usize) -> Self {
        self.max_iter = n;
        self
    }

    /// Total weighted mass `int |y|^q nu` over the region.
    pub fn mass(&self) -> f64 {
        self.total
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        if !(self.total > 0.0) {
            return Err(Error::SamplerFailure("sampling from an empty region".into()));
        }
        let mut u = rng.random::<f64>() * self.total;
        for &(y, w) in &self.atoms {
            if u < w {
                return Ok(y);
            }
            u -= w;
        }
        let pick = self
            .sides
            .iter()
            .find(|(_, w, _)| {
                let hit = u < *w;
                if !hit {
                    u -= *w;
                }
                hit
            })
            .or_else(|| self.sides.last())
            .ok_or_else(|| Error::SamplerFailure("no sampling component".into()))?;
        let (side, _, piece) = pick;
        let y = match piece {
            Piece::PowerExp(pe) => pe.sample(rng, self.max_iter)?,
            Piece::Normal {
                mean,
                std,
                q,
                lo,
                hi,
                peak,
            } => sample_normal_piece(*mean, *std, *q, *lo, *hi, *peak, rng, self.max_iter)?,
        };
        Ok(side.sign() * y)
    }
}

#[allow(clippy::too_many_arguments)]
fn sample_normal_piece<R: Rng + ?Sized>(
    mean: f64,
    std: f64,
    q: f64,
    lo: f64,
    hi: f64,
    peak: f64,
    rng: &mut R,
    max_iter: usize,
) -> Result<f64> {
    for _ in 0..max_iter {
        if q == 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            let y = mean + std * z;
            if y > lo && y <= hi {
                return Ok(y);
            }
        } else {
            let y = power_inv(q, lo, hi, uniform_open(rng));
            let z = (y - mean) / std;
            if rng.random::<f64>() * peak < (-0.5 * z * z).exp() {
                return Ok(y);
            }
        }
    }
    Err(Error::SamplerFailure(format!(
        "normal-jump sampler exceeded {max_iter} iterations"
    )))
}
