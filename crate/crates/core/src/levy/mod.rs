//! Lévy measures: small-jump moments, tail masses, localized laws, the
//! `eps` selection rules and exact samplers.
//!
//! Regions are stated in terms of `|y|`. A `d`-dimensional measure is either a
//! product of independent one-dimensional measures (mass on the coordinate axes)
//! or a finite empirical measure.

mod measure;
mod quad;
mod sampler;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use measure::{CompoundPoisson, JumpDist, Measure1d, Side, TemperedStable};
pub use quad::{integrate, power_closed, power_weighted};
pub use sampler::{Sampler1d, DEFAULT_MAX_ITER};

use crate::error::{Error, Result};
use crate::Point;

/// `lo < |y| <= hi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Region {
    pub lo: f64,
    pub hi: f64,
}

impl Region {
    pub fn small(eps: f64) -> Self {
        Region { lo: 0.0, hi: eps }
    }

    /// `eps < |y| <= 1`, the part of the truncation window above `eps`.
    pub fn mid(eps: f64) -> Self {
        Region { lo: eps, hi: 1.0 }
    }

    pub fn tail(eps: f64) -> Self {
        Region {
            lo: eps,
            hi: f64::INFINITY,
        }
    }

    pub fn all() -> Self {
        Region {
            lo: 0.0,
            hi: f64::INFINITY,
        }
    }

    fn contains(&self, r: f64) -> bool {
        r > self.lo && r <= self.hi
    }
}

/// Positive reweighting `l(y)` of the measure.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Localization {
    /// `l = 1`.
    #[default]
    One,
    /// `l(y) = |y|^r`.
    Power(f64),
}

impl Localization {
    pub fn exponent(self) -> f64 {
        match self {
            Localization::One => 0.0,
            Localization::Power(r) => r,
        }
    }

    pub fn weight(self, y: &[f64]) -> f64 {
        match self {
            Localization::One => 1.0,
            Localization::Power(r) => norm(y).powf(r),
        }
    }
}

fn norm(y: &[f64]) -> f64 {
    y.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Lévy measure on `R^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevyMeasure {
    /// Independent components; component `k` lives on the `k`-th axis.
    Product(Vec<Measure1d>),
    /// `nu = sum_i w_i delta_{y_i}`.
    Empirical(Vec<(Vec<f64>, f64)>),
}

impl LevyMeasure {
    pub fn one_d(m: Measure1d) -> Self {
        LevyMeasure::Product(vec![m])
    }

    pub fn zero(d: usize) -> Self {
        LevyMeasure::Product(vec![Measure1d::Zero; d])
    }

    pub fn dim(&self) -> usize {
        match self {
            LevyMeasure::Product(v) => v.len(),
            LevyMeasure::Empirical(a) => a.first().map_or(0, |(y, _)| y.len()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LevyMeasure::Product(v) => {
                if v.is_empty() {
                    return Err(Error::Config("Lévy measure needs at least one component".into()));
                }
                v.iter().try_for_each(Measure1d::validate)
            }
            LevyMeasure::Empirical(a) => {
                let d = self.dim();
                if a.is_empty() || d == 0 {
                    return Err(Error::Config("empirical measure needs atoms".into()));
                }
                if a.iter().any(|(y, w)| y.len() != d || *w < 0.0 || !w.is_finite()) {
                    return Err(Error::Config(
                        "empirical atoms need equal dimensions and finite nonnegative weights".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            LevyMeasure::Product(v) => v.iter().all(Measure1d::is_zero),
            LevyMeasure::Empirical(a) => a.iter().all(|(y, w)| *w == 0.0 || norm(y) == 0.0),
        }
    }

    pub fn infinite_activity(&self) -> bool {
        match self {
            LevyMeasure::Product(v) => v.iter().any(Measure1d::infinite_activity),
            LevyMeasure::Empirical(_) => false,
        }
    }

    /// Largest activity index over components.
    pub fn activity_index(&self) -> f64 {
        match self {
            LevyMeasure::Product(v) => v.iter().map(Measure1d::activity_index).fold(0.0, f64::max),
            LevyMeasure::Empirical(_) => 0.0,
        }
    }

    /// The single component of a one-dimensional measure.
    pub fn as_1d(&self) -> Option<&Measure1d> {
        match self {
            LevyMeasure::Product(v) if v.len() == 1 => Some(&v[0]),
            _ => None,
        }
    }

    /// `int_region |y|^q nu(dy)`.
    pub fn abs_moment(&self, q: f64, region: Region) -> Result<f64> {
        match self {
            LevyMeasure::Product(v) => v.iter().map(|m| m.abs_power(q, region.lo, region.hi)).sum(),
            LevyMeasure::Empirical(a) => Ok(a
                .iter()
                .filter(|(y, _)| region.contains(norm(y)))
                .map(|(y, w)| w * norm(y).powf(q))
                .sum()),
        }
    }

    /// `int_region y nu(dy)` as a vector.
    pub fn first_moment(&self, region: Region) -> Result<Vec<f64>> {
        match self {
            LevyMeasure::Product(v) => v.iter().map(|m| m.signed_power(1, region.lo, region.hi)).collect(),
            LevyMeasure::Empirical(a) => {
                let mut out = vec![0.0; self.dim()];
                for (y, w) in a.iter().filter(|(y, _)| region.contains(norm(y))) {
                    for (o, v) in out.iter_mut().zip(y) {
                        *o += w * v;
                    }
                }
                Ok(out)
            }
        }
    }

    /// `int_region y y^T nu(dy)`.
    pub fn second_moment_matrix(&self, region: Region) -> Result<DMatrix<f64>> {
        let d = self.dim();
        match self {
            LevyMeasure::Product(v) => {
                let mut m = DMatrix::zeros(d, d);
                for (k, c) in v.iter().enumerate() {
                    m[(k, k)] = c.signed_power(2, region.lo, region.hi)?;
                }
                Ok(m)
            }
            LevyMeasure::Empirical(a) => {
                let mut m = DMatrix::zeros(d, d);
                for (y, w) in a.iter().filter(|(y, _)| region.contains(norm(y))) {
                    for i in 0..d {
                        for j in 0..d {
                            m[(i, j)] += w * y[i] * y[j];
                        }
                    }
                }
                Ok(m)
            }
        }
    }

    /// Prepared sampler for `l(y) nu(dy)` restricted to `region`.
    pub fn sampler(&self, region: Region, l: Localization) -> Result<RegionSampler> {
        let q = l.exponent();
        match self {
            LevyMeasure::Product(v) => {
                let mut parts = Vec::new();
                let mut total = 0.0;
                for (k, m) in v.iter().enumerate() {
                    let s = Sampler1d::new(m, q, region.lo, region.hi)?;
                    if s.mass() > 0.0 {
                        total += s.mass();
                        parts.push((k, s));
                    }
                }
                Ok(RegionSampler {
                    dim: v.len(),
                    parts,
                    atoms: Vec::new(),
                    total,
                })
            }
            LevyMeasure::Empirical(a) => {
                let atoms: Vec<(Vec<f64>, f64)> = a
                    .iter()
                    .filter(|(y, w)| *w > 0.0 && region.contains(norm(y)))
                    .map(|(y, w)| (y.clone(), w * l.weight(y)))
                    .collect();
                let total = atoms.iter().map(|(_, w)| w).sum();
                Ok(RegionSampler {
                    dim: self.dim(),
                    parts: Vec::new(),
                    atoms,
                    total,
                })
            }
        }
    }
}

/// Normalised sampler for a localized restriction of a measure.
#[derive(Clone, Debug)]
pub struct RegionSampler {
    dim: usize,
    parts: Vec<(usize, Sampler1d)>,
    atoms: Vec<(Vec<f64>, f64)>,
    total: f64,
}

impl RegionSampler {
    /// `int_region l dnu`, the normalising constant.
    pub fn mass(&self) -> f64 {
        self.total
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Point> {
        if !(self.total > 0.0) {
            return Err(Error::SamplerFailure("sampling from an empty region".into()));
        }
        let mut u = rng.random::<f64>() * self.total;
        for (y, w) in &self.atoms {
            if u < *w {
                return Ok(Point::from_slice(y));
            }
            u -= w;
        }
        let mut chosen = self.parts.last();
        for p in &self.parts {
            if u < p.1.mass() {
                chosen = Some(p);
                break;
            }
            u -= p.1.mass();
        }
        let (axis, s) = chosen.ok_or_else(|| Error::SamplerFailure("no sampling component".into()))?;
        let mut y: Point = smallvec::smallvec![0.0; self.dim];
        y[*axis] = s.sample(rng)?;
        Ok(y)
    }
}

/// `int_{|y| <= eps} |y|^k nu(dy)`.
pub fn small_moment(model: &LevyMeasure, k: u32, eps: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("small_moment needs k >= 1".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps = {eps} must be positive")));
    }
    model.abs_moment(k as f64, Region::small(eps))
}

/// `Sigma_eps = int_{|y| <= eps} y y^T nu(dy)`.
pub fn sigma_matrix(model: &LevyMeasure, eps: f64) -> Result<DMatrix<f64>> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps = {eps} must be positive")));
    }
    model.second_moment_matrix(Region::small(eps))
}

/// `A Lambda^{1/2}` from the eigendecomposition `Sigma = A Lambda A^T`.
pub fn sqrt_psd(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = sigma.nrows();
    if sigma.ncols() != n {
        return Err(Error::Domain("matrix is not square".into()));
    }
    let scale = sigma.amax().max(1.0);
    if (sigma - sigma.transpose()).amax() > 1e-10 * scale {
        return Err(Error::Domain("matrix is not symmetric".into()));
    }
    let eig = SymmetricEigen::new(sigma.clone());
    let mut out = eig.eigenvectors.clone();
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam < -1e-10 {
            return Err(Error::Domain(format!("negative eigenvalue {lam}")));
        }
        let s = lam.max(0.0).sqrt();
        for i in 0..n {
            out[(i, j)] *= s;
        }
    }
    Ok(out)
}

/// Which side of `eps` a localized mass is taken on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MassRegion {
    /// `C_{eps,l} = int_{|y| > eps} l dnu`.
    Tail,
    /// `lambda_eps = int_{|y| <= eps} l dnu`.
    Small,
}

pub fn tail_mass(model: &LevyMeasure, eps: f64, l: Localization, which: MassRegion) -> Result<f64> {
    let region = match which {
        MassRegion::Tail => Region::tail(eps),
        MassRegion::Small => Region::small(eps),
    };
    model.abs_moment(l.exponent(), region).map_err(|e| match e {
        Error::Domain(msg) => Error::Domain(format!(
            "localized mass over {which:?} region with l = {l:?} is infinite: {msg}"
        )),
        other => other,
    })
}

/// Moment controlling the cutoff error: second (drop small jumps) or third
/// (Gaussian replacement of small jumps).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffMode {
    Ignore,
    Ar,
}

impl CutoffMode {
    pub fn moment(self) -> u32 {
        match self {
            CutoffMode::Ignore => 2,
            CutoffMode::Ar => 3,
        }
    }
}

/// Largest `eps <= 1` with `int_{|y|<=eps} |y|^k nu <= t^{M+1}`, bisected in
/// `log eps` to relative tolerance `1e-9`.
pub fn eps_for_order(model: &LevyMeasure, t: f64, m: u32, mode: CutoffMode) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Domain(format!("t = {t} outside (0, 1]")));
    }
    if m == 0 {
        return Err(Error::Domain("order M must be at least 1".into()));
    }
    let k = mode.moment();
    let bound = t.powi(m as i32 + 1);
    let ok = |e: f64| -> Result<bool> { Ok(small_moment(model, k, e)? <= bound) };
    if ok(1.0)? {
        return Ok(1.0);
    }
    let mut hi = 1.0f64;
    let mut lo = 0.5f64;
    while !ok(lo)? {
        hi = lo;
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::Infeasible(format!(
                "no eps in (0, 1] meets the order-{m} cutoff bound at t = {t}"
            )));
        }
    }
    while hi / lo - 1.0 > 1e-9 {
        let mid = (lo * hi).sqrt();
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Rule producing the cutoff for a step of length `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsRule {
    Fixed(f64),
    /// `eps_for_order` with this `M` and the scheme's cutoff mode.
    Order(u32),
    /// `eps = min(1, t^p)`.
    Power(f64),
}

impl EpsRule {
    pub fn resolve(self, model: &LevyMeasure, t: f64, mode: CutoffMode) -> Result<f64> {
        match self {
            EpsRule::Fixed(e) => {
                if !(e > 0.0) {
                    return Err(Error::Config(format!("fixed eps = {e} must be positive")));
                }
                Ok(e)
            }
            EpsRule::Order(m) => eps_for_order(model, t, m, mode),
            EpsRule::Power(p) => {
                if !(p > 0.0) {
                    return Err(Error::Config(format!("eps power {p} must be positive")));
                }
                Ok(t.powf(p).min(1.0))
            }
        }
    }
}

/// Draw from `G_{eps,l} = C^{-1} l 1{|y|>eps} nu`.
pub fn sample_tail<R: Rng + ?Sized>(model: &LevyMeasure, eps: f64, l: Localization, rng: &mut R) -> Result<Point> {
    model.sampler(Region::tail(eps), l)?.sample(rng)
}

/// Draw from `F_eps^l = lambda_eps^{-1} l 1{|y|<=eps} nu`.
pub fn sample_small_localized<R: Rng + ?Sized>(
    model: &LevyMeasure,
    eps: f64,
    l: Localization,
    rng: &mut R,
) -> Result<Point> {
    tail_mass(model, eps, l, MassRegion::Small)?;
    model.sampler(Region::small(eps), l)?.sample(rng)
}

/// Lévy triplet `(b, 0, nu)` with truncation `tau(y) = y 1{|y| <= 1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LevyTriplet {
    pub drift: Vec<f64>,
    pub measure: LevyMeasure,
}

impl LevyTriplet {
    pub fn new(drift: Vec<f64>, measure: LevyMeasure) -> Result<Self> {
        measure.validate()?;
        if drift.len() != measure.dim() {
            return Err(Error::Config(format!(
                "drift has length {} but the measure is {}-dimensional",
                drift.len(),
                measure.dim()
            )));
        }
        Ok(LevyTriplet { drift, measure })
    }

    /// Drift making the process a pure sum of jumps when `int_{|y|<=1} |y| nu`
    /// is finite; zero otherwise.
    pub fn pure_jump(measure: LevyMeasure) -> Result<Self> {
        measure.validate()?;
        let drift = match measure.abs_moment(1.0, Region::small(1.0)) {
            Ok(_) => measure.first_moment(Region::small(1.0))?,
            Err(Error::Domain(_)) => vec![0.0; measure.dim()],
            Err(e) => return Err(e),
        };
        Ok(LevyTriplet { drift, measure })
    }

    pub fn dim(&self) -> usize {
        self.drift.len()
    }

    /// `b - int_{eps < |y| <= 1} y nu(dy)`.
    pub fn compensated_drift(&self, eps: f64) -> Result<Vec<f64>> {
        let comp = if eps < 1.0 {
            self.measure.first_moment(Region::mid(eps))?
        } else {
            vec![0.0; self.dim()]
        };
        Ok(self.drift.iter().zip(comp).map(|(b, c)| b - c).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ts(alpha: f64, cp: f64, cm: f64, lam: f64) -> LevyMeasure {
        LevyMeasure::one_d(Measure1d::TemperedStable(TemperedStable {
            alpha,
            c_plus: cp,
            c_minus: cm,
            lambda_plus: lam,
            lambda_minus: lam,
            y_max: None,
        }))
    }

    #[test]
    fn small_moment_examples() {
        let cp = LevyMeasure::one_d(Measure1d::CompoundPoisson(CompoundPoisson {
            intensity: 2.0,
            jump_dist: JumpDist::Atoms(vec![(1.0, 0.5), (-1.5, 0.5)]),
        }));
        for k in 1..5 {
            assert_eq!(small_moment(&cp, k, 0.5).unwrap(), 0.0);
        }
        let m = ts(0.5, 1.0, 1.0, 0.0);
        for eps in [0.1, 0.5, 1.0] {
            let v = small_moment(&m, 2, eps).unwrap();
            let want = 4.0 / 3.0 * eps.powf(1.5);
            assert!((v - want).abs() < 1e-14 * want);
        }
        let m = ts(0.5, 1.0, 1.0, 1.0);
        let eps = 1e-3f64;
        let v = small_moment(&m, 2, eps).unwrap();
        let asym = 4.0 / 3.0 * eps.powf(1.5);
        assert!((v / asym - 1.0).abs() < 1e-3);
    }

    #[test]
    fn sigma_and_sqrt() {
        let m = ts(0.5, 1.0, 1.0, 0.0);
        let s = sigma_matrix(&m, 0.1).unwrap();
        assert!((s[(0, 0)] - 0.042_163_702_135_578_39).abs() < 1e-12);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 9.0]));
        let r = sqrt_psd(&d).unwrap();
        assert!((&r * r.transpose() - &d).amax() < 1e-12);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(sqrt_psd(&bad), Err(Error::Domain(_))));
        let id = DMatrix::<f64>::identity(3, 3);
        let r = sqrt_psd(&id).unwrap();
        assert!((&r * r.transpose() - &id).amax() < 1e-14);
    }

    #[test]
    fn tail_mass_examples() {
        let m = ts(0.5, 1.0, 0.0, 0.0);
        for eps in [0.01, 0.25, 1.0] {
            let c = tail_mass(&m, eps, Localization::One, MassRegion::Tail).unwrap();
            assert!((c - 2.0 / eps.sqrt()).abs() < 1e-12 * c);
        }
        assert!(matches!(
            tail_mass(&m, 0.1, Localization::One, MassRegion::Small),
            Err(Error::Domain(_))
        ));
        let cp = LevyMeasure::one_d(Measure1d::CompoundPoisson(CompoundPoisson::atom(3.0, 0.2)));
        let c = tail_mass(&cp, 1e-12, Localization::One, MassRegion::Tail).unwrap();
        assert_eq!(c, 3.0);
    }

    #[test]
    fn eps_rules() {
        assert_eq!(
            eps_for_order(&LevyMeasure::zero(1), 0.1, 2, CutoffMode::Ar).unwrap(),
            1.0
        );
        let m = ts(0.5, 1.0, 0.0, 0.0);
        // One-sided: sigma^2(eps) = (2/3) eps^{3/2}.
        let t = 0.05f64;
        let e = eps_for_order(&m, t, 1, CutoffMode::Ignore).unwrap();
        let want = (1.5 * t * t).powf(2.0 / 3.0);
        assert!((e / want - 1.0).abs() < 1e-8);
        let m2 = ts(0.5, 1.0, 1.0, 0.0);
        let e = eps_for_order(&m2, t, 1, CutoffMode::Ignore).unwrap();
        let want = (0.75 * t * t).powf(2.0 / 3.0);
        assert!((e / want - 1.0).abs() < 1e-8);
        let p = EpsRule::Power(0.5).resolve(&m, 1.0 / 64.0, CutoffMode::Ar).unwrap();
        assert_eq!(p, 0.125);
        assert!(matches!(
            eps_for_order(&m, 1.5, 1, CutoffMode::Ar),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn samplers_respect_support_and_atoms() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = ts(0.5, 1.0, 1.0, 1.0);
        for _ in 0..2000 {
            assert!(sample_tail(&m, 0.3, Localization::One, &mut rng).unwrap()[0].abs() > 0.3);
            let y = sample_small_localized(&m, 0.3, Localization::Power(2.0), &mut rng).unwrap();
            assert!(y[0].abs() <= 0.3 && y[0] != 0.0);
        }
        let cp = LevyMeasure::one_d(Measure1d::CompoundPoisson(CompoundPoisson::atom(1.0, 1.0)));
        for _ in 0..100 {
            assert_eq!(sample_tail(&cp, 0.5, Localization::One, &mut rng).unwrap()[0], 1.0);
        }
        let heavy = ts(0.5, 1.0, 1.0, 0.0);
        assert!(matches!(
            sample_small_localized(&heavy, 0.1, Localization::Power(0.4), &mut rng),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn triplet_drifts() {
        let m = ts(0.5, 1.0, 0.0, 0.0);
        let tr = LevyTriplet::new(vec![1.0], m.clone()).unwrap();
        let d = tr.compensated_drift(0.25).unwrap();
        assert!((d[0] - 0.0).abs() < 1e-14);
        let pj = LevyTriplet::pure_jump(m).unwrap();
        assert!((pj.drift[0] - 2.0).abs() < 1e-14);
        let cauchy = ts(1.0, 1.0, 1.0, 1.0);
        assert_eq!(LevyTriplet::pure_jump(cauchy).unwrap().drift, vec![0.0]);
    }
}
