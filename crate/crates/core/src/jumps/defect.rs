use super::JumpCoefficient;
use crate::error::{Error, Result};
use crate::levy::{CutoffMode, LevyMeasure};
use crate::poly::Polynomial;

/// Highest supported test-function degree.
pub const MAX_DEFECT_DEGREE: usize = 6;

/// `int_{|y| <= eps} y^j nu(dy)` for a one-dimensional measure.
fn small_signed_moment(model: &LevyMeasure, j: u32, eps: f64) -> Result<f64> {
    match model {
        LevyMeasure::Product(v) if v.len() == 1 => v[0].signed_power(j, 0.0, eps),
        LevyMeasure::Empirical(a) if model.dim() == 1 => Ok(a
            .iter()
            .filter(|(y, _)| y[0] != 0.0 && y[0].abs() <= eps)
            .map(|(y, w)| w * y[0].powi(j as i32))
            .sum()),
        _ => Err(Error::Config("generator defect needs a one-dimensional measure".into())),
    }
}

/// Exact generator defect `(L - L^eps) f(x)` of the cutoff driver, for `N = d = 1`:
/// `sum_{j >= j0} f^{(j)}(x) h(x)^j / j! int_{|y| <= eps} y^j nu(dy)` with `j0 = 2`
/// when small jumps are dropped and `j0 = 3` when they are replaced by a Gaussian
/// with matched variance.
pub fn per_step_defect(
    model: &LevyMeasure,
    h: &JumpCoefficient,
    f: &Polynomial,
    x: f64,
    eps: f64,
    variant: CutoffMode,
) -> Result<f64> {
    if h.dim() != 1 || h.driver_dim() != 1 {
        return Err(Error::Config("generator defect needs N = d = 1".into()));
    }
    if f.degree() > MAX_DEFECT_DEGREE {
        return Err(Error::Config(format!(
            "test function of degree {} exceeds the supported degree {MAX_DEFECT_DEGREE}",
            f.degree()
        )));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Domain(format!("eps = {eps} outside (0, 1]")));
    }
    let hx = h.eval(&[x])?[(0, 0)];
    let start = match variant {
        CutoffMode::Ignore => 2,
        CutoffMode::Ar => 3,
    };
    let mut total = 0.0;
    let mut fact = 1.0;
    for j in 1..=f.degree() {
        fact *= j as f64;
        if j < start {
            continue;
        }
        let dj = f.derivative(j).eval(x);
        if dj == 0.0 || hx == 0.0 {
            continue;
        }
        total += dj * hx.powi(j as i32) / fact * small_signed_moment(model, j as u32, eps)?;
    }
    Ok(total)
}
