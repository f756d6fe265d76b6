//! Adaptive Dormand–Prince 5(4) integrator used as the reference flow when a
//! field has no closed-form solution.

use super::VectorField;
use crate::error::{numerical, Result};
use crate::Point;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceSolver {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for ReferenceSolver {
    fn default() -> Self {
        ReferenceSolver {
            rtol: 1e-12,
            atol: 1e-14,
            max_steps: 1_000_000,
        }
    }
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

impl ReferenceSolver {
    /// Integrate `dz/ds = V(z)` from `s = 0` to `s = t` (either sign).
    pub fn solve(&self, v: &VectorField, t: f64, x: &[f64]) -> Result<Point> {
        if t == 0.0 {
            return Ok(Point::from_slice(x));
        }
        let dir = t.signum();
        let total = t.abs();
        let n = x.len();
        let mut y = Point::from_slice(x);
        let mut s = 0.0;
        let mut h = (total * 0.01).min(0.05).max(1e-6 * total);
        let mut k: [Point; 7] = std::array::from_fn(|_| Point::new());
        k[0] = v.eval(&y);
        let mut steps = 0usize;
        while s < total {
            steps += 1;
            if steps > self.max_steps {
                return Err(numerical("reference solver exceeded step budget", &y));
            }
            let last = s + h >= total;
            if last {
                h = total - s;
            }
            let hs = h * dir;
            for i in 1..7 {
                let yi: Point = (0..n)
                    .map(|m| y[m] + hs * (0..i).map(|j| A[i][j] * k[j][m]).sum::<f64>())
                    .collect();
                k[i] = v.eval(&yi);
            }
            let y_new: Point = (0..n)
                .map(|m| y[m] + hs * (0..6).map(|j| A[6][j] * k[j][m]).sum::<f64>())
                .collect();
            let mut err = 0.0f64;
            for m in 0..n {
                let e = hs * (0..7).map(|j| E[j] * k[j][m]).sum::<f64>();
                let sc = self.atol + self.rtol * y[m].abs().max(y_new[m].abs());
                err = err.max((e / sc).abs());
            }
            if !err.is_finite() || y_new.iter().any(|z| !z.is_finite()) {
                if h < 1e-14 * total.max(1.0) {
                    return Err(numerical("reference solver produced non-finite state", &y));
                }
                h *= 0.25;
                continue;
            }
            if err <= 1.0 {
                // The clipped remainder can round short of `total`.
                s = if last { total } else { s + h };
                y = y_new;
                // First-same-as-last: stage 7 is the derivative at the new point.
                k[0] = k[6].clone();
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= factor;
            if h < 1e-15 * total.max(1.0) {
                return Err(numerical("reference solver step size underflow", &y));
            }
        }
        Ok(y)
    }
}
