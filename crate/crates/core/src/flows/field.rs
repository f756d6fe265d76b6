use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::Point;

type EvalFn = Arc<dyn Fn(&[f64]) -> Point + Send + Sync>;
type FlowFn = Arc<dyn Fn(f64, &[f64]) -> Point + Send + Sync>;
type DerivFn = Arc<dyn Fn(usize, &[f64]) -> Point + Send + Sync>;
type JacFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// Structural form of a field, when one is known.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldShape {
    /// `V(x) = A x + c`; `a` is row-major `N x N`.
    Affine {
        a: Vec<f64>,
        c: Vec<f64>,
    },
    /// `V(x) = a + b sin x + c cos x`, one-dimensional.
    Trig {
        a: f64,
        b: f64,
        c: f64,
    },
    General,
}

/// A smooth vector field on `R^N` with whatever closed-form data is available.
#[derive(Clone)]
pub struct VectorField {
    dim: usize,
    eval: EvalFn,
    shape: FieldShape,
    flow: Option<FlowFn>,
    derivatives: Option<DerivFn>,
    jacobian: Option<JacFn>,
    linear_growth: bool,
    finite_differences: bool,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("dim", &self.dim)
            .field("shape", &self.shape)
            .field("closed_form_flow", &self.flow.is_some())
            .field("closed_form_derivatives", &self.derivatives.is_some())
            .finish()
    }
}

fn mat_vec(a: &[f64], c: &[f64], x: &[f64]) -> Point {
    let n = x.len();
    (0..n)
        .map(|i| {
            let row = &a[i * n..(i + 1) * n];
            row.iter().zip(x).map(|(r, v)| r * v).sum::<f64>() + c[i]
        })
        .collect()
}

impl VectorField {
    pub fn zero(dim: usize) -> Self {
        VectorField::affine(vec![0.0; dim * dim], vec![0.0; dim])
    }

    /// `V(x) = A x + c` with `a` row-major.
    pub fn affine(a: Vec<f64>, c: Vec<f64>) -> Self {
        let dim = c.len();
        assert_eq!(a.len(), dim * dim, "affine field: A must be N x N");
        let (ae, ce) = (a.clone(), c.clone());
        let eval: EvalFn = Arc::new(move |x| mat_vec(&ae, &ce, x));

        let (af, cf) = (a.clone(), c.clone());
        let flow: FlowFn = if dim == 1 {
            Arc::new(move |t, x| {
                let (k, b) = (af[0], cf[0]);
                let e = (k * t).exp();
                let phi = if (k * t).abs() < 1e-8 {
                    t * (1.0 + 0.5 * k * t)
                } else {
                    (e - 1.0) / k
                };
                smallvec::smallvec![x[0] * e + b * phi]
            })
        } else {
            Arc::new(move |t, x| {
                // Augmented generator [[A, c], [0, 0]] carries the affine part.
                let m = DMatrix::from_fn(dim + 1, dim + 1, |i, j| {
                    if i == dim {
                        0.0
                    } else if j == dim {
                        cf[i] * t
                    } else {
                        af[i * dim + j] * t
                    }
                });
                let e = m.exp();
                (0..dim)
                    .map(|i| (0..dim).map(|j| e[(i, j)] * x[j]).sum::<f64>() + e[(i, dim)])
                    .collect()
            })
        };

        let (ad, cd) = (a.clone(), c.clone());
        let derivatives: DerivFn = Arc::new(move |k, x| {
            // V^k e_j (x) = e_j^T A^{k-1} (A x + c) for k >= 1.
            if k == 0 {
                return Point::from_slice(x);
            }
            let mut v = mat_vec(&ad, &cd, x);
            let zero = vec![0.0; dim];
            for _ in 1..k {
                v = mat_vec(&ad, &zero, &v);
            }
            v
        });

        let aj = a.clone();
        let jacobian: JacFn = Arc::new(move |_| DMatrix::from_row_slice(dim, dim, &aj));

        VectorField {
            dim,
            eval,
            shape: FieldShape::Affine { a, c },
            flow: Some(flow),
            derivatives: Some(derivatives),
            jacobian: Some(jacobian),
            linear_growth: true,
            finite_differences: false,
        }
    }

    /// One-dimensional `V(x) = k x + c`.
    pub fn affine_1d(k: f64, c: f64) -> Self {
        VectorField::affine(vec![k], vec![c])
    }

    /// One-dimensional `V(x) = a + b sin x + c cos x`; iterated derivatives are
    /// exact, the flow uses the reference solver.
    pub fn trig(a: f64, b: f64, c: f64) -> Self {
        let eval: EvalFn = Arc::new(move |x| smallvec::smallvec![a + b * x[0].sin() + c * x[0].cos()]);
        let derivatives: DerivFn = Arc::new(move |k, x| smallvec::smallvec![super::trig::iterated(a, b, c, k, x[0])]);
        let jacobian: JacFn = Arc::new(move |x| DMatrix::from_element(1, 1, b * x[0].cos() - c * x[0].sin()));
        VectorField {
            dim: 1,
            eval,
            shape: FieldShape::Trig { a, b, c },
            flow: None,
            derivatives: Some(derivatives),
            jacobian: Some(jacobian),
            linear_growth: true,
            finite_differences: false,
        }
    }

    /// Field given only by its evaluator. Attach closed forms with the `with_*`
    /// builders; otherwise derivatives need [`VectorField::allow_finite_differences`].
    pub fn general(dim: usize, f: impl Fn(&[f64]) -> Point + Send + Sync + 'static) -> Self {
        VectorField {
            dim,
            eval: Arc::new(f),
            shape: FieldShape::General,
            flow: None,
            derivatives: None,
            jacobian: None,
            linear_growth: true,
            finite_differences: false,
        }
    }

    pub fn with_flow(mut self, f: impl Fn(f64, &[f64]) -> Point + Send + Sync + 'static) -> Self {
        self.flow = Some(Arc::new(f));
        self
    }

    /// `f(k, x)` must return the vector `((V^k e_j)(x))_j`.
    pub fn with_derivatives(mut self, f: impl Fn(usize, &[f64]) -> Point + Send + Sync + 'static) -> Self {
        self.derivatives = Some(Arc::new(f));
        self
    }

    pub fn with_jacobian(mut self, f: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.jacobian = Some(Arc::new(f));
        self
    }

    pub fn with_linear_growth(mut self, flag: bool) -> Self {
        self.linear_growth = flag;
        self
    }

    /// Permit nested central differences when closed-form derivatives are absent.
    pub fn allow_finite_differences(mut self) -> Self {
        self.finite_differences = true;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &FieldShape {
        &self.shape
    }

    pub fn has_closed_form_flow(&self) -> bool {
        self.flow.is_some()
    }

    pub fn has_closed_form_derivatives(&self) -> bool {
        self.derivatives.is_some()
    }

    /// True when derivative data would come from finite differences.
    pub fn low_accuracy(&self) -> bool {
        self.derivatives.is_none() && self.finite_differences
    }

    pub fn linear_growth(&self) -> bool {
        self.linear_growth
    }

    pub fn is_zero(&self) -> bool {
        match &self.shape {
            FieldShape::Affine { a, c } => a.iter().chain(c).all(|v| *v == 0.0),
            FieldShape::Trig { a, b, c } => *a == 0.0 && *b == 0.0 && *c == 0.0,
            FieldShape::General => false,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Point {
        (self.eval)(x)
    }

    pub(crate) fn closed_flow(&self, t: f64, x: &[f64]) -> Option<Point> {
        self.flow.as_ref().map(|f| f(t, x))
    }

    /// `((V^k e_j)(x))_j`, closed form or finite differences.
    pub fn iterated(&self, k: usize, x: &[f64]) -> Result<Point> {
        if let Some(d) = &self.derivatives {
            return Ok(d(k, x));
        }
        if !self.finite_differences {
            return Err(Error::Config(
                "iterated derivatives unavailable and finite differences not enabled".into(),
            ));
        }
        Ok((0..self.dim).map(|j| self.fd_iterated(k, j, x)).collect())
    }

    fn fd_iterated(&self, k: usize, j: usize, x: &[f64]) -> f64 {
        if k == 0 {
            return x[j];
        }
        let scale = 1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let h = f64::EPSILON.powf(1.0 / (k as f64 + 2.0)) * scale;
        let v = self.eval(x);
        let plus: Point = x.iter().zip(&v).map(|(a, b)| a + h * b).collect();
        let minus: Point = x.iter().zip(&v).map(|(a, b)| a - h * b).collect();
        (self.fd_iterated(k - 1, j, &plus) - self.fd_iterated(k - 1, j, &minus)) / (2.0 * h)
    }

    /// Jacobian `(dV_i / dx_j)`.
    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        if let Some(j) = &self.jacobian {
            return Ok(j(x));
        }
        if !self.finite_differences {
            return Err(Error::Config(
                "Jacobian unavailable and finite differences not enabled".into(),
            ));
        }
        let n = self.dim;
        let mut jac = DMatrix::zeros(n, n);
        let scale = 1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let h = f64::EPSILON.cbrt() * scale;
        for col in 0..n {
            let mut xp = Point::from_slice(x);
            let mut xm = Point::from_slice(x);
            xp[col] += h;
            xm[col] -= h;
            let (fp, fm) = (self.eval(&xp), self.eval(&xm));
            for row in 0..n {
                jac[(row, col)] = (fp[row] - fm[row]) / (2.0 * h);
            }
        }
        Ok(jac)
    }

    /// `x -> s * V(x)`.
    pub fn scaled(&self, s: f64) -> VectorField {
        match &self.shape {
            FieldShape::Affine { a, c } => {
                VectorField::affine(a.iter().map(|v| v * s).collect(), c.iter().map(|v| v * s).collect())
            }
            FieldShape::Trig { a, b, c } => VectorField::trig(a * s, b * s, c * s),
            FieldShape::General => {
                let inner = self.clone();
                let mut out =
                    VectorField::general(self.dim, move |x| inner.eval(x).into_iter().map(|v| v * s).collect());
                out.linear_growth = self.linear_growth;
                out.finite_differences = true;
                if let Some(flow) = self.flow.clone() {
                    out.flow = Some(Arc::new(move |t, x| flow(s * t, x)));
                }
                if let Some(jac) = self.jacobian.clone() {
                    out.jacobian = Some(Arc::new(move |x| jac(x) * s));
                }
                out
            }
        }
    }

    /// Pointwise sum of fields of equal dimension.
    pub fn sum(fields: &[VectorField]) -> Result<VectorField> {
        let dim = fields
            .first()
            .map(|f| f.dim)
            .ok_or_else(|| Error::Config("sum of an empty field list".into()))?;
        if fields.iter().any(|f| f.dim != dim) {
            return Err(Error::Config("field dimensions differ".into()));
        }
        let affine: Option<Vec<(&Vec<f64>, &Vec<f64>)>> = fields
            .iter()
            .map(|f| match &f.shape {
                FieldShape::Affine { a, c } => Some((a, c)),
                _ => None,
            })
            .collect();
        if let Some(parts) = affine {
            let mut a = vec![0.0; dim * dim];
            let mut c = vec![0.0; dim];
            for (pa, pc) in parts {
                a.iter_mut().zip(pa).for_each(|(x, y)| *x += y);
                c.iter_mut().zip(pc).for_each(|(x, y)| *x += y);
            }
            return Ok(VectorField::affine(a, c));
        }
        let trig: Option<Vec<(f64, f64, f64)>> = fields
            .iter()
            .map(|f| match &f.shape {
                FieldShape::Trig { a, b, c } => Some((*a, *b, *c)),
                FieldShape::Affine { a, c } if dim == 1 && a[0] == 0.0 => Some((c[0], 0.0, 0.0)),
                _ => None,
            })
            .collect();
        if let Some(parts) = trig {
            let (a, b, c) = parts
                .into_iter()
                .fold((0.0, 0.0, 0.0), |s, p| (s.0 + p.0, s.1 + p.1, s.2 + p.2));
            return Ok(VectorField::trig(a, b, c));
        }
        let owned: Vec<VectorField> = fields.to_vec();
        let jac_owned = owned.clone();
        let mut out = VectorField::general(dim, move |x| {
            let mut acc: Point = smallvec::smallvec![0.0; x.len()];
            for f in &owned {
                for (a, v) in acc.iter_mut().zip(f.eval(x)) {
                    *a += v;
                }
            }
            acc
        });
        if fields.iter().all(|f| f.jacobian.is_some()) {
            out.jacobian = Some(Arc::new(move |x| {
                jac_owned
                    .iter()
                    .map(|f| f.jacobian(x).expect("jacobian checked"))
                    .fold(DMatrix::zeros(x.len(), x.len()), |a, b| a + b)
            }));
        }
        out.finite_differences = true;
        out.linear_growth = fields.iter().all(|f| f.linear_growth);
        Ok(out)
    }

    pub(crate) fn as_affine(&self) -> Option<(&[f64], &[f64])> {
        match &self.shape {
            FieldShape::Affine { a, c } => Some((a, c)),
            _ => None,
        }
    }
}

/// `V(x) = A x + c` from nalgebra parts.
pub fn affine_from(a: &DMatrix<f64>, c: &DVector<f64>) -> VectorField {
    let n = c.len();
    let rows: Vec<f64> = (0..n).flat_map(|i| (0..n).map(move |j| a[(i, j)])).collect();
    VectorField::affine(rows, c.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_iterated_derivatives() {
        let v = VectorField::affine_1d(2.0, 1.0);
        // V e = 2x + 1, V^2 e = 2(2x+1)
        assert_eq!(v.iterated(1, &[3.0]).unwrap()[0], 7.0);
        assert_eq!(v.iterated(2, &[3.0]).unwrap()[0], 14.0);
        assert_eq!(v.iterated(0, &[3.0]).unwrap()[0], 3.0);
    }

    #[test]
    fn finite_differences_are_flagged_and_close() {
        let v = VectorField::general(1, |x| smallvec::smallvec![x[0].sin() + 2.0]);
        assert!(matches!(v.iterated(1, &[0.3]), Err(Error::Config(_))));
        let v = v.allow_finite_differences();
        assert!(v.low_accuracy());
        let exact = VectorField::trig(2.0, 1.0, 0.0);
        for k in 1..=3 {
            let a = v.iterated(k, &[0.3]).unwrap()[0];
            let b = exact.iterated(k, &[0.3]).unwrap()[0];
            assert!((a - b).abs() < 1e-3 * (1.0 + b.abs()), "k={k}: {a} vs {b}");
        }
    }

    #[test]
    fn affine_flow_two_dimensional_matches_one_dimensional() {
        let v = VectorField::affine(vec![0.5, 0.0, 0.0, -1.0], vec![1.0, 2.0]);
        let y = v.closed_flow(0.7, &[1.0, 3.0]).unwrap();
        let a = VectorField::affine_1d(0.5, 1.0).closed_flow(0.7, &[1.0]).unwrap();
        let b = VectorField::affine_1d(-1.0, 2.0).closed_flow(0.7, &[3.0]).unwrap();
        assert!((y[0] - a[0]).abs() < 1e-12 && (y[1] - b[0]).abs() < 1e-12);
    }

    #[test]
    fn sums_keep_structure() {
        let s = VectorField::sum(&[VectorField::affine_1d(1.0, 0.0), VectorField::affine_1d(2.0, 1.0)]).unwrap();
        assert_eq!(
            s.shape(),
            &FieldShape::Affine {
                a: vec![3.0],
                c: vec![1.0]
            }
        );
        let t = VectorField::sum(&[VectorField::trig(0.0, 1.0, 0.0), VectorField::affine_1d(0.0, 2.0)]).unwrap();
        assert_eq!(t.shape(), &FieldShape::Trig { a: 2.0, b: 1.0, c: 0.0 });
    }
}
