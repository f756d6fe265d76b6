use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{numerical, Error, Result};
use crate::flows::VectorField;
use crate::Point;

type MatFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

#[derive(Clone)]
enum Form {
    /// Column `k` is `A_k x + c_k`, `A_k` row-major `N x N`.
    Affine {
        a: Vec<Vec<f64>>,
        c: Vec<Vec<f64>>,
    },
    General(MatFn),
}

/// Jump coefficient `h: R^N -> R^{N x d}`; a jump `y` moves `x` to `x + h(x) y`.
#[derive(Clone)]
pub struct JumpCoefficient {
    n: usize,
    d: usize,
    form: Form,
    lipschitz: Option<f64>,
    bounded_derivatives: bool,
}

impl fmt::Debug for JumpCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let form = match &self.form {
            Form::Affine { a, c } => format!("Affine {{ a: {a:?}, c: {c:?} }}"),
            Form::General(_) => "General".to_string(),
        };
        f.debug_struct("JumpCoefficient")
            .field("n", &self.n)
            .field("d", &self.d)
            .field("form", &form)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl JumpCoefficient {
    /// Affine columns `(A_k, c_k)`.
    pub fn affine(columns: Vec<(Vec<f64>, Vec<f64>)>) -> Result<Self> {
        let d = columns.len();
        let n = columns.first().map_or(0, |(_, c)| c.len());
        if d == 0 || n == 0 {
            return Err(Error::Config("jump coefficient needs N, d >= 1".into()));
        }
        if columns.iter().any(|(a, c)| a.len() != n * n || c.len() != n) {
            return Err(Error::Config(format!(
                "affine jump coefficient columns must be ({n}x{n}, {n})"
            )));
        }
        let lip = columns
            .iter()
            .map(|(a, _)| a.iter().map(|v| v * v).sum::<f64>().sqrt())
            .sum();
        let (a, c) = columns.into_iter().unzip();
        Ok(JumpCoefficient {
            n,
            d,
            form: Form::Affine { a, c },
            lipschitz: Some(lip),
            bounded_derivatives: true,
        })
    }

    /// `h(x) = a x + c` with `N = d = 1`.
    pub fn affine_1d(a: f64, c: f64) -> Self {
        JumpCoefficient::affine(vec![(vec![a], vec![c])]).expect("1x1 shape is valid")
    }

    pub fn zero(n: usize, d: usize) -> Self {
        JumpCoefficient::affine(vec![(vec![0.0; n * n], vec![0.0; n]); d]).expect("zero coefficient shape is valid")
    }

    /// Arbitrary smooth `h`; the closure must return an `n x d` matrix.
    pub fn general(n: usize, d: usize, h: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        JumpCoefficient {
            n,
            d,
            form: Form::General(Arc::new(h)),
            lipschitz: None,
            bounded_derivatives: false,
        }
    }

    /// Declared Lipschitz bound.
    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }

    pub fn with_bounded_derivatives(mut self, flag: bool) -> Self {
        self.bounded_derivatives = flag;
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn driver_dim(&self) -> usize {
        self.d
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn bounded_derivatives(&self) -> bool {
        self.bounded_derivatives
    }

    pub fn is_zero(&self) -> bool {
        match &self.form {
            Form::Affine { a, c } => a.iter().chain(c).all(|v| v.iter().all(|x| *x == 0.0)),
            Form::General(_) => false,
        }
    }

    /// `(a, c)` when `h(x) = a x + c` in one dimension.
    pub fn as_affine_1d(&self) -> Option<(f64, f64)> {
        match &self.form {
            Form::Affine { a, c } if self.n == 1 && self.d == 1 => Some((a[0][0], c[0][0])),
            _ => None,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        match &self.form {
            Form::Affine { a, c } => {
                let n = self.n;
                Ok(DMatrix::from_fn(n, self.d, |i, k| {
                    (0..n).map(|j| a[k][i * n + j] * x[j]).sum::<f64>() + c[k][i]
                }))
            }
            Form::General(h) => {
                let m = h(x);
                if m.nrows() != self.n || m.ncols() != self.d {
                    return Err(Error::Config(format!(
                        "jump coefficient returned {}x{}, expected {}x{}",
                        m.nrows(),
                        m.ncols(),
                        self.n,
                        self.d
                    )));
                }
                Ok(m)
            }
        }
    }

    /// `x + h(x) y`.
    pub fn apply(&self, x: &[f64], y: &[f64]) -> Result<Point> {
        let out: Point = match &self.form {
            Form::Affine { a, c } => {
                let n = self.n;
                let mut out = Point::from_slice(x);
                for (k, &yk) in y.iter().enumerate() {
                    if yk == 0.0 {
                        continue;
                    }
                    for i in 0..n {
                        let col: f64 = (0..n).map(|j| a[k][i * n + j] * x[j]).sum::<f64>() + c[k][i];
                        out[i] += col * yk;
                    }
                }
                out
            }
            Form::General(_) => {
                let m = self.eval(x)?;
                (0..self.n)
                    .map(|i| x[i] + (0..self.d).map(|k| m[(i, k)] * y[k]).sum::<f64>())
                    .collect()
            }
        };
        if out.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(numerical("non-finite state after a jump", &out))
        }
    }

    /// The vector field `x -> h(x) w`.
    pub fn field(&self, w: &[f64]) -> VectorField {
        let n = self.n;
        match &self.form {
            Form::Affine { a, c } => {
                let mut aw = vec![0.0; n * n];
                let mut cw = vec![0.0; n];
                for (k, &wk) in w.iter().enumerate() {
                    for (t, s) in aw.iter_mut().zip(&a[k]) {
                        *t += wk * s;
                    }
                    for (t, s) in cw.iter_mut().zip(&c[k]) {
                        *t += wk * s;
                    }
                }
                VectorField::affine(aw, cw)
            }
            Form::General(h) => {
                let h = h.clone();
                let w = w.to_vec();
                let d = self.d;
                VectorField::general(n, move |x| {
                    let m = h(x);
                    (0..n).map(|i| (0..d).map(|k| m[(i, k)] * w[k]).sum()).collect()
                })
                .with_linear_growth(self.lipschitz.is_some())
                .allow_finite_differences()
            }
        }
    }
}
