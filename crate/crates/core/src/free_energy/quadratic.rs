use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// h = 1/2 x^T C x + g^T x in partial densities.
#[derive(Clone, Debug, PartialEq)]
pub struct Quadratic {
    hessian: DMatrix<f64>,
    linear: DVector<f64>,
}

impl Quadratic {
    pub fn new(hessian: DMatrix<f64>, linear: DVector<f64>) -> Result<Self> {
        let n = hessian.nrows();
        if hessian.ncols() != n || linear.len() != n || n == 0 {
            return Err(Error::Shape("quadratic energy needs an N x N Hessian and an N-vector".into()));
        }
        let scale = hessian.norm().max(f64::MIN_POSITIVE);
        if (&hessian - hessian.transpose()).norm() > 1e-14 * scale {
            return Err(Error::Shape("quadratic Hessian must be symmetric".into()));
        }
        Ok(Self { hessian, linear })
    }

    /// Quadratic whose Hessian is `c` and whose gradient vanishes at `critical`.
    pub fn centered(c: DMatrix<f64>, critical: &[f64]) -> Result<Self> {
        let x = DVector::from_column_slice(critical);
        let g = -(&c * x);
        Self::new(c, g)
    }

    /// Build from a Hessian and linear term given in (rho1, rho) variables.
    pub fn from_total(c_total: DMatrix<f64>, linear_total: DVector<f64>) -> Result<Self> {
        if c_total.shape() != (2, 2) || linear_total.len() != 2 {
            return Err(Error::Shape("(rho1, rho) quadratic must be 2 x 2".into()));
        }
        // (rho1, rho) = T (rho1, rho2)
        let t = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        let c = t.transpose() * &c_total * &t;
        let g = t.transpose() * linear_total;
        Self::new(c, g)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.linear
    }

    pub fn components(&self) -> usize {
        self.linear.len()
    }

    pub(crate) fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.linear.len() {
            return Err(Error::Shape(format!(
                "quadratic energy expects {} densities, got {}",
                self.linear.len(),
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite density".into()));
        }
        Ok(())
    }

    pub(crate) fn value(&self, x: &[f64]) -> f64 {
        let n = x.len();
        let mut h = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.hessian[(i, j)] * x[j];
            }
            h += 0.5 * x[i] * row + self.linear[i] * x[i];
        }
        h
    }

    pub(crate) fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        for i in 0..n {
            let mut row = self.linear[i];
            for j in 0..n {
                row += self.hessian[(i, j)] * x[j];
            }
            out[i] = row;
        }
    }
}
