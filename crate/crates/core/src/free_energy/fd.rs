//! Central finite differences used to cross-check analytic derivatives.

use nalgebra::{DMatrix, DVector};

use super::BulkFreeEnergy;
use crate::error::Result;

/// Step h = 1e-6 max(1, |x|).
pub fn step(x: f64) -> f64 {
    1e-6 * x.abs().max(1.0)
}

/// Central-difference gradient of a scalar function.
pub fn gradient<F>(f: F, x: &[f64]) -> Result<DVector<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut g = DVector::zeros(x.len());
    let mut y = x.to_vec();
    for i in 0..x.len() {
        let h = step(x[i]);
        y[i] = x[i] + h;
        let fp = f(&y)?;
        y[i] = x[i] - h;
        let fm = f(&y)?;
        y[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    Ok(g)
}

/// Central-difference Jacobian of a vector function, symmetrized.
pub fn symmetric_jacobian<F>(f: F, x: &[f64]) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<DVector<f64>>,
{
    let n = x.len();
    let mut j = DMatrix::zeros(n, n);
    let mut y = x.to_vec();
    for i in 0..n {
        let h = step(x[i]);
        y[i] = x[i] + h;
        let gp = f(&y)?;
        y[i] = x[i] - h;
        let gm = f(&y)?;
        y[i] = x[i];
        j.set_column(i, &((gp - gm) / (2.0 * h)));
    }
    Ok((&j + j.transpose()) * 0.5)
}

pub fn energy_gradient(fe: &BulkFreeEnergy, x: &[f64]) -> Result<DVector<f64>> {
    gradient(|y| fe.energy(y), x)
}

/// Hessian from differences of the analytic gradient.
pub fn energy_hessian(fe: &BulkFreeEnergy, x: &[f64]) -> Result<DMatrix<f64>> {
    symmetric_jacobian(|y| fe.gradient(y), x)
}

/// Norm-wise relative error ||a - b|| / ||b||.
pub fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}
