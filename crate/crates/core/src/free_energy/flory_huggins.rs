use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Flory-Huggins mixing energy
/// h = c [ sum_i rho_i/N_i ln(rho_i/rho) + sum_{i<j} chi_ij rho_i rho_j / rho ],
/// with c = k_B T / m treated as a free scale and rho = sum_i rho_i.
#[derive(Clone, Debug, PartialEq)]
pub struct FloryHuggins {
    scale: f64,
    n: Vec<f64>,
    chi: DMatrix<f64>,
}

impl FloryHuggins {
    pub fn binary(kt_over_m: f64, n1: f64, n2: f64, chi: f64) -> Result<Self> {
        let chi = DMatrix::from_row_slice(2, 2, &[0.0, chi, chi, 0.0]);
        Self::new(kt_over_m, vec![n1, n2], chi)
    }

    pub fn new(kt_over_m: f64, n: Vec<f64>, chi: DMatrix<f64>) -> Result<Self> {
        if !(kt_over_m > 0.0) {
            return Err(Error::Range("k_B T / m must be positive".into()));
        }
        if n.len() < 2 || n.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Range("polymerization indices must be positive (at least two)".into()));
        }
        if chi.nrows() != n.len() || chi.ncols() != n.len() {
            return Err(Error::Shape("chi must be N x N".into()));
        }
        for i in 0..n.len() {
            if chi[(i, i)] != 0.0 {
                return Err(Error::Range("chi must have a zero diagonal".into()));
            }
            for j in 0..i {
                if chi[(i, j)] != chi[(j, i)] {
                    return Err(Error::Shape("chi must be symmetric".into()));
                }
            }
        }
        Ok(Self { scale: kt_over_m, n, chi })
    }

    pub fn components(&self) -> usize {
        self.n.len()
    }

    pub(crate) fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n.len() {
            return Err(Error::Shape(format!(
                "Flory-Huggins expects {} densities, got {}",
                self.n.len(),
                x.len()
            )));
        }
        if let Some(v) = x.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::Domain(format!("Flory-Huggins density must be positive, got {v}")));
        }
        Ok(())
    }

    fn chi_x(&self, x: &[f64], i: usize) -> f64 {
        (0..x.len()).map(|j| self.chi[(i, j)] * x[j]).sum()
    }

    pub(crate) fn value(&self, x: &[f64]) -> f64 {
        let rho: f64 = x.iter().sum();
        let mut h = 0.0;
        let mut xx = 0.0;
        for i in 0..x.len() {
            h += x[i] / self.n[i] * (x[i] / rho).ln();
            xx += 0.5 * x[i] * self.chi_x(x, i);
        }
        self.scale * (h + xx / rho)
    }

    pub(crate) fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let rho: f64 = x.iter().sum();
        let s: f64 = x.iter().zip(&self.n).map(|(a, n)| a / n).sum();
        let xx: f64 = (0..x.len()).map(|i| 0.5 * x[i] * self.chi_x(x, i)).sum();
        for k in 0..x.len() {
            let mix = ((x[k] / rho).ln() + 1.0) / self.n[k] - s / rho;
            let inter = self.chi_x(x, k) / rho - xx / (rho * rho);
            out[k] = self.scale * (mix + inter);
        }
    }

    pub(crate) fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let m = x.len();
        let rho: f64 = x.iter().sum();
        let s: f64 = x.iter().zip(&self.n).map(|(a, n)| a / n).sum();
        let xx: f64 = (0..m).map(|i| 0.5 * x[i] * self.chi_x(x, i)).sum();
        let cx: Vec<f64> = (0..m).map(|i| self.chi_x(x, i)).collect();
        DMatrix::from_fn(m, m, |k, l| {
            let diag = if k == l { 1.0 / (self.n[k] * x[k]) } else { 0.0 };
            let mix = diag - 1.0 / (self.n[k] * rho) - 1.0 / (self.n[l] * rho) + s / (rho * rho);
            let inter = self.chi[(k, l)] / rho - (cx[k] + cx[l]) / (rho * rho)
                + 2.0 * xx / rho.powi(3);
            self.scale * (mix + inter)
        })
    }
}
