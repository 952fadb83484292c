use nalgebra::{DMatrix, DVector};

use super::LinearizedSystem;
use crate::error::{Error, Result};
use crate::free_energy::{Definiteness, HessianReport};
use crate::models::{MixtureState, ModelClass, ModelSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Negative,
    Positive,
}

/// Rows of the long-wave stability table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableRow {
    PositiveDefinite,
    NegativeDefinite,
    /// C indefinite and p^T C p has the sign of |C|.
    IndefiniteSameSign,
    /// C indefinite and p^T C p has the opposite sign of |C|.
    IndefiniteOppositeSign,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    pub hessian: HessianReport,
    pub g1: f64,
    pub category: TableRow,
    /// Long-wave signs of Re(alpha0..alpha3).
    pub verdicts: [Sign; 4],
}

/// Long-wave sign pattern of the four compressible modes from the Hessian C
/// at p and the mobility M (both in the same variables).
pub fn classify_stability(hessian: &HessianReport, p: &[f64], mobility: &DMatrix<f64>) -> Result<StabilityReport> {
    let c = &hessian.c;
    if c.shape() != (2, 2) || p.len() != 2 || mobility.shape() != (2, 2) {
        return Err(Error::Shape("stability table needs 2 x 2 C and M and a 2-vector p".into()));
    }
    let m = mobility;
    let g1 = m[(1, 1)] * p[0] * p[0] + m[(0, 0)] * p[1] * p[1] - 2.0 * m[(0, 1)] * p[0] * p[1];
    let scale = m.norm() * (p[0] * p[0] + p[1] * p[1]);
    if !(g1 > 1e-12 * scale) {
        return Err(Error::DegenerateCase(format!("g1 = {g1:e} is not positive")));
    }
    let pv = DVector::from_column_slice(p);
    let q = (pv.transpose() * c * &pv)[(0, 0)];
    let det = c.determinant();
    let cn = c.norm();
    if det.abs() <= 1e-10 * cn * cn {
        return Err(Error::DegenerateCase(format!("|C| = {det:e} is numerically zero")));
    }
    if q.abs() <= 1e-10 * cn * pv.norm_squared() {
        return Err(Error::DegenerateCase(format!("p^T C p = {q:e} is numerically zero")));
    }
    use Sign::*;
    let (category, a1, a2) = match hessian.definiteness {
        Definiteness::PositiveDefinite => (TableRow::PositiveDefinite, Negative, Negative),
        Definiteness::NegativeDefinite => (TableRow::NegativeDefinite, Positive, Positive),
        Definiteness::Indefinite => {
            let a2 = if q > 0.0 { Negative } else { Positive };
            if (q > 0.0) == (det > 0.0) {
                (TableRow::IndefiniteSameSign, Negative, a2)
            } else {
                (TableRow::IndefiniteOppositeSign, Positive, a2)
            }
        }
        other => return Err(Error::DegenerateCase(format!("Hessian is {other:?}"))),
    };
    Ok(StabilityReport { hessian: hessian.clone(), g1, category, verdicts: [Negative, a1, a2, Negative] })
}

/// Table classification of a compressible model at a constant state, in the
/// variables of its dispersion matrix.
pub fn stability_report(model: &ModelSystem, state: &MixtureState) -> Result<StabilityReport> {
    if !matches!(model.class(), ModelClass::CompressibleGlobal | ModelClass::CompressibleLocal) {
        return Err(Error::Shape("the stability table covers the compressible classes".into()));
    }
    let lin = LinearizedSystem::new(model, state)?;
    let c = DMatrix::from_row_slice(2, 2, lin.c.as_slice());
    let p = [lin.p[0], lin.p[1]];
    let m = DMatrix::from_row_slice(2, 2, lin.mobility.as_slice());
    classify_stability(&HessianReport::new(c, &DVector::from_column_slice(&p)), &p, &m)
}
