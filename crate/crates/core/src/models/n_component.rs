use nalgebra::DMatrix;

use super::{mobility_check, ModelSystem};
use crate::error::{Error, Result};
use crate::free_energy::{chemical_potentials, BulkFreeEnergy, Coordinates, GradientCoefficients};
use crate::grid::Grid;

/// Structural N-component compressible model over partial densities
/// (rho1, ..., rhoN). Only chemical potentials, the mobility constraint and
/// the dissipation functional are exposed; transient runs use the binary
/// `ModelSystem`.
#[derive(Clone, Debug, PartialEq)]
pub struct NComponentModel {
    energy: BulkFreeEnergy,
    kappa: GradientCoefficients,
    mobility: DMatrix<f64>,
    inv_re_s: f64,
    inv_re_v: f64,
    local: bool,
}

/// Fills in the last row and column of an N x N mobility from its leading
/// (N-1) x (N-1) block so that every row sums to zero:
/// M_iN = -sum_j M_ij, M_NN = sum_ij M_ij.
pub fn local_mobility_from_block(block: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = block.nrows();
    if block.ncols() != k || k == 0 {
        return Err(Error::Shape("mobility block must be square".into()));
    }
    let n = k + 1;
    let mut m = DMatrix::zeros(n, n);
    m.view_mut((0, 0), (k, k)).copy_from(block);
    let mut total = 0.0;
    for i in 0..k {
        let r: f64 = block.row(i).sum();
        m[(i, k)] = -r;
        m[(k, i)] = -r;
        total += r;
    }
    m[(k, k)] = total;
    Ok(m)
}

/// Assembles an N-component model. With `require_local` the mobility must
/// have zero row sums (local mass conservation).
pub fn assemble_n_component(
    n: usize,
    energy: &BulkFreeEnergy,
    kappa: &GradientCoefficients,
    mobility: DMatrix<f64>,
    inv_re_s: f64,
    inv_re_v: f64,
    require_local: bool,
) -> Result<NComponentModel> {
    if n < 2 {
        return Err(Error::Shape("need at least two components".into()));
    }
    if energy.components() != n || kappa.partial().nrows() != n || mobility.shape() != (n, n) {
        return Err(Error::Shape(format!("energy, kappa and mobility must all describe {n} components")));
    }
    let rep = mobility_check(&mobility)?;
    if !rep.psd {
        return Err(Error::Range("mobility must be positive semi-definite".into()));
    }
    if require_local && !rep.zero_row_sum {
        return Err(Error::Constraint(format!(
            "local conservation requires zero row sums (max |row sum| = {})",
            rep.max_abs_row_sum
        )));
    }
    if !(inv_re_s >= 0.0 && inv_re_v >= 0.0) {
        return Err(Error::Range("viscosities must be nonnegative".into()));
    }
    Ok(NComponentModel {
        energy: energy.with_coordinates(Coordinates::Partial)?,
        kappa: kappa.with_coordinates(Coordinates::Partial)?,
        mobility,
        inv_re_s,
        inv_re_v,
        local: rep.zero_row_sum,
    })
}

impl NComponentModel {
    pub fn components(&self) -> usize {
        self.mobility.nrows()
    }

    pub fn mobility(&self) -> &DMatrix<f64> {
        &self.mobility
    }

    pub fn is_local(&self) -> bool {
        self.local
    }

    pub fn chemical_potentials(&self, grid: &Grid, densities: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        Ok(chemical_potentials(&self.energy, &self.kappa, densities, grid)?.mu)
    }

    /// Diffusive fluxes J_i = sum_j d_x (M_ij d_x mu_j).
    pub fn fluxes(&self, grid: &Grid, densities: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let mu = self.chemical_potentials(grid, densities)?;
        let laps: Vec<Vec<f64>> = mu.iter().map(|m| grid.laplacian(m)).collect();
        let n = self.components();
        Ok((0..n)
            .map(|i| {
                (0..grid.n())
                    .map(|p| (0..n).map(|j| self.mobility[(i, j)] * laps[j][p]).sum())
                    .collect()
            })
            .collect())
    }

    /// max_x |sum_i J_i|, zero for a locally conserving mobility.
    pub fn constraint_residual(&self, grid: &Grid, densities: &[Vec<f64>]) -> Result<f64> {
        let j = self.fluxes(grid, densities)?;
        Ok((0..grid.n()).map(|p| j.iter().map(|f| f[p]).sum::<f64>().abs()).fold(0.0, f64::max))
    }

    /// -int [(2 eta + nu) v_x^2 + eta w_x^2 + sum_ij M_ij mu_i,x mu_j,x] dx.
    pub fn dissipation_rate(&self, grid: &Grid, densities: &[Vec<f64>], vx: &[f64], vy: &[f64]) -> Result<f64> {
        let mu = self.chemical_potentials(grid, densities)?;
        let n = self.components();
        let mut mob = 0.0;
        for i in 0..n {
            for j in 0..n {
                if self.mobility[(i, j)] != 0.0 {
                    mob += self.mobility[(i, j)] * grid.gradient_inner(&mu[i], &mu[j]);
                }
            }
        }
        let visc = (2.0 * self.inv_re_s + self.inv_re_v) * grid.gradient_inner(vx, vx)
            + self.inv_re_s * grid.gradient_inner(vy, vy);
        Ok(-(visc + mob))
    }

    /// The binary specialization: the local model when the mobility has zero
    /// row sums, otherwise the global one.
    pub fn to_binary(&self) -> Result<ModelSystem> {
        if self.components() != 2 {
            return Err(Error::Shape("binary specialization needs N = 2".into()));
        }
        if self.local {
            ModelSystem::local(&self.energy, &self.kappa, self.mobility[(0, 0)], self.inv_re_s, self.inv_re_v)
        } else {
            ModelSystem::global(&self.energy, &self.kappa, self.mobility.clone(), self.inv_re_s, self.inv_re_v)
        }
    }
}
