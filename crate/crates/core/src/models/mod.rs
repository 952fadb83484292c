//! The four binary model classes, their 1D right-hand sides and energy laws,
//! plus the N-component structural assembly.

mod n_component;
mod scaling;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::free_energy::{
    average_viscosity, BulkFreeEnergy, Coordinates, GradientCoefficients, RuleKind, ViscosityRule,
};
use crate::grid::{kahan_sum, Grid};

pub use n_component::{assemble_n_component, local_mobility_from_block, NComponentModel};
pub use scaling::{nondimensionalize, redimensionalize, DimensionalParams, NondimensionalParams, ScaleSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelClass {
    CompressibleGlobal,
    CompressibleLocal,
    QuasiIncompressible,
    Incompressible,
}

impl ModelClass {
    /// Names of the evolved fields, in storage order.
    pub fn field_names(self) -> &'static [&'static str] {
        match self {
            ModelClass::CompressibleGlobal => &["rho1", "rho2", "mx", "my"],
            ModelClass::CompressibleLocal => &["rho", "rho1", "mx", "my"],
            ModelClass::QuasiIncompressible | ModelClass::Incompressible => &["phi", "vx", "vy"],
        }
    }

    pub fn is_compressible(self) -> bool {
        matches!(self, ModelClass::CompressibleGlobal | ModelClass::CompressibleLocal)
    }
}

/// Constant state about which a model is linearized or a run is seeded.
/// The velocity of the constant state is zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MixtureState {
    /// (rho1, rho2), used by the global model.
    Partial { rho1: f64, rho2: f64 },
    /// (rho, rho1), used by the local model.
    Total { rho: f64, rho1: f64 },
    /// phi, used by the quasi-incompressible and incompressible models.
    Phi { phi: f64 },
}

/// Symmetric PSD mobility verdicts.
#[derive(Clone, Debug, PartialEq)]
pub struct MobilityReport {
    pub psd: bool,
    pub zero_row_sum: bool,
    pub min_eigenvalue: f64,
    pub max_abs_row_sum: f64,
}

pub fn mobility_check(m: &DMatrix<f64>) -> Result<MobilityReport> {
    let n = m.nrows();
    if m.ncols() != n || n == 0 {
        return Err(Error::Shape("mobility must be square".into()));
    }
    let scale = m.norm();
    if (m - m.transpose()).norm() > 1e-14 * scale {
        return Err(Error::Shape("mobility must be symmetric".into()));
    }
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let min_eigenvalue = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let max_abs_row_sum = (0..n).map(|i| m.row(i).sum().abs()).fold(0.0, f64::max);
    Ok(MobilityReport {
        psd: min_eigenvalue >= -1e-12 * scale,
        zero_row_sum: max_abs_row_sum <= 1e-12 * scale.max(f64::MIN_POSITIVE),
        min_eigenvalue,
        max_abs_row_sum,
    })
}

/// A binary model: class, free energy and gradient coefficients in the class's
/// variables, mobility and Reynolds numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSystem {
    class: ModelClass,
    energy: BulkFreeEnergy,
    kappa: GradientCoefficients,
    mobility: DMatrix<f64>,
    inv_re_s: f64,
    inv_re_v: f64,
    inv_re: f64,
    viscosity_rule: Option<ViscosityRule>,
    rho_hat: Option<(f64, f64)>,
}

fn check_viscosities(inv_re_s: f64, inv_re_v: f64) -> Result<()> {
    if !(inv_re_s >= 0.0 && inv_re_v >= 0.0) || !inv_re_s.is_finite() || !inv_re_v.is_finite() {
        return Err(Error::Range("1/Re_s and 1/Re_v must be finite and nonnegative".into()));
    }
    Ok(())
}

fn check_scalar_mobility(m11: f64) -> Result<()> {
    if !(m11 >= 0.0) || !m11.is_finite() {
        return Err(Error::Range("M11 must be finite and nonnegative".into()));
    }
    Ok(())
}

impl ModelSystem {
    /// Compressible model with a global mass conservation law; `mobility` is 2 x 2.
    pub fn global(
        energy: &BulkFreeEnergy,
        kappa: &GradientCoefficients,
        mobility: DMatrix<f64>,
        inv_re_s: f64,
        inv_re_v: f64,
    ) -> Result<Self> {
        if mobility.shape() != (2, 2) {
            return Err(Error::Shape("global model needs a 2 x 2 mobility".into()));
        }
        let rep = mobility_check(&mobility)?;
        if !rep.psd {
            return Err(Error::Range("mobility must be positive semi-definite".into()));
        }
        check_viscosities(inv_re_s, inv_re_v)?;
        Ok(Self {
            class: ModelClass::CompressibleGlobal,
            energy: energy.with_coordinates(Coordinates::Partial)?,
            kappa: kappa.with_coordinates(Coordinates::Partial)?,
            mobility,
            inv_re_s,
            inv_re_v,
            inv_re: 2.0 * inv_re_s + inv_re_v,
            viscosity_rule: None,
            rho_hat: None,
        })
    }

    /// Compressible model with local mass conservation in the special form
    /// M = [[M11, -M11], [-M11, M11]].
    pub fn local(
        energy: &BulkFreeEnergy,
        kappa: &GradientCoefficients,
        m11: f64,
        inv_re_s: f64,
        inv_re_v: f64,
    ) -> Result<Self> {
        check_scalar_mobility(m11)?;
        check_viscosities(inv_re_s, inv_re_v)?;
        Ok(Self {
            class: ModelClass::CompressibleLocal,
            energy: energy.with_coordinates(Coordinates::Total)?,
            kappa: kappa.with_coordinates(Coordinates::Total)?,
            mobility: DMatrix::from_element(1, 1, m11),
            inv_re_s,
            inv_re_v,
            inv_re: 2.0 * inv_re_s + inv_re_v,
            viscosity_rule: None,
            rho_hat: None,
        })
    }

    /// Quasi-incompressible model of two incompressible fluids with specific
    /// densities rho_hat_1, rho_hat_2.
    pub fn quasi(
        energy: &BulkFreeEnergy,
        kappa: &GradientCoefficients,
        m11: f64,
        rho_hat_1: f64,
        rho_hat_2: f64,
        inv_re_s: f64,
        inv_re_v: f64,
    ) -> Result<Self> {
        Self::phi_model(ModelClass::QuasiIncompressible, energy, kappa, m11, rho_hat_1, rho_hat_2, inv_re_s, inv_re_v)
    }

    /// Incompressible model (rho_hat_1 = rho_hat_2 = rho_hat).
    pub fn incompressible(
        energy: &BulkFreeEnergy,
        kappa: &GradientCoefficients,
        m11: f64,
        rho_hat: f64,
        inv_re_s: f64,
        inv_re_v: f64,
    ) -> Result<Self> {
        Self::phi_model(ModelClass::Incompressible, energy, kappa, m11, rho_hat, rho_hat, inv_re_s, inv_re_v)
    }

    #[allow(clippy::too_many_arguments)]
    fn phi_model(
        class: ModelClass,
        energy: &BulkFreeEnergy,
        kappa: &GradientCoefficients,
        m11: f64,
        rho_hat_1: f64,
        rho_hat_2: f64,
        inv_re_s: f64,
        inv_re_v: f64,
    ) -> Result<Self> {
        check_scalar_mobility(m11)?;
        check_viscosities(inv_re_s, inv_re_v)?;
        let coords = Coordinates::Phi { rho_hat_1, rho_hat_2 };
        Ok(Self {
            class,
            energy: energy.with_coordinates(coords)?,
            kappa: kappa.with_coordinates(coords)?,
            mobility: DMatrix::from_element(1, 1, m11),
            inv_re_s,
            inv_re_v,
            inv_re: 2.0 * inv_re_s + inv_re_v,
            viscosity_rule: None,
            rho_hat: Some((rho_hat_1, rho_hat_2)),
        })
    }

    /// Pointwise viscosity interpolation for transient runs. Values are taken as
    /// already nondimensional (1/Re_s, 1/Re_v); the linear analysis uses the
    /// rule evaluated at the constant state.
    pub fn with_viscosity_rule(mut self, rule: ViscosityRule) -> Result<Self> {
        rule.validate()?;
        if rule.rule == RuleKind::VolumeFraction && self.class.is_compressible() {
            return Err(Error::Constraint(
                "volume-fraction viscosity needs specific densities (quasi-incompressible classes)".into(),
            ));
        }
        self.viscosity_rule = Some(rule);
        Ok(self)
    }

    pub fn class(&self) -> ModelClass {
        self.class
    }

    pub fn energy(&self) -> &BulkFreeEnergy {
        &self.energy
    }

    pub fn kappa(&self) -> &GradientCoefficients {
        &self.kappa
    }

    /// 2 x 2 for the global model, 1 x 1 (M11) otherwise.
    pub fn mobility(&self) -> &DMatrix<f64> {
        &self.mobility
    }

    pub fn m11(&self) -> f64 {
        self.mobility[(0, 0)]
    }

    /// Full 2 x 2 mobility acting on (mu1, mu2).
    pub fn full_mobility(&self) -> DMatrix<f64> {
        match self.class {
            ModelClass::CompressibleGlobal => self.mobility.clone(),
            _ => {
                let m = self.m11();
                DMatrix::from_row_slice(2, 2, &[m, -m, -m, m])
            }
        }
    }

    pub fn inv_re_s(&self) -> f64 {
        self.inv_re_s
    }

    pub fn inv_re_v(&self) -> f64 {
        self.inv_re_v
    }

    /// 1/Re = 2/Re_s + 1/Re_v.
    pub fn inv_re(&self) -> f64 {
        self.inv_re
    }

    pub fn viscosity_rule(&self) -> Option<&ViscosityRule> {
        self.viscosity_rule.as_ref()
    }

    pub fn rho_hat(&self) -> Option<(f64, f64)> {
        self.rho_hat
    }

    /// 1 - rho_hat_1 / rho_hat_2.
    pub fn compressibility(&self) -> f64 {
        self.rho_hat.map(|(a, b)| 1.0 - a / b).unwrap_or(0.0)
    }

    /// Energy variables of a constant state (the order used by `energy()`).
    pub fn energy_point(&self, state: &MixtureState) -> Result<Vec<f64>> {
        match (self.class, *state) {
            (ModelClass::CompressibleGlobal, MixtureState::Partial { rho1, rho2 }) => Ok(vec![rho1, rho2]),
            (ModelClass::CompressibleLocal, MixtureState::Total { rho, rho1 }) => Ok(vec![rho1, rho]),
            (ModelClass::QuasiIncompressible | ModelClass::Incompressible, MixtureState::Phi { phi }) => {
                Ok(vec![phi])
            }
            _ => Err(Error::Shape(format!("state {state:?} does not match model class {:?}", self.class))),
        }
    }

    /// Total density of a constant state.
    pub fn total_density(&self, state: &MixtureState) -> Result<f64> {
        let rho = match *state {
            MixtureState::Partial { rho1, rho2 } => rho1 + rho2,
            MixtureState::Total { rho, .. } => rho,
            MixtureState::Phi { phi } => {
                let (a, b) = self.rho_hat.ok_or_else(|| Error::Shape("phi state needs rho_hat".into()))?;
                a * phi + b * (1.0 - phi)
            }
        };
        Ok(rho)
    }

    /// Checks class match, positivity, phi in (0, 1) and free-energy domain.
    pub fn validate_state(&self, state: &MixtureState) -> Result<()> {
        let y = self.energy_point(state)?;
        match *state {
            MixtureState::Partial { rho1, rho2 } if !(rho1 > 0.0 && rho2 > 0.0) => {
                return Err(Error::Domain("densities must be positive".into()))
            }
            MixtureState::Total { rho, rho1 } if !(rho1 > 0.0 && rho > rho1) => {
                return Err(Error::Domain("need 0 < rho1 < rho".into()))
            }
            MixtureState::Phi { phi } if !(phi > 0.0 && phi < 1.0) => {
                return Err(Error::Domain("phi must lie in (0, 1)".into()))
            }
            _ => {}
        }
        self.energy.energy(&y)?;
        Ok(())
    }

    /// Mass fraction (or volume fraction for the phi classes under a
    /// volume-fraction rule) of component 1 at each grid point.
    fn composition(&self, fields: &Fields, rule: RuleKind) -> Vec<f64> {
        let v = &fields.vars;
        match self.class {
            ModelClass::CompressibleGlobal => v[0].iter().zip(&v[1]).map(|(a, b)| a / (a + b)).collect(),
            ModelClass::CompressibleLocal => v[1].iter().zip(&v[0]).map(|(a, r)| a / r).collect(),
            _ => {
                let (h1, h2) = self.rho_hat.unwrap();
                match rule {
                    RuleKind::VolumeFraction => v[0].clone(),
                    _ => v[0].iter().map(|p| h1 * p / (h1 * p + h2 * (1.0 - p))).collect(),
                }
            }
        }
    }

    /// Nondimensional (eta, nu) fields, or None for constant viscosities.
    fn viscosity_fields(&self, fields: &Fields) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
        let Some(rule) = self.viscosity_rule else { return Ok(None) };
        let c = self.composition(fields, rule.rule);
        let mut eta = Vec::with_capacity(c.len());
        let mut nu = Vec::with_capacity(c.len());
        for (j, x) in c.iter().enumerate() {
            let (e, n) = average_viscosity(&rule, x.clamp(0.0, 1.0))
                .map_err(|e| Error::Domain(format!("grid index {j}: {e}")))?;
            eta.push(e);
            nu.push(n);
        }
        Ok(Some((eta, nu)))
    }

    /// (1/Re_s, 1/Re_v) at a constant state.
    pub fn viscosities_at(&self, state: &MixtureState) -> Result<(f64, f64)> {
        let Some(rule) = self.viscosity_rule else { return Ok((self.inv_re_s, self.inv_re_v)) };
        let f = Fields::uniform(self, state, 1)?;
        let c = self.composition(&f, rule.rule)[0];
        average_viscosity(&rule, c)
    }

    fn energy_fields<'a>(&self, fields: &'a Fields) -> Vec<&'a [f64]> {
        let v = &fields.vars;
        match self.class {
            ModelClass::CompressibleGlobal => vec![&v[0], &v[1]],
            ModelClass::CompressibleLocal => vec![&v[1], &v[0]],
            _ => vec![&v[0]],
        }
    }

    fn check_fields(&self, grid: &Grid, fields: &Fields) -> Result<()> {
        let want = self.class.field_names().len();
        if fields.vars.len() != want {
            return Err(Error::Shape(format!("expected {want} fields, got {}", fields.vars.len())));
        }
        if fields.vars.iter().any(|f| f.len() != grid.n()) {
            return Err(Error::Shape("field length differs from grid size".into()));
        }
        for (name, f) in self.class.field_names().iter().zip(&fields.vars) {
            if let Some(j) = f.iter().position(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("non-finite {name} at grid index {j}")));
            }
        }
        Ok(())
    }

    /// Chemical potentials in the energy's variables, pointwise.
    fn potentials(&self, grid: &Grid, fields: &Fields) -> Result<Vec<Vec<f64>>> {
        let ef: Vec<Vec<f64>> = self.energy_fields(fields).into_iter().map(|s| s.to_vec()).collect();
        Ok(crate::free_energy::chemical_potentials(&self.energy, &self.kappa, &ef, grid)?.mu)
    }

    fn density(&self, fields: &Fields) -> Result<Vec<f64>> {
        let v = &fields.vars;
        let rho: Vec<f64> = match self.class {
            ModelClass::CompressibleGlobal => v[0].iter().zip(&v[1]).map(|(a, b)| a + b).collect(),
            ModelClass::CompressibleLocal => v[0].clone(),
            _ => {
                let (h1, h2) = self.rho_hat.unwrap();
                v[0].iter().map(|p| h1 * p + h2 * (1.0 - p)).collect()
            }
        };
        if let Some(j) = rho.iter().position(|r| !(*r > 0.0)) {
            return Err(Error::Domain(format!("nonpositive total density at grid index {j}")));
        }
        Ok(rho)
    }

    /// Time derivatives of the evolved fields.
    pub fn rhs_1d(&self, grid: &Grid, fields: &Fields) -> Result<Fields> {
        Ok(self.rhs_1d_detailed(grid, fields)?.derivative)
    }

    pub fn rhs_1d_detailed(&self, grid: &Grid, fields: &Fields) -> Result<RhsOutput> {
        self.check_fields(grid, fields)?;
        let n = grid.n();
        let rho = self.density(fields)?;
        let mu = self.potentials(grid, fields)?;
        let visc = self.viscosity_fields(fields)?;
        let v = &fields.vars;
        let (vx, vy): (Vec<f64>, Vec<f64>) = if self.class.is_compressible() {
            (
                v[2].iter().zip(&rho).map(|(m, r)| m / r).collect(),
                v[3].iter().zip(&rho).map(|(m, r)| m / r).collect(),
            )
        } else {
            (v[1].clone(), v[2].clone())
        };
        let (visc_x, visc_y) = match &visc {
            None => {
                let lx = grid.laplacian(&vx);
                let ly = grid.laplacian(&vy);
                (
                    lx.iter().map(|a| self.inv_re * a).collect::<Vec<_>>(),
                    ly.iter().map(|a| self.inv_re_s * a).collect::<Vec<_>>(),
                )
            }
            Some((eta, nu)) => {
                let dx = grid.derivative(&vx);
                let dy = grid.derivative(&vy);
                let fx: Vec<f64> = (0..n).map(|j| (2.0 * eta[j] + nu[j]) * dx[j]).collect();
                let fy: Vec<f64> = (0..n).map(|j| eta[j] * dy[j]).collect();
                (grid.derivative(&fx), grid.derivative(&fy))
            }
        };
        let flux = |a: &[f64], b: &[f64]| -> Vec<f64> {
            let p: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
            grid.derivative(&p)
        };
        let mut pressure = None;
        let out = match self.class {
            ModelClass::CompressibleGlobal => {
                let m = &self.mobility;
                let l0 = grid.laplacian(&mu[0]);
                let l1 = grid.laplacian(&mu[1]);
                let j1: Vec<f64> = (0..n).map(|p| m[(0, 0)] * l0[p] + m[(0, 1)] * l1[p]).collect();
                let j2: Vec<f64> = (0..n).map(|p| m[(1, 0)] * l0[p] + m[(1, 1)] * l1[p]).collect();
                let f1 = flux(&v[0], &vx);
                let f2 = flux(&v[1], &vx);
                let fmx = flux(&v[2], &vx);
                let fmy = flux(&v[3], &vx);
                let d0 = grid.derivative(&mu[0]);
                let d1 = grid.derivative(&mu[1]);
                let r1: Vec<f64> = (0..n).map(|p| -f1[p] + j1[p]).collect();
                let r2: Vec<f64> = (0..n).map(|p| -f2[p] + j2[p]).collect();
                let rmx: Vec<f64> = (0..n)
                    .map(|p| {
                        -fmx[p] + 0.5 * (j1[p] + j2[p]) * vx[p] + visc_x[p]
                            - v[0][p] * d0[p]
                            - v[1][p] * d1[p]
                    })
                    .collect();
                let rmy: Vec<f64> =
                    (0..n).map(|p| -fmy[p] + 0.5 * (j1[p] + j2[p]) * vy[p] + visc_y[p]).collect();
                vec![r1, r2, rmx, rmy]
            }
            ModelClass::CompressibleLocal => {
                // mu[0] = mu~1 (d/d rho1), mu[1] = mu~ (d/d rho)
                let m11 = self.m11();
                let l1 = grid.laplacian(&mu[0]);
                let dm = grid.derivative(&v[2]);
                let f1 = flux(&v[1], &vx);
                let fmx = flux(&v[2], &vx);
                let fmy = flux(&v[3], &vx);
                let d1 = grid.derivative(&mu[0]);
                let dr = grid.derivative(&mu[1]);
                let rr: Vec<f64> = dm.iter().map(|a| -a).collect();
                let r1: Vec<f64> = (0..n).map(|p| -f1[p] + m11 * l1[p]).collect();
                let rmx: Vec<f64> =
                    (0..n).map(|p| -fmx[p] + visc_x[p] - v[1][p] * d1[p] - v[0][p] * dr[p]).collect();
                let rmy: Vec<f64> = (0..n).map(|p| -fmy[p] + visc_y[p]).collect();
                vec![rr, r1, rmx, rmy]
            }
            ModelClass::QuasiIncompressible | ModelClass::Incompressible => {
                let (h1, _) = self.rho_hat.unwrap();
                let m = self.m11() / (h1 * h1);
                let s = self.compressibility();
                let dvx = grid.derivative(&vx);
                let dvy = grid.derivative(&vy);
                let incompressible = self.class == ModelClass::Incompressible || s.abs() < 1e-12;
                if incompressible {
                    let spread = vx.iter().fold(0.0_f64, |a, b| a.max((b - vx[0]).abs()));
                    if spread > 1e-12 * vx[0].abs().max(1.0) {
                        return Err(Error::Constraint(
                            "incompressible 1D velocity must be spatially uniform".into(),
                        ));
                    }
                    let l = grid.laplacian(&mu[0]);
                    let dphi = grid.derivative(&v[0]);
                    let rphi: Vec<f64> = (0..n).map(|p| -vx[p] * dphi[p] + m * l[p]).collect();
                    let rvx = vec![0.0; n];
                    let rvy: Vec<f64> = (0..n).map(|p| -vx[p] * dvy[p] + visc_y[p] / rho[p]).collect();
                    vec![rphi, rvx, rvy]
                } else {
                    let pi = self.solve_pressure(grid, &vx, &mu[0])?;
                    let w: Vec<f64> = (0..n).map(|p| mu[0][p] + s * pi[p]).collect();
                    let lw = grid.laplacian(&w);
                    let fphi = flux(&v[0], &vx);
                    let dpi = grid.derivative(&pi);
                    let dmu = grid.derivative(&mu[0]);
                    let rphi: Vec<f64> = (0..n).map(|p| -fphi[p] + m * lw[p]).collect();
                    let rvx: Vec<f64> = (0..n)
                        .map(|p| -vx[p] * dvx[p] + (visc_x[p] - dpi[p] - v[0][p] * dmu[p]) / rho[p])
                        .collect();
                    let rvy: Vec<f64> = (0..n).map(|p| -vx[p] * dvy[p] + visc_y[p] / rho[p]).collect();
                    pressure = Some(pi);
                    vec![rphi, rvx, rvy]
                }
            }
        };
        for (name, f) in self.class.field_names().iter().zip(&out) {
            if let Some(j) = f.iter().position(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!("non-finite d{name}/dt at grid index {j}")));
            }
        }
        Ok(RhsOutput { derivative: Fields { vars: out }, chemical_potentials: mu, pressure })
    }

    /// Pi from the divergence constraint
    /// d_x v = s m d_xx (mu_phi + s Pi), m = M11 / rho_hat_1^2, with zero mean.
    fn solve_pressure(&self, grid: &Grid, vx: &[f64], mu: &[f64]) -> Result<Vec<f64>> {
        let (h1, _) = self.rho_hat.unwrap();
        let m = self.m11() / (h1 * h1);
        let s = self.compressibility();
        if !(m > 0.0) {
            return Err(Error::Solve("pressure solve needs M11 > 0".into()));
        }
        let vh = grid.forward(vx);
        let muh = grid.forward(mu);
        let d = grid.derivative_symbol();
        let l = grid.laplacian_symbol();
        let scale = grid.max_laplacian();
        let ph: Vec<Complex64> = (0..grid.n())
            .map(|j| {
                if l[j].abs() <= 1e-14 * scale {
                    Complex64::new(0.0, 0.0)
                } else {
                    (d[j] * vh[j] - s * m * l[j] * muh[j]) / (s * s * m * l[j])
                }
            })
            .collect();
        Ok(grid.inverse(ph))
    }

    /// Max-norm residual of the quasi-incompressible divergence constraint.
    pub fn constraint_residual(&self, grid: &Grid, fields: &Fields) -> Result<f64> {
        if self.class != ModelClass::QuasiIncompressible {
            return Ok(0.0);
        }
        let out = self.rhs_1d_detailed(grid, fields)?;
        let Some(pi) = out.pressure else { return Ok(0.0) };
        let (h1, _) = self.rho_hat.unwrap();
        let m = self.m11() / (h1 * h1);
        let s = self.compressibility();
        let w: Vec<f64> = (0..grid.n()).map(|p| out.chemical_potentials[0][p] + s * pi[p]).collect();
        let lw = grid.laplacian(&w);
        let dv = grid.derivative(&fields.vars[1]);
        Ok((0..grid.n()).map(|p| (dv[p] - s * m * lw[p]).abs()).fold(0.0, f64::max))
    }

    /// dE/dt from the closed-form dissipation functional (nonpositive).
    pub fn energy_dissipation_rate(&self, grid: &Grid, fields: &Fields) -> Result<f64> {
        self.check_fields(grid, fields)?;
        let rho = self.density(fields)?;
        let v = &fields.vars;
        let (vx, vy): (Vec<f64>, Vec<f64>) = if self.class.is_compressible() {
            (
                v[2].iter().zip(&rho).map(|(m, r)| m / r).collect(),
                v[3].iter().zip(&rho).map(|(m, r)| m / r).collect(),
            )
        } else {
            (v[1].clone(), v[2].clone())
        };
        let viscous = match self.viscosity_fields(fields)? {
            None => self.inv_re * grid.gradient_inner(&vx, &vx) + self.inv_re_s * grid.gradient_inner(&vy, &vy),
            Some((eta, nu)) => {
                let dx = grid.derivative(&vx);
                let dy = grid.derivative(&vy);
                let integrand: Vec<f64> = (0..grid.n())
                    .map(|j| (2.0 * eta[j] + nu[j]) * dx[j] * dx[j] + eta[j] * dy[j] * dy[j])
                    .collect();
                grid.integrate(&integrand)
            }
        };
        let mu = self.potentials(grid, fields)?;
        let mobility = match self.class {
            ModelClass::CompressibleGlobal => {
                let m = &self.mobility;
                let mut s = 0.0;
                for i in 0..2 {
                    for j in 0..2 {
                        s += m[(i, j)] * grid.gradient_inner(&mu[i], &mu[j]);
                    }
                }
                s
            }
            ModelClass::CompressibleLocal => self.m11() * grid.gradient_inner(&mu[0], &mu[0]),
            ModelClass::QuasiIncompressible | ModelClass::Incompressible => {
                let (h1, _) = self.rho_hat.unwrap();
                let m = self.m11() / (h1 * h1);
                let s = self.compressibility();
                if self.class == ModelClass::Incompressible || s.abs() < 1e-12 {
                    m * grid.gradient_inner(&mu[0], &mu[0])
                } else {
                    let pi = self.solve_pressure(grid, &vx, &mu[0])?;
                    let w: Vec<f64> = (0..grid.n()).map(|p| mu[0][p] + s * pi[p]).collect();
                    m * grid.gradient_inner(&w, &w)
                }
            }
        };
        Ok(-(viscous + mobility))
    }

    /// Kinetic + bulk + gradient energy, with the bulk part accumulated as an
    /// excess over the mean state to limit cancellation.
    pub fn total_energy(&self, grid: &Grid, fields: &Fields) -> Result<f64> {
        let reference = self.energy_means(fields);
        self.total_energy_with_reference(grid, fields, &reference)
    }

    /// As `total_energy` with an explicit reference point (energy variables).
    pub fn total_energy_with_reference(&self, grid: &Grid, fields: &Fields, reference: &[f64]) -> Result<f64> {
        self.check_fields(grid, fields)?;
        let rho = self.density(fields)?;
        let v = &fields.vars;
        let n = grid.n();
        let kinetic: Vec<f64> = if self.class.is_compressible() {
            (0..n).map(|p| 0.5 * (v[2][p] * v[2][p] + v[3][p] * v[3][p]) / rho[p]).collect()
        } else {
            (0..n).map(|p| 0.5 * rho[p] * (v[1][p] * v[1][p] + v[2][p] * v[2][p])).collect()
        };
        let ef = self.energy_fields(fields);
        let d = ef.len();
        let h0 = self.energy.energy(reference)?;
        let mut g0 = vec![0.0; d];
        self.energy.gradient_into(reference, &mut g0)?;
        let mut excess = Vec::with_capacity(n);
        let mut y = vec![0.0; d];
        for p in 0..n {
            let mut lin = 0.0;
            for i in 0..d {
                y[i] = ef[i][p];
                lin += g0[i] * (y[i] - reference[i]);
            }
            let h = self
                .energy
                .energy(&y)
                .map_err(|e| Error::Domain(format!("grid index {p}: {e}")))?;
            excess.push(h - h0 - lin);
        }
        let mut linear = 0.0;
        for i in 0..d {
            let dev: Vec<f64> = ef[i].iter().map(|a| a - reference[i]).collect();
            linear += g0[i] * grid.integrate(&dev);
        }
        let km = self.kappa.matrix();
        let mut gradient = 0.0;
        for i in 0..d {
            for j in 0..d {
                if km[(i, j)] != 0.0 {
                    gradient += 0.5 * km[(i, j)] * grid.gradient_inner(ef[i], ef[j]);
                }
            }
        }
        Ok(grid.integrate(&kinetic) + h0 * grid.length() + grid.integrate(&excess) + linear + gradient)
    }

    /// Spatial means of the energy variables (the default energy reference).
    pub fn energy_means(&self, fields: &Fields) -> Vec<f64> {
        self.energy_fields(fields).iter().map(|f| kahan_sum(f.iter().copied()) / f.len() as f64).collect()
    }

    /// Total mass int rho dx.
    pub fn total_mass(&self, grid: &Grid, fields: &Fields) -> Result<f64> {
        Ok(grid.integrate(&self.density(fields)?))
    }
}

/// Evolved fields in the order of `ModelClass::field_names`.
#[derive(Clone, Debug, PartialEq)]
pub struct Fields {
    pub vars: Vec<Vec<f64>>,
}

impl Fields {
    /// Constant state at rest on n points.
    pub fn uniform(model: &ModelSystem, state: &MixtureState, n: usize) -> Result<Self> {
        let c = |v: f64| vec![v; n];
        let vars = match (model.class(), *state) {
            (ModelClass::CompressibleGlobal, MixtureState::Partial { rho1, rho2 }) => {
                vec![c(rho1), c(rho2), c(0.0), c(0.0)]
            }
            (ModelClass::CompressibleLocal, MixtureState::Total { rho, rho1 }) => {
                vec![c(rho), c(rho1), c(0.0), c(0.0)]
            }
            (ModelClass::QuasiIncompressible | ModelClass::Incompressible, MixtureState::Phi { phi }) => {
                vec![c(phi), c(0.0), c(0.0)]
            }
            _ => return Err(Error::Shape("state does not match model class".into())),
        };
        Ok(Self { vars })
    }

    /// self + a * other
    pub fn axpy(&self, a: f64, other: &Fields) -> Fields {
        Fields {
            vars: self
                .vars
                .iter()
                .zip(&other.vars)
                .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u + a * v).collect())
                .collect(),
        }
    }
}

/// Right-hand side together with the intermediate chemical potentials and,
/// for the quasi-incompressible class, the solved pressure Pi.
#[derive(Clone, Debug)]
pub struct RhsOutput {
    pub derivative: Fields,
    pub chemical_potentials: Vec<Vec<f64>>,
    pub pressure: Option<Vec<f64>>,
}
