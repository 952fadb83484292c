//! Bulk free energies, gradient-energy coefficients and the changes of variables
//! between partial densities (rho1, rho2), (rho1, rho) and the phase variable phi.

mod flory_huggins;
mod peng_robinson;
mod quadratic;
mod viscosity;

pub mod fd;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Grid, Scheme};

pub use flory_huggins::FloryHuggins;
pub use peng_robinson::{species, species_table_version, PengRobinson, PengRobinsonParams, Species, GAS_CONSTANT};
pub use quadratic::Quadratic;
pub use viscosity::{average_viscosity, RuleKind, ViscosityRule};

/// Relative threshold below which a Hessian eigenvalue counts as zero.
pub const DEFINITENESS_TOL: f64 = 1e-10;

/// Variables an energy or coefficient matrix is expressed in.
///
/// * `Partial`: (rho1, ..., rhoN)
/// * `Total`: (rho1, rho) with rho2 = rho - rho1 (binary only)
/// * `Phi`: the volume fraction phi with rho1 = rho_hat_1 phi, rho2 = rho_hat_2 (1 - phi)
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coordinates {
    Partial,
    Total,
    Phi { rho_hat_1: f64, rho_hat_2: f64 },
}

impl Coordinates {
    fn dim(&self, components: usize) -> usize {
        match self {
            Coordinates::Partial => components,
            Coordinates::Total => 2,
            Coordinates::Phi { .. } => 1,
        }
    }

    /// d(partial)/d(coordinates), an N x dim matrix.
    pub fn jacobian(&self, components: usize) -> DMatrix<f64> {
        match *self {
            Coordinates::Partial => DMatrix::identity(components, components),
            Coordinates::Total => DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 1.0]),
            Coordinates::Phi { rho_hat_1, rho_hat_2 } => {
                DMatrix::from_column_slice(2, 1, &[rho_hat_1, -rho_hat_2])
            }
        }
    }

    fn to_partial(&self, y: &[f64], out: &mut [f64]) {
        match *self {
            Coordinates::Partial => out.copy_from_slice(y),
            Coordinates::Total => {
                out[0] = y[0];
                out[1] = y[1] - y[0];
            }
            Coordinates::Phi { rho_hat_1, rho_hat_2 } => {
                out[0] = rho_hat_1 * y[0];
                out[1] = rho_hat_2 * (1.0 - y[0]);
            }
        }
    }

    fn validate(&self, components: usize) -> Result<()> {
        match *self {
            Coordinates::Partial => Ok(()),
            _ if components != 2 => {
                Err(Error::Shape("(rho1, rho) and phi variables need a binary mixture".into()))
            }
            Coordinates::Phi { rho_hat_1, rho_hat_2 } if !(rho_hat_1 > 0.0 && rho_hat_2 > 0.0) => {
                Err(Error::Range("specific densities must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BulkKind {
    PengRobinson(PengRobinson),
    FloryHuggins(FloryHuggins),
    Quadratic(Quadratic),
}

impl BulkKind {
    fn components(&self) -> usize {
        match self {
            BulkKind::PengRobinson(_) => 2,
            BulkKind::FloryHuggins(f) => f.components(),
            BulkKind::Quadratic(q) => q.components(),
        }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        match self {
            BulkKind::PengRobinson(p) => p.check(x),
            BulkKind::FloryHuggins(f) => f.check(x),
            BulkKind::Quadratic(q) => q.check(x),
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        match self {
            BulkKind::PengRobinson(p) => p.value(x),
            BulkKind::FloryHuggins(f) => f.value(x),
            BulkKind::Quadratic(q) => q.value(x),
        }
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        match self {
            BulkKind::PengRobinson(p) => p.gradient(x, out),
            BulkKind::FloryHuggins(f) => f.gradient(x, out),
            BulkKind::Quadratic(q) => q.gradient(x, out),
        }
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        match self {
            BulkKind::PengRobinson(p) => {
                let h = p.hessian(x);
                let off = 0.5 * (h[0][1] + h[1][0]);
                DMatrix::from_row_slice(2, 2, &[h[0][0], off, off, h[1][1]])
            }
            BulkKind::FloryHuggins(f) => f.hessian(x),
            BulkKind::Quadratic(q) => q.matrix().clone(),
        }
    }
}

const STACK: usize = 8;

/// A bulk free-energy density viewed in a chosen set of variables.
#[derive(Clone, Debug, PartialEq)]
pub struct BulkFreeEnergy {
    kind: BulkKind,
    coords: Coordinates,
}

impl BulkFreeEnergy {
    pub fn new(kind: BulkKind) -> Self {
        Self { kind, coords: Coordinates::Partial }
    }

    pub fn peng_robinson(params: PengRobinsonParams) -> Result<Self> {
        Ok(Self::new(BulkKind::PengRobinson(PengRobinson::new(params)?)))
    }

    pub fn flory_huggins(f: FloryHuggins) -> Self {
        Self::new(BulkKind::FloryHuggins(f))
    }

    pub fn quadratic(q: Quadratic) -> Self {
        Self::new(BulkKind::Quadratic(q))
    }

    pub fn kind(&self) -> &BulkKind {
        &self.kind
    }

    pub fn coordinates(&self) -> Coordinates {
        self.coords
    }

    /// Same energy, evaluated in other variables.
    pub fn with_coordinates(&self, coords: Coordinates) -> Result<Self> {
        coords.validate(self.components())?;
        Ok(Self { kind: self.kind.clone(), coords })
    }

    /// Number of partial densities.
    pub fn components(&self) -> usize {
        self.kind.components()
    }

    /// Number of independent variables in the current view.
    pub fn dim(&self) -> usize {
        self.coords.dim(self.components())
    }

    fn partial<'a>(&self, y: &[f64], buf: &'a mut [f64]) -> Result<&'a [f64]> {
        if y.len() != self.dim() {
            return Err(Error::Shape(format!("expected {} variables, got {}", self.dim(), y.len())));
        }
        let n = self.components();
        self.coords.to_partial(y, &mut buf[..n]);
        self.kind.check(&buf[..n])?;
        Ok(&buf[..n])
    }

    pub fn energy(&self, y: &[f64]) -> Result<f64> {
        let mut stack = [0.0; STACK];
        let mut heap;
        let buf: &mut [f64] = if self.components() <= STACK {
            &mut stack
        } else {
            heap = vec![0.0; self.components()];
            &mut heap
        };
        let x = self.partial(y, buf)?;
        Ok(self.kind.value(x))
    }

    /// Gradient written into `out` (length `dim()`); allocation-free for small N.
    pub fn gradient_into(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.components();
        if n > STACK {
            let g = self.gradient(y)?;
            out.copy_from_slice(g.as_slice());
            return Ok(());
        }
        let mut xb = [0.0; STACK];
        let x = self.partial(y, &mut xb)?;
        let mut g = [0.0; STACK];
        self.kind.gradient(x, &mut g[..n]);
        match self.coords {
            Coordinates::Partial => out.copy_from_slice(&g[..n]),
            Coordinates::Total => {
                out[0] = g[0] - g[1];
                out[1] = g[1];
            }
            Coordinates::Phi { rho_hat_1, rho_hat_2 } => out[0] = rho_hat_1 * g[0] - rho_hat_2 * g[1],
        }
        Ok(())
    }

    pub fn gradient(&self, y: &[f64]) -> Result<DVector<f64>> {
        let n = self.components();
        let mut x = vec![0.0; n];
        let x = self.partial(y, &mut x)?.to_vec();
        let mut g = vec![0.0; n];
        self.kind.gradient(&x, &mut g);
        let j = self.coords.jacobian(n);
        Ok(j.transpose() * DVector::from_vec(g))
    }

    pub fn hessian(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.components();
        let mut x = vec![0.0; n];
        let x = self.partial(y, &mut x)?.to_vec();
        let h = self.kind.hessian(&x);
        Ok(match self.coords {
            Coordinates::Partial => h,
            c => {
                let j = c.jacobian(n);
                j.transpose() * h * j
            }
        })
    }

    /// Hessian with its definiteness class and p^T C p for p = `y`.
    pub fn hessian_report(&self, y: &[f64]) -> Result<HessianReport> {
        let c = self.hessian(y)?;
        let p = DVector::from_column_slice(y);
        Ok(HessianReport::new(c, &p))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Definiteness {
    PositiveDefinite,
    NegativeDefinite,
    Indefinite,
    Singular,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HessianReport {
    pub c: DMatrix<f64>,
    pub definiteness: Definiteness,
    pub det: f64,
    pub eigenvalues: Vec<f64>,
    pub quadratic_form_p: f64,
}

impl HessianReport {
    pub fn new(c: DMatrix<f64>, p: &DVector<f64>) -> Self {
        let eig = SymmetricEigen::new(c.clone()).eigenvalues;
        let mut eigenvalues: Vec<f64> = eig.iter().copied().collect();
        eigenvalues.sort_by(|a, b| a.total_cmp(b));
        let definiteness = classify_eigenvalues(&eigenvalues, c.norm());
        let det = c.determinant();
        let quadratic_form_p = (p.transpose() * &c * p)[(0, 0)];
        Self { c, definiteness, det, eigenvalues, quadratic_form_p }
    }
}

/// Definiteness from eigenvalues, treating |lambda| <= 1e-10 ||C||_F as zero.
pub fn classify_eigenvalues(eigenvalues: &[f64], frobenius: f64) -> Definiteness {
    let tol = DEFINITENESS_TOL * frobenius;
    if eigenvalues.iter().any(|l| l.abs() <= tol) {
        Definiteness::Singular
    } else if eigenvalues.iter().all(|l| *l > 0.0) {
        Definiteness::PositiveDefinite
    } else if eigenvalues.iter().all(|l| *l < 0.0) {
        Definiteness::NegativeDefinite
    } else {
        Definiteness::Indefinite
    }
}

/// Symmetric positive semi-definite matrix of gradient-energy coefficients.
///
/// The partial-density matrix is stored; other variable sets are congruence
/// transforms of it, so converting back to partial densities is exact.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientCoefficients {
    partial: DMatrix<f64>,
    coords: Coordinates,
}

impl GradientCoefficients {
    pub fn new(kappa: DMatrix<f64>) -> Result<Self> {
        let n = kappa.nrows();
        if kappa.ncols() != n || n == 0 {
            return Err(Error::Shape("kappa must be square".into()));
        }
        check_symmetric_psd(&kappa, "kappa")?;
        Ok(Self { partial: kappa, coords: Coordinates::Partial })
    }

    pub fn binary(k11: f64, k12: f64, k22: f64) -> Result<Self> {
        Self::new(DMatrix::from_row_slice(2, 2, &[k11, k12, k12, k22]))
    }

    /// From the (rho1, rho) coefficients kappa~_{rho1 rho1}, kappa~_{rho rho1}, kappa~_{rho rho}.
    pub fn from_total(rho1_rho1: f64, rho_rho1: f64, rho_rho: f64) -> Result<Self> {
        // kappa = T^T kappa~ T with (rho1, rho) = T (rho1, rho2)
        let kt = DMatrix::from_row_slice(2, 2, &[rho1_rho1, rho_rho1, rho_rho1, rho_rho]);
        check_symmetric_psd(&kt, "kappa~")?;
        let t = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        let partial = t.transpose() * kt * &t;
        Ok(Self { partial, coords: Coordinates::Total })
    }

    pub fn coordinates(&self) -> Coordinates {
        self.coords
    }

    pub fn partial(&self) -> &DMatrix<f64> {
        &self.partial
    }

    pub fn with_coordinates(&self, coords: Coordinates) -> Result<Self> {
        coords.validate(self.partial.nrows())?;
        Ok(Self { partial: self.partial.clone(), coords })
    }

    /// Coefficient matrix in the current variables.
    pub fn matrix(&self) -> DMatrix<f64> {
        match self.coords {
            Coordinates::Partial => self.partial.clone(),
            Coordinates::Total => {
                // closed forms keep integer-weighted sums exact
                let k = &self.partial;
                let (k11, k12, k22) = (k[(0, 0)], k[(0, 1)], k[(1, 1)]);
                let t11 = k11 + k22 - 2.0 * k12;
                let t1r = k12 - k22;
                DMatrix::from_row_slice(2, 2, &[t11, t1r, t1r, k22])
            }
            c => {
                let j = c.jacobian(2);
                j.transpose() * &self.partial * j
            }
        }
    }
}

fn check_symmetric_psd(m: &DMatrix<f64>, what: &str) -> Result<()> {
    let scale = m.norm();
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Range(format!("{what} has non-finite entries")));
    }
    if (m - m.transpose()).norm() > 1e-14 * scale {
        return Err(Error::Shape(format!("{what} must be symmetric")));
    }
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    if eig.iter().any(|l| *l < -1e-12 * scale) {
        return Err(Error::Range(format!("{what} must be positive semi-definite")));
    }
    Ok(())
}

pub fn bulk_energy(fe: &BulkFreeEnergy, densities: &[f64]) -> Result<f64> {
    fe.energy(densities)
}

pub fn bulk_gradient(fe: &BulkFreeEnergy, densities: &[f64]) -> Result<DVector<f64>> {
    fe.gradient(densities)
}

pub fn bulk_hessian(fe: &BulkFreeEnergy, densities: &[f64]) -> Result<HessianReport> {
    fe.hessian_report(densities)
}

/// Switch a binary (kappa, h) pair to (rho1, rho) variables.
pub fn change_variables_to_rho_rho1(
    kappa: &GradientCoefficients,
    fe: &BulkFreeEnergy,
) -> Result<(GradientCoefficients, BulkFreeEnergy)> {
    Ok((kappa.with_coordinates(Coordinates::Total)?, fe.with_coordinates(Coordinates::Total)?))
}

/// Scalar kappa^_{phi phi} and the energy h^(phi) = h~(rho_hat_1 phi, (rho_hat_1 - rho_hat_2) phi + rho_hat_2).
pub fn reduce_quasi_incompressible(
    kappa_tilde: &GradientCoefficients,
    fe_tilde: &BulkFreeEnergy,
    rho_hat_1: f64,
    rho_hat_2: f64,
) -> Result<(f64, BulkFreeEnergy)> {
    let coords = Coordinates::Phi { rho_hat_1, rho_hat_2 };
    let k = kappa_tilde.with_coordinates(coords)?.matrix()[(0, 0)];
    Ok((k, fe_tilde.with_coordinates(coords)?))
}

/// Chemical potentials on a periodic grid together with the Laplacian used.
#[derive(Clone, Debug)]
pub struct ChemicalPotentials {
    pub mu: Vec<Vec<f64>>,
    pub laplacian: Scheme,
}

/// mu_i = dh/dy_i - sum_j kappa_ij Lap y_j for fields given in the energy's variables.
pub fn chemical_potentials(
    fe: &BulkFreeEnergy,
    kappa: &GradientCoefficients,
    fields: &[Vec<f64>],
    grid: &Grid,
) -> Result<ChemicalPotentials> {
    let d = fe.dim();
    if fields.len() != d {
        return Err(Error::Shape(format!("expected {d} fields, got {}", fields.len())));
    }
    if fields.iter().any(|f| f.len() != grid.n()) {
        return Err(Error::Shape("field length differs from grid size".into()));
    }
    let km = kappa.with_coordinates(fe.coordinates())?.matrix();
    let laps: Vec<Vec<f64>> = fields.iter().map(|f| grid.laplacian(f)).collect();
    let mut mu = vec![vec![0.0; grid.n()]; d];
    let mut y = vec![0.0; d];
    let mut g = vec![0.0; d];
    for p in 0..grid.n() {
        for i in 0..d {
            y[i] = fields[i][p];
        }
        fe.gradient_into(&y, &mut g).map_err(|e| match e {
            Error::Domain(m) => Error::Domain(format!("grid index {p}: {m}")),
            other => other,
        })?;
        for i in 0..d {
            let mut v = g[i];
            for j in 0..d {
                v -= km[(i, j)] * laps[j][p];
            }
            mu[i][p] = v;
        }
    }
    Ok(ChemicalPotentials { mu, laplacian: grid.scheme() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CellClass {
    Excluded,
    PositiveDefinite,
    Indefinite,
    NegativeDefinite,
    Singular,
}

impl CellClass {
    pub fn code(self) -> u8 {
        match self {
            CellClass::Excluded => 0,
            CellClass::PositiveDefinite => 1,
            CellClass::Indefinite => 2,
            CellClass::NegativeDefinite => 3,
            CellClass::Singular => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConcavityCell {
    pub rho1: f64,
    pub rho: f64,
    pub class: CellClass,
    pub det: Option<f64>,
}

/// Definiteness of h~(rho1, rho) on a tensor grid, row-major with rho1 varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcavityMap {
    pub rho1: Vec<f64>,
    pub rho: Vec<f64>,
    pub cells: Vec<ConcavityCell>,
}

impl ConcavityMap {
    pub fn count(&self, class: CellClass) -> usize {
        self.cells.iter().filter(|c| c.class == class).count()
    }
}

pub fn pr_concavity_map(fe: &BulkFreeEnergy, rho1_grid: &[f64], rho_grid: &[f64]) -> Result<ConcavityMap> {
    let fe = fe.with_coordinates(Coordinates::Total)?;
    let cells = rho_grid
        .par_iter()
        .flat_map_iter(|&rho| {
            let fe = &fe;
            rho1_grid.iter().map(move |&rho1| {
                if !(rho1 > 0.0 && rho - rho1 > 0.0) {
                    return ConcavityCell { rho1, rho, class: CellClass::Excluded, det: None };
                }
                match fe.hessian_report(&[rho1, rho]) {
                    Ok(r) => {
                        let class = match r.definiteness {
                            Definiteness::PositiveDefinite => CellClass::PositiveDefinite,
                            Definiteness::NegativeDefinite => CellClass::NegativeDefinite,
                            Definiteness::Indefinite => CellClass::Indefinite,
                            Definiteness::Singular => CellClass::Singular,
                        };
                        ConcavityCell { rho1, rho, class, det: Some(r.det) }
                    }
                    Err(_) => ConcavityCell { rho1, rho, class: CellClass::Excluded, det: None },
                }
            })
        })
        .collect();
    Ok(ConcavityMap { rho1: rho1_grid.to_vec(), rho: rho_grid.to_vec(), cells })
}
