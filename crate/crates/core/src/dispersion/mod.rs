//! Linear stability of constant states: dispersion pencils, growth rates,
//! closed-form and asymptotic growth-rate formulas, the long-wave stability
//! table and k-sweeps with mode tracking.

mod asymptotics;
pub mod poly;
mod stability;
mod sweep;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::models::{MixtureState, ModelClass, ModelSystem};

pub use asymptotics::{
    asymptotic_large_k, asymptotic_large_k_linearized, asymptotic_small_k, asymptotic_small_k_linearized,
    incompressible_roots, incompressible_roots_linearized, printed_polynomial,
    quasi_explicit_roots, quasi_explicit_roots_linearized, AsymptoticCoefficients, ModeAsymptote, Regime,
};
pub use stability::{classify_stability, stability_report, Sign, StabilityReport, TableRow};
pub use sweep::{log_grid, short_wave_threshold, sweep, sweep_with, Band, DispersionResult, ModeLabel, SweepOptions, TrackedMode};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn ic(im: f64) -> Complex64 {
    Complex64::new(0.0, im)
}

/// Everything the linearized equations need, in the variables used by the
/// dispersion matrices: (rho1, rho2) for the global model, (rho, rho1) for
/// the local model and phi for the quasi-incompressible classes.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearizedSystem {
    pub class: ModelClass,
    pub rho0: f64,
    /// Constant state p (compressible classes).
    pub p: Vector2<f64>,
    /// Hessian C of the bulk energy (compressible classes).
    pub c: Matrix2<f64>,
    /// Gradient coefficient matrix K (compressible classes).
    pub kappa: Matrix2<f64>,
    /// Mobility acting on the two chemical potentials; [[0, 0], [0, M11]] for
    /// the local model in (rho, rho1) variables.
    pub mobility: Matrix2<f64>,
    pub m11: f64,
    pub inv_re_s: f64,
    pub inv_re_v: f64,
    pub inv_re: f64,
    /// phi0, h_phiphi, kappa_phiphi and (rho_hat_1, rho_hat_2) for the phi classes.
    pub phi0: f64,
    pub h_phi: f64,
    pub kappa_phi: f64,
    pub rho_hat: (f64, f64),
}

impl LinearizedSystem {
    pub fn new(model: &ModelSystem, state: &MixtureState) -> Result<Self> {
        model.validate_state(state)?;
        let y = model.energy_point(state)?;
        let h = model.energy().hessian(&y)?;
        let km = model.kappa().matrix();
        let (inv_re_s, inv_re_v) = model.viscosities_at(state)?;
        let rho0 = model.total_density(state)?;
        let mut lin = LinearizedSystem {
            class: model.class(),
            rho0,
            p: Vector2::zeros(),
            c: Matrix2::zeros(),
            kappa: Matrix2::zeros(),
            mobility: Matrix2::zeros(),
            m11: model.m11(),
            inv_re_s,
            inv_re_v,
            inv_re: 2.0 * inv_re_s + inv_re_v,
            phi0: 0.0,
            h_phi: 0.0,
            kappa_phi: 0.0,
            rho_hat: model.rho_hat().unwrap_or((0.0, 0.0)),
        };
        match (model.class(), *state) {
            (ModelClass::CompressibleGlobal, MixtureState::Partial { rho1, rho2 }) => {
                lin.p = Vector2::new(rho1, rho2);
                lin.c = Matrix2::new(h[(0, 0)], h[(0, 1)], h[(1, 0)], h[(1, 1)]);
                lin.kappa = Matrix2::new(km[(0, 0)], km[(0, 1)], km[(1, 0)], km[(1, 1)]);
                let m = model.mobility();
                lin.mobility = Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
            }
            (ModelClass::CompressibleLocal, MixtureState::Total { rho, rho1 }) => {
                // energy variables are (rho1, rho); reorder to (rho, rho1)
                lin.p = Vector2::new(rho, rho1);
                lin.c = Matrix2::new(h[(1, 1)], h[(0, 1)], h[(1, 0)], h[(0, 0)]);
                lin.kappa = Matrix2::new(km[(1, 1)], km[(0, 1)], km[(1, 0)], km[(0, 0)]);
                lin.mobility = Matrix2::new(0.0, 0.0, 0.0, model.m11());
            }
            (_, MixtureState::Phi { phi }) => {
                lin.phi0 = phi;
                lin.h_phi = h[(0, 0)];
                lin.kappa_phi = km[(0, 0)];
            }
            _ => return Err(Error::Shape("state does not match model class".into())),
        }
        Ok(lin)
    }

    /// M11 / rho_hat_1^2 for the phi classes.
    pub fn phi_mobility(&self) -> f64 {
        self.m11 / (self.rho_hat.0 * self.rho_hat.0)
    }

    /// 1 - rho_hat_1 / rho_hat_2.
    pub fn compressibility(&self) -> f64 {
        1.0 - self.rho_hat.0 / self.rho_hat.1
    }

    /// p^T C p
    pub fn ptcp(&self) -> f64 {
        (self.p.transpose() * self.c * self.p)[(0, 0)]
    }

    /// g1 = M22 p1^2 + M11 p2^2 - 2 M12 p1 p2
    pub fn g1(&self) -> f64 {
        let m = &self.mobility;
        let p = &self.p;
        m[(1, 1)] * p[0] * p[0] + m[(0, 0)] * p[1] * p[1] - 2.0 * m[(0, 1)] * p[0] * p[1]
    }

    /// Number of dispersion roots of the class.
    pub fn root_count(&self) -> usize {
        match self.class {
            ModelClass::CompressibleGlobal | ModelClass::CompressibleLocal => 4,
            ModelClass::QuasiIncompressible if self.compressibility() != 0.0 => 3,
            _ => 2,
        }
    }
}

/// det(alpha B + A(k)) = 0, with B real and alpha-free part A(k).
#[derive(Clone, Debug, PartialEq)]
pub struct DispersionPencil {
    pub a: DMatrix<Complex64>,
    pub b: DMatrix<f64>,
    pub k: f64,
}

impl DispersionPencil {
    pub fn from_linearized(lin: &LinearizedSystem, k: f64) -> Self {
        let k2 = k * k;
        let mut a = DMatrix::<Complex64>::zeros(4, 4);
        let mut b = DMatrix::<f64>::zeros(4, 4);
        match lin.class {
            ModelClass::CompressibleGlobal | ModelClass::CompressibleLocal => {
                let d = lin.c + lin.kappa * k2;
                let md = lin.mobility * d;
                let dp = d * lin.p;
                for i in 0..2 {
                    for j in 0..2 {
                        a[(i, j)] = c(k2 * md[(i, j)]);
                    }
                    a[(i, 2)] = ic(lin.p[i] * k);
                    a[(2, i)] = ic(k * dp[i]);
                }
                a[(2, 2)] = c(lin.inv_re * k2);
                b[(0, 0)] = 1.0;
                b[(1, 1)] = 1.0;
                b[(2, 2)] = lin.rho0;
            }
            ModelClass::QuasiIncompressible | ModelClass::Incompressible => {
                let m = lin.phi_mobility();
                let s = if lin.class == ModelClass::Incompressible { 0.0 } else { lin.compressibility() };
                let dphi = lin.h_phi + lin.kappa_phi * k2;
                // first row already reduced by s times the second row
                a[(0, 0)] = c(m * s * s * k2);
                a[(0, 1)] = c(s * m * k2 * dphi);
                a[(0, 2)] = ic(k);
                a[(1, 0)] = c(m * s * k2);
                a[(1, 1)] = c(m * k2 * dphi);
                a[(1, 2)] = ic(k * lin.phi0);
                a[(2, 0)] = ic(k);
                a[(2, 1)] = ic(k * lin.phi0 * dphi);
                a[(2, 2)] = c(lin.inv_re * k2);
                b[(1, 1)] = 1.0;
                b[(2, 2)] = lin.rho0;
            }
        }
        a[(3, 3)] = c(lin.inv_re_s * k2);
        b[(3, 3)] = lin.rho0;
        Self { a, b, k }
    }

    pub fn matrix_at(&self, alpha: Complex64) -> DMatrix<Complex64> {
        &self.a + self.b.map(|v| c(v)) * alpha
    }

    /// det(alpha B + A) as ascending polynomial coefficients in alpha.
    pub fn polynomial(&self) -> Vec<Complex64> {
        poly::pencil_determinant(&self.a, &self.b)
    }

    /// ||(alpha B + A) x|| / (||A|| ||x||)
    pub fn relative_residual(&self, alpha: Complex64, x: &DVector<Complex64>) -> f64 {
        let r = self.matrix_at(alpha) * x;
        r.norm() / (self.a.norm() * x.norm())
    }

    /// Index groups of rows/columns that couple through A or B.
    fn blocks(&self) -> Vec<Vec<usize>> {
        let n = self.a.nrows();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], i: usize) -> usize {
            let mut r = i;
            while p[r] != r {
                r = p[r];
            }
            p[i] = r;
            r
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && (self.a[(i, j)] != c(0.0) || self.b[(i, j)] != 0.0) {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri] = rj;
                    }
                }
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut roots: Vec<usize> = Vec::new();
        for i in 0..n {
            let r = find(&mut parent, i);
            match roots.iter().position(|&x| x == r) {
                Some(g) => groups[g].push(i),
                None => {
                    roots.push(r);
                    groups.push(vec![i]);
                }
            }
        }
        groups
    }
}

pub fn assemble_pencil(model: &ModelSystem, state: &MixtureState, k: f64) -> Result<DispersionPencil> {
    let lin = LinearizedSystem::new(model, state)?;
    Ok(DispersionPencil::from_linearized(&lin, k))
}

/// A generalized eigenpair of the pencil.
#[derive(Clone, Debug, PartialEq)]
pub struct Root {
    pub alpha: Complex64,
    /// Unit right null vector of alpha B + A, phase-normalized so that its
    /// largest component is real and positive.
    pub eigenvector: DVector<Complex64>,
}

fn sub_block<T: nalgebra::Scalar + Copy>(m: &DMatrix<T>, idx: &[usize]) -> DMatrix<T> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

fn newton_polish(a: &DMatrix<Complex64>, b: &DMatrix<f64>, mut alpha: Complex64) -> Complex64 {
    let bc = b.map(c);
    let det = |x: Complex64| (a + &bc * x).lu().determinant();
    let mut f = det(alpha).norm();
    for _ in 0..6 {
        let m = a + &bc * alpha;
        let Some(inv) = m.try_inverse() else { break };
        let tr = (inv * &bc).trace();
        if tr == c(0.0) || !tr.is_finite() {
            break;
        }
        let next = alpha - tr.inv();
        let nf = det(next).norm();
        if !(nf < f) {
            break;
        }
        alpha = next;
        f = nf;
    }
    alpha
}

fn null_vector(m: &DMatrix<Complex64>) -> Result<DVector<Complex64>> {
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::Numerical("SVD did not return V".into()))?;
    let (j, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, s)| if *s < acc.1 { (i, *s) } else { acc });
    Ok(vt.row(j).adjoint())
}

fn normalize_phase(mut x: DVector<Complex64>) -> DVector<Complex64> {
    let n = x.norm();
    if n > 0.0 {
        x /= c(n);
    }
    let (_, big) = x.iter().fold((0.0, c(1.0)), |acc, v| if v.norm() > acc.0 { (v.norm(), *v) } else { acc });
    if big.norm() > 0.0 {
        let ph = big.conj() / big.norm();
        x *= ph;
    }
    x
}

fn block_roots(a: &DMatrix<Complex64>, b: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    if n == 1 {
        if b[(0, 0)] == 0.0 {
            return Ok(Vec::new());
        }
        return Ok(vec![-a[(0, 0)] / b[(0, 0)]]);
    }
    let sv = b.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    let raw = if smax > 0.0 && smin > 1e-13 * smax {
        let binv = b.clone().try_inverse().ok_or_else(|| Error::Numerical("B block not invertible".into()))?;
        let m = -(binv.map(c) * a);
        m.schur()
            .eigenvalues()
            .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?
            .iter()
            .copied()
            .collect::<Vec<_>>()
    } else {
        let p = poly::trim(poly::pencil_determinant(a, b));
        if p.len() == 1 && p[0] == c(0.0) {
            return Err(Error::Numerical("dispersion determinant vanishes identically".into()));
        }
        poly::roots(&p)
    };
    Ok(raw.into_iter().map(|r| newton_polish(a, b, r)).collect())
}

fn check_k(k: f64) -> Result<()> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::Range(format!("wavenumber must be positive, got {k}")));
    }
    Ok(())
}

/// Roots and eigenvectors of an assembled pencil, sorted by descending real part.
pub fn pencil_roots(pencil: &DispersionPencil) -> Result<Vec<Root>> {
    let n = pencil.a.nrows();
    let mut out = Vec::with_capacity(n);
    for idx in pencil.blocks() {
        let a = sub_block(&pencil.a, &idx);
        let b = sub_block(&pencil.b, &idx);
        for alpha in block_roots(&a, &b)? {
            if !alpha.is_finite() {
                return Err(Error::Numerical(format!("non-finite root at k = {}", pencil.k)));
            }
            let v = null_vector(&(&a + b.map(c) * alpha))?;
            let mut full = DVector::<Complex64>::zeros(n);
            for (i, &g) in idx.iter().enumerate() {
                full[g] = v[i];
            }
            out.push(Root { alpha, eigenvector: normalize_phase(full) });
        }
    }
    out.sort_by(|x, y| y.alpha.re.total_cmp(&x.alpha.re).then(y.alpha.im.total_cmp(&x.alpha.im)));
    Ok(out)
}

pub fn growth_rates_linearized(lin: &LinearizedSystem, k: f64) -> Result<Vec<Root>> {
    check_k(k)?;
    pencil_roots(&DispersionPencil::from_linearized(lin, k))
}

/// All growth rates at wavenumber k > 0 with eigenvectors, sorted by
/// descending real part. Eigenvector components are ordered as the pencil
/// columns: (rho1, rho2, v, w), (rho, rho1, v, w) or (Pi, phi, v, w).
pub fn growth_rates(model: &ModelSystem, state: &MixtureState, k: f64) -> Result<Vec<Root>> {
    check_k(k)?;
    growth_rates_linearized(&LinearizedSystem::new(model, state)?, k)
}
