use std::fmt::Write as _;

use num_complex::Complex64;

use super::poly::{mul, Poly};
use super::{c, LinearizedSystem};
use crate::error::{Error, Result};
use crate::models::{MixtureState, ModelClass, ModelSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    SmallK,
    LargeK,
}

/// alpha(k) ~ x k^px + y k^py for one named mode.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeAsymptote {
    pub name: &'static str,
    pub x: Complex64,
    pub px: i32,
    pub y: Complex64,
    pub py: i32,
}

impl ModeAsymptote {
    fn new(name: &'static str, x: Complex64, px: i32, y: Complex64, py: i32) -> Self {
        Self { name, x, px, y, py }
    }

    pub fn eval(&self, k: f64) -> Complex64 {
        self.x * k.powi(self.px) + self.y * k.powi(self.py)
    }

    pub fn leading(&self, k: f64) -> Complex64 {
        self.x * k.powi(self.px)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticCoefficients {
    pub regime: Regime,
    pub modes: Vec<ModeAsymptote>,
    pub g1: Option<f64>,
    pub d: Option<f64>,
    pub q: Option<f64>,
    pub a: Option<f64>,
}

impl AsymptoticCoefficients {
    pub fn mode(&self, name: &str) -> Option<&ModeAsymptote> {
        self.modes.iter().find(|m| m.name == name)
    }

    /// Flat `key = value` listing.
    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        let regime = match self.regime {
            Regime::SmallK => "small_k",
            Regime::LargeK => "large_k",
        };
        let _ = writeln!(s, "regime = {regime}");
        for (key, v) in [("g1", self.g1), ("d", self.d), ("Q", self.q), ("A", self.a)] {
            if let Some(v) = v {
                let _ = writeln!(s, "{key} = {v:.17e}");
            }
        }
        for m in &self.modes {
            let _ = writeln!(s, "{}.x = {:.17e} {:+.17e}i", m.name, m.x.re, m.x.im);
            let _ = writeln!(s, "{}.x_power = {}", m.name, m.px);
            let _ = writeln!(s, "{}.y = {:.17e} {:+.17e}i", m.name, m.y.re, m.y.im);
            let _ = writeln!(s, "{}.y_power = {}", m.name, m.py);
        }
        s
    }
}

fn frob(m: &nalgebra::Matrix2<f64>, n: &nalgebra::Matrix2<f64>) -> f64 {
    m.component_mul(n).sum()
}

fn viscous(lin: &LinearizedSystem) -> ModeAsymptote {
    ModeAsymptote::new("alpha0", c(-lin.inv_re_s / lin.rho0), 2, c(0.0), 2)
}

fn nonzero(v: f64, scale: f64, what: &str) -> Result<f64> {
    if !(v.abs() > 1e-12 * scale) {
        return Err(Error::SingularExpansion(format!("{what} vanishes ({v:e})")));
    }
    Ok(v)
}

fn quasi_qa(lin: &LinearizedSystem) -> Result<(f64, f64)> {
    let (h1, h2) = lin.rho_hat;
    if h1 == h2 {
        return Err(Error::Range(
            "equal specific densities: use the incompressible growth rates".into(),
        ));
    }
    let s = lin.compressibility();
    let m = lin.phi_mobility();
    if !(m > 0.0) {
        return Err(Error::SingularExpansion("M11 = 0 makes A infinite".into()));
    }
    Ok((lin.phi0 - h2 / (h2 - h1), 1.0 / (s * s * m)))
}

pub fn asymptotic_small_k(model: &ModelSystem, state: &MixtureState) -> Result<AsymptoticCoefficients> {
    asymptotic_small_k_linearized(&LinearizedSystem::new(model, state)?)
}

pub fn asymptotic_large_k(model: &ModelSystem, state: &MixtureState) -> Result<AsymptoticCoefficients> {
    asymptotic_large_k_linearized(&LinearizedSystem::new(model, state)?)
}

pub fn asymptotic_small_k_linearized(lin: &LinearizedSystem) -> Result<AsymptoticCoefficients> {
    match lin.class {
        ModelClass::CompressibleGlobal | ModelClass::CompressibleLocal => {
            let (cm, km, mm, p) = (&lin.c, &lin.kappa, &lin.mobility, &lin.p);
            let r0 = lin.rho0;
            let ire = lin.inv_re;
            let q = nonzero(lin.ptcp(), cm.norm() * p.norm_squared(), "p^T C p")?;
            let det_c = cm.determinant();
            let det_m = mm.determinant();
            let g1 = lin.g1();
            let d = cm[(0, 0)] * km[(1, 1)] + cm[(1, 1)] * km[(0, 0)] - 2.0 * cm[(0, 1)] * km[(0, 1)];
            let mc = frob(mm, cm);
            let pkp = (p.transpose() * km * p)[(0, 0)];
            let x1 = -g1 * det_c / q;
            let y1 = -(ire * det_m * det_c + d * g1) / q
                - (r0 * x1.powi(3) + x1 * x1 * (ire + r0 * mc) + x1 * (r0 * det_m * det_c + ire * mc + pkp)) / q;
            let x23 = c(-q / r0).sqrt();
            let pp = cm * p;
            let y23 = -ire / (2.0 * r0) - (pp.transpose() * mm * pp)[(0, 0)] / (2.0 * q);
            Ok(AsymptoticCoefficients {
                regime: Regime::SmallK,
                modes: vec![
                    viscous(lin),
                    ModeAsymptote::new("alpha1", c(x1), 2, c(y1), 4),
                    ModeAsymptote::new("alpha2", x23, 1, c(y23), 2),
                    ModeAsymptote::new("alpha3", -x23, 1, c(y23), 2),
                ],
                g1: Some(g1),
                d: Some(d),
                q: None,
                a: None,
            })
        }
        ModelClass::QuasiIncompressible => {
            let (q, a) = quasi_qa(lin)?;
            let (h, kap, r0, ire) = (lin.h_phi, lin.kappa_phi, lin.rho0, lin.inv_re);
            let q2 = q * q;
            let x1 = -h * q2 / a;
            let y1 = -kap * q2 / a + h * q2 * ire / (a * a) - r0 * h * h * q2 * q2 / a.powi(3);
            Ok(AsymptoticCoefficients {
                regime: Regime::SmallK,
                modes: vec![
                    viscous(lin),
                    ModeAsymptote::new("alpha1", c(x1), 2, c(y1), 4),
                    ModeAsymptote::new("alpha2", c(-a / r0), 0, c(h * q2 / a - ire / r0), 2),
                ],
                g1: None,
                d: None,
                q: Some(q),
                a: Some(a),
            })
        }
        ModelClass::Incompressible => Ok(incompressible_asymptote(lin, Regime::SmallK)),
    }
}

fn incompressible_asymptote(lin: &LinearizedSystem, regime: Regime) -> AsymptoticCoefficients {
    let (h1, h2) = lin.rho_hat;
    AsymptoticCoefficients {
        regime,
        modes: vec![
            viscous(lin),
            ModeAsymptote::new(
                "alpha1",
                c(-lin.m11 * lin.h_phi / (h2 * h2)),
                2,
                c(-lin.m11 * lin.kappa_phi / (h1 * h1)),
                4,
            ),
        ],
        g1: None,
        d: None,
        q: None,
        a: None,
    }
}

/// Large-k expansion without mobility: the thermodynamic root vanishes and
/// rho0 alpha^2 + (1/Re) k^2 alpha + p^T C p k^2 + p^T K p k^4 = 0 remains.
fn immobile_large_k(lin: &LinearizedSystem) -> AsymptoticCoefficients {
    let (r0, ire) = (lin.rho0, lin.inv_re);
    let pkp = (lin.p.transpose() * lin.kappa * lin.p)[(0, 0)];
    let root = c(ire * ire - 4.0 * r0 * pkp).sqrt();
    let mut modes = vec![viscous(lin), ModeAsymptote::new("alpha1", c(0.0), 4, c(0.0), 2)];
    for (name, z) in [("alpha2", (root - ire) / (2.0 * r0)), ("alpha3", (-root - ire) / (2.0 * r0))] {
        let den = z * (2.0 * r0) + ire;
        let y = if den.norm() == 0.0 { c(0.0) } else { c(-lin.ptcp()) / den };
        modes.push(ModeAsymptote::new(name, z, 2, y, 0));
    }
    AsymptoticCoefficients { regime: Regime::LargeK, modes, g1: Some(0.0), d: None, q: None, a: None }
}

pub fn asymptotic_large_k_linearized(lin: &LinearizedSystem) -> Result<AsymptoticCoefficients> {
    let r0 = lin.rho0;
    let ire = lin.inv_re;
    if lin.class.is_compressible() && lin.mobility.norm() == 0.0 {
        return Ok(immobile_large_k(lin));
    }
    match lin.class {
        ModelClass::CompressibleGlobal => {
            let (cm, km, mm, p) = (&lin.c, &lin.kappa, &lin.mobility, &lin.p);
            let det_m = mm.determinant();
            let det_k = km.determinant();
            let g1 = lin.g1();
            let d = cm[(0, 0)] * km[(1, 1)] + cm[(1, 1)] * km[(0, 0)] - 2.0 * cm[(0, 1)] * km[(0, 1)];
            let mc = frob(mm, cm);
            let mk = frob(mm, km);
            nonzero(det_m * det_k, (mm.norm() * km.norm()).powi(2), "|M| |K|")?;
            // leading k^4 coefficients are the eigenvalues of -M K
            let root = c(mk * mk - 4.0 * det_m * det_k).sqrt();
            let x12 = [(-mk + root) * 0.5, (-mk - root) * 0.5];
            let mut modes = vec![viscous(lin)];
            for (name, x) in ["alpha1", "alpha2"].into_iter().zip(x12) {
                let num = -ire * det_m * det_k - x * x * (ire + r0 * mc) - x * (ire * mk + r0 * det_m * d);
                let den = x * x * (3.0 * r0) + x * (2.0 * r0 * mk) + r0 * det_m * det_k;
                if den.norm() <= 1e-14 * (x.norm() * x.norm() * r0) {
                    return Err(Error::SingularExpansion(format!("{name} subleading denominator vanishes")));
                }
                modes.push(ModeAsymptote::new(name, x, 4, num / den, 2));
            }
            let x3 = -ire / r0;
            let y3 = -(x3 * x3 * r0 * mk + x3 * (r0 * det_m * d + ire * mk) + det_m * ire * d + g1 * det_k)
                / (r0 * det_m * det_k);
            modes.push(ModeAsymptote::new("alpha3", c(x3), 2, c(y3), 0));
            let _ = p;
            Ok(AsymptoticCoefficients { regime: Regime::LargeK, modes, g1: Some(g1), d: Some(d), q: None, a: None })
        }
        ModelClass::CompressibleLocal => {
            let (cm, km, p) = (&lin.c, &lin.kappa, &lin.p);
            let m = lin.m11;
            let (h11, k11) = (cm[(1, 1)], km[(1, 1)]);
            let det_k = km.determinant();
            let d = cm[(1, 1)] * km[(0, 0)] + cm[(0, 0)] * km[(1, 1)] - 2.0 * cm[(0, 1)] * km[(0, 1)];
            let pkp = (p.transpose() * km * p)[(0, 0)];
            let mut modes = vec![viscous(lin), ModeAsymptote::new("alpha1", c(-m * k11), 4, c(-m * h11), 2)];
            nonzero(k11, km.norm(), "kappa_rho1rho1")?;
            let root = c(ire * ire - 4.0 / k11 * r0.powi(3) * det_k).sqrt();
            for (name, x) in [("alpha2", (root - ire) / (2.0 * r0)), ("alpha3", (-root - ire) / (2.0 * r0))] {
                let den = x * (2.0 * r0 * m * k11) + m * k11 * ire;
                if den.norm() <= 1e-14 * (m * k11 * (ire + x.norm() * r0)) {
                    return Err(Error::SingularExpansion(format!("{name} subleading denominator vanishes")));
                }
                let y = c(-m * r0 * r0 * d) / den
                    - (x * x * x * r0 + x * x * (r0 * m * h11 + ire) + x * (m * h11 * ire + pkp)) / den;
                modes.push(ModeAsymptote::new(name, x, 2, y, 0));
            }
            Ok(AsymptoticCoefficients { regime: Regime::LargeK, modes, g1: Some(lin.g1()), d: Some(d), q: None, a: None })
        }
        ModelClass::QuasiIncompressible => {
            let (q, a) = quasi_qa(lin)?;
            let q2 = q * q;
            let (h, kap) = (lin.h_phi, lin.kappa_phi);
            let root = c(ire * ire - 4.0 * r0 * kap * q2).sqrt();
            let mut modes = vec![viscous(lin)];
            for (name, z) in [("alpha1", (root - ire) / (2.0 * r0)), ("alpha2", (-root - ire) / (2.0 * r0))] {
                let den = z * (2.0 * r0) + ire;
                if den.norm() == 0.0 {
                    return Err(Error::SingularExpansion(format!("{name} subleading denominator vanishes")));
                }
                modes.push(ModeAsymptote::new(name, z, 2, -(z * a + h * q2) / den, 0));
            }
            Ok(AsymptoticCoefficients { regime: Regime::LargeK, modes, g1: None, d: None, q: Some(q), a: Some(a) })
        }
        ModelClass::Incompressible => Ok(incompressible_asymptote(lin, Regime::LargeK)),
    }
}

/// Closed-form (alpha0, alpha1, alpha2) of the quasi-incompressible model.
pub fn quasi_explicit_roots(model: &ModelSystem, state: &MixtureState, k: f64) -> Result<[Complex64; 3]> {
    if model.class() != ModelClass::QuasiIncompressible {
        return Err(Error::Shape("explicit roots need a quasi-incompressible model".into()));
    }
    quasi_explicit_roots_linearized(&LinearizedSystem::new(model, state)?, k)
}

pub fn quasi_explicit_roots_linearized(lin: &LinearizedSystem, k: f64) -> Result<[Complex64; 3]> {
    if !(k > 0.0) {
        return Err(Error::Range("wavenumber must be positive".into()));
    }
    let (q, a) = quasi_qa(lin)?;
    let k2 = k * k;
    let dq = k2 * (lin.h_phi + k2 * lin.kappa_phi) * q * q;
    let x = lin.inv_re * k2 + a;
    let root = c(x * x - 4.0 * lin.rho0 * dq).sqrt();
    let a0 = c(-lin.inv_re_s * k2 / lin.rho0);
    let a1 = c(-2.0 * dq) / (root + x);
    let a2 = (-root - x) / (2.0 * lin.rho0);
    Ok([a0, a1, a2])
}

/// (alpha0, alpha1) of the incompressible model, with alpha1 =
/// -(M11/rho_hat_2^2) h k^2 - (M11/rho_hat_1^2) kappa k^4.
pub fn incompressible_roots(model: &ModelSystem, state: &MixtureState, k: f64) -> Result<[Complex64; 2]> {
    if model.rho_hat().is_none() {
        return Err(Error::Shape("incompressible roots need specific densities".into()));
    }
    Ok(incompressible_roots_linearized(&LinearizedSystem::new(model, state)?, k))
}

pub fn incompressible_roots_linearized(lin: &LinearizedSystem, k: f64) -> [Complex64; 2] {
    let (h1, h2) = lin.rho_hat;
    let k2 = k * k;
    [
        c(-lin.inv_re_s * k2 / lin.rho0),
        c(-lin.m11 / (h2 * h2) * lin.h_phi * k2 - lin.m11 / (h1 * h1) * lin.kappa_phi * k2 * k2),
    ]
}

/// The scalar dispersion polynomial in alpha (ascending coefficients) written
/// out term by term for each class, independent of the pencil expansion.
pub fn printed_polynomial(lin: &LinearizedSystem, k: f64) -> Poly {
    let r0 = lin.rho0;
    let ire = lin.inv_re;
    let k2 = k * k;
    let k4 = k2 * k2;
    let visc = vec![c(lin.inv_re_s * k2), c(r0)];
    let rest: Vec<f64> = match lin.class {
        ModelClass::CompressibleGlobal => {
            let (cm, km, mm) = (&lin.c, &lin.kappa, &lin.mobility);
            let dm = cm + km * k2;
            let det_d = dm.determinant();
            let det_m = mm.determinant();
            let md = mm[(0, 0)] * dm[(0, 0)] + mm[(1, 1)] * dm[(1, 1)] + 2.0 * mm[(0, 1)] * dm[(0, 1)];
            let pkp = (lin.p.transpose() * km * lin.p)[(0, 0)];
            vec![
                k4 * (ire * det_m * k2 + lin.g1()) * det_d,
                (lin.ptcp() + pkp * k2) * k2 + ire * md * k4 + r0 * det_m * det_d * k4,
                k2 * (ire + r0 * md),
                r0,
            ]
        }
        ModelClass::CompressibleLocal => {
            let (cm, km) = (&lin.c, &lin.kappa);
            let dm = cm + km * k2;
            let m = lin.m11;
            let d22 = dm[(1, 1)];
            let pkp = (lin.p.transpose() * km * lin.p)[(0, 0)];
            vec![
                k4 * m * r0 * r0 * dm.determinant(),
                k2 * m * d22 * ire * k2 + lin.ptcp() * k2 + pkp * k4,
                r0 * k2 * m * d22 + ire * k2,
                r0,
            ]
        }
        ModelClass::QuasiIncompressible => {
            let s = lin.compressibility();
            let (h1, _) = lin.rho_hat;
            let m11 = lin.m11;
            let dphi = lin.h_phi + k2 * lin.kappa_phi;
            let f = 1.0 - s * lin.phi0;
            vec![
                k4 * m11 * dphi / (h1 * h1) * f * f,
                k2 + ire * s * s / (h1 * h1) * m11 * k4,
                s * s / (h1 * h1) * m11 * k2 * r0,
            ]
        }
        ModelClass::Incompressible => {
            let m = lin.phi_mobility();
            vec![k2 * m * k2 * (lin.h_phi + k2 * lin.kappa_phi), k2]
        }
    };
    let rest: Poly = rest.into_iter().map(c).collect();
    mul(&visc, &rest)
}
