use serde::Deserialize;

use crate::error::{Error, Result};

const SPECIES_DATA: &str = include_str!("../../data/pr_species.toml");
const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Molar gas constant, J/(mol K).
pub const GAS_CONSTANT: f64 = 8.314462618;

/// Pure-component constants needed by the Peng-Robinson equation of state.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Species {
    pub name: String,
    /// K
    pub critical_temperature: f64,
    /// Pa
    pub critical_pressure: f64,
    pub acentric: f64,
    /// kg/mol
    pub molar_mass: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpeciesFile {
    version: u32,
    species: Vec<Species>,
}

/// Version tag of the bundled species table.
pub fn species_table_version() -> u32 {
    parse_table().version
}

fn parse_table() -> SpeciesFile {
    toml::from_str(SPECIES_DATA).expect("bundled species table is valid")
}

/// Look up a species in the bundled data file (case-insensitive).
pub fn species(name: &str) -> Result<Species> {
    parse_table()
        .species
        .into_iter()
        .find(|s| s.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::Range(format!("unknown species `{name}`")))
}

/// Parameters of a binary Peng-Robinson mixture expressed in model units.
///
/// Model densities are converted to SI mass densities by multiplying with
/// `density_unit` (kg/m^3), and SI energy densities are divided by
/// `energy_unit` (J/m^3) to obtain model energies.
#[derive(Clone, Debug, PartialEq)]
pub struct PengRobinsonParams {
    pub species: [Species; 2],
    pub temperature: f64,
    pub k12: f64,
    pub density_unit: f64,
    pub energy_unit: f64,
    pub thermal_wavelength: f64,
    pub gas_constant: f64,
}

impl PengRobinsonParams {
    /// CO2 (component 1) and n-decane (component 2) at 550 K.
    pub fn co2_decane() -> Self {
        Self {
            species: [species("CO2").unwrap(), species("n-decane").unwrap()],
            temperature: 550.0,
            k12: 0.0,
            density_unit: 0.2164,
            energy_unit: 1.0e3,
            thermal_wavelength: 1.0,
            gas_constant: GAS_CONSTANT,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PengRobinson {
    params: PengRobinsonParams,
    a: [[f64; 2]; 2],
    b: [f64; 2],
    phi_t: f64,
    rt: f64,
}

impl PengRobinson {
    pub fn new(params: PengRobinsonParams) -> Result<Self> {
        let t = params.temperature;
        if !(t > 0.0) || !(params.density_unit > 0.0) || !(params.energy_unit > 0.0) {
            return Err(Error::Range(
                "temperature, density_unit and energy_unit must be positive".into(),
            ));
        }
        if !(params.thermal_wavelength > 0.0) || !(params.gas_constant > 0.0) {
            return Err(Error::Range("thermal_wavelength and gas_constant must be positive".into()));
        }
        let r = params.gas_constant;
        let mut ai = [0.0; 2];
        let mut b = [0.0; 2];
        for (i, s) in params.species.iter().enumerate() {
            if !(s.critical_temperature > 0.0 && s.critical_pressure > 0.0 && s.molar_mass > 0.0) {
                return Err(Error::Range(format!("invalid constants for species `{}`", s.name)));
            }
            let kappa = 0.37464 + 1.54226 * s.acentric - 0.26992 * s.acentric * s.acentric;
            let alpha = (1.0 + kappa * (1.0 - (t / s.critical_temperature).sqrt())).powi(2);
            ai[i] = 0.45724 * r * r * s.critical_temperature.powi(2) / s.critical_pressure * alpha;
            b[i] = 0.07780 * r * s.critical_temperature / s.critical_pressure;
        }
        let mut a = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let kij = if i == j { 0.0 } else { params.k12 };
                a[i][j] = (ai[i] * ai[j]).sqrt() * (1.0 - kij);
            }
        }
        let rt = r * t;
        let phi_t = -rt * (1.0 - (params.thermal_wavelength.powi(3)).ln());
        Ok(Self { params, a, b, phi_t, rt })
    }

    pub fn params(&self) -> &PengRobinsonParams {
        &self.params
    }

    /// Pure-component energy parameters a_i at the working temperature (SI).
    pub fn a_pure(&self) -> [f64; 2] {
        [self.a[0][0], self.a[1][1]]
    }

    /// Pure-component co-volumes b_i (SI, m^3/mol).
    pub fn b_pure(&self) -> [f64; 2] {
        self.b
    }

    /// Molar masses (m1, m2).
    pub fn molar_masses(&self) -> [f64; 2] {
        [self.params.species[0].molar_mass, self.params.species[1].molar_mass]
    }

    /// r_m = m2 / m1, so that the total molar density is (r_m rho1 + rho2) / m2.
    pub fn ratio_rm(&self) -> f64 {
        let m = self.molar_masses();
        m[1] / m[0]
    }

    /// Molar densities (mol/m^3) of a model-unit state.
    fn moles(&self, x: &[f64]) -> [f64; 2] {
        let m = self.molar_masses();
        let s = self.params.density_unit;
        [s * x[0] / m[0], s * x[1] / m[1]]
    }

    pub(crate) fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != 2 {
            return Err(Error::Shape(format!("Peng-Robinson expects 2 densities, got {}", x.len())));
        }
        if !(x[0] > 0.0 && x[1] > 0.0) || !x[0].is_finite() || !x[1].is_finite() {
            return Err(Error::Domain(format!(
                "Peng-Robinson densities must be positive, got ({}, {})",
                x[0], x[1]
            )));
        }
        let n = self.moles(x);
        let bb = n[0] * self.b[0] + n[1] * self.b[1];
        if bb >= 1.0 {
            return Err(Error::Domain(format!(
                "Peng-Robinson packing n*b = {bb} >= 1 at ({}, {})",
                x[0], x[1]
            )));
        }
        Ok(())
    }

    pub(crate) fn value(&self, x: &[f64]) -> f64 {
        let n = self.moles(x);
        let ntot = n[0] + n[1];
        let bb = n[0] * self.b[0] + n[1] * self.b[1];
        let q = quad(&self.a, &n);
        let (g, _, _) = g_funcs(bb);
        let h = ntot * self.phi_t - ntot * self.rt * (1.0 - bb).ln() - q * g
            + self.rt * (n[0] * n[0].ln() + n[1] * n[1].ln());
        h / self.params.energy_unit
    }

    pub(crate) fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let n = self.moles(x);
        let ntot = n[0] + n[1];
        let bb = n[0] * self.b[0] + n[1] * self.b[1];
        let qi = [
            self.a[0][0] * n[0] + self.a[0][1] * n[1],
            self.a[1][0] * n[0] + self.a[1][1] * n[1],
        ];
        let q = n[0] * qi[0] + n[1] * qi[1];
        let (g, g1, _) = g_funcs(bb);
        let l1b = (1.0 - bb).ln();
        let m = self.molar_masses();
        let scale = self.params.density_unit / self.params.energy_unit;
        for i in 0..2 {
            let dn = self.phi_t - self.rt * l1b + self.rt * ntot * self.b[i] / (1.0 - bb)
                - 2.0 * qi[i] * g
                - q * g1 * self.b[i]
                + self.rt * (n[i].ln() + 1.0);
            out[i] = dn * scale / m[i];
        }
    }

    pub(crate) fn hessian(&self, x: &[f64]) -> [[f64; 2]; 2] {
        let n = self.moles(x);
        let ntot = n[0] + n[1];
        let bb = n[0] * self.b[0] + n[1] * self.b[1];
        let qi = [
            self.a[0][0] * n[0] + self.a[0][1] * n[1],
            self.a[1][0] * n[0] + self.a[1][1] * n[1],
        ];
        let q = n[0] * qi[0] + n[1] * qi[1];
        let (g, g1, g2) = g_funcs(bb);
        let m = self.molar_masses();
        let s = self.params.density_unit;
        let scale = s * s / self.params.energy_unit;
        let one_b = 1.0 - bb;
        let b = self.b;
        let mut h = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let mut v = self.rt * (b[i] + b[j]) / one_b
                    + self.rt * ntot * b[i] * b[j] / (one_b * one_b)
                    - 2.0 * self.a[i][j] * g
                    - 2.0 * g1 * (qi[i] * b[j] + qi[j] * b[i])
                    - q * g2 * b[i] * b[j];
                if i == j {
                    v += self.rt / n[i];
                }
                h[i][j] = v * scale / (m[i] * m[j]);
            }
        }
        h
    }
}

fn quad(a: &[[f64; 2]; 2], n: &[f64; 2]) -> f64 {
    a[0][0] * n[0] * n[0] + 2.0 * a[0][1] * n[0] * n[1] + a[1][1] * n[1] * n[1]
}

/// G(B) = ln[(1 + (1+sqrt2) B) / (1 + (1-sqrt2) B)] / (2 sqrt2 B) and its first
/// two derivatives. A Taylor series is used near B = 0 where the closed forms
/// cancel catastrophically.
fn g_funcs(bb: f64) -> (f64, f64, f64) {
    if bb.abs() < 1e-2 {
        // G = sum_{k>=1} (-1)^{k+1} t_k / k * B^{k-1}, with t_k the Pell numbers.
        let (mut t_prev, mut t) = (0.0_f64, 1.0_f64);
        let (mut g, mut g1, mut g2) = (0.0, 0.0, 0.0);
        for k in 1..=30 {
            let kf = k as f64;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            let c = sign * t / kf;
            g += c * bb.powi(k - 1);
            if k >= 2 {
                g1 += c * (kf - 1.0) * bb.powi(k - 2);
            }
            if k >= 3 {
                g2 += c * (kf - 1.0) * (kf - 2.0) * bb.powi(k - 3);
            }
            let next = 2.0 * t + t_prev;
            t_prev = t;
            t = next;
        }
        return (g, g1, g2);
    }
    let l = ((1.0 + (1.0 + SQRT2) * bb) / (1.0 + (1.0 - SQRT2) * bb)).ln();
    let u = 1.0 + 2.0 * bb - bb * bb;
    let du = 2.0 - 2.0 * bb;
    let g = l / (2.0 * SQRT2 * bb);
    let g1 = 1.0 / (bb * u) - l / (2.0 * SQRT2 * bb * bb);
    let g2 = -(u + bb * du) / (bb * bb * u * u) - 1.0 / (bb * bb * u) + l / (SQRT2 * bb.powi(3));
    (g, g1, g2)
}
