//! Run configuration: a TOML file with the sections `free_energy`, `model`,
//! `state` and one of `sweep`, `map`, `simulate`. Parsing rejects unknown
//! keys; `normalize` fills documented defaults, rejects keys that do not apply
//! to the chosen energy or model class and checks mutual exclusions.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use phasemix::free_energy::{
    species, BulkFreeEnergy, FloryHuggins, GradientCoefficients, PengRobinsonParams, Quadratic, GAS_CONSTANT,
};
use phasemix::grid::Scheme;
use phasemix::models::{MixtureState, ModelClass, ModelSystem};
use phasemix::simulator::{Integrator, Perturbation};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub free_energy: FreeEnergySection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSection>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyKind {
    PengRobinson,
    FloryHuggins,
    Quadratic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variables {
    #[serde(rename = "rho1_rho2")]
    Partial,
    #[serde(rename = "rho1_rho")]
    Total,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeEnergySection {
    pub kind: EnergyKind,
    // Peng-Robinson
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub species: Option<[String; 2]>,
    #[serde(default, rename = "T", skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k12: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_unit: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_unit: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gas_constant: Option<f64>,
    // Flory-Huggins
    #[serde(default, rename = "kT_over_m", skip_serializing_if = "Option::is_none")]
    pub kt_over_m: Option<f64>,
    #[serde(default, rename = "N1", skip_serializing_if = "Option::is_none")]
    pub n1: Option<f64>,
    #[serde(default, rename = "N2", skip_serializing_if = "Option::is_none")]
    pub n2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<f64>,
    // quadratic
    #[serde(default, rename = "C", skip_serializing_if = "Option::is_none")]
    pub c: Option<[[f64; 2]; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variables: Option<Variables>,
    // gradient coefficients, either in (rho1, rho) or in (rho1, rho2)
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_rho1_rho1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_rho_rho1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_rho_rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_11: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_12: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_22: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub class: ModelClass,
    #[serde(rename = "M11")]
    pub m11: f64,
    #[serde(default, rename = "M12", skip_serializing_if = "Option::is_none")]
    pub m12: Option<f64>,
    #[serde(default, rename = "M22", skip_serializing_if = "Option::is_none")]
    pub m22: Option<f64>,
    #[serde(rename = "Re_s")]
    pub re_s: f64,
    #[serde(rename = "Re_v")]
    pub re_v: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_hat_1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_hat_2: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho1_0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho2_0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi0: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub k_min: f64,
    pub k_max: f64,
    pub points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<Spacing>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub small_k_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub large_k_min: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSection {
    pub rho1_min: f64,
    pub rho1_max: f64,
    pub rho1_points: usize,
    pub rho_min: f64,
    pub rho_max: f64,
    pub rho_points: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    Eigenvector,
    Field,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSection {
    pub kind: PerturbationKind,
    pub mode: usize,
    pub amplitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub cells: usize,
    pub t_end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavenumber: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<Integrator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enforce_dt_limit: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_drift_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub perturbation: Vec<PerturbationSection>,
}

fn cfg(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn forbid<T>(v: &Option<T>, key: &str, why: &str) -> Result<(), CliError> {
    if v.is_some() {
        return Err(cfg(format!("key `{key}` is not used {why}")));
    }
    Ok(())
}

fn require<T: Clone>(v: &Option<T>, key: &str, why: &str) -> Result<T, CliError> {
    v.clone().ok_or_else(|| cfg(format!("missing key `{key}` {why}")))
}

fn positive(v: f64, key: &str) -> Result<f64, CliError> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(cfg(format!("`{key}` must be positive and finite, got {v}")));
    }
    Ok(v)
}

/// 1/Re, with Re = inf giving 0.
fn inverse_reynolds(re: f64, key: &str) -> Result<f64, CliError> {
    if !(re > 0.0) {
        return Err(cfg(format!("`{key}` must be positive (inf allowed), got {re}")));
    }
    Ok(if re.is_infinite() { 0.0 } else { 1.0 / re })
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| cfg(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parse and normalize.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut c: RunConfig = toml::from_str(text).map_err(|e| cfg(e.to_string().trim_end().to_string()))?;
        c.normalize()?;
        Ok(c)
    }

    /// Normalized TOML echo; parsing it yields an equal config.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn normalize(&mut self) -> Result<(), CliError> {
        self.free_energy.normalize()?;
        if let Some(m) = &mut self.model {
            m.normalize()?;
            let class = m.class;
            if let Some(s) = &self.state {
                s.check(class)?;
            }
        }
        if let Some(s) = &mut self.sweep {
            s.normalize()?;
        }
        if let Some(m) = &self.map {
            m.check()?;
        }
        if let Some(s) = &mut self.simulate {
            let class = self.model.as_ref().map(|m| m.class);
            s.normalize(class)?;
        }
        Ok(())
    }

    pub fn model_section(&self) -> Result<&ModelSection, CliError> {
        self.model.as_ref().ok_or_else(|| cfg("missing section [model]"))
    }

    pub fn state(&self) -> Result<MixtureState, CliError> {
        let class = self.model_section()?.class;
        let s = self.state.as_ref().ok_or_else(|| cfg("missing section [state]"))?;
        Ok(match class {
            ModelClass::CompressibleGlobal => {
                MixtureState::Partial { rho1: s.rho1_0.unwrap(), rho2: s.rho2_0.unwrap() }
            }
            ModelClass::CompressibleLocal => MixtureState::Total { rho: s.rho0.unwrap(), rho1: s.rho1_0.unwrap() },
            _ => MixtureState::Phi { phi: s.phi0.unwrap() },
        })
    }

    /// Model and validated constant state.
    pub fn build(&self) -> Result<(ModelSystem, MixtureState), CliError> {
        let model = self.model_section()?.build(&self.free_energy)?;
        let state = self.state()?;
        model.validate_state(&state).map_err(|e| cfg(format!("[state]: {e}")))?;
        Ok((model, state))
    }
}

impl FreeEnergySection {
    fn normalize(&mut self) -> Result<(), CliError> {
        match self.kind {
            EnergyKind::PengRobinson => {
                let why = "by kind = \"peng_robinson\"";
                forbid(&self.kt_over_m, "kT_over_m", why)?;
                forbid(&self.n1, "N1", why)?;
                forbid(&self.n2, "N2", why)?;
                forbid(&self.chi, "chi", why)?;
                forbid(&self.c, "C", why)?;
                forbid(&self.linear, "linear", why)?;
                forbid(&self.variables, "variables", why)?;
                let d = PengRobinsonParams::co2_decane();
                self.species.get_or_insert_with(|| [d.species[0].name.clone(), d.species[1].name.clone()]);
                self.temperature.get_or_insert(d.temperature);
                self.k12.get_or_insert(d.k12);
                self.density_unit.get_or_insert(d.density_unit);
                self.energy_unit.get_or_insert(d.energy_unit);
                self.lambda.get_or_insert(d.thermal_wavelength);
                self.gas_constant.get_or_insert(GAS_CONSTANT);
            }
            EnergyKind::FloryHuggins => {
                let why = "by kind = \"flory_huggins\"";
                self.forbid_pr(why)?;
                forbid(&self.c, "C", why)?;
                forbid(&self.linear, "linear", why)?;
                forbid(&self.variables, "variables", why)?;
                require(&self.chi, "chi", "for kind = \"flory_huggins\"")?;
                self.kt_over_m.get_or_insert(1.0);
                self.n1.get_or_insert(1.0);
                self.n2.get_or_insert(1.0);
            }
            EnergyKind::Quadratic => {
                let why = "by kind = \"quadratic\"";
                self.forbid_pr(why)?;
                forbid(&self.kt_over_m, "kT_over_m", why)?;
                forbid(&self.n1, "N1", why)?;
                forbid(&self.n2, "N2", why)?;
                forbid(&self.chi, "chi", why)?;
                require(&self.c, "C", "for kind = \"quadratic\"")?;
                self.linear.get_or_insert([0.0, 0.0]);
                self.variables.get_or_insert(Variables::Partial);
            }
        }
        let total = [self.kappa_rho1_rho1, self.kappa_rho_rho1, self.kappa_rho_rho];
        let partial = [self.kappa_11, self.kappa_12, self.kappa_22];
        let has_total = total.iter().any(Option::is_some);
        let has_partial = partial.iter().any(Option::is_some);
        if has_total && has_partial {
            return Err(cfg("give gradient coefficients either as kappa_rho1_rho1/kappa_rho_rho1/kappa_rho_rho \
                 or as kappa_11/kappa_12/kappa_22, not both"));
        }
        if !has_total && !has_partial {
            return Err(cfg("missing gradient coefficients (kappa_rho1_rho1, kappa_rho_rho1, kappa_rho_rho)"));
        }
        if has_total {
            self.kappa_rho1_rho1.get_or_insert(0.0);
            self.kappa_rho_rho1.get_or_insert(0.0);
            self.kappa_rho_rho.get_or_insert(0.0);
        } else {
            self.kappa_11.get_or_insert(0.0);
            self.kappa_12.get_or_insert(0.0);
            self.kappa_22.get_or_insert(0.0);
        }
        Ok(())
    }

    fn forbid_pr(&self, why: &str) -> Result<(), CliError> {
        forbid(&self.species, "species", why)?;
        forbid(&self.temperature, "T", why)?;
        forbid(&self.k12, "k12", why)?;
        forbid(&self.density_unit, "density_unit", why)?;
        forbid(&self.energy_unit, "energy_unit", why)?;
        forbid(&self.lambda, "lambda", why)?;
        forbid(&self.gas_constant, "gas_constant", why)
    }

    pub fn energy(&self) -> Result<BulkFreeEnergy, CliError> {
        let wrap = |e: phasemix::Error| cfg(format!("[free_energy]: {e}"));
        match self.kind {
            EnergyKind::PengRobinson => {
                let names = self.species.clone().unwrap();
                let params = PengRobinsonParams {
                    species: [species(&names[0]).map_err(wrap)?, species(&names[1]).map_err(wrap)?],
                    temperature: self.temperature.unwrap(),
                    k12: self.k12.unwrap(),
                    density_unit: self.density_unit.unwrap(),
                    energy_unit: self.energy_unit.unwrap(),
                    thermal_wavelength: self.lambda.unwrap(),
                    gas_constant: self.gas_constant.unwrap(),
                };
                BulkFreeEnergy::peng_robinson(params).map_err(wrap)
            }
            EnergyKind::FloryHuggins => {
                let f = FloryHuggins::binary(
                    self.kt_over_m.unwrap(),
                    self.n1.unwrap(),
                    self.n2.unwrap(),
                    self.chi.unwrap(),
                )
                .map_err(wrap)?;
                Ok(BulkFreeEnergy::flory_huggins(f))
            }
            EnergyKind::Quadratic => {
                let c = self.c.unwrap();
                let m = DMatrix::from_row_slice(2, 2, &[c[0][0], c[0][1], c[1][0], c[1][1]]);
                let g = DVector::from_column_slice(&self.linear.unwrap());
                let q = match self.variables.unwrap() {
                    Variables::Partial => Quadratic::new(m, g),
                    Variables::Total => Quadratic::from_total(m, g),
                }
                .map_err(wrap)?;
                Ok(BulkFreeEnergy::quadratic(q))
            }
        }
    }

    /// Gradient-coefficient matrix in (rho1, rho2), without a definiteness check.
    pub fn kappa_partial(&self) -> DMatrix<f64> {
        if let Some(a) = self.kappa_rho1_rho1 {
            let (b, c) = (self.kappa_rho_rho1.unwrap(), self.kappa_rho_rho.unwrap());
            let kt = DMatrix::from_row_slice(2, 2, &[a, b, b, c]);
            let t = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
            t.transpose() * kt * t
        } else {
            let (a, b, c) = (self.kappa_11.unwrap(), self.kappa_12.unwrap(), self.kappa_22.unwrap());
            DMatrix::from_row_slice(2, 2, &[a, b, b, c])
        }
    }

    pub fn kappa(&self) -> Result<GradientCoefficients, CliError> {
        let r = if let Some(a) = self.kappa_rho1_rho1 {
            GradientCoefficients::from_total(a, self.kappa_rho_rho1.unwrap(), self.kappa_rho_rho.unwrap())
        } else {
            GradientCoefficients::binary(self.kappa_11.unwrap(), self.kappa_12.unwrap(), self.kappa_22.unwrap())
        };
        r.map_err(|e| cfg(format!("[free_energy] gradient coefficients: {e}")))
    }
}

impl ModelSection {
    fn normalize(&mut self) -> Result<(), CliError> {
        match self.class {
            ModelClass::CompressibleGlobal => {
                require(&self.m12, "M12", "for class = \"compressible_global\"")?;
                require(&self.m22, "M22", "for class = \"compressible_global\"")?;
                forbid(&self.rho_hat_1, "rho_hat_1", "by the compressible classes")?;
                forbid(&self.rho_hat_2, "rho_hat_2", "by the compressible classes")?;
            }
            ModelClass::CompressibleLocal => {
                let why = "by class = \"compressible_local\" (M12 = -M11, M22 = M11)";
                forbid(&self.m12, "M12", why)?;
                forbid(&self.m22, "M22", why)?;
                forbid(&self.rho_hat_1, "rho_hat_1", "by the compressible classes")?;
                forbid(&self.rho_hat_2, "rho_hat_2", "by the compressible classes")?;
            }
            ModelClass::QuasiIncompressible => {
                forbid(&self.m12, "M12", "by the phi classes")?;
                forbid(&self.m22, "M22", "by the phi classes")?;
                let a = positive(require(&self.rho_hat_1, "rho_hat_1", "for class = \"quasi_incompressible\"")?, "rho_hat_1")?;
                let b = positive(require(&self.rho_hat_2, "rho_hat_2", "for class = \"quasi_incompressible\"")?, "rho_hat_2")?;
                if a == b {
                    return Err(cfg(format!(
                        "rho_hat_1 = rho_hat_2 = {a}: the quasi-incompressible model degenerates when the \
                         specific densities are equal; use class = \"incompressible\" with rho_hat_1 = {a}"
                    )));
                }
            }
            ModelClass::Incompressible => {
                forbid(&self.m12, "M12", "by the phi classes")?;
                forbid(&self.m22, "M22", "by the phi classes")?;
                let a = positive(require(&self.rho_hat_1, "rho_hat_1", "for class = \"incompressible\"")?, "rho_hat_1")?;
                match self.rho_hat_2 {
                    Some(b) if b != a => {
                        return Err(cfg(format!(
                            "class = \"incompressible\" needs rho_hat_2 = rho_hat_1; for {a} != {b} use \
                             class = \"quasi_incompressible\""
                        )))
                    }
                    _ => self.rho_hat_2 = Some(a),
                }
            }
        }
        inverse_reynolds(self.re_s, "Re_s")?;
        inverse_reynolds(self.re_v, "Re_v")?;
        Ok(())
    }

    pub fn build(&self, fe: &FreeEnergySection) -> Result<ModelSystem, CliError> {
        let energy = fe.energy()?;
        let kappa = fe.kappa()?;
        let irs = inverse_reynolds(self.re_s, "Re_s")?;
        let irv = inverse_reynolds(self.re_v, "Re_v")?;
        let r = match self.class {
            ModelClass::CompressibleGlobal => {
                let (m12, m22) = (self.m12.unwrap(), self.m22.unwrap());
                let m = DMatrix::from_row_slice(2, 2, &[self.m11, m12, m12, m22]);
                ModelSystem::global(&energy, &kappa, m, irs, irv)
            }
            ModelClass::CompressibleLocal => ModelSystem::local(&energy, &kappa, self.m11, irs, irv),
            ModelClass::QuasiIncompressible => ModelSystem::quasi(
                &energy,
                &kappa,
                self.m11,
                self.rho_hat_1.unwrap(),
                self.rho_hat_2.unwrap(),
                irs,
                irv,
            ),
            ModelClass::Incompressible => {
                ModelSystem::incompressible(&energy, &kappa, self.m11, self.rho_hat_1.unwrap(), irs, irv)
            }
        };
        r.map_err(|e| cfg(format!("[model]: {e}")))
    }
}

impl StateSection {
    fn check(&self, class: ModelClass) -> Result<(), CliError> {
        let (need, other): (&[(&str, Option<f64>)], &[(&str, Option<f64>)]) = match class {
            ModelClass::CompressibleGlobal => {
                (&[("rho1_0", self.rho1_0), ("rho2_0", self.rho2_0)], &[("rho0", self.rho0), ("phi0", self.phi0)])
            }
            ModelClass::CompressibleLocal => {
                (&[("rho0", self.rho0), ("rho1_0", self.rho1_0)], &[("rho2_0", self.rho2_0), ("phi0", self.phi0)])
            }
            _ => (
                &[("phi0", self.phi0)],
                &[("rho0", self.rho0), ("rho1_0", self.rho1_0), ("rho2_0", self.rho2_0)],
            ),
        };
        for (key, v) in need {
            if v.is_none() {
                return Err(cfg(format!("missing key `{key}` in [state] for class {class:?}")));
            }
        }
        for (key, v) in other {
            if v.is_some() {
                return Err(cfg(format!("key `{key}` in [state] is not used by class {class:?}")));
            }
        }
        Ok(())
    }
}

impl SweepSection {
    fn normalize(&mut self) -> Result<(), CliError> {
        positive(self.k_min, "k_min")?;
        positive(self.k_max, "k_max")?;
        if self.k_max <= self.k_min {
            return Err(cfg("[sweep] needs k_max > k_min"));
        }
        if self.points < 2 {
            return Err(cfg("[sweep] needs points >= 2"));
        }
        self.spacing.get_or_insert(Spacing::Log);
        positive(*self.band_tolerance.get_or_insert(1e-6), "band_tolerance")?;
        positive(*self.small_k_max.get_or_insert(1e-2), "small_k_max")?;
        positive(*self.large_k_min.get_or_insert(1e2), "large_k_min")?;
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let n = self.points;
        match self.spacing.unwrap() {
            Spacing::Log => phasemix::dispersion::log_grid(self.k_min, self.k_max, n).expect("checked"),
            Spacing::Linear => (0..n)
                .map(|i| self.k_min + (self.k_max - self.k_min) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

impl MapSection {
    fn check(&self) -> Result<(), CliError> {
        for (lo, hi, n, name) in
            [(self.rho1_min, self.rho1_max, self.rho1_points, "rho1"), (self.rho_min, self.rho_max, self.rho_points, "rho")]
        {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(cfg(format!("[map] needs finite {name}_min < {name}_max")));
            }
            if n < 2 {
                return Err(cfg(format!("[map] needs {name}_points >= 2")));
            }
        }
        Ok(())
    }

    pub fn axes(&self) -> (Vec<f64>, Vec<f64>) {
        let axis = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
            (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
        };
        (axis(self.rho1_min, self.rho1_max, self.rho1_points), axis(self.rho_min, self.rho_max, self.rho_points))
    }
}

impl SimulateSection {
    fn normalize(&mut self, class: Option<ModelClass>) -> Result<(), CliError> {
        if !self.cells.is_power_of_two() || self.cells < 4 {
            return Err(cfg(format!("[simulate] cells = {} must be a power of two >= 4", self.cells)));
        }
        positive(self.t_end, "t_end")?;
        match (self.length, self.wavenumber) {
            (Some(l), None) => {
                positive(l, "length")?;
                forbid(&self.periods, "periods", "with `length` (it goes with `wavenumber`)")?;
            }
            (None, Some(k)) => {
                positive(k, "wavenumber")?;
                if *self.periods.get_or_insert(1) == 0 {
                    return Err(cfg("[simulate] periods must be >= 1"));
                }
            }
            _ => return Err(cfg("[simulate] give exactly one of `length` or `wavenumber`")),
        }
        match (self.dt, self.dt_fraction) {
            (Some(dt), None) => {
                positive(dt, "dt")?;
            }
            (None, _) => {
                positive(*self.dt_fraction.get_or_insert(0.9), "dt_fraction")?;
            }
            (Some(_), Some(_)) => return Err(cfg("[simulate] give at most one of `dt` or `dt_fraction`")),
        }
        self.integrator.get_or_insert(Integrator::Rk4);
        self.scheme.get_or_insert(Scheme::Spectral);
        if *self.diagnostics_every.get_or_insert(1) == 0 {
            return Err(cfg("[simulate] diagnostics_every must be >= 1"));
        }
        if self.snapshot_every == Some(0) {
            return Err(cfg("[simulate] snapshot_every must be >= 1"));
        }
        self.enforce_dt_limit.get_or_insert(true);
        positive(*self.mass_drift_tolerance.get_or_insert(1e-10), "mass_drift_tolerance")?;
        positive(*self.energy_tolerance.get_or_insert(1e-8), "energy_tolerance")?;
        for (i, p) in self.perturbation.iter_mut().enumerate() {
            let at = format!("in [[simulate.perturbation]] #{}", i + 1);
            if p.mode == 0 {
                return Err(cfg(format!("mode must be >= 1 {at}")));
            }
            if !p.amplitude.is_finite() {
                return Err(cfg(format!("amplitude must be finite {at}")));
            }
            match p.kind {
                PerturbationKind::Eigenvector => {
                    forbid(&p.field, "field", &format!("by kind = \"eigenvector\" {at}"))?;
                    p.root.get_or_insert(0);
                }
                PerturbationKind::Field => {
                    forbid(&p.root, "root", &format!("by kind = \"field\" {at}"))?;
                    let f = require(&p.field, "field", &format!("for kind = \"field\" {at}"))?;
                    if let Some(class) = class {
                        if !class.field_names().contains(&f.as_str()) {
                            return Err(cfg(format!(
                                "field `{f}` {at} is not one of {:?}",
                                class.field_names()
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        match self.length {
            Some(l) => l,
            None => 2.0 * PI * self.periods.unwrap() as f64 / self.wavenumber.unwrap(),
        }
    }

    pub fn perturbations(&self) -> Vec<Perturbation> {
        self.perturbation
            .iter()
            .map(|p| match p.kind {
                PerturbationKind::Eigenvector => {
                    Perturbation::Eigenvector { mode: p.mode, root: p.root.unwrap(), amplitude: p.amplitude }
                }
                PerturbationKind::Field => {
                    Perturbation::Field { field: p.field.clone().unwrap(), mode: p.mode, amplitude: p.amplitude }
                }
            })
            .collect()
    }
}
