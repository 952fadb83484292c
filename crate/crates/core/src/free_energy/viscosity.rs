use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    MassFraction,
    VolumeFraction,
    KriegerDougherty,
}

/// Interpolation of shear (eta) and volumetric (nu) viscosities between the two
/// components. The composition argument is the fraction of component 1: mass
/// fraction for `MassFraction` and `KriegerDougherty`, volume fraction for
/// `VolumeFraction`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViscosityRule {
    pub rule: RuleKind,
    #[serde(default)]
    pub eta1: f64,
    #[serde(default)]
    pub eta2: f64,
    #[serde(default)]
    pub nu1: f64,
    #[serde(default)]
    pub nu2: f64,
    #[serde(default)]
    pub eta0: f64,
    #[serde(default)]
    pub kd_exponent: f64,
}

impl ViscosityRule {
    pub fn interpolated(rule: RuleKind, eta: (f64, f64), nu: (f64, f64)) -> Result<Self> {
        let r = Self { rule, eta1: eta.0, eta2: eta.1, nu1: nu.0, nu2: nu.1, eta0: 0.0, kd_exponent: 0.0 };
        r.validate()?;
        Ok(r)
    }

    /// Krieger-Dougherty shear viscosity; nu is interpolated linearly in the
    /// same fraction between `nu1` and `nu2`.
    pub fn krieger_dougherty(eta0: f64, kd_exponent: f64, nu: (f64, f64)) -> Result<Self> {
        let r = Self {
            rule: RuleKind::KriegerDougherty,
            eta1: 0.0,
            eta2: 0.0,
            nu1: nu.0,
            nu2: nu.1,
            eta0,
            kd_exponent,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.eta1, self.eta2, self.nu1, self.nu2, self.eta0];
        if vals.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Range("viscosities must be finite and nonnegative".into()));
        }
        if !self.kd_exponent.is_finite() {
            return Err(Error::Range("kd_exponent must be finite".into()));
        }
        Ok(())
    }
}

/// Average (eta, nu) at a composition (fraction of component 1).
pub fn average_viscosity(rule: &ViscosityRule, fraction: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Range(format!("composition fraction {fraction} outside [0, 1]")));
    }
    let lin = |a: f64, b: f64| fraction * a + (1.0 - fraction) * b;
    match rule.rule {
        RuleKind::MassFraction | RuleKind::VolumeFraction => {
            Ok((lin(rule.eta1, rule.eta2), lin(rule.nu1, rule.nu2)))
        }
        RuleKind::KriegerDougherty => {
            if fraction >= 1.0 {
                return Err(Error::Range("Krieger-Dougherty concentration must be < 1".into()));
            }
            let eta = rule.eta0 * (1.0 - fraction).powf(-rule.kd_exponent);
            Ok((eta, lin(rule.nu1, rule.nu2)))
        }
    }
}
