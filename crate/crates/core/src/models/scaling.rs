use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Reference length, time and density.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaleSet {
    pub length: f64,
    pub time: f64,
    pub density: f64,
}

impl ScaleSet {
    pub fn new(length: f64, time: f64, density: f64) -> Result<Self> {
        for (name, v) in [("length", length), ("time", time), ("density", density)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Range(format!("{name} scale must be positive and finite")));
            }
        }
        Ok(Self { length, time, density })
    }

    /// Chemical potentials (energy per mass) scale with l0^2 / t0^2.
    pub fn chemical_potential(&self) -> f64 {
        self.length * self.length / (self.time * self.time)
    }
}

/// SI mobility (kg s / m^3), shear and volume viscosities (Pa s).
#[derive(Clone, Debug, PartialEq)]
pub struct DimensionalParams {
    pub mobility: DMatrix<f64>,
    pub shear_viscosity: f64,
    pub volume_viscosity: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NondimensionalParams {
    pub mobility: DMatrix<f64>,
    pub inv_re_s: f64,
    pub inv_re_v: f64,
    /// Factor dividing a dimensional chemical potential.
    pub chemical_potential_scale: f64,
}

/// M* = M / (rho0 t0), 1/Re_s = eta t0 / (rho0 l0^2), 1/Re_v = nu t0 / (rho0 l0^2).
pub fn nondimensionalize(p: &DimensionalParams, s: &ScaleSet) -> Result<NondimensionalParams> {
    let ScaleSet { length, time, density } = ScaleSet::new(s.length, s.time, s.density)?;
    let visc = time / (density * length * length);
    Ok(NondimensionalParams {
        mobility: &p.mobility / (density * time),
        inv_re_s: p.shear_viscosity * visc,
        inv_re_v: p.volume_viscosity * visc,
        chemical_potential_scale: s.chemical_potential(),
    })
}

/// Inverse of `nondimensionalize`.
pub fn redimensionalize(p: &NondimensionalParams, s: &ScaleSet) -> Result<DimensionalParams> {
    let ScaleSet { length, time, density } = ScaleSet::new(s.length, s.time, s.density)?;
    let visc = density * length * length / time;
    Ok(DimensionalParams {
        mobility: &p.mobility * (density * time),
        shear_viscosity: p.inv_re_s * visc,
        volume_viscosity: p.inv_re_v * visc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let s = ScaleSet::new(1e-6, 1e-3, 600.0).unwrap();
        let d = DimensionalParams {
            mobility: DMatrix::from_row_slice(2, 2, &[2e-9, -1e-9, -1e-9, 3e-9]),
            shear_viscosity: 1e-3,
            volume_viscosity: 4e-4,
        };
        let n = nondimensionalize(&d, &s).unwrap();
        assert!((n.inv_re_s - 1e-3 * 1e-3 / (600.0 * 1e-12)).abs() < 1e-9 * n.inv_re_s);
        assert_eq!(n.chemical_potential_scale, 1e-12 / 1e-6);
        let back = redimensionalize(&n, &s).unwrap();
        assert!((back.mobility - &d.mobility).norm() < 1e-22);
        assert!((back.shear_viscosity - 1e-3).abs() < 1e-18);
        assert!((back.volume_viscosity - 4e-4).abs() < 1e-18);
        assert!(ScaleSet::new(0.0, 1.0, 1.0).is_err());
    }
}
