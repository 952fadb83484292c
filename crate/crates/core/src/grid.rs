//! Uniform periodic 1D grid with Fourier-multiplier derivative operators.
//!
//! Both discretizations are applied in Fourier space: the spectral scheme uses
//! the exact symbols (ik, -k^2), the central-difference scheme uses the symbols
//! of the 3-point stencils, which reproduces the stencils exactly.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Spectral,
    CentralDifference,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Spectral => "spectral",
            Scheme::CentralDifference => "central_difference",
        })
    }
}

#[derive(Clone)]
pub struct Grid {
    n: usize,
    length: f64,
    scheme: Scheme,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    wavenumbers: Vec<f64>,
    deriv: Vec<Complex64>,
    lap: Vec<f64>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("length", &self.length)
            .field("scheme", &self.scheme)
            .finish()
    }
}

impl Grid {
    pub fn new(n: usize, length: f64, scheme: Scheme) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::Range(format!("grid size {n} must be a power of two >= 4")));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::Range("domain length must be positive".into()));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let dx = length / n as f64;
        let wavenumbers: Vec<f64> = (0..n)
            .map(|j| {
                let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                2.0 * PI * m / length
            })
            .collect();
        let (deriv, lap) = wavenumbers
            .iter()
            .enumerate()
            .map(|(j, &k)| match scheme {
                Scheme::Spectral => {
                    let d = if j == n / 2 { 0.0 } else { k };
                    (Complex64::new(0.0, d), -k * k)
                }
                Scheme::CentralDifference => {
                    let s = (k * dx).sin() / dx;
                    let h = (0.5 * k * dx).sin();
                    (Complex64::new(0.0, s), -4.0 * h * h / (dx * dx))
                }
            })
            .unzip();
        Ok(Self { n, length, scheme, forward, inverse, wavenumbers, deriv, lap })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn x(&self) -> Vec<f64> {
        (0..self.n).map(|j| j as f64 * self.dx()).collect()
    }

    /// Angular wavenumber of mode number m.
    pub fn wavenumber(&self, mode: usize) -> f64 {
        2.0 * PI * mode as f64 / self.length
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Fourier symbol of the first derivative.
    pub fn derivative_symbol(&self) -> &[Complex64] {
        &self.deriv
    }

    /// Fourier symbol of the Laplacian (nonpositive).
    pub fn laplacian_symbol(&self) -> &[f64] {
        &self.lap
    }

    /// Largest eigenvalue of -Lap on this grid.
    pub fn max_laplacian(&self) -> f64 {
        self.lap.iter().fold(0.0_f64, |m, v| m.max(-v))
    }

    pub fn forward(&self, f: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = f.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    /// Inverse transform (normalized), keeping the real part.
    pub fn inverse(&self, mut buf: Vec<Complex64>) -> Vec<f64> {
        self.inverse.process(&mut buf);
        let s = 1.0 / self.n as f64;
        buf.iter().map(|c| c.re * s).collect()
    }

    fn multiply<F: Fn(usize) -> Complex64>(&self, f: &[f64], symbol: F) -> Vec<f64> {
        let mut h = self.forward(f);
        for (j, c) in h.iter_mut().enumerate() {
            *c *= symbol(j);
        }
        self.inverse(h)
    }

    pub fn derivative(&self, f: &[f64]) -> Vec<f64> {
        self.multiply(f, |j| self.deriv[j])
    }

    pub fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        self.multiply(f, |j| Complex64::new(self.lap[j], 0.0))
    }

    /// Trapezoidal (= rectangle, periodic) quadrature.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.dx() * kahan_sum(f.iter().copied())
    }

    /// int f_x g_x dx, consistent with the discrete Laplacian.
    pub fn gradient_inner(&self, f: &[f64], g: &[f64]) -> f64 {
        let lg = self.laplacian(g);
        -self.dx() * kahan_sum(f.iter().zip(&lg).map(|(a, b)| a * b))
    }

    /// Complex amplitude of mode m, normalized so that a cos(kx + t) has modulus a.
    pub fn mode_amplitude(&self, f: &[f64], mode: usize) -> Complex64 {
        let k = self.wavenumber(mode);
        let dx = self.dx();
        let mut s = Complex64::new(0.0, 0.0);
        for (j, v) in f.iter().enumerate() {
            s += *v * Complex64::from_polar(1.0, -k * j as f64 * dx);
        }
        s * (2.0 / self.n as f64)
    }
}

pub(crate) fn kahan_sum<I: Iterator<Item = f64>>(it: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in it {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}
