//! 1D periodic transient solver for the binary models, used to cross-check
//! dispersion predictions, mass conservation and energy decay.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dispersion::{growth_rates, Root};
use crate::error::{Error, Result};
use crate::grid::{Grid, Scheme};
use crate::models::{Fields, MixtureState, ModelClass, ModelSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Classical fourth-order Runge-Kutta.
    Rk4,
    /// Second-order IMEX scheme: Crank-Nicolson on the linearization about the
    /// base state, Heun on the nonlinear remainder.
    SemiImplicit,
}

/// Initial perturbation added to the constant base state.
#[derive(Clone, Debug, PartialEq)]
pub enum Perturbation {
    /// amplitude * cos(k x) added to one field.
    Field { field: String, mode: usize, amplitude: f64 },
    /// Re(amplitude * x e^{ikx}) along the eigenvector x of growth-rate index
    /// `root` (descending real part), scaled so its largest component is 1.
    Eigenvector { mode: usize, root: usize, amplitude: f64 },
}

impl Perturbation {
    pub fn mode(&self) -> usize {
        match self {
            Perturbation::Field { mode, .. } | Perturbation::Eigenvector { mode, .. } => *mode,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub model: ModelSystem,
    pub state: MixtureState,
    pub perturbations: Vec<Perturbation>,
    pub length: f64,
    pub cells: usize,
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    pub integrator: Integrator,
    /// Record diagnostics every this many steps (the last step is always recorded).
    pub diagnostics_every: usize,
    /// Keep a copy of the fields every this many steps.
    pub snapshot_every: Option<usize>,
    /// Reject explicit runs whose dt exceeds the stability estimate.
    pub enforce_dt_limit: bool,
}

impl SimulationConfig {
    pub fn new(model: ModelSystem, state: MixtureState, length: f64, cells: usize, dt: f64, t_end: f64) -> Self {
        Self {
            model,
            state,
            perturbations: Vec::new(),
            length,
            cells,
            scheme: Scheme::Spectral,
            dt,
            t_end,
            integrator: Integrator::Rk4,
            diagnostics_every: 1,
            snapshot_every: None,
            enforce_dt_limit: true,
        }
    }

    pub fn with_perturbation(mut self, p: Perturbation) -> Self {
        self.perturbations.push(p);
        self
    }
}

/// Fourier amplitude history of one field at one mode number.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeSeries {
    pub field: String,
    pub mode: usize,
    pub wavenumber: f64,
    pub values: Vec<Complex64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub fields: Fields,
}

/// A perturbation seeded along an eigenvector, with the predicted growth rate.
#[derive(Clone, Debug, PartialEq)]
pub struct SeededMode {
    pub mode: usize,
    pub wavenumber: f64,
    pub predicted: Option<Complex64>,
    /// Field carrying the largest share of the seeded perturbation.
    pub dominant_field: String,
}

#[derive(Clone, Debug)]
pub struct SimulationTrace {
    pub field_names: Vec<String>,
    pub grid: Grid,
    pub dt: f64,
    /// Explicit stability estimate for the run.
    pub dt_limit: f64,
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub energy: Vec<f64>,
    pub dissipation: Vec<f64>,
    pub modes: Vec<ModeSeries>,
    /// Spatial mean of every field at t = 0.
    pub background: Vec<f64>,
    pub seeded: Vec<SeededMode>,
    pub final_fields: Fields,
    pub snapshots: Vec<Snapshot>,
}

impl SimulationTrace {
    pub fn mode_series(&self, field: &str, mode: usize) -> Option<&ModeSeries> {
        self.modes.iter().find(|m| m.field == field && m.mode == mode)
    }

    /// Largest relative deviation of the total mass from its initial value.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.mass[0];
        self.mass.iter().map(|m| (m - m0).abs() / m0.abs()).fold(0.0, f64::max)
    }

    /// Largest energy increase per time step between consecutive diagnostics
    /// (zero or negative when the energy never increases).
    pub fn worst_energy_increase(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for j in 1..self.energy.len() {
            let steps = (self.steps[j] - self.steps[j - 1]).max(1) as f64;
            worst = worst.max((self.energy[j] - self.energy[j - 1]) / steps);
        }
        if worst == f64::NEG_INFINITY {
            0.0
        } else {
            worst
        }
    }

    /// Energy nonincreasing within `tol_per_step` between diagnostics.
    pub fn energy_monotone(&self, tol_per_step: f64) -> bool {
        self.worst_energy_increase() <= tol_per_step
    }

    /// Growth-rate fits of every seeded mode on its dominant field.
    pub fn seeded_fits(&self) -> Vec<(SeededMode, Result<GrowthFit>)> {
        self.seeded
            .iter()
            .map(|s| (s.clone(), extract_growth_rate(self, &s.dominant_field, s.mode)))
            .collect()
    }

    /// Columns t, mass, energy, dissipation, then re_/im_ per tracked mode.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,mass,energy,dissipation");
        for m in &self.modes {
            s.push_str(&format!(",re_{f}_{n},im_{f}_{n}", f = m.field, n = m.mode));
        }
        s.push('\n');
        for j in 0..self.times.len() {
            s.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                self.times[j], self.mass[j], self.energy[j], self.dissipation[j]
            ));
            for m in &self.modes {
                s.push_str(&format!(",{:.16e},{:.16e}", m.values[j].re, m.values[j].im));
            }
            s.push('\n');
        }
        s
    }

    /// Columns x, then one per field.
    pub fn snapshot_csv(&self, snapshot: &Snapshot) -> String {
        let mut s = String::from("x");
        for f in &self.field_names {
            s.push(',');
            s.push_str(f);
        }
        s.push('\n');
        for (p, x) in self.grid.x().iter().enumerate() {
            s.push_str(&format!("{x:.16e}"));
            for v in &snapshot.fields.vars {
                s.push_str(&format!(",{:.16e}", v[p]));
            }
            s.push('\n');
        }
        s
    }
}

/// Growth-rate fit alpha = d ln a / dt over a window of samples.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthFit {
    pub alpha: Complex64,
    /// RMS residual of the ln|a| fit.
    pub residual: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub samples: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    pub discard_fraction: f64,
    pub min_samples: usize,
    pub max_residual: f64,
    /// Largest admissible amplitude relative to the field background.
    pub linear_limit: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { discard_fraction: 0.1, min_samples: 20, max_residual: 1e-3, linear_limit: 1e-3 }
    }
}

fn field_index(names: &[&str], field: &str) -> Result<usize> {
    names
        .iter()
        .position(|n| *n == field)
        .ok_or_else(|| Error::Range(format!("unknown field `{field}`, expected one of {names:?}")))
}

/// Field values of an eigenvector seed: pencil components mapped to the
/// evolved variables (velocities become momenta in the compressible classes).
fn eigenvector_fields(class: ModelClass, rho0: f64, x: &[Complex64]) -> Vec<Complex64> {
    match class {
        ModelClass::CompressibleGlobal | ModelClass::CompressibleLocal => {
            vec![x[0], x[1], x[2] * rho0, x[3] * rho0]
        }
        ModelClass::QuasiIncompressible | ModelClass::Incompressible => vec![x[1], x[2], x[3]],
    }
}

fn seed(
    config: &SimulationConfig,
    grid: &Grid,
    fields: &mut Fields,
    names: &[&str],
) -> Result<Vec<SeededMode>> {
    let xs = grid.x();
    let mut seeded = Vec::new();
    for p in &config.perturbations {
        let mode = p.mode();
        if mode == 0 || mode >= grid.n() / 2 {
            return Err(Error::Range(format!("mode number {mode} outside 1..{}", grid.n() / 2)));
        }
        let k = grid.wavenumber(mode);
        match p {
            Perturbation::Field { field, amplitude, .. } => {
                let i = field_index(names, field)?;
                for (v, x) in fields.vars[i].iter_mut().zip(&xs) {
                    *v += amplitude * (k * x).cos();
                }
            }
            Perturbation::Eigenvector { root, amplitude, .. } => {
                let roots: Vec<Root> = growth_rates(&config.model, &config.state, k)?;
                let r = roots.get(*root).ok_or_else(|| {
                    Error::Range(format!("root index {root} but only {} roots at k = {k}", roots.len()))
                })?;
                let rho0 = config.model.total_density(&config.state)?;
                let comps = eigenvector_fields(config.model.class(), rho0, r.eigenvector.as_slice());
                let big = comps.iter().fold(Complex64::new(0.0, 0.0), |b, c| if c.norm() > b.norm() { *c } else { b });
                let dominant = comps
                    .iter()
                    .enumerate()
                    .fold((0, 0.0), |acc, (i, c)| if c.norm() > acc.1 { (i, c.norm()) } else { acc })
                    .0;
                for (i, c) in comps.iter().enumerate() {
                    let a = c / big * *amplitude;
                    for (v, x) in fields.vars[i].iter_mut().zip(&xs) {
                        *v += (a * Complex64::from_polar(1.0, k * x)).re;
                    }
                }
                seeded.push(SeededMode {
                    mode,
                    wavenumber: k,
                    predicted: Some(r.alpha),
                    dominant_field: names[dominant].to_string(),
                });
            }
        }
    }
    Ok(seeded)
}

/// Fourier-space Jacobian of the right-hand side at a uniform state: one
/// nf x nf block per grid wavenumber. A point perturbation excites every
/// mode with unit weight, so one central difference per field suffices.
fn linearization(model: &ModelSystem, grid: &Grid, base: &Fields) -> Result<Vec<DMatrix<Complex64>>> {
    let nf = base.vars.len();
    let n = grid.n();
    let rho0 = base.vars.iter().map(|v| v[0].abs()).fold(0.0, f64::max).max(1.0);
    let mut jac = vec![DMatrix::<Complex64>::zeros(nf, nf); n];
    for f in 0..nf {
        let scale = base.vars[f][0].abs().max(1e-3 * rho0);
        let h = 1e-6 * scale;
        let mut plus = base.clone();
        plus.vars[f][0] += h;
        let mut minus = base.clone();
        minus.vars[f][0] -= h;
        let fp = model.rhs_1d(grid, &plus)?;
        let fm = model.rhs_1d(grid, &minus)?;
        for g in 0..nf {
            let d: Vec<f64> = (0..n).map(|p| (fp.vars[g][p] - fm.vars[g][p]) / (2.0 * h)).collect();
            let dh = grid.forward(&d);
            for j in 0..n {
                jac[j][(g, f)] = dh[j];
            }
        }
    }
    Ok(jac)
}

/// Largest |eigenvalue| of the linearized operator over all grid modes.
fn spectral_radius(jac: &[DMatrix<Complex64>]) -> Result<f64> {
    let mut r = 0.0_f64;
    for m in jac {
        let ev = m
            .clone()
            .schur()
            .eigenvalues()
            .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
        r = ev.iter().fold(r, |a, e| a.max(e.norm()));
    }
    Ok(r)
}

/// 0.2 min(dx^2 Re_s rho_min, dx^4 / (M kappa_max)).
fn diffusive_limit(model: &ModelSystem, grid: &Grid, fields: &Fields) -> Result<f64> {
    let dx = grid.dx();
    let rho_min = match model.class() {
        ModelClass::CompressibleGlobal => (0..grid.n()).map(|p| fields.vars[0][p] + fields.vars[1][p]).fold(f64::INFINITY, f64::min),
        ModelClass::CompressibleLocal => fields.vars[0].iter().copied().fold(f64::INFINITY, f64::min),
        _ => {
            let (h1, h2) = model.rho_hat().unwrap_or((1.0, 1.0));
            fields.vars[0].iter().map(|phi| 1.0 / (phi / h1 + (1.0 - phi) / h2)).fold(f64::INFINITY, f64::min)
        }
    };
    let kappa_max = model.kappa().matrix().symmetric_eigenvalues().max();
    let m_max = match model.class() {
        ModelClass::QuasiIncompressible | ModelClass::Incompressible => {
            let (h1, _) = model.rho_hat().unwrap_or((1.0, 1.0));
            model.m11() / (h1 * h1)
        }
        _ => model.full_mobility().symmetric_eigenvalues().max(),
    };
    let viscous = if model.inv_re_s() > 0.0 { dx * dx * rho_min / model.inv_re_s() } else { f64::INFINITY };
    let mobility = if m_max * kappa_max > 0.0 { dx.powi(4) / (m_max * kappa_max) } else { f64::INFINITY };
    Ok(0.2 * viscous.min(mobility))
}

/// Explicit (RK4) stability estimate: the diffusive bound combined with
/// 2 / (spectral radius of the linearized operator on the grid).
pub fn explicit_dt_limit(model: &ModelSystem, state: &MixtureState, grid: &Grid) -> Result<f64> {
    let base = Fields::uniform(model, state, grid.n())?;
    let jac = linearization(model, grid, &base)?;
    Ok(diffusive_limit(model, grid, &base)?.min(2.0 / spectral_radius(&jac)?))
}

struct Stepper<'a> {
    model: &'a ModelSystem,
    grid: &'a Grid,
    dt: f64,
    integrator: Integrator,
    /// (I - dt/2 J)^{-1} and (I - dt/2 J)^{-1} (I + dt/2 J) per wavenumber.
    implicit: Vec<(DMatrix<Complex64>, DMatrix<Complex64>)>,
    jac: Vec<DMatrix<Complex64>>,
}

impl<'a> Stepper<'a> {
    fn step(&self, u: &Fields) -> Result<Fields> {
        match self.integrator {
            Integrator::Rk4 => {
                let dt = self.dt;
                let k1 = self.model.rhs_1d(self.grid, u)?;
                let k2 = self.model.rhs_1d(self.grid, &u.axpy(0.5 * dt, &k1))?;
                let k3 = self.model.rhs_1d(self.grid, &u.axpy(0.5 * dt, &k2))?;
                let k4 = self.model.rhs_1d(self.grid, &u.axpy(dt, &k3))?;
                let mut out = u.clone();
                for (i, v) in out.vars.iter_mut().enumerate() {
                    for (p, x) in v.iter_mut().enumerate() {
                        *x += dt / 6.0 * (k1.vars[i][p] + 2.0 * k2.vars[i][p] + 2.0 * k3.vars[i][p] + k4.vars[i][p]);
                    }
                }
                Ok(out)
            }
            Integrator::SemiImplicit => {
                let uh = self.transform(u);
                let n0 = self.remainder(u, &uh)?;
                let star = self.implicit_update(&uh, &n0, None);
                let ustar = self.back(&star);
                let sh = self.transform(&ustar);
                let n1 = self.remainder(&ustar, &sh)?;
                Ok(self.back(&self.implicit_update(&uh, &n0, Some(&n1))))
            }
        }
    }

    fn transform(&self, u: &Fields) -> Vec<Vec<Complex64>> {
        u.vars.iter().map(|v| self.grid.forward(v)).collect()
    }

    fn back(&self, uh: &[Vec<Complex64>]) -> Fields {
        Fields { vars: uh.iter().map(|v| self.grid.inverse(v.clone())).collect() }
    }

    /// Fourier transform of F(u) - J u (J acts on the deviation from the
    /// mean, which only differs from u at k = 0 where J vanishes).
    fn remainder(&self, u: &Fields, uh: &[Vec<Complex64>]) -> Result<Vec<Vec<Complex64>>> {
        let f = self.model.rhs_1d(self.grid, u)?;
        let mut r = self.transform(&f);
        let nf = uh.len();
        for j in 1..self.grid.n() {
            let jm = &self.jac[j];
            for g in 0..nf {
                let mut s = Complex64::new(0.0, 0.0);
                for c in 0..nf {
                    s += jm[(g, c)] * uh[c][j];
                }
                r[g][j] -= s;
            }
        }
        Ok(r)
    }

    fn implicit_update(
        &self,
        uh: &[Vec<Complex64>],
        n0: &[Vec<Complex64>],
        n1: Option<&[Vec<Complex64>]>,
    ) -> Vec<Vec<Complex64>> {
        let nf = uh.len();
        let dt = self.dt;
        let mut out = vec![vec![Complex64::new(0.0, 0.0); self.grid.n()]; nf];
        for j in 0..self.grid.n() {
            let (pinv, q) = &self.implicit[j];
            for g in 0..nf {
                let mut s = Complex64::new(0.0, 0.0);
                for c in 0..nf {
                    let explicit = match n1 {
                        None => n0[c][j],
                        Some(n1) => 0.5 * (n0[c][j] + n1[c][j]),
                    };
                    s += q[(g, c)] * uh[c][j] + pinv[(g, c)] * explicit * dt;
                }
                out[g][j] = s;
            }
        }
        out
    }
}

fn field_range_dump(names: &[&str], u: &Fields) -> String {
    names
        .iter()
        .zip(&u.vars)
        .map(|(n, v)| {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            format!("{n} in [{lo:e}, {hi:e}]")
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn blowup(step: usize, time: f64, e: Error, names: &[&str], last: &Fields) -> Error {
    match e {
        Error::Domain(_) | Error::Numerical(_) => Error::Blowup {
            step,
            time,
            message: format!("{e}; last good state: {}", field_range_dump(names, last)),
        },
        other => other,
    }
}

/// Time-step the model from the perturbed base state and record diagnostics.
pub fn run(config: &SimulationConfig) -> Result<SimulationTrace> {
    if !(config.dt > 0.0) || !config.dt.is_finite() {
        return Err(Error::Range(format!("dt must be positive, got {}", config.dt)));
    }
    if !(config.t_end > 0.0) || !config.t_end.is_finite() {
        return Err(Error::Range(format!("t_end must be positive, got {}", config.t_end)));
    }
    if config.diagnostics_every == 0 || config.snapshot_every == Some(0) {
        return Err(Error::Range("diagnostic and snapshot cadences must be at least 1".into()));
    }
    let model = &config.model;
    let grid = Grid::new(config.cells, config.length, config.scheme)?;
    let names = model.class().field_names();
    let base = Fields::uniform(model, &config.state, grid.n())?;
    let mut u = base.clone();
    let seeded = seed(config, &grid, &mut u, names)?;
    model
        .rhs_1d(&grid, &u)
        .map_err(|e| Error::Range(format!("perturbed initial state is not admissible: {e}")))?;

    let nsteps = (config.t_end / config.dt - 1e-9).ceil().max(1.0) as usize;
    let dt = config.t_end / nsteps as f64;

    let jac = linearization(model, &grid, &base)?;
    let dt_limit = diffusive_limit(model, &grid, &u)?.min(2.0 / spectral_radius(&jac)?);
    if config.integrator == Integrator::Rk4 && config.enforce_dt_limit && dt > dt_limit {
        return Err(Error::Range(format!("dt = {dt:e} exceeds the explicit stability limit {dt_limit:e}")));
    }
    let implicit = if config.integrator == Integrator::SemiImplicit {
        let nf = names.len();
        jac.iter()
            .map(|j| {
                let id = DMatrix::<Complex64>::identity(nf, nf);
                let half = j * Complex64::new(0.5 * dt, 0.0);
                let pinv = (&id - &half)
                    .try_inverse()
                    .ok_or_else(|| Error::Numerical("singular implicit operator".into()))?;
                let q = &pinv * (&id + &half);
                Ok((pinv, q))
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let stepper = Stepper { model, grid: &grid, dt, integrator: config.integrator, implicit, jac };

    let mut tracked: Vec<(usize, usize)> = Vec::new();
    for p in &config.perturbations {
        for f in 0..names.len() {
            if !tracked.contains(&(f, p.mode())) {
                tracked.push((f, p.mode()));
            }
        }
    }
    let reference = model.energy_means(&u);
    let mut trace = SimulationTrace {
        field_names: names.iter().map(|s| s.to_string()).collect(),
        grid: grid.clone(),
        dt,
        dt_limit,
        steps: Vec::new(),
        times: Vec::new(),
        mass: Vec::new(),
        energy: Vec::new(),
        dissipation: Vec::new(),
        modes: tracked
            .iter()
            .map(|&(f, m)| ModeSeries {
                field: names[f].to_string(),
                mode: m,
                wavenumber: grid.wavenumber(m),
                values: Vec::new(),
            })
            .collect(),
        background: u.vars.iter().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect(),
        seeded,
        final_fields: u.clone(),
        snapshots: Vec::new(),
    };
    let record = |trace: &mut SimulationTrace, step: usize, u: &Fields| -> Result<()> {
        let t = step as f64 * dt;
        trace.steps.push(step);
        trace.times.push(t);
        trace.mass.push(model.total_mass(&grid, u)?);
        trace.energy.push(model.total_energy_with_reference(&grid, u, &reference)?);
        trace.dissipation.push(model.energy_dissipation_rate(&grid, u)?);
        for (s, &(f, m)) in trace.modes.iter_mut().zip(&tracked) {
            s.values.push(grid.mode_amplitude(&u.vars[f], m));
        }
        Ok(())
    };
    record(&mut trace, 0, &u)?;
    if config.snapshot_every.is_some() {
        trace.snapshots.push(Snapshot { step: 0, time: 0.0, fields: u.clone() });
    }
    for step in 1..=nsteps {
        let t = step as f64 * dt;
        let next = stepper.step(&u).map_err(|e| blowup(step, t, e, names, &u))?;
        if next.vars.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Blowup {
                step,
                time: t,
                message: format!("non-finite field values; last good state: {}", field_range_dump(names, &u)),
            });
        }
        if step % config.diagnostics_every == 0 || step == nsteps {
            record(&mut trace, step, &next).map_err(|e| blowup(step, t, e, names, &u))?;
        }
        if let Some(every) = config.snapshot_every {
            if step % every == 0 || step == nsteps {
                trace.snapshots.push(Snapshot { step, time: t, fields: next.clone() });
            }
        }
        u = next;
    }
    trace.final_fields = u;
    Ok(trace)
}

fn slope(t: &[f64], y: &[f64]) -> (f64, f64) {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in t.iter().zip(y) {
        sxy += (a - tm) * (b - ym);
        sxx += (a - tm) * (a - tm);
    }
    let s = sxy / sxx;
    let rms = (t.iter().zip(y).map(|(a, b)| (b - ym - s * (a - tm)).powi(2)).sum::<f64>() / n).sqrt();
    (s, rms)
}

pub fn extract_growth_rate(trace: &SimulationTrace, field: &str, mode: usize) -> Result<GrowthFit> {
    extract_growth_rate_with(trace, field, mode, &FitOptions::default())
}

/// Least-squares slopes of ln|a(t)| and of the unwrapped phase of a(t).
pub fn extract_growth_rate_with(
    trace: &SimulationTrace,
    field: &str,
    mode: usize,
    options: &FitOptions,
) -> Result<GrowthFit> {
    let series = trace
        .mode_series(field, mode)
        .ok_or_else(|| Error::Fit(format!("mode {mode} of `{field}` was not tracked")))?;
    let a = &series.values;
    let n = a.len();
    if n < options.min_samples {
        return Err(Error::Fit(format!("{n} samples, at least {} required", options.min_samples)));
    }
    let fi = trace.field_names.iter().position(|f| f == field).unwrap();
    let background = trace.background[fi].abs();
    let field_max = trace.final_fields.vars[fi].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    // fields at rest in the base state carry only a round-off mean
    if background > 1e-8 * field_max {
        let peak = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if peak > options.linear_limit * background {
            return Err(Error::Fit(format!(
                "amplitude {peak:e} exceeds the linear regime ({} of background {background:e})",
                options.linear_limit
            )));
        }
    }
    let scale = trace.final_fields.vars[fi].iter().fold(background, |m, v| m.max(v.abs()));
    let floor = (1e3 * f64::EPSILON * scale).max(f64::MIN_POSITIVE);
    let start = ((n as f64) * options.discard_fraction).floor() as usize;
    let la: Vec<f64> = a.iter().map(|z| z.norm().ln()).collect();
    let mut end = n;
    for j in start + 1..n {
        if (la[j] - la[start]).abs() >= std::f64::consts::LN_10 {
            end = (j + 1).max(start + 10).min(n);
            break;
        }
    }
    if end - start < 10.min(n - start) || end - start < 3 {
        return Err(Error::Fit("fit window too short".into()));
    }
    if a[start..end].iter().any(|z| !(z.norm() > floor)) {
        return Err(Error::Fit("amplitude underflows to round-off level".into()));
    }
    let t = &trace.times[start..end];
    let (growth, residual) = slope(t, &la[start..end]);
    let mut phase = Vec::with_capacity(end - start);
    let mut acc = a[start].arg();
    phase.push(acc);
    for j in start + 1..end {
        let mut d = a[j].arg() - a[j - 1].arg();
        while d > std::f64::consts::PI {
            d -= 2.0 * std::f64::consts::PI;
        }
        while d <= -std::f64::consts::PI {
            d += 2.0 * std::f64::consts::PI;
        }
        acc += d;
        phase.push(acc);
    }
    let (omega, _) = slope(t, &phase);
    if !(residual <= options.max_residual) {
        return Err(Error::Fit(format!("fit residual {residual:e} exceeds {:e}", options.max_residual)));
    }
    Ok(GrowthFit { alpha: Complex64::new(growth, omega), residual, t_start: t[0], t_end: t[t.len() - 1], samples: t.len() })
}
