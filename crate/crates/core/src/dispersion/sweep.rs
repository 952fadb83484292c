use std::fmt::Write as _;

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use super::asymptotics::asymptotic_small_k_linearized;
use super::{growth_rates_linearized, LinearizedSystem, Root};
use crate::error::{Error, Result};
use crate::models::{MixtureState, ModelClass, ModelSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModeLabel {
    Viscous,
    Thermodynamic,
    Coupled,
}

impl ModeLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ModeLabel::Viscous => "viscous",
            ModeLabel::Thermodynamic => "thermodynamic",
            ModeLabel::Coupled => "coupled",
        }
    }
}

/// One growth-rate branch followed across the k grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackedMode {
    pub name: &'static str,
    pub label: ModeLabel,
    pub values: Vec<Complex64>,
    pub vectors: Vec<DVector<Complex64>>,
}

/// A k interval on which Re(alpha) > 0. `open_low`/`open_high` mark bands
/// that reach the ends of the sampled grid and were therefore not refined.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Band {
    pub k_low: f64,
    pub k_high: f64,
    pub open_low: bool,
    pub open_high: bool,
}

#[derive(Clone, Debug)]
pub struct DispersionResult {
    pub class: ModelClass,
    pub k_grid: Vec<f64>,
    /// Per k, all roots sorted by descending real part.
    pub roots: Vec<Vec<Root>>,
    pub modes: Vec<TrackedMode>,
    /// (k index, mode, mode) pairs whose roots nearly coincide.
    pub ambiguities: Vec<(usize, &'static str, &'static str)>,
    /// False when the small-k expansion was singular and labels were seeded
    /// by ordering instead.
    pub seeded_from_asymptotics: bool,
    linearized: LinearizedSystem,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepOptions {
    /// Relative width at which band-edge bisection stops.
    pub edge_tolerance: f64,
    /// Relative separation below which two roots count as coincident.
    pub tie_tolerance: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { edge_tolerance: 1e-10, tie_tolerance: 1e-12 }
    }
}

/// n logarithmically spaced points from k_min to k_max inclusive.
pub fn log_grid(k_min: f64, k_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(k_min > 0.0 && k_max > k_min) || n < 2 {
        return Err(Error::Range("need 0 < k_min < k_max and at least two points".into()));
    }
    let (a, b) = (k_min.ln(), k_max.ln());
    let mut g: Vec<f64> = (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect();
    g[0] = k_min;
    g[n - 1] = k_max;
    Ok(g)
}

fn mode_names(class: ModelClass, count: usize) -> Vec<(&'static str, ModeLabel)> {
    use ModeLabel::*;
    let all = match class {
        ModelClass::CompressibleGlobal | ModelClass::CompressibleLocal => {
            vec![("alpha0", Viscous), ("alpha1", Thermodynamic), ("alpha2", Coupled), ("alpha3", Coupled)]
        }
        ModelClass::QuasiIncompressible => {
            vec![("alpha0", Viscous), ("alpha1", Thermodynamic), ("alpha2", Thermodynamic)]
        }
        ModelClass::Incompressible => vec![("alpha0", Viscous), ("alpha1", Thermodynamic)],
    };
    all.into_iter().take(count).collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// perm[m] = index of the root assigned to target m, minimizing sum |root - target|.
fn assign(targets: &[Complex64], roots: &[Root]) -> Vec<usize> {
    let n = targets.len().min(roots.len());
    let mut best = (f64::INFINITY, (0..n).collect::<Vec<_>>());
    for perm in permutations(roots.len()) {
        let cost: f64 = (0..n).map(|m| (roots[perm[m]].alpha - targets[m]).norm()).sum();
        if cost < best.0 {
            best = (cost, perm[..n].to_vec());
        }
    }
    best.1
}

pub fn sweep(model: &ModelSystem, state: &MixtureState, k_grid: &[f64]) -> Result<DispersionResult> {
    sweep_with(model, state, k_grid, SweepOptions::default())
}

pub fn sweep_with(
    model: &ModelSystem,
    state: &MixtureState,
    k_grid: &[f64],
    options: SweepOptions,
) -> Result<DispersionResult> {
    if k_grid.is_empty() || k_grid.windows(2).any(|w| !(w[1] > w[0])) || !(k_grid[0] > 0.0) {
        return Err(Error::Range("k grid must be positive and strictly increasing".into()));
    }
    let lin = LinearizedSystem::new(model, state)?;
    let roots: Vec<Vec<Root>> =
        k_grid.par_iter().map(|&k| growth_rates_linearized(&lin, k)).collect::<Result<Vec<_>>>()?;
    let count = roots[0].len();
    if roots.iter().any(|r| r.len() != count) {
        return Err(Error::Numerical("root count changes along the k grid".into()));
    }
    let names = mode_names(model.class(), count);
    let k0 = k_grid[0];

    let (seed, seeded_from_asymptotics) = match asymptotic_small_k_linearized(&lin) {
        Ok(asym) => {
            let targets: Vec<Complex64> = names
                .iter()
                .map(|(n, _)| asym.mode(n).map(|m| m.eval(k0)).unwrap_or(Complex64::new(0.0, 0.0)))
                .collect();
            (assign(&targets, &roots[0]), true)
        }
        Err(_) => {
            // viscous root first, the rest by descending real part
            let visc = Complex64::new(-lin.inv_re_s * k0 * k0 / lin.rho0, 0.0);
            let iv = (0..count)
                .min_by(|&a, &b| (roots[0][a].alpha - visc).norm().total_cmp(&(roots[0][b].alpha - visc).norm()))
                .unwrap();
            let mut order = vec![iv];
            order.extend((0..count).filter(|&i| i != iv));
            (order, false)
        }
    };

    let mut modes: Vec<TrackedMode> = names
        .iter()
        .enumerate()
        .map(|(m, (name, label))| TrackedMode {
            name,
            label: *label,
            values: vec![roots[0][seed[m]].alpha],
            vectors: vec![roots[0][seed[m]].eigenvector.clone()],
        })
        .collect();
    let mut ambiguities = Vec::new();
    for (j, rj) in roots.iter().enumerate() {
        if j > 0 {
            let prev: Vec<Complex64> = modes.iter().map(|m| m.values[j - 1]).collect();
            let perm = assign(&prev, rj);
            for (m, mode) in modes.iter_mut().enumerate() {
                mode.values.push(rj[perm[m]].alpha);
                mode.vectors.push(rj[perm[m]].eigenvector.clone());
            }
        }
        for a in 0..modes.len() {
            for b in a + 1..modes.len() {
                let (x, y) = (modes[a].values[j], modes[b].values[j]);
                if (x - y).norm() <= options.tie_tolerance * x.norm().max(y.norm()) {
                    ambiguities.push((j, modes[a].name, modes[b].name));
                }
            }
        }
    }
    Ok(DispersionResult {
        class: model.class(),
        k_grid: k_grid.to_vec(),
        roots,
        modes,
        ambiguities,
        seeded_from_asymptotics,
        linearized: lin,
    })
}

impl DispersionResult {
    pub fn mode(&self, name: &str) -> Option<&TrackedMode> {
        self.modes.iter().find(|m| m.name == name)
    }

    pub fn linearized(&self) -> &LinearizedSystem {
        &self.linearized
    }

    /// Error value for callers that treat label ties as fatal.
    pub fn ambiguity_error(&self) -> Option<Error> {
        self.ambiguities.first().map(|(j, a, b)| {
            Error::TrackingAmbiguity(format!("{a} and {b} coincide at k = {}", self.k_grid[*j]))
        })
    }

    /// Bands of Re(alpha) > 0 of a tracked mode, interior edges refined by
    /// bisection on the root nearest the interpolated branch.
    pub fn positive_bands(&self, name: &str, tolerance: f64) -> Result<Vec<Band>> {
        let mode = self.mode(name).ok_or_else(|| Error::Range(format!("no mode named {name}")))?;
        let k = &self.k_grid;
        let n = k.len();
        let pos: Vec<bool> = mode.values.iter().map(|v| v.re > 0.0).collect();
        let mut bands = Vec::new();
        let mut j = 0;
        while j < n {
            if !pos[j] {
                j += 1;
                continue;
            }
            let start = j;
            while j + 1 < n && pos[j + 1] {
                j += 1;
            }
            let end = j;
            let k_low = if start == 0 {
                k[0]
            } else {
                self.edge(k[start - 1], mode.values[start - 1], k[start], mode.values[start], tolerance)?
            };
            let k_high = if end == n - 1 {
                k[n - 1]
            } else {
                self.edge(k[end + 1], mode.values[end + 1], k[end], mode.values[end], tolerance)?
            };
            bands.push(Band { k_low, k_high, open_low: start == 0, open_high: end == n - 1 });
            j += 1;
        }
        Ok(bands)
    }

    /// Sign change between (k_neg, a_neg) with Re <= 0 and (k_pos, a_pos) with Re > 0.
    fn edge(
        &self,
        mut k_neg: f64,
        mut a_neg: Complex64,
        mut k_pos: f64,
        mut a_pos: Complex64,
        tolerance: f64,
    ) -> Result<f64> {
        for _ in 0..200 {
            if (k_pos - k_neg).abs() <= tolerance * k_pos.max(k_neg) {
                break;
            }
            let km = (k_neg * k_pos).sqrt();
            let t = (km.ln() - k_neg.ln()) / (k_pos.ln() - k_neg.ln());
            let target = a_neg * (1.0 - t) + a_pos * t;
            let roots = growth_rates_linearized(&self.linearized, km)?;
            let am = roots
                .iter()
                .map(|r| r.alpha)
                .min_by(|x, y| (x - target).norm().total_cmp(&(y - target).norm()))
                .unwrap();
            if am.re > 0.0 {
                k_pos = km;
                a_pos = am;
            } else {
                k_neg = km;
                a_neg = am;
            }
        }
        Ok(0.5 * (k_neg + k_pos))
    }

    /// CSV with columns k, then Re, Im and label of each tracked mode.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k");
        for m in &self.modes {
            let _ = write!(s, ",re_{0},im_{0},label_{0}", m.name);
        }
        s.push('\n');
        for (j, k) in self.k_grid.iter().enumerate() {
            let _ = write!(s, "{k:.16e}");
            for m in &self.modes {
                let v = m.values[j];
                let _ = write!(s, ",{:.16e},{:.16e},{}", v.re, v.im, m.label.as_str());
            }
            s.push('\n');
        }
        s
    }
}

fn max_growth(lin: &LinearizedSystem, k: f64) -> Result<f64> {
    Ok(growth_rates_linearized(lin, k)?.iter().map(|r| r.alpha.re).fold(f64::NEG_INFINITY, f64::max))
}

/// Smallest k in [k_min, k_max] beyond which every root has Re(alpha) <= 0,
/// located on a 200-point log scan and refined by bisection to `tolerance`
/// (relative). Returns k_min when no unstable k is seen.
pub fn short_wave_threshold(
    model: &ModelSystem,
    state: &MixtureState,
    k_min: f64,
    k_max: f64,
    tolerance: f64,
) -> Result<f64> {
    let lin = LinearizedSystem::new(model, state)?;
    let grid = log_grid(k_min, k_max, 200)?;
    let growth: Vec<f64> = grid.par_iter().map(|&k| max_growth(&lin, k)).collect::<Result<_>>()?;
    let Some(last) = growth.iter().rposition(|g| *g > 0.0) else { return Ok(k_min) };
    if last == grid.len() - 1 {
        return Err(Error::Range(format!("unstable roots persist up to k_max = {k_max}")));
    }
    let (mut lo, mut hi) = (grid[last], grid[last + 1]);
    while hi - lo > tolerance * hi {
        let mid = (lo * hi).sqrt();
        if max_growth(&lin, mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}
