use std::fmt::Write as _;

use phasemix::dispersion::{
    asymptotic_large_k, asymptotic_small_k, stability_report, sweep, AsymptoticCoefficients, DispersionResult,
    Sign, TableRow,
};
use phasemix::free_energy::{pr_concavity_map, CellClass, Definiteness};
use phasemix::grid::Grid;
use phasemix::models::{MixtureState, ModelClass};
use phasemix::simulator::{explicit_dt_limit, run, SimulationConfig};
use phasemix::Complex64;

use crate::config::RunConfig;
use crate::output::{num, OutDir};
use crate::CliError;

pub fn class_name(c: ModelClass) -> &'static str {
    match c {
        ModelClass::CompressibleGlobal => "compressible_global",
        ModelClass::CompressibleLocal => "compressible_local",
        ModelClass::QuasiIncompressible => "quasi_incompressible",
        ModelClass::Incompressible => "incompressible",
    }
}

fn row_name(r: TableRow) -> &'static str {
    match r {
        TableRow::PositiveDefinite => "positive_definite",
        TableRow::NegativeDefinite => "negative_definite",
        TableRow::IndefiniteSameSign => "indefinite_same_sign",
        TableRow::IndefiniteOppositeSign => "indefinite_opposite_sign",
    }
}

fn definiteness_name(d: Definiteness) -> &'static str {
    match d {
        Definiteness::PositiveDefinite => "positive_definite",
        Definiteness::NegativeDefinite => "negative_definite",
        Definiteness::Indefinite => "indefinite",
        Definiteness::Singular => "singular",
    }
}

fn state_line(state: &MixtureState) -> String {
    match *state {
        MixtureState::Partial { rho1, rho2 } => format!("rho1_0 = {}, rho2_0 = {}", num(rho1), num(rho2)),
        MixtureState::Total { rho, rho1 } => format!("rho0 = {}, rho1_0 = {}", num(rho), num(rho1)),
        MixtureState::Phi { phi } => format!("phi0 = {}", num(phi)),
    }
}

fn complex(v: Complex64) -> String {
    format!("{} {}{}i", num(v.re), if v.im < 0.0 { '-' } else { '+' }, num(v.im.abs()))
}

/// Asymptote rows (regime, k, mode, asymptote, numeric) on the grid points inside each window.
fn asymptote_csv(
    res: &DispersionResult,
    windows: &[(&str, &Result<AsymptoticCoefficients, phasemix::Error>, f64, f64)],
) -> String {
    let mut s = String::from("regime,k,mode,re_asymptote,im_asymptote,re_numeric,im_numeric\n");
    for (regime, coeffs, lo, hi) in windows {
        let Ok(coeffs) = coeffs else { continue };
        for (j, &k) in res.k_grid.iter().enumerate() {
            if k < *lo || k > *hi {
                continue;
            }
            for m in &res.modes {
                if let Some(a) = coeffs.mode(m.name) {
                    let v = a.eval(k);
                    let n = m.values[j];
                    let _ = writeln!(
                        s,
                        "{regime},{},{},{},{},{},{}",
                        num(k),
                        m.name,
                        num(v.re),
                        num(v.im),
                        num(n.re),
                        num(n.im)
                    );
                }
            }
        }
    }
    s
}

pub fn cmd_sweep(config: &RunConfig, out: &OutDir) -> Result<String, CliError> {
    let sec = config.sweep.as_ref().ok_or_else(|| CliError::Config("missing section [sweep]".into()))?;
    let (model, state) = config.build()?;
    let grid = sec.grid();
    let res = sweep(&model, &state, &grid)?;
    out.write("dispersion.csv", &res.to_csv())?;

    let small = asymptotic_small_k(&model, &state);
    let large = asymptotic_large_k(&model, &state);
    let windows = [
        ("small_k", &small, sec.k_min, sec.small_k_max.unwrap()),
        ("large_k", &large, sec.large_k_min.unwrap(), sec.k_max),
    ];
    out.write("asymptotes.csv", &asymptote_csv(&res, &windows))?;

    let mut s = String::new();
    let _ = writeln!(s, "class = {}", class_name(model.class()));
    let _ = writeln!(s, "state = {}", state_line(&state));
    let _ = writeln!(s, "k_range = {} .. {} ({} points)", num(sec.k_min), num(sec.k_max), grid.len());
    let hess = model.energy().hessian_report(&model.energy_point(&state)?)?;
    let _ = writeln!(s, "hessian = {} (det = {})", definiteness_name(hess.definiteness), num(hess.det));
    if model.class().is_compressible() {
        match stability_report(&model, &state) {
            Ok(r) => {
                let signs: Vec<String> = r
                    .verdicts
                    .iter()
                    .enumerate()
                    .map(|(i, v)| format!("alpha{i}:{}", if *v == Sign::Positive { '+' } else { '-' }))
                    .collect();
                let _ = writeln!(s, "table_row = {}", row_name(r.category));
                let _ = writeln!(s, "long_wave_signs = {}", signs.join(", "));
            }
            Err(e) => {
                let _ = writeln!(s, "table_row = unavailable ({e})");
            }
        }
    } else {
        let _ = writeln!(s, "table_row = not_applicable");
    }
    let mut unstable = Vec::new();
    for m in &res.modes {
        let (j, best) = m
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.re.total_cmp(&b.1.re))
            .map(|(j, v)| (j, *v))
            .unwrap();
        let _ = writeln!(s, "{}.label = {}", m.name, m.label.as_str());
        let _ = writeln!(s, "{}.max_re = {} at k = {}", m.name, num(best.re), num(res.k_grid[j]));
        let bands = res.positive_bands(m.name, sec.band_tolerance.unwrap())?;
        if bands.is_empty() {
            let _ = writeln!(s, "{}.unstable_bands = none", m.name);
        } else {
            unstable.push(m.name);
            let list: Vec<String> = bands
                .iter()
                .map(|b| {
                    format!(
                        "{}{}, {}{}",
                        if b.open_low { "(" } else { "[" },
                        num(b.k_low),
                        num(b.k_high),
                        if b.open_high { ")" } else { "]" }
                    )
                })
                .collect();
            let _ = writeln!(s, "{}.unstable_bands = {}", m.name, list.join("; "));
        }
    }
    let _ = writeln!(
        s,
        "unstable_modes = {}",
        if unstable.is_empty() { "none".to_string() } else { unstable.join(", ") }
    );
    let _ = writeln!(s, "tracking_ambiguities = {}", res.ambiguities.len());
    for (name, r) in [("small_k_asymptote", &small), ("large_k_asymptote", &large)] {
        match r {
            Ok(_) => {
                let _ = writeln!(s, "{name} = ok");
            }
            Err(e) => {
                let _ = writeln!(s, "{name} = unavailable ({e})");
            }
        }
    }
    out.write("summary.txt", &s)?;
    Ok(s)
}

pub fn cmd_concavity_map(config: &RunConfig, out: &OutDir) -> Result<String, CliError> {
    let sec = config.map.as_ref().ok_or_else(|| CliError::Config("missing section [map]".into()))?;
    let fe = config.free_energy.energy()?;
    let (rho1, rho) = sec.axes();
    let map = pr_concavity_map(&fe, &rho1, &rho)?;
    let mut csv = String::from("rho1,rho,code,det\n");
    for c in &map.cells {
        let det = c.det.map(num).unwrap_or_default();
        let _ = writeln!(csv, "{},{},{},{det}", num(c.rho1), num(c.rho), c.class.code());
    }
    out.write("concavity_map.csv", &csv)?;
    let mut s = String::new();
    for (name, class) in [
        ("excluded", CellClass::Excluded),
        ("positive_definite", CellClass::PositiveDefinite),
        ("indefinite", CellClass::Indefinite),
        ("negative_definite", CellClass::NegativeDefinite),
        ("singular", CellClass::Singular),
    ] {
        let _ = writeln!(s, "cells.{}.{name} = {}", class.code(), map.count(class));
    }
    let bad = map.cells.iter().filter(|c| c.class == CellClass::Indefinite && c.det.is_some_and(|d| d >= 0.0)).count();
    let _ = writeln!(s, "indefinite_with_nonnegative_det = {bad}");
    out.write("concavity_summary.txt", &s)?;
    Ok(s)
}

pub fn cmd_simulate(config: &RunConfig, out: &OutDir) -> Result<String, CliError> {
    let sec = config.simulate.as_ref().ok_or_else(|| CliError::Config("missing section [simulate]".into()))?;
    let (model, state) = config.build()?;
    let length = sec.length();
    let scheme = sec.scheme.unwrap();
    let grid = Grid::new(sec.cells, length, scheme).map_err(|e| CliError::Config(format!("[simulate]: {e}")))?;
    let dt = match sec.dt {
        Some(dt) => dt,
        None => sec.dt_fraction.unwrap() * explicit_dt_limit(&model, &state, &grid)?,
    };
    let mut sim = SimulationConfig::new(model, state, length, sec.cells, dt, sec.t_end);
    sim.scheme = scheme;
    sim.integrator = sec.integrator.unwrap();
    sim.diagnostics_every = sec.diagnostics_every.unwrap();
    sim.snapshot_every = sec.snapshot_every;
    sim.enforce_dt_limit = sec.enforce_dt_limit.unwrap();
    sim.perturbations = sec.perturbations();
    let trace = run(&sim).map_err(|e| match e {
        phasemix::Error::Range(m) => CliError::Config(format!("[simulate]: {m}")),
        other => CliError::from(other),
    })?;
    out.write("trace.csv", &trace.to_csv())?;
    for snap in &trace.snapshots {
        out.write(&format!("snapshot_{:08}.csv", snap.step), &trace.snapshot_csv(snap))?;
    }

    let mut s = String::new();
    let _ = writeln!(s, "DT {} (explicit limit {})", num(trace.dt), num(trace.dt_limit));
    let drift = trace.mass_drift();
    let mass_tol = sec.mass_drift_tolerance.unwrap();
    let _ = writeln!(s, "MASS_DRIFT {} {}", num(drift), if drift <= mass_tol { "ok" } else { "exceeds" });
    let worst = trace.worst_energy_increase();
    let monotone = trace.energy_monotone(sec.energy_tolerance.unwrap());
    let _ = writeln!(
        s,
        "ENERGY_MONOTONE {} worst_increase_per_step={}",
        if monotone { "yes" } else { "no" },
        num(worst)
    );
    for (seed, fit) in trace.seeded_fits() {
        match fit {
            Ok(f) => {
                let _ = writeln!(
                    s,
                    "ALPHA_MEASURED mode={} field={} k={} alpha={} residual={} window={}..{}",
                    seed.mode,
                    seed.dominant_field,
                    num(seed.wavenumber),
                    complex(f.alpha),
                    num(f.residual),
                    num(f.t_start),
                    num(f.t_end)
                );
                if let Some(p) = seed.predicted {
                    let _ = writeln!(s, "ALPHA_PREDICTED mode={} alpha={}", seed.mode, complex(p));
                    let err = (f.alpha - p).norm() / p.norm();
                    let _ = writeln!(s, "ALPHA_REL_ERROR mode={} {}", seed.mode, num(err));
                }
            }
            Err(e) => {
                let _ = writeln!(s, "ALPHA_MEASURED mode={} unavailable ({e})", seed.mode);
                if let Some(p) = seed.predicted {
                    let _ = writeln!(s, "ALPHA_PREDICTED mode={} alpha={}", seed.mode, complex(p));
                }
            }
        }
    }
    out.write("verdict.txt", &s)?;
    Ok(s)
}
