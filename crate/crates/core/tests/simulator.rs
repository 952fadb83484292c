use std::f64::consts::PI;

use phasemix::dispersion::{growth_rates, LinearizedSystem};
use phasemix::free_energy::{BulkFreeEnergy, FloryHuggins, GradientCoefficients, PengRobinsonParams};
use phasemix::grid::{Grid, Scheme};
use phasemix::models::{MixtureState, ModelSystem};
use phasemix::simulator::{
    explicit_dt_limit, extract_growth_rate, extract_growth_rate_with, run, FitOptions, Integrator, Perturbation,
    SimulationConfig,
};
use phasemix::Error;

fn pr_local(inv_re_s: f64, inv_re_v: f64) -> ModelSystem {
    let fe = BulkFreeEnergy::peng_robinson(PengRobinsonParams::co2_decane()).unwrap();
    let kappa = GradientCoefficients::from_total(1e-4, 0.0, 1.06e-4).unwrap();
    ModelSystem::local(&fe, &kappa, 1e-4, inv_re_s, inv_re_v).unwrap()
}

fn fh_quasi(chi: f64, kappa: f64, rho_hat_2: f64) -> ModelSystem {
    let fe = BulkFreeEnergy::flory_huggins(FloryHuggins::binary(1.0, 1.0, 1.0, chi).unwrap());
    let kappa = GradientCoefficients::binary(kappa, 0.0, kappa).unwrap();
    ModelSystem::quasi(&fe, &kappa, 1e-2, 1.0, rho_hat_2, 0.5, 0.2).unwrap()
}

/// Config for a run with `mode` periods of wavenumber k in the box, at a
/// fraction of the explicit stability limit.
fn config(model: ModelSystem, state: MixtureState, k: f64, mode: usize, n: usize, t_end: f64) -> SimulationConfig {
    let length = 2.0 * PI * mode as f64 / k;
    let grid = Grid::new(n, length, Scheme::Spectral).unwrap();
    let dt = 0.9 * explicit_dt_limit(&model, &state, &grid).unwrap();
    let mut c = SimulationConfig::new(model, state, length, n, dt, t_end);
    c.diagnostics_every = ((t_end / dt) / 100.0).ceil() as usize;
    c
}

#[test]
fn unperturbed_state_stays_constant() {
    let state = MixtureState::Total { rho: 400.0, rho1: 200.0 };
    let mut c = config(pr_local(1.0, 1.0 / 3.0), state, 1.0, 2, 32, 5.0);
    c.diagnostics_every = 1;
    let tr = run(&c).unwrap();
    for series in [&tr.mass, &tr.energy] {
        let s0 = series[0];
        assert!(series.iter().all(|v| ((v - s0) / s0).abs() < 1e-12));
    }
    assert!(tr.dissipation.iter().all(|d| d.abs() < 1e-12));
    assert!((tr.final_fields.vars[0][3] - 400.0).abs() < 1e-10);
}

#[test]
fn local_model_conserves_mass() {
    let state = MixtureState::Total { rho: 400.0, rho1: 2.0 };
    let mut c = config(pr_local(1.0, 1.0 / 3.0), state, 0.7, 2, 64, 10.0);
    c.perturbations.push(Perturbation::Field { field: "rho1".into(), mode: 2, amplitude: 1e-2 });
    c.perturbations.push(Perturbation::Field { field: "mx".into(), mode: 3, amplitude: 1e-1 });
    let tr = run(&c).unwrap();
    assert!(tr.mass_drift() <= 1e-10, "drift {}", tr.mass_drift());
}

#[test]
fn stable_state_energy_is_nonincreasing() {
    // stable state with near-inviscid viscosities
    let state = MixtureState::Total { rho: 400.0, rho1: 200.0 };
    let mut c = config(pr_local(1e-6, 1.0 / 3e6), state, 0.5, 4, 64, 20.0);
    c.perturbations.push(Perturbation::Field { field: "rho".into(), mode: 4, amplitude: 0.5 });
    c.perturbations.push(Perturbation::Field { field: "rho1".into(), mode: 7, amplitude: 0.2 });
    c.diagnostics_every = 1;
    let tr = run(&c).unwrap();
    assert!(tr.energy_monotone(1e-8), "worst increase {}", tr.worst_energy_increase());
    assert!(tr.dissipation.iter().all(|d| *d <= 0.0));
}

#[test]
fn unstable_eigenvector_seed_grows_at_predicted_rate() {
    let model = pr_local(1.0, 1.0 / 3.0);
    let state = MixtureState::Total { rho: 400.0, rho1: 2.0 };
    let mut c = config(model.clone(), state, 0.6683, 4, 64, 100.0);
    c.perturbations.push(Perturbation::Eigenvector { mode: 4, root: 0, amplitude: 1e-4 });
    let tr = run(&c).unwrap();
    let predicted = growth_rates(&model, &state, tr.grid.wavenumber(4)).unwrap()[0].alpha;
    assert!(predicted.re > 0.0);
    let (seed, fit) = tr.seeded_fits().pop().unwrap();
    assert_eq!(seed.dominant_field, "rho");
    let fit = fit.unwrap();
    assert!((fit.alpha - predicted).norm() / predicted.norm() < 1e-3, "{fit:?} vs {predicted}");
    assert!(fit.t_start > 0.0 && fit.samples >= 10);
}

#[test]
fn stable_eigenvector_seed_decays_at_least_damped_rate() {
    let model = pr_local(1.0, 1.0 / 3.0);
    let state = MixtureState::Total { rho: 400.0, rho1: 200.0 };
    let mut c = config(model.clone(), state, 2.0, 4, 32, 200.0);
    c.perturbations.push(Perturbation::Eigenvector { mode: 4, root: 0, amplitude: 1e-3 });
    let tr = run(&c).unwrap();
    let predicted = growth_rates(&model, &state, tr.grid.wavenumber(4)).unwrap()[0].alpha;
    let fit = extract_growth_rate(&tr, "rho", 4).unwrap();
    assert!(fit.alpha.re < 0.0);
    assert!((fit.alpha.re - predicted.re).abs() / predicted.re.abs() < 1e-3);
}

#[test]
fn transverse_velocity_diffuses_at_viscous_rate() {
    for (model, state) in [
        (pr_local(0.7, 0.1), MixtureState::Total { rho: 400.0, rho1: 200.0 }),
        (fh_quasi(1.5, 1e-3, 1.3), MixtureState::Phi { phi: 0.3 }),
    ] {
        let field = if model.class().is_compressible() { "my" } else { "vy" };
        let k = 0.3;
        let rate = model.inv_re_s() * k * k / model.total_density(&state).unwrap();
        let mut c = config(model, state, k, 1, 32, 3.0 / rate);
        c.perturbations.push(Perturbation::Field { field: field.into(), mode: 1, amplitude: 1e-6 });
        let tr = run(&c).unwrap();
        let fit = extract_growth_rate(&tr, field, 1).unwrap();
        assert!((fit.alpha.re + rate).abs() / rate < 1e-2, "{} vs {}", fit.alpha.re, -rate);
    }
}

#[test]
fn quasi_incompressible_seed_matches_dispersion() {
    // gradient coefficient chosen so the spinodal band ends at k = 1.4 and
    // the seeded mode outgrows round-off in every other grid mode
    let state = MixtureState::Phi { phi: 0.5 };
    let unit = LinearizedSystem::new(&fh_quasi(3.0, 1.0, 1.2), &state).unwrap();
    let model = fh_quasi(3.0, -unit.h_phi / (1.96 * unit.kappa_phi), 1.2);
    let roots = growth_rates(&model, &state, 1.0).unwrap();
    assert!(roots[0].alpha.re > 0.0);
    let mut c = config(model.clone(), state, 1.0, 2, 32, 5.0 / roots[0].alpha.re);
    c.perturbations.push(Perturbation::Eigenvector { mode: 2, root: 0, amplitude: 1e-7 });
    let tr = run(&c).unwrap();
    let fit = extract_growth_rate_with(&tr, "phi", 2, &FitOptions { linear_limit: 1e-2, ..FitOptions::default() }).unwrap();
    assert!((fit.alpha - roots[0].alpha).norm() / roots[0].alpha.norm() < 1e-2, "{fit:?} vs {}", roots[0].alpha);
}

#[test]
fn growth_rate_is_amplitude_independent_in_linear_regime() {
    let model = pr_local(1.0, 1.0 / 3.0);
    let state = MixtureState::Total { rho: 400.0, rho1: 2.0 };
    let rates: Vec<f64> = [1e-2, 1e-3]
        .iter()
        .map(|&eps| {
            let mut c = config(model.clone(), state, 0.6683, 2, 32, 100.0);
            c.perturbations.push(Perturbation::Eigenvector { mode: 2, root: 0, amplitude: eps });
            extract_growth_rate(&run(&c).unwrap(), "rho", 2).unwrap().alpha.re
        })
        .collect();
    assert!((rates[0] - rates[1]).abs() / rates[1].abs() < 1e-2);
}

fn terminal_error_ratio(integrator: Integrator, dt: f64) -> f64 {
    let state = MixtureState::Total { rho: 400.0, rho1: 200.0 };
    let model = pr_local(1.0, 1.0 / 3.0);
    let terminal = |dt: f64| {
        let mut c = SimulationConfig::new(model.clone(), state, 4.0 * PI, 16, dt, 2.0);
        c.integrator = integrator;
        c.diagnostics_every = 1000;
        c.perturbations.push(Perturbation::Field { field: "rho".into(), mode: 1, amplitude: 5.0 });
        c.perturbations.push(Perturbation::Field { field: "mx".into(), mode: 2, amplitude: 50.0 });
        run(&c).unwrap().final_fields
    };
    let reference = terminal(dt / 16.0);
    let err = |f: &phasemix::models::Fields| {
        f.vars.iter().zip(&reference.vars).flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs())).fold(0.0, f64::max)
    };
    err(&terminal(dt)) / err(&terminal(dt / 2.0))
}

#[test]
fn rk4_converges_at_fourth_order() {
    let ratio = terminal_error_ratio(Integrator::Rk4, 0.1);
    assert!(ratio > 2f64.powf(3.5), "ratio {ratio}");
}

#[test]
fn semi_implicit_converges_at_second_order() {
    let ratio = terminal_error_ratio(Integrator::SemiImplicit, 0.1);
    assert!(ratio > 2f64.powf(1.7), "ratio {ratio}");
}

#[test]
fn explicit_dt_above_limit_is_rejected_and_blows_up_when_forced() {
    let state = MixtureState::Total { rho: 400.0, rho1: 200.0 };
    let mut c = config(pr_local(1.0, 1.0 / 3.0), state, 1.0, 2, 32, 50.0);
    c.dt *= 8.0;
    c.perturbations.push(Perturbation::Field { field: "rho".into(), mode: 2, amplitude: 1.0 });
    assert!(matches!(run(&c), Err(Error::Range(_))));
    c.enforce_dt_limit = false;
    match run(&c) {
        Err(Error::Blowup { step, .. }) => assert!(step > 0),
        other => panic!("expected blowup, got {other:?}"),
    }
}

#[test]
fn out_of_domain_seed_is_rejected_at_init() {
    let state = MixtureState::Total { rho: 400.0, rho1: 2.0 };
    let mut c = config(pr_local(1.0, 1.0 / 3.0), state, 1.0, 2, 32, 1.0);
    c.perturbations.push(Perturbation::Field { field: "rho1".into(), mode: 2, amplitude: 5.0 });
    assert!(matches!(run(&c), Err(Error::Range(_))));
    c.perturbations[0] = Perturbation::Field { field: "nope".into(), mode: 2, amplitude: 0.1 };
    assert!(matches!(run(&c), Err(Error::Range(_))));
}

#[test]
fn fit_requires_enough_samples_and_a_tracked_mode() {
    let state = MixtureState::Total { rho: 400.0, rho1: 200.0 };
    let mut c = config(pr_local(1.0, 1.0 / 3.0), state, 1.0, 2, 32, 1.0);
    c.perturbations.push(Perturbation::Field { field: "rho".into(), mode: 2, amplitude: 1e-3 });
    c.diagnostics_every = 1_000_000;
    let tr = run(&c).unwrap();
    assert!(matches!(extract_growth_rate(&tr, "rho", 2), Err(Error::Fit(_))));
    assert!(matches!(extract_growth_rate(&tr, "rho", 3), Err(Error::Fit(_))));
}

#[test]
fn trace_csv_layout() {
    let state = MixtureState::Total { rho: 400.0, rho1: 200.0 };
    let mut c = config(pr_local(1.0, 1.0 / 3.0), state, 1.0, 1, 16, 1.0);
    c.perturbations.push(Perturbation::Field { field: "rho".into(), mode: 1, amplitude: 1e-3 });
    c.snapshot_every = Some(5);
    let tr = run(&c).unwrap();
    let csv = tr.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,mass,energy,dissipation,re_rho_1,im_rho_1,re_rho1_1,im_rho1_1,re_mx_1,im_mx_1,re_my_1,im_my_1");
    assert_eq!(csv.lines().count(), tr.times.len() + 1);
    assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
    let snap = tr.snapshot_csv(&tr.snapshots[1]);
    assert_eq!(snap.lines().count(), 17);
    assert!(snap.starts_with("x,rho,rho1,mx,my\n"));
}
