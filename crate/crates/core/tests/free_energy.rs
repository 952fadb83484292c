use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use phasemix::free_energy::*;
use phasemix::grid::{Grid, Scheme};
use phasemix::Error;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

fn pr() -> BulkFreeEnergy {
    BulkFreeEnergy::peng_robinson(PengRobinsonParams::co2_decane()).unwrap()
}

fn fh(chi: f64) -> BulkFreeEnergy {
    BulkFreeEnergy::flory_huggins(FloryHuggins::binary(1.0, 1.0, 1.0, chi).unwrap())
}

fn quad(c: [f64; 3], l: [f64; 2]) -> BulkFreeEnergy {
    let q = Quadratic::new(DMatrix::from_row_slice(2, 2, &[c[0], c[1], c[1], c[2]]), DVector::from_column_slice(&l));
    BulkFreeEnergy::quadratic(q.unwrap())
}

/// Peng-Robinson density written out per mole of mixture, with mixture a and b
/// from quadratic and linear mixing of the pure-component constants.
fn pr_oracle(rho1: f64, rho2: f64) -> f64 {
    let r = 8.314462618;
    let t = 550.0;
    // (Tc, Pc, acentric, molar mass)
    let sp = [(304.13, 7.3773e6, 0.22394, 0.04401), (617.7, 2.103e6, 0.4884, 0.14228)];
    let mut ai = [0.0; 2];
    let mut bi = [0.0; 2];
    for (i, &(tc, pc, w, _)) in sp.iter().enumerate() {
        let m = 0.37464 + 1.54226 * w - 0.26992 * w * w;
        let alpha = (1.0 + m * (1.0 - (t / tc as f64).sqrt())).powi(2);
        ai[i] = 0.45724 * r * r * tc * tc / pc * alpha;
        bi[i] = 0.07780 * r * tc / pc;
    }
    let n1 = 0.2164 * rho1 / sp[0].3;
    let n2 = 0.2164 * rho2 / sp[1].3;
    let n = n1 + n2;
    let (x1, x2) = (n1 / n, n2 / n);
    let a = x1 * x1 * ai[0] + 2.0 * x1 * x2 * (ai[0] * ai[1]).sqrt() + x2 * x2 * ai[1];
    let b = x1 * bi[0] + x2 * bi[1];
    let phi_t = -r * t;
    let h = n * phi_t - n * r * t * (1.0 / n - b).ln()
        - n * a / (2.0 * SQRT_2 * b) * ((1.0 + n * b * (1.0 + SQRT_2)) / (1.0 + n * b * (1.0 - SQRT_2))).ln()
        + n * r * t * (x1 * x1.ln() + x2 * x2.ln());
    h / 1e3
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn bulk_energy_examples() {
    assert_eq!(bulk_energy(&quad([1.0, 0.0, 1.0], [0.0, 0.0]), &[1.0, 2.0]).unwrap(), 2.5);
    assert!((bulk_energy(&fh(0.0), &[1.0, 1.0]).unwrap() + 1.386294361119890).abs() < 1e-14);
    for (r1, r2) in [(200.0, 200.0), (2.0, 398.0), (450.0, 20.0)] {
        let h = bulk_energy(&pr(), &[r1, r2]).unwrap();
        assert!(rel(h, pr_oracle(r1, r2)) < 1e-11, "({r1}, {r2}): {h} vs {}", pr_oracle(r1, r2));
    }
}

#[test]
fn flory_huggins_matches_formula() {
    let fe = BulkFreeEnergy::flory_huggins(FloryHuggins::binary(2.0, 3.0, 0.5, 1.7).unwrap());
    let (r1, r2): (f64, f64) = (0.3, 0.9);
    let rho = r1 + r2;
    let exact = 2.0 * (r1 / 3.0 * (r1 / rho).ln() + r2 / 0.5 * (r2 / rho).ln() + 1.7 * r1 * r2 / rho);
    assert!(rel(fe.energy(&[r1, r2]).unwrap(), exact) < 1e-14);
}

#[test]
fn evaluation_outside_domain_is_an_error() {
    assert!(matches!(pr().energy(&[-1.0, 200.0]), Err(Error::Domain(_))));
    assert!(matches!(pr().gradient(&[100.0, 0.0]), Err(Error::Domain(_))));
    // packing fraction n b >= 1
    assert!(matches!(pr().energy(&[1.0, 1e5]), Err(Error::Domain(_))));
    assert!(matches!(fh(1.0).hessian(&[0.0, 1.0]), Err(Error::Domain(_))));
    assert!(matches!(fh(1.0).energy(&[f64::NAN, 1.0]), Err(Error::Domain(_))));
    assert!(matches!(fh(1.0).energy(&[1.0]), Err(Error::Shape(_))));
}

#[test]
fn bulk_gradient_examples() {
    assert_eq!(bulk_gradient(&quad([1.0, 0.0, 1.0], [0.0, 0.0]), &[3.0, 4.0]).unwrap().as_slice(), &[3.0, 4.0]);
    let g = bulk_gradient(&fh(0.0), &[1.0, 1.0]).unwrap();
    assert!(fd::rel_error(g.as_slice(), fd::energy_gradient(&fh(0.0), &[1.0, 1.0]).unwrap().as_slice()) < 1e-6);
    let g = bulk_gradient(&pr(), &[400.0, 200.0]).unwrap();
    let o = fd::gradient(|y| Ok(pr_oracle(y[0], y[1])), &[400.0, 200.0]).unwrap();
    assert!(fd::rel_error(g.as_slice(), o.as_slice()) < 1e-6);
}

#[test]
fn bulk_hessian_examples() {
    let r = bulk_hessian(&quad([1.0, 0.0, 1.0], [0.0, 0.0]), &[0.3, 0.4]).unwrap();
    assert_eq!((r.definiteness, r.det), (Definiteness::PositiveDefinite, 1.0));
    let total = pr().with_coordinates(Coordinates::Total).unwrap();
    let r = total.hessian_report(&[200.0, 400.0]).unwrap();
    assert_eq!(r.definiteness, Definiteness::PositiveDefinite);
    let r = total.hessian_report(&[2.0, 400.0]).unwrap();
    assert_eq!(r.definiteness, Definiteness::Indefinite);
    assert!(r.det < 0.0);
    assert!((r.quadratic_form_p - (r.c.clone() * DVector::from_vec(vec![2.0, 400.0])).dot(&DVector::from_vec(vec![2.0, 400.0]))).abs() < 1e-12 * r.quadratic_form_p.abs());
}

fn random_pr_state(rng: &mut StdRng) -> [f64; 2] {
    loop {
        let x = [rng.random_range(0.5..500.0), rng.random_range(0.5..500.0)];
        if pr().energy(&x).is_ok() {
            return x;
        }
    }
}

fn check_derivatives(fe: &BulkFreeEnergy, states: &[Vec<f64>]) -> (f64, f64) {
    let mut worst = (0.0f64, 0.0f64);
    for y in states {
        let g = fe.gradient(y).unwrap();
        let h = fe.hessian(y).unwrap();
        worst.0 = worst.0.max(fd::rel_error(g.as_slice(), fd::energy_gradient(fe, y).unwrap().as_slice()));
        worst.1 = worst.1.max(fd::rel_error(h.as_slice(), fd::energy_hessian(fe, y).unwrap().as_slice()));
    }
    worst
}

#[test]
fn derivatives_match_finite_differences_on_random_states() {
    let mut rng = StdRng::seed_from_u64(11);
    let pr_states: Vec<Vec<f64>> = (0..100).map(|_| random_pr_state(&mut rng).to_vec()).collect();
    let pos = |rng: &mut StdRng, n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(0.01..5.0)).collect() };
    let fh_states: Vec<Vec<f64>> = (0..100).map(|_| pos(&mut rng, 2)).collect();
    let fh3_states: Vec<Vec<f64>> = (0..100).map(|_| pos(&mut rng, 3)).collect();
    let q_states: Vec<Vec<f64>> = (0..100).map(|_| (0..2).map(|_| rng.random_range(-10.0..10.0)).collect()).collect();

    let fh_asym = BulkFreeEnergy::flory_huggins(FloryHuggins::binary(0.7, 1.0, 20.0, 0.9).unwrap());
    let chi = DMatrix::from_row_slice(3, 3, &[0.0, 1.2, -0.4, 1.2, 0.0, 2.5, -0.4, 2.5, 0.0]);
    let fh3 = BulkFreeEnergy::flory_huggins(FloryHuggins::new(1.0, vec![1.0, 2.0, 5.0], chi).unwrap());
    let q = quad([2.0, -0.7, 0.5], [0.3, -1.0]);
    for (name, fe, states) in [
        ("pr", pr(), &pr_states),
        ("fh", fh_asym, &fh_states),
        ("fh3", fh3, &fh3_states),
        ("quadratic", q, &q_states),
    ] {
        let (g, h) = check_derivatives(&fe, states);
        assert!(g < 1e-5 && h < 1e-5, "{name}: gradient {g}, Hessian {h}");
    }
    // same states viewed in (rho1, rho)
    let total = pr().with_coordinates(Coordinates::Total).unwrap();
    let total_states: Vec<Vec<f64>> = pr_states.iter().map(|x| vec![x[0], x[0] + x[1]]).collect();
    let (g, h) = check_derivatives(&total, &total_states);
    assert!(g < 1e-5 && h < 1e-5, "pr total: {g} {h}");
}

#[test]
fn pr_small_packing_series_branch_is_smooth() {
    // tiny densities put n b below the switch between series and closed form
    let fe = pr();
    for x in [[1e-3, 1e-3], [0.05, 0.02], [3.0, 1.0]] {
        let g = fe.gradient(&x).unwrap();
        let o = fd::gradient(|y| Ok(pr_oracle(y[0], y[1])), &x).unwrap();
        assert!(fd::rel_error(g.as_slice(), o.as_slice()) < 1e-6, "{x:?}");
        assert!(rel(fe.energy(&x).unwrap(), pr_oracle(x[0], x[1])) < 1e-10);
    }
}

fn smooth_field(grid: &Grid, c: f64, amp: f64, phase: f64) -> Vec<f64> {
    let l = grid.length();
    grid.x()
        .iter()
        .map(|x| c + amp * ((2.0 * PI * x / l + phase).sin() + 0.5 * (4.0 * PI * x / l).cos() + 0.2 * (6.0 * PI * x / l + 1.0).sin()))
        .collect()
}

#[test]
fn chemical_potentials_examples() {
    let grid = Grid::new(32, 2.0 * PI, Scheme::Spectral).unwrap();
    let kappa = GradientCoefficients::binary(0.3, 0.1, 0.2).unwrap();
    let fe = fh(1.5);
    let fields = vec![vec![0.4; 32], vec![0.7; 32]];
    let mu = chemical_potentials(&fe, &kappa, &fields, &grid).unwrap();
    let g = fe.gradient(&[0.4, 0.7]).unwrap();
    for p in 0..32 {
        assert_eq!(mu.mu[0][p], g[0]);
        assert_eq!(mu.mu[1][p], g[1]);
    }
    assert_eq!(mu.laplacian, Scheme::Spectral);

    // single Fourier mode with a quadratic energy
    let q = quad([1.0, 0.0, 1.0], [0.0, 0.0]);
    let (eps, k) = (1e-3, 3.0);
    let x = grid.x();
    let rho1: Vec<f64> = x.iter().map(|x| 0.5 + eps * (k * x).cos()).collect();
    let mu = chemical_potentials(&q, &kappa, &[rho1.clone(), vec![1.0; 32]], &grid).unwrap();
    for p in 0..32 {
        let exact = eps * 0.3 * k * k * (k * x[p]).cos();
        assert!((mu.mu[0][p] - rho1[p] - exact).abs() <= 1e-8 * eps * 0.3 * k * k);
    }

    let bad = vec![vec![0.4; 32], vec![0.7; 32].into_iter().enumerate().map(|(i, v)| if i == 5 { -1.0 } else { v }).collect()];
    match chemical_potentials(&fe, &kappa, &bad, &grid) {
        Err(Error::Domain(m)) => assert!(m.contains("grid index 5"), "{m}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn central_difference_laplacian_converges_at_second_order() {
    let kappa = GradientCoefficients::binary(0.3, 0.1, 0.2).unwrap();
    let fe = fh(2.0);
    let mut errors = Vec::new();
    for n in [32, 64, 128] {
        let sp = Grid::new(n, 10.0, Scheme::Spectral).unwrap();
        let cd = Grid::new(n, 10.0, Scheme::CentralDifference).unwrap();
        let f = vec![smooth_field(&sp, 0.5, 0.1, 0.3), smooth_field(&sp, 0.8, 0.05, 1.1)];
        let a = chemical_potentials(&fe, &kappa, &f, &sp).unwrap();
        let b = chemical_potentials(&fe, &kappa, &f, &cd).unwrap();
        assert_eq!(b.laplacian, Scheme::CentralDifference);
        let err = a.mu[0].iter().zip(&b.mu[0]).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        errors.push(err);
    }
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 2.0).abs() < 0.1, "{errors:?}");
    }
}

#[test]
fn change_of_variables_examples() {
    let (a, b) = (0.7, 0.2);
    let k = GradientCoefficients::binary(a, 0.0, b).unwrap();
    let (kt, fet) = change_variables_to_rho_rho1(&k, &fh(1.0)).unwrap();
    let m = kt.matrix();
    assert_eq!((m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]), (a + b, -b, -b, b));
    assert_eq!(fet.energy(&[0.3, 1.0]).unwrap(), fh(1.0).energy(&[0.3, 0.7]).unwrap());
    let zero = GradientCoefficients::binary(0.0, 0.0, 0.0).unwrap();
    let (kt, _) = change_variables_to_rho_rho1(&zero, &fh(1.0)).unwrap();
    assert_eq!(kt.matrix(), DMatrix::zeros(2, 2));
}

#[test]
fn kappa_transform_matches_printed_formula() {
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..100 {
        let (k11, k22) = (rng.random_range(0.1..2.0), rng.random_range(0.1..2.0));
        let k12 = rng.random_range(-0.9..0.9) * (k11 * k22 as f64).sqrt();
        let kt = GradientCoefficients::binary(k11, k12, k22).unwrap().with_coordinates(Coordinates::Total).unwrap();
        let m = kt.matrix();
        assert!((m[(0, 0)] - (k11 + k22 - 2.0 * k12)).abs() < 1e-14);
        assert!((m[(0, 1)] - (k12 - k22)).abs() < 1e-14);
        assert!((m[(1, 1)] - k22).abs() < 1e-14);
    }
}

fn j() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 1.0])
}

#[test]
fn hessian_congruence_under_change_of_variables() {
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..50 {
        let c = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let fe = quad(c, [0.1, 0.2]);
        let y = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let ht = fe.with_coordinates(Coordinates::Total).unwrap().hessian(&y).unwrap();
        let expected = j().transpose() * fe.hessian(&[y[0], y[1] - y[0]]).unwrap() * j();
        assert!((ht - &expected).norm() <= 1e-10 * expected.norm());
    }
    // nonlinear energies, against finite differences
    let mut rng = StdRng::seed_from_u64(8);
    for (fe, states) in [
        (pr(), (0..20).map(|_| random_pr_state(&mut rng)).collect::<Vec<_>>()),
        (fh(2.3), (0..20).map(|_| [rng.random_range(0.05..2.0), rng.random_range(0.05..2.0)]).collect()),
    ] {
        for x in states {
            let y = [x[0], x[0] + x[1]];
            // chain rule: grad h~(rho1, rho) = J^T grad h(rho1, rho - rho1)
            let g = |z: &[f64]| Ok(j().transpose() * fe.gradient(&[z[0], z[1] - z[0]])?);
            let numeric = fd::symmetric_jacobian(g, &y).unwrap();
            let expected = j().transpose() * fe.hessian(&x).unwrap() * j();
            assert!((&numeric - &expected).norm() <= 1e-6 * expected.norm(), "{x:?}");
            let ht = fe.with_coordinates(Coordinates::Total).unwrap().hessian(&y).unwrap();
            assert!((ht - &expected).norm() <= 1e-12 * expected.norm());
        }
    }
}

#[test]
fn quasi_incompressible_reduction_examples() {
    let fe = quad([1.0, 0.0, 1.0], [0.0, 0.0]).with_coordinates(Coordinates::Total).unwrap();
    let kt = GradientCoefficients::from_total(1.0, 0.0, 0.0).unwrap();
    let (k, _) = reduce_quasi_incompressible(&kt, &fe, 2.0, 1.0).unwrap();
    assert!((k - 4.0).abs() < 1e-14);
    let kt = GradientCoefficients::from_total(0.7, 0.2, 0.4).unwrap();
    let (k, _) = reduce_quasi_incompressible(&kt, &fe, 1.5, 1.5).unwrap();
    assert!((k - 0.7 * 2.25).abs() < 1e-14);
    // printed three-term formula
    let (r1, r2) = (1.3, 0.8);
    let (k, _) = reduce_quasi_incompressible(&kt, &fe, r1, r2).unwrap();
    let printed = 0.7 * r1 * r1 + 2.0 * 0.2 * r1 * (r1 - r2) + 0.4 * (r1 - r2) * (r1 - r2);
    assert!((k - printed).abs() < 1e-14);
    assert!(reduce_quasi_incompressible(&kt, &fe, 0.0, 1.0).is_err());
}

#[test]
fn reduced_energy_second_derivative_matches_differences() {
    let fe = quad([2.0, -0.5, 1.5], [0.3, 0.1]);
    let kt = GradientCoefficients::from_total(0.1, 0.0, 0.1).unwrap();
    let (_, fhat) = reduce_quasi_incompressible(&kt, &fe.with_coordinates(Coordinates::Total).unwrap(), 1.4, 0.9).unwrap();
    for phi in [0.1, 0.37, 0.8] {
        let h = 1e-3;
        let e = |p: f64| fhat.energy(&[p]).unwrap();
        let fd2 = (e(phi + h) - 2.0 * e(phi) + e(phi - h)) / (h * h);
        let analytic = fhat.hessian(&[phi]).unwrap()[(0, 0)];
        assert!((analytic - fd2).abs() <= 1e-8 * analytic.abs(), "{analytic} vs {fd2}");
        // h^(phi) = h~(rho_hat_1 phi, (rho_hat_1 - rho_hat_2) phi + rho_hat_2)
        let direct = fe.energy(&[1.4 * phi, 0.9 * (1.0 - phi)]).unwrap();
        assert!((e(phi) - direct).abs() < 1e-14);
    }
}

#[test]
fn viscosity_rules() {
    let mass = ViscosityRule::interpolated(RuleKind::MassFraction, (2.5, 2.5), (1.0, 1.0)).unwrap();
    assert_eq!(average_viscosity(&mass, 0.37).unwrap(), (2.5, 1.0));
    let vol = ViscosityRule::interpolated(RuleKind::VolumeFraction, (4.0, 0.0), (0.0, 2.0)).unwrap();
    assert_eq!(average_viscosity(&vol, 0.25).unwrap(), (1.0, 1.5));
    let kd = ViscosityRule::krieger_dougherty(1.0, 2.0, (0.0, 0.0)).unwrap();
    assert_eq!(average_viscosity(&kd, 0.5).unwrap().0, 4.0);
    assert!(matches!(average_viscosity(&kd, 1.0), Err(Error::Range(_))));
    assert!(matches!(average_viscosity(&mass, 1.2), Err(Error::Range(_))));
    assert!(matches!(average_viscosity(&mass, -0.1), Err(Error::Range(_))));
    assert!(ViscosityRule::interpolated(RuleKind::MassFraction, (-1.0, 1.0), (0.0, 0.0)).is_err());
}

#[test]
fn pr_concavity_map_has_both_regions() {
    let axis: Vec<f64> = (1..=100).map(|i| 5.0 * i as f64).collect();
    let map = pr_concavity_map(&pr(), &axis, &axis).unwrap();
    assert_eq!(map.cells.len(), 100 * 100);
    assert!(map.count(CellClass::PositiveDefinite) > 0);
    assert!(map.count(CellClass::Indefinite) > 0);
    for c in &map.cells {
        if c.rho1 >= c.rho {
            assert_eq!(c.class, CellClass::Excluded);
            assert!(c.det.is_none());
        }
        if c.class == CellClass::Indefinite {
            assert!(c.det.unwrap() < 0.0, "{c:?}");
        }
    }
    // rho1 varies fastest
    assert_eq!((map.cells[1].rho1, map.cells[1].rho), (10.0, 5.0));
}

#[test]
fn gradient_coefficients_reject_bad_matrices() {
    assert!(matches!(GradientCoefficients::binary(1.0, 2.0, 1.0), Err(Error::Range(_))));
    assert!(matches!(GradientCoefficients::from_total(-1.0, 0.0, 1.0), Err(Error::Range(_))));
    assert!(matches!(
        GradientCoefficients::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.2, 1.0])),
        Err(Error::Shape(_))
    ));
    assert!(GradientCoefficients::binary(1.0, 1.0, 1.0).is_ok());
}

#[test]
fn bundled_species_lookup() {
    assert_eq!(species("co2").unwrap().name, "CO2");
    assert!(matches!(species("argon"), Err(Error::Range(_))));
    assert!(species_table_version() >= 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn kappa_round_trip_is_exact(k11 in 0.0..3.0f64, k22 in 0.0..3.0f64, t in -1.0..1.0f64) {
        let k12 = t * (k11 * k22).sqrt();
        let k = GradientCoefficients::binary(k11, k12, k22).unwrap();
        let back = k.with_coordinates(Coordinates::Total).unwrap().with_coordinates(Coordinates::Partial).unwrap();
        prop_assert_eq!(back.matrix(), k.matrix());
    }

    #[test]
    fn total_coefficients_round_trip(a in 0.0..3.0f64, d in 0.0..3.0f64, t in -1.0..1.0f64) {
        let c = t * (a * d).sqrt();
        let m = GradientCoefficients::from_total(a, c, d).unwrap().matrix();
        let scale = a.max(d).max(1e-300);
        prop_assert!((m[(0, 0)] - a).abs() <= 1e-14 * scale);
        prop_assert!((m[(0, 1)] - c).abs() <= 1e-14 * scale);
        prop_assert!((m[(1, 1)] - d).abs() <= 1e-14 * scale);
    }

    #[test]
    fn non_psd_kappa_is_rejected(l1 in 0.01..2.0f64, l2 in -2.0..-0.01f64, th in 0.0..PI) {
        let (c, s) = (th.cos(), th.sin());
        let r = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let k = &r * DMatrix::from_diagonal(&DVector::from_vec(vec![l1, l2])) * r.transpose();
        let k = (&k + k.transpose()) * 0.5;
        prop_assert!(GradientCoefficients::new(k).is_err());
    }

    #[test]
    fn definiteness_agrees_with_eigenvalues(c0 in -3.0..3.0f64, c1 in -3.0..3.0f64, c2 in -3.0..3.0f64) {
        let c = DMatrix::from_row_slice(2, 2, &[c0, c1, c1, c2]);
        let r = HessianReport::new(c.clone(), &DVector::from_vec(vec![1.0, 1.0]));
        let eig = SymmetricEigen::new(c.clone()).eigenvalues;
        let tol = 1e-10 * c.norm();
        let expected = if eig.iter().any(|l| l.abs() <= tol) {
            Definiteness::Singular
        } else if eig.iter().all(|l| *l > 0.0) {
            Definiteness::PositiveDefinite
        } else if eig.iter().all(|l| *l < 0.0) {
            Definiteness::NegativeDefinite
        } else {
            Definiteness::Indefinite
        };
        prop_assert_eq!(r.definiteness, expected);
        prop_assert!((r.det - (c0 * c2 - c1 * c1)).abs() <= 1e-12 * c.norm().powi(2).max(1e-300));
        prop_assert!((r.quadratic_form_p - (c0 + 2.0 * c1 + c2)).abs() <= 1e-12 * c.norm().max(1e-300));
    }

    #[test]
    fn pr_hessian_is_symmetric(r1 in 0.5..480.0f64, r2 in 0.5..480.0f64) {
        let h = pr().hessian(&[r1, r2]).unwrap();
        prop_assert_eq!(h[(0, 1)], h[(1, 0)]);
    }

    #[test]
    fn flory_huggins_is_homogeneous_of_degree_one(r1 in 0.01..5.0f64, r2 in 0.01..5.0f64, s in 0.1..10.0f64) {
        let fe = fh(2.0);
        let a = fe.energy(&[s * r1, s * r2]).unwrap();
        let b = s * fe.energy(&[r1, r2]).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-12));
    }
}
