//! Number-basis master-equation evolution against the exact Gaussian
//! solution.

mod common;

use common::*;
use num_complex::Complex64;
use qbm_core::coeffs::CoefficientModel;
use qbm_core::fock::{evolve_factorised, fock_to_wigner, integrate_me, FockState, IntegrationOptions};
use qbm_core::gaussian::{propagate, GaussianState};
use qbm_core::wigner::{wigner_gaussian, GridSpec};

#[test]
fn occupation_three_matches_gaussian() {
    let p = reference();
    let series = fock_series(
        &FockState::coherent(Complex64::new(3f64.sqrt(), 0.0), 60).unwrap(),
        &p,
        1.0,
        100,
    );
    let gap = gap_to_gaussian(&series, &occupation_three(), &p);
    assert!(gap.worst() < 1e-3, "{gap:?}");
}

#[test]
fn squeezed_vacuum_matches_gaussian() {
    let p = reference();
    let series = fock_series(
        &FockState::squeezed_vacuum(squeeze_parameter(), 0.0, 80).unwrap(),
        &p,
        1.0,
        100,
    );
    // Truncating at 80 levels leaves a few 1e-7 of the initial variance out.
    assert!((series.var_x[0] - 0.05).abs() < 1e-6);
    let gap = gap_to_gaussian(&series, &squeezed_reference(), &p);
    assert!(gap.worst() < 1e-3, "{gap:?}");
}

#[test]
fn doubling_truncation_changes_nothing() {
    let p = reference();
    let alpha = Complex64::new(3f64.sqrt(), 0.0);
    let small = fock_series(&FockState::coherent(alpha, 60).unwrap(), &p, 1.0, 100);
    let large = fock_series(&FockState::coherent(alpha, 120).unwrap(), &p, 1.0, 100);
    assert!(truncation_gap(&small, &large) < 1e-6);

    // The squeezed start needs 100 levels before its own truncation error
    // drops below 1e-6.
    let s = squeeze_parameter();
    let small = fock_series(&FockState::squeezed_vacuum(s, 0.0, 100).unwrap(), &p, 1.0, 100);
    let large = fock_series(&FockState::squeezed_vacuum(s, 0.0, 200).unwrap(), &p, 1.0, 100);
    assert!(truncation_gap(&small, &large) < 1e-6);
}

#[test]
fn unit_coherent_state_full_moments_at_unit_time() {
    let p = reference();
    let fock = fock_series(
        &FockState::coherent(Complex64::new(1.0, 0.0), 40).unwrap(),
        &p,
        1.0,
        20_000,
    );
    let exact = propagate(&GaussianState::coherent(Complex64::new(1.0, 0.0)), &p, 1.0, TOL)
        .unwrap()
        .rotated(p.omega0());
    let m = fock.final_state.moments();
    assert!((m.mean - exact.mean).norm() < 1e-4, "{} vs {}", m.mean, exact.mean);
    assert!((m.cov - exact.cov).norm() < 1e-4, "{} vs {}", m.cov, exact.cov);
    assert!((fock.final_state.mean_quanta() - exact.mean_quanta()).abs() < 1e-4);
}

#[test]
fn integrator_obeys_occupation_rate_equation() {
    // Direct stepping is well posed before the first negative-rate window.
    let p = reference();
    let opts = IntegrationOptions {
        dt: 1e-5,
        record_every: 1,
        check_every: 5000,
    };
    let traj = integrate_me(
        &FockState::coherent(Complex64::new(1.0, 0.5), 40).unwrap(),
        &p,
        0.1,
        &opts,
    )
    .unwrap();
    let n: Vec<f64> = traj.states.iter().map(|s| s.mean_quanta()).collect();
    let h = traj.times[1] - traj.times[0];
    for i in (1..n.len() - 1).step_by(997) {
        let tau = traj.times[i];
        let fd = (n[i + 1] - n[i - 1]) / (2.0 * h);
        let exact = -2.0 * p.gamma(tau) * n[i] + (p.delta(tau) - p.gamma(tau));
        assert!((fd - exact).abs() < 1e-6, "τ={tau}: {fd} vs {exact}");
    }
}

#[test]
fn evolved_number_basis_wigner_matches_closed_form() {
    let p = reference();
    let tau = 0.3;
    let opts = IntegrationOptions {
        record_every: usize::MAX,
        ..IntegrationOptions::for_ratio(p.r)
    };
    let traj = evolve_factorised(
        &FockState::squeezed_vacuum(squeeze_parameter(), 0.0, 80).unwrap(),
        &p,
        tau,
        &opts,
    )
    .unwrap();
    let fock = traj.states.last().unwrap();

    let exact = propagate(&squeezed_reference(), &p, tau, TOL)
        .unwrap()
        .rotated(p.omega0() * tau);
    let spec = GridSpec::covering(&exact, 5.0, 61, 61).unwrap();
    let from_fock = fock_to_wigner(fock, &spec).unwrap();
    let closed = wigner_gaussian(&exact, &spec).unwrap();
    assert!(max_abs_diff(&from_fock.values, &closed.values) < 1e-3);
}
