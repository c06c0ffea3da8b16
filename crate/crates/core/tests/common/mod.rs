#![allow(dead_code)]

use num_complex::Complex64;
use qbm_core::coeffs::{CoefficientModel, PhysicalParams};
use qbm_core::fock::{evolve_factorised, FockState, IntegrationOptions};
use qbm_core::gaussian::{evolve_trajectory, propagate, Frame, GaussianState};
use qbm_core::wigner::{wigner_by_convolution, wigner_gaussian, GridSpec, WignerGrid};

pub const TOL: f64 = 1e-10;
pub const SNAPSHOTS: [f64; 3] = [0.15, 0.3, 0.45];
pub const SIGMA2: f64 = 0.1;

pub fn reference() -> PhysicalParams {
    PhysicalParams::from_wc_over_2pikt(0.1, 0.05, 3e-5).unwrap()
}

/// Coherent state with ⟨n⟩ = 3.
pub fn occupation_three() -> GaussianState {
    GaussianState::coherent(Complex64::new(3f64.sqrt(), 0.0))
}

pub fn squeezed_reference() -> GaussianState {
    GaussianState::squeezed_sigma2(Complex64::new(0.0, 0.0), SIGMA2, 0.0).unwrap()
}

/// s from σ² = e^{−2s}.
pub fn squeeze_parameter() -> f64 {
    -0.5 * SIGMA2.ln()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Moment series recorded by the number-basis integrator.
#[derive(Debug, Clone)]
pub struct FockSeries {
    pub times: Vec<f64>,
    pub n_mean: Vec<f64>,
    pub var_x: Vec<f64>,
    pub var_y: Vec<f64>,
    pub final_state: FockState,
}

/// Number-basis evolution on [0, tau_max] at the recommended step, recording every
/// `record_every` steps.
pub fn fock_series(state0: &FockState, p: &PhysicalParams, tau_max: f64, record_every: usize) -> FockSeries {
    let opts = IntegrationOptions {
        record_every,
        ..IntegrationOptions::for_ratio(p.r)
    };
    let traj = evolve_factorised(state0, p, tau_max, &opts).unwrap();
    let moments: Vec<GaussianState> = traj.states.iter().map(|s| s.moments()).collect();
    FockSeries {
        times: traj.times.clone(),
        n_mean: traj.states.iter().map(|s| s.mean_quanta()).collect(),
        var_x: moments.iter().map(|m| m.var_x()).collect(),
        var_y: moments.iter().map(|m| m.var_y()).collect(),
        final_state: traj.states.last().unwrap().clone(),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OracleGap {
    pub n_mean: f64,
    pub var_x: f64,
    pub var_y: f64,
}

impl OracleGap {
    pub fn worst(&self) -> f64 {
        self.n_mean.max(self.var_x).max(self.var_y)
    }
}

/// Largest deviation of the number-basis series from the exact Gaussian
/// solution, compared in the rotating frame at the recorded times.
pub fn gap_to_gaussian(series: &FockSeries, gauss0: &GaussianState, p: &PhysicalParams) -> OracleGap {
    let tau_max = *series.times.last().unwrap();
    let traj = evolve_trajectory(gauss0, p, tau_max, series.times.len(), TOL).unwrap();
    for (a, b) in traj.times.iter().zip(&series.times) {
        assert!((a - b).abs() < 1e-12, "time grids differ: {a} vs {b}");
    }
    let states = traj.states_in(Frame::Rotating);
    let vx: Vec<f64> = states.iter().map(|s| s.var_x()).collect();
    let vy: Vec<f64> = states.iter().map(|s| s.var_y()).collect();
    OracleGap {
        n_mean: max_abs_diff(&series.n_mean, &traj.n_mean),
        var_x: max_abs_diff(&series.var_x, &vx),
        var_y: max_abs_diff(&series.var_y, &vy),
    }
}

pub fn truncation_gap(a: &FockSeries, b: &FockSeries) -> f64 {
    max_abs_diff(&a.n_mean, &b.n_mean)
        .max(max_abs_diff(&a.var_x, &b.var_x))
        .max(max_abs_diff(&a.var_y, &b.var_y))
}

/// Pointwise gap between the brute-force convolution and the exact evolved
/// Gaussian on a ±5 grid.
pub fn convolution_gap<M: CoefficientModel>(state0: &GaussianState, model: &M, tau: f64) -> f64 {
    let spec = GridSpec::square(5.0, 101).unwrap();
    let inner = GridSpec::covering(state0, 9.0, 30, 300).unwrap();
    let conv = wigner_by_convolution(state0, model, tau, &spec, &inner, TOL).unwrap();
    let exact = wigner_gaussian(&propagate(state0, model, tau, TOL).unwrap(), &spec).unwrap();
    max_abs_diff(&conv.values, &exact.values)
}

/// Evolved Gaussian Wigner grid covering 8σ of the state.
pub fn evolved_grid<M: CoefficientModel>(state0: &GaussianState, model: &M, tau: f64) -> (GaussianState, WignerGrid) {
    let state = propagate(state0, model, tau, TOL).unwrap();
    let spec = GridSpec::covering(&state, 8.0, 401, 401).unwrap();
    (state, wigner_gaussian(&state, &spec).unwrap())
}
