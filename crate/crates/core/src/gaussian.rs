//! Gaussian states and their exact propagation.
//!
//! States are described in the dimensionless quadratures
//! `x = (a + a†)/√2`, `y = −i(a − a†)/√2` by a mean vector and a symmetric
//! covariance matrix. Under the reservoir channel the characteristic function
//! evolves as `χ_τ(ξ) = exp(−Δ_Γ|ξ|²) χ₀(e^{−Γ/2} e^{−iω₀τ} ξ)`, which on the
//! moments reads
//!
//! ```text
//! mean(τ) = e^{−Γ/2} R(−ω₀τ) mean(0)
//! cov(τ)  = e^{−Γ} R(−ω₀τ) cov(0) R(−ω₀τ)ᵀ + Δ_Γ I
//! ```

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coeffs::{uniform_grid, CoefficientModel, CoefficientSample, DiffusionAccumulator};
use crate::error::{Error, Result};

/// Slack allowed on the uncertainty bound det(cov) ≥ 1/4.
pub const UNCERTAINTY_SLACK: f64 = 1e-9;

pub fn rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    /// (⟨x⟩, ⟨y⟩).
    pub mean: Vector2<f64>,
    /// [[(Δx)², C_xy], [C_xy, (Δy)²]].
    pub cov: Matrix2<f64>,
}

impl GaussianState {
    /// Builds a state, rejecting asymmetric or unphysical covariances.
    pub fn new(mean: Vector2<f64>, cov: Matrix2<f64>) -> Result<Self> {
        let state = Self { mean, cov };
        if !(mean.iter().all(|v| v.is_finite()) && cov.iter().all(|v| v.is_finite())) {
            return Err(Error::Unphysical("non-finite moments".into()));
        }
        if (cov[(0, 1)] - cov[(1, 0)]).abs() > 1e-12 * cov.norm() {
            return Err(Error::Unphysical(format!("covariance not symmetric: {cov:?}")));
        }
        if !state.is_physical() {
            return Err(Error::Unphysical(format!(
                "covariance violates the uncertainty bound: det = {}",
                state.det()
            )));
        }
        Ok(state)
    }

    pub fn vacuum() -> Self {
        Self::coherent(Complex64::new(0.0, 0.0))
    }

    /// Coherent state |α₀⟩: mean (√2 Re α₀, √2 Im α₀), covariance I/2.
    pub fn coherent(alpha0: Complex64) -> Self {
        Self {
            mean: alpha_to_quadratures(alpha0),
            cov: Matrix2::identity() * 0.5,
        }
    }

    /// Displaced squeezed state. `phi = 0` squeezes x:
    /// cov = diag(e^{−2s}/2, e^{2s}/2); other angles rotate that ellipse by
    /// `phi/2`.
    pub fn squeezed(alpha0: Complex64, s: f64, phi: f64) -> Result<Self> {
        if !(s.is_finite() && s >= 0.0) {
            return Err(Error::Domain(format!("squeeze magnitude must be >= 0, got {s}")));
        }
        Self::with_principal(alpha0, (-2.0 * s).exp() / 2.0, (2.0 * s).exp() / 2.0, phi)
    }

    /// Squeezed state parameterised by σ² = e^{−2s} ∈ (0, 1]. Built from σ²
    /// directly so that (Δx)² = σ²/2 holds exactly at φ = 0.
    pub fn squeezed_sigma2(alpha0: Complex64, sigma2: f64, phi: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2 <= 1.0) {
            return Err(Error::Domain(format!("sigma^2 must lie in (0, 1], got {sigma2}")));
        }
        Self::with_principal(alpha0, sigma2 / 2.0, 0.5 / sigma2, phi)
    }

    fn with_principal(alpha0: Complex64, narrow: f64, wide: f64, phi: f64) -> Result<Self> {
        if !phi.is_finite() {
            return Err(Error::Domain(format!("squeeze angle must be finite, got {phi}")));
        }
        let rot = rotation(phi / 2.0);
        Ok(Self {
            mean: alpha_to_quadratures(alpha0),
            cov: symmetrize(rot * Matrix2::new(narrow, 0.0, 0.0, wide) * rot.transpose()),
        })
    }

    /// Thermal state with mean occupation `n`.
    pub fn thermal(n: f64) -> Result<Self> {
        if !(n.is_finite() && n >= 0.0) {
            return Err(Error::Domain(format!("thermal occupation must be >= 0, got {n}")));
        }
        Ok(Self {
            mean: Vector2::zeros(),
            cov: Matrix2::identity() * (n + 0.5),
        })
    }

    pub fn var_x(&self) -> f64 {
        self.cov[(0, 0)]
    }

    pub fn var_y(&self) -> f64 {
        self.cov[(1, 1)]
    }

    pub fn cov_xy(&self) -> f64 {
        self.cov[(0, 1)]
    }

    pub fn det(&self) -> f64 {
        self.cov.determinant()
    }

    /// Mean displacement α = (⟨x⟩ + i⟨y⟩)/√2.
    pub fn alpha(&self) -> Complex64 {
        Complex64::new(self.mean.x, self.mean.y) / std::f64::consts::SQRT_2
    }

    pub fn variance(&self, axis: Quadrature) -> f64 {
        match axis {
            Quadrature::X => self.var_x(),
            Quadrature::Y => self.var_y(),
        }
    }

    /// det(cov) ≥ 1/4 with positive variances, up to [`UNCERTAINTY_SLACK`].
    pub fn is_physical(&self) -> bool {
        self.var_x() > 0.0 && self.var_y() > 0.0 && self.det() >= 0.25 - UNCERTAINTY_SLACK
    }

    /// Phase-space rotation by `theta` (counter-clockwise).
    pub fn rotated(&self, theta: f64) -> Self {
        Self {
            mean: rotation(theta) * self.mean,
            cov: rotate_cov(&self.cov, theta),
        }
    }

    /// ⟨a†a⟩ = [(Δx)² + (Δy)² + ⟨x⟩² + ⟨y⟩² − 1]/2.
    pub fn mean_quanta(&self) -> f64 {
        (self.var_x() + self.var_y() + self.mean.norm_squared() - 1.0) / 2.0
    }

    /// Applies the channel with given integrated coefficients at time `tau`.
    pub fn evolved(&self, big_gamma: f64, delta_gamma: f64, omega0: f64, tau: f64) -> Self {
        let theta = -omega0 * tau;
        Self {
            mean: rotation(theta) * self.mean * (-0.5 * big_gamma).exp(),
            cov: rotate_cov(&self.cov, theta) * (-big_gamma).exp() + Matrix2::identity() * delta_gamma,
        }
    }
}

/// R(θ) cov R(θ)ᵀ, split into isotropic and traceless parts so that the
/// isotropic part is left exactly untouched.
fn rotate_cov(cov: &Matrix2<f64>, theta: f64) -> Matrix2<f64> {
    if theta == 0.0 {
        return symmetrize(*cov);
    }
    let mean_var = 0.5 * (cov[(0, 0)] + cov[(1, 1)]);
    let half_diff = 0.5 * (cov[(0, 0)] - cov[(1, 1)]);
    let off = 0.5 * (cov[(0, 1)] + cov[(1, 0)]);
    let (s2, c2) = (2.0 * theta).sin_cos();
    let d = half_diff * c2 - off * s2;
    let o = half_diff * s2 + off * c2;
    Matrix2::new(mean_var + d, o, o, mean_var - d)
}

fn symmetrize(m: Matrix2<f64>) -> Matrix2<f64> {
    let off = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    Matrix2::new(m[(0, 0)], off, off, m[(1, 1)])
}

pub fn alpha_to_quadratures(alpha: Complex64) -> Vector2<f64> {
    Vector2::new(alpha.re, alpha.im) * std::f64::consts::SQRT_2
}

/// Exact state at time `tau` (clock starting at 0).
pub fn propagate<M: CoefficientModel + ?Sized>(
    state0: &GaussianState,
    model: &M,
    tau: f64,
    tol: f64,
) -> Result<GaussianState> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::Domain(format!("tau must be finite and >= 0, got {tau}")));
    }
    let delta_gamma = model.delta_big_gamma(tau, tol)?;
    Ok(state0.evolved(model.big_gamma(tau), delta_gamma, model.omega0(), tau))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    X,
    Y,
}

/// Reference frame for reporting moments. The channel rotates phase space at
/// ω₀; the rotating frame undoes that free rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Lab,
    #[default]
    Rotating,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Lab-frame states.
    pub states: Vec<GaussianState>,
    pub n_mean: Vec<f64>,
    pub coeffs: Vec<CoefficientSample>,
    pub omega0: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state_in(&self, i: usize, frame: Frame) -> GaussianState {
        match frame {
            Frame::Lab => self.states[i],
            Frame::Rotating => self.states[i].rotated(self.omega0 * self.times[i]),
        }
    }

    pub fn states_in(&self, frame: Frame) -> Vec<GaussianState> {
        (0..self.len()).map(|i| self.state_in(i, frame)).collect()
    }
}

/// Propagates `state0` over `n_steps` uniform points on [0, tau_max],
/// accumulating Δ_Γ incrementally.
pub fn evolve_trajectory<M: CoefficientModel + ?Sized>(
    state0: &GaussianState,
    model: &M,
    tau_max: f64,
    n_steps: usize,
    tol: f64,
) -> Result<Trajectory> {
    if n_steps < 2 {
        return Err(Error::Domain(format!("need at least 2 time points, got {n_steps}")));
    }
    if !(tau_max.is_finite() && tau_max > 0.0) {
        return Err(Error::Domain(format!("tau_max must be positive, got {tau_max}")));
    }
    let times = uniform_grid(tau_max, n_steps);
    let mut acc = DiffusionAccumulator::new(model, tol);
    let mut states = Vec::with_capacity(n_steps);
    let mut n_mean = Vec::with_capacity(n_steps);
    let mut coeffs = Vec::with_capacity(n_steps);
    for &tau in &times {
        let sample = acc.sample(tau)?;
        let state = state0.evolved(sample.big_gamma, sample.delta_gamma, model.omega0(), tau);
        n_mean.push(state.mean_quanta());
        states.push(state);
        coeffs.push(sample);
    }
    Ok(Trajectory {
        times,
        states,
        n_mean,
        coeffs,
        omega0: model.omega0(),
    })
}

/// Time windows in which the chosen quadrature variance drops below the
/// vacuum value 1/2. Crossings are located by linear interpolation.
pub fn detect_squeezing_intervals(traj: &Trajectory, axis: Quadrature, frame: Frame) -> Vec<(f64, f64)> {
    let variances: Vec<f64> = traj.states_in(frame).iter().map(|s| s.variance(axis)).collect();
    below_threshold_intervals(&traj.times, &variances, 0.5)
}

fn below_threshold_intervals(times: &[f64], values: &[f64], threshold: f64) -> Vec<(f64, f64)> {
    if times.is_empty() {
        return Vec::new();
    }
    let crossing = |i: usize| {
        let (t0, t1) = (times[i], times[i + 1]);
        let (v0, v1) = (values[i], values[i + 1]);
        t0 + (threshold - v0) * (t1 - t0) / (v1 - v0)
    };
    let mut out = Vec::new();
    let mut start = (values[0] < threshold).then_some(times[0]);
    for i in 0..times.len() - 1 {
        let (below0, below1) = (values[i] < threshold, values[i + 1] < threshold);
        match (below0, below1) {
            (false, true) => start = Some(crossing(i)),
            (true, false) => out.push((start.take().expect("open interval"), crossing(i))),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, *times.last().expect("non-empty")));
    }
    out
}

/// Mean spacing of successive downward zero crossings after removing a
/// centred moving average whose window spans one third of the record.
///
/// Only points whose full window fits inside the record are used. Returns
/// `None` with fewer than two crossings.
pub fn oscillation_period(samples: &[(f64, f64)]) -> Option<f64> {
    if samples.len() < 3 {
        return None;
    }
    let t0 = samples[0].0;
    let t1 = samples[samples.len() - 1].0;
    let half = (t1 - t0) / 6.0;

    let mut prefix = Vec::with_capacity(samples.len() + 1);
    prefix.push(0.0);
    for &(_, v) in samples {
        prefix.push(prefix.last().unwrap() + v);
    }

    let mut detrended = Vec::new();
    let (mut lo, mut hi) = (0usize, 0usize);
    for (i, &(t, v)) in samples.iter().enumerate() {
        while samples[lo].0 < t - half {
            lo += 1;
        }
        while hi + 1 < samples.len() && samples[hi + 1].0 <= t + half {
            hi += 1;
        }
        if t - half < t0 || t + half > t1 {
            continue;
        }
        let avg = (prefix[hi + 1] - prefix[lo]) / (hi + 1 - lo) as f64;
        detrended.push((samples[i].0, v - avg));
    }

    let crossings: Vec<f64> = detrended
        .windows(2)
        .filter(|w| w[0].1 >= 0.0 && w[1].1 < 0.0)
        .map(|w| {
            let ((ta, va), (tb, vb)) = (w[0], w[1]);
            ta + va * (tb - ta) / (va - vb)
        })
        .collect();
    if crossings.len() < 2 {
        return None;
    }
    Some((crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64)
}
