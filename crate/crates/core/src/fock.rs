//! Brute-force master-equation integrator in a truncated number basis.
//!
//! Integrates
//!
//! ```text
//! dρ/dτ = (Δ+γ)/2 (2aρa† − a†aρ − ρa†a) + (Δ−γ)/2 (2a†ρa − aa†ρ − ρaa†)
//! ```
//!
//! There is no Hamiltonian term, so everything here is in the frame
//! co-rotating with the oscillator. Intended as an independent check on the
//! Gaussian solution, not for production use.
//!
//! Two integrators are provided. [`integrate_me`] steps ρ directly with RK4.
//! It is only usable while Δ ± γ stay non-negative: when they dip below zero
//! the generator is anti-diffusive, high number states grow roughly like
//! e^{4m|∫Δ|}, and truncation or rounding noise swamps the state.
//!
//! [`evolve_factorised`] avoids that. With K₋ρ = aρa†, K₊ρ = a†ρa and
//! K₀ρ = (a†aρ + ρa†a + ρ)/2, which close under commutation like su(1,1),
//! the generator is `(Δ+γ)K₋ + (Δ−γ)K₊ − 2ΔK₀ + γ` and the propagator
//! factorises as `e^{Φ} e^{c₊K₊} e^{c₀K₀} e^{c₋K₋}`. Only the four scalar
//! coordinates are integrated in time (RK4 again); the map itself is applied
//! once, in the number basis, at each output time.

use log::{debug, warn};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::{PI, SQRT_2};

use crate::coeffs::CoefficientModel;
use crate::error::{Error, Result};
use crate::gaussian::GaussianState;
use crate::wigner::{GridSpec, WignerGrid};

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-9;
const NEGATIVITY_TOL: f64 = 1e-7;
/// Per-step trace drift that aborts the integration.
const TRACE_ABORT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    pub rho: DMatrix<Complex64>,
}

impl FockState {
    /// Validates hermiticity, unit trace and positivity.
    pub fn new(rho: DMatrix<Complex64>) -> Result<Self> {
        if !rho.is_square() || rho.nrows() == 0 {
            return Err(Error::Domain(format!(
                "density matrix must be square and non-empty, got {}x{}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        let state = Self { rho };
        let herm = (&state.rho - state.rho.adjoint()).norm();
        if herm > HERMITIAN_TOL {
            return Err(Error::Unphysical(format!(
                "density matrix not Hermitian (‖ρ−ρ†‖ = {herm:e})"
            )));
        }
        let tr = state.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::Unphysical(format!("trace {tr} differs from 1")));
        }
        let min_eig = state.min_eigenvalue();
        if min_eig < -NEGATIVITY_TOL {
            return Err(Error::Unphysical(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(state)
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    /// Pure state from (not necessarily normalised) amplitudes.
    pub fn from_amplitudes(amplitudes: &[Complex64]) -> Result<Self> {
        let norm = amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::Domain("amplitude vector has zero norm".into()));
        }
        let psi = nalgebra::DVector::from_iterator(amplitudes.len(), amplitudes.iter().map(|c| c / norm));
        Self::new(&psi * psi.adjoint())
    }

    pub fn number(n: usize, dim: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::Domain(format!("level {n} outside truncation {dim}")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[n] = Complex64::new(1.0, 0.0);
        Self::from_amplitudes(&amps)
    }

    /// Coherent state |α⟩, truncated and renormalised.
    pub fn coherent(alpha: Complex64, dim: usize) -> Result<Self> {
        let mut amps = Vec::with_capacity(dim);
        let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
        for n in 0..dim {
            if n > 0 {
                c *= alpha / (n as f64).sqrt();
            }
            amps.push(c);
        }
        Self::from_amplitudes(&amps)
    }

    /// Squeezed vacuum with the same convention as
    /// [`GaussianState::squeezed`]: `phi = 0` squeezes x.
    pub fn squeezed_vacuum(s: f64, phi: f64, dim: usize) -> Result<Self> {
        if !(s.is_finite() && s >= 0.0) {
            return Err(Error::Domain(format!("squeeze magnitude must be >= 0, got {s}")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        let ratio = -s.tanh() * Complex64::from_polar(1.0, phi);
        let mut c = Complex64::new(1.0 / s.cosh().sqrt(), 0.0);
        let mut n = 0usize;
        while 2 * n < dim {
            amps[2 * n] = c;
            // c_{2n+2}/c_{2n} = −e^{iφ} tanh s · √((2n+1)/(2n+2))
            c *= ratio * ((2 * n + 1) as f64 / (2 * n + 2) as f64).sqrt();
            n += 1;
        }
        Self::from_amplitudes(&amps)
    }

    pub fn thermal(n_mean: f64, dim: usize) -> Result<Self> {
        if !(n_mean.is_finite() && n_mean >= 0.0) {
            return Err(Error::Domain(format!("thermal occupation must be >= 0, got {n_mean}")));
        }
        let q = n_mean / (n_mean + 1.0);
        let weights: Vec<f64> = (0..dim).map(|k| q.powi(k as i32)).collect();
        let total: f64 = weights.iter().sum();
        let rho = DMatrix::from_fn(dim, dim, |m, n| {
            if m == n {
                Complex64::new(weights[m] / total, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Self::new(rho)
    }

    pub fn trace(&self) -> f64 {
        self.rho.diagonal().iter().map(|c| c.re).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.rho + self.rho.adjoint()) * Complex64::new(0.5, 0.0);
        herm.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// ⟨a†a⟩.
    pub fn mean_quanta(&self) -> f64 {
        (0..self.dim()).map(|k| k as f64 * self.rho[(k, k)].re).sum()
    }

    /// ⟨a⟩ = Σ √k ρ_{k,k−1}.
    pub fn expect_a(&self) -> Complex64 {
        (1..self.dim()).map(|k| self.rho[(k, k - 1)] * (k as f64).sqrt()).sum()
    }

    /// ⟨a²⟩ = Σ √(k(k−1)) ρ_{k,k−2}.
    pub fn expect_a2(&self) -> Complex64 {
        (2..self.dim())
            .map(|k| self.rho[(k, k - 2)] * ((k * (k - 1)) as f64).sqrt())
            .sum()
    }

    /// Quadrature means and covariance, using the untruncated commutator
    /// [a, a†] = 1. Not validated as a physical Gaussian state.
    pub fn moments(&self) -> GaussianState {
        let a = self.expect_a();
        let a2 = self.expect_a2();
        let n = self.mean_quanta();
        let (mx, my) = (SQRT_2 * a.re, SQRT_2 * a.im);
        let vx = a2.re + n + 0.5 - mx * mx;
        let vy = -a2.re + n + 0.5 - my * my;
        let cxy = a2.im - mx * my;
        GaussianState {
            mean: nalgebra::Vector2::new(mx, my),
            cov: nalgebra::Matrix2::new(vx, cxy, cxy, vy),
        }
    }
}

/// dρ/dτ for coefficients `delta`, `gamma`, written into `out`.
pub fn me_rhs_into(rho: &DMatrix<Complex64>, delta: f64, gamma: f64, out: &mut DMatrix<Complex64>) -> Result<()> {
    let dim = rho.nrows();
    if !rho.is_square() || out.shape() != rho.shape() {
        return Err(Error::Domain(format!(
            "dimension mismatch: rho {:?}, output {:?}",
            rho.shape(),
            out.shape()
        )));
    }
    let down = 0.5 * (delta + gamma);
    let up = 0.5 * (delta - gamma);
    // Diagonal of aa† in the truncated space: k+1, except 0 on the top level.
    let aad = |k: usize| if k + 1 < dim { (k + 1) as f64 } else { 0.0 };
    let sqrt: Vec<f64> = (0..=dim).map(|k| (k as f64).sqrt()).collect();
    for n in 0..dim {
        for m in 0..dim {
            let r = rho[(m, n)];
            let mut v = r * (-down * (m + n) as f64 - up * (aad(m) + aad(n)));
            if m + 1 < dim && n + 1 < dim {
                v += rho[(m + 1, n + 1)] * (2.0 * down * sqrt[m + 1] * sqrt[n + 1]);
            }
            if m > 0 && n > 0 {
                v += rho[(m - 1, n - 1)] * (2.0 * up * sqrt[m] * sqrt[n]);
            }
            out[(m, n)] = v;
        }
    }
    Ok(())
}

pub fn me_rhs(state: &FockState, delta: f64, gamma: f64) -> Result<DMatrix<Complex64>> {
    if !(delta.is_finite() && gamma.is_finite()) {
        return Err(Error::Domain(format!("non-finite coefficients Δ={delta}, γ={gamma}")));
    }
    let mut out = DMatrix::zeros(state.dim(), state.dim());
    me_rhs_into(&state.rho, delta, gamma, &mut out)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct IntegrationOptions {
    /// Target step; the actual step divides `tau_max` evenly.
    pub dt: f64,
    /// Keep every `record_every`-th step (the first and last are always kept).
    pub record_every: usize,
    /// Check positivity every this many steps.
    pub check_every: usize,
}

impl IntegrationOptions {
    /// Step guidance for the reference regime: dt ≤ 10⁻³·min(1, r).
    pub fn for_ratio(r: f64) -> Self {
        Self {
            dt: 1e-3 * r.min(1.0),
            record_every: 100,
            check_every: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FockTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<FockState>,
}

/// Integrates the master equation from τ = 0 to `tau_max`.
pub fn integrate_me<M: CoefficientModel + ?Sized>(
    state0: &FockState,
    model: &M,
    tau_max: f64,
    opts: &IntegrationOptions,
) -> Result<FockTrajectory> {
    if !(tau_max.is_finite() && tau_max >= 0.0) {
        return Err(Error::Domain(format!("tau_max must be >= 0, got {tau_max}")));
    }
    if !(opts.dt > 0.0) || opts.record_every == 0 || opts.check_every == 0 {
        return Err(Error::Domain(format!("invalid integration options {opts:?}")));
    }
    let dim = state0.dim();
    let steps = ((tau_max / opts.dt).ceil() as usize).max(1);
    let h = tau_max / steps as f64;

    let mut rho = state0.rho.clone();
    let zeros = || DMatrix::<Complex64>::zeros(dim, dim);
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (zeros(), zeros(), zeros(), zeros(), zeros());

    let mut times = vec![0.0];
    let mut states = vec![state0.clone()];
    for step in 0..steps {
        let t = step as f64 * h;
        let (d0, g0) = (model.delta(t), model.gamma(t));
        let (dm, gm) = (model.delta(t + 0.5 * h), model.gamma(t + 0.5 * h));
        let (d1, g1) = (model.delta(t + h), model.gamma(t + h));

        me_rhs_into(&rho, d0, g0, &mut k1)?;
        stage(&mut tmp, &rho, 0.5 * h, &k1);
        me_rhs_into(&tmp, dm, gm, &mut k2)?;
        stage(&mut tmp, &rho, 0.5 * h, &k2);
        me_rhs_into(&tmp, dm, gm, &mut k3)?;
        stage(&mut tmp, &rho, h, &k3);
        me_rhs_into(&tmp, d1, g1, &mut k4)?;

        let w = h / 6.0;
        for ((((r, a), b), c), d) in rho
            .as_mut_slice()
            .iter_mut()
            .zip(k1.as_slice())
            .zip(k2.as_slice())
            .zip(k3.as_slice())
            .zip(k4.as_slice())
        {
            *r += (a + (b + c) * 2.0 + d) * w;
        }

        let tau = (step + 1) as f64 * h;
        let trace: f64 = rho.diagonal().iter().map(|c| c.re).sum();
        let drift = (trace - 1.0).abs();
        if !drift.is_finite() || drift > TRACE_ABORT {
            return Err(Error::Integration {
                tau,
                reason: format!("trace drifted to {trace}"),
            });
        }
        if drift > TRACE_TOL {
            debug!("trace drift {drift:e} at tau = {tau}");
        }
        rho /= Complex64::new(trace, 0.0);

        let last = step + 1 == steps;
        if (step + 1) % opts.check_every == 0 || last {
            let current = FockState { rho: rho.clone() };
            let min_eig = current.min_eigenvalue();
            if min_eig < -NEGATIVITY_TOL {
                return Err(Error::Integration {
                    tau,
                    reason: format!("density matrix lost positivity (eigenvalue {min_eig:e})"),
                });
            }
            if min_eig < 0.0 {
                warn!("eigenvalue {min_eig:e} at tau = {tau} within truncation tolerance");
            }
        }
        if (step + 1) % opts.record_every == 0 || last {
            times.push(tau);
            states.push(FockState { rho: rho.clone() });
        }
    }
    Ok(FockTrajectory { times, states })
}

/// Coordinates of the factorised propagator `e^{Φ} e^{c₊K₊} e^{c₀K₀} e^{c₋K₋}`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Factorised {
    pub plus: f64,
    pub zero: f64,
    pub minus: f64,
    pub log_norm: f64,
}

impl Factorised {
    /// Time derivative for coefficients `delta`, `gamma`.
    fn rate(&self, delta: f64, gamma: f64) -> Self {
        let (a, b, d) = (delta + gamma, delta - gamma, 2.0 * delta);
        Self {
            plus: b - d * self.plus + a * self.plus * self.plus,
            zero: -d + 2.0 * a * self.plus,
            minus: a * self.zero.exp(),
            log_norm: gamma,
        }
    }

    fn step(&self, k: &Self, h: f64) -> Self {
        Self {
            plus: self.plus + h * k.plus,
            zero: self.zero + h * k.zero,
            minus: self.minus + h * k.minus,
            log_norm: self.log_norm + h * k.log_norm,
        }
    }

    /// Applies the propagator to `rho`. Output levels depend only on input
    /// levels at or above them through K₋, so the only truncation error is
    /// probability raised past the top level, which is returned as a trace
    /// deficit.
    pub fn apply(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let dim = rho.nrows();
        let lf = ln_factorials(2 * dim);
        // Σ_k c^k/k! a^k ρ a†^k, elementwise.
        let lower = DMatrix::from_fn(dim, dim, |m, n| {
            let mut acc = rho[(m, n)];
            for k in 1..dim - m.max(n) {
                let mag = k as f64 * self.minus.abs().ln() - lf[k] + 0.5 * (lf[m + k] - lf[m] + lf[n + k] - lf[n]);
                let sign = if self.minus < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
                acc += rho[(m + k, n + k)] * (sign * mag.exp());
            }
            acc
        });
        let scaled = DMatrix::from_fn(dim, dim, |m, n| {
            lower[(m, n)] * (0.5 * self.zero * (m + n + 1) as f64 + self.log_norm).exp()
        });
        // Σ_k c^k/k! a†^k ρ a^k.
        DMatrix::from_fn(dim, dim, |m, n| {
            let mut acc = scaled[(m, n)];
            for k in 1..=m.min(n) {
                let mag = k as f64 * self.plus.abs().ln() - lf[k] + 0.5 * (lf[m] - lf[m - k] + lf[n] - lf[n - k]);
                let sign = if self.plus < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
                acc += scaled[(m - k, n - k)] * (sign * mag.exp());
            }
            acc
        })
    }
}

/// RK4 integration of the propagator coordinates on [0, tau_max], returning
/// the coordinates after every step (index 0 is the identity).
pub fn factorised_coordinates<M: CoefficientModel + ?Sized>(
    model: &M,
    tau_max: f64,
    dt: f64,
) -> Result<(Vec<f64>, Vec<Factorised>)> {
    if !(tau_max.is_finite() && tau_max >= 0.0) {
        return Err(Error::Domain(format!("tau_max must be >= 0, got {tau_max}")));
    }
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("step must be positive, got {dt}")));
    }
    let steps = ((tau_max / dt).ceil() as usize).max(1);
    let h = tau_max / steps as f64;
    let mut c = Factorised::default();
    let mut times = vec![0.0];
    let mut coords = vec![c];
    for step in 0..steps {
        let t = step as f64 * h;
        let at = |tau: f64| (model.delta(tau), model.gamma(tau));
        let ((d0, g0), (dm, gm), (d1, g1)) = (at(t), at(t + 0.5 * h), at(t + h));
        let k1 = c.rate(d0, g0);
        let k2 = c.step(&k1, 0.5 * h).rate(dm, gm);
        let k3 = c.step(&k2, 0.5 * h).rate(dm, gm);
        let k4 = c.step(&k3, h).rate(d1, g1);
        c = Factorised {
            plus: c.plus + h / 6.0 * (k1.plus + 2.0 * (k2.plus + k3.plus) + k4.plus),
            zero: c.zero + h / 6.0 * (k1.zero + 2.0 * (k2.zero + k3.zero) + k4.zero),
            minus: c.minus + h / 6.0 * (k1.minus + 2.0 * (k2.minus + k3.minus) + k4.minus),
            log_norm: c.log_norm + h / 6.0 * (k1.log_norm + 2.0 * (k2.log_norm + k3.log_norm) + k4.log_norm),
        };
        let tau = (step + 1) as f64 * h;
        if ![c.plus, c.zero, c.minus, c.log_norm].iter().all(|v| v.is_finite()) {
            return Err(Error::Integration {
                tau,
                reason: format!("propagator coordinates diverged: {c:?}"),
            });
        }
        times.push(tau);
        coords.push(c);
    }
    Ok((times, coords))
}

/// Evolves `state0` through the factorised propagator, recording on the same
/// schedule as [`integrate_me`].
pub fn evolve_factorised<M: CoefficientModel + ?Sized>(
    state0: &FockState,
    model: &M,
    tau_max: f64,
    opts: &IntegrationOptions,
) -> Result<FockTrajectory> {
    if opts.record_every == 0 || opts.check_every == 0 {
        return Err(Error::Domain(format!("invalid integration options {opts:?}")));
    }
    let (times, coords) = factorised_coordinates(model, tau_max, opts.dt)?;
    let last = times.len() - 1;
    let mut out = FockTrajectory {
        times: Vec::new(),
        states: Vec::new(),
    };
    for (i, (&tau, c)) in times.iter().zip(&coords).enumerate() {
        if i % opts.record_every != 0 && i != last {
            continue;
        }
        let mut rho = c.apply(&state0.rho);
        let trace: f64 = rho.diagonal().iter().map(|z| z.re).sum();
        let deficit = (1.0 - trace).abs();
        if !deficit.is_finite() || deficit > TRACE_ABORT {
            return Err(Error::Integration {
                tau,
                reason: format!("trace {trace} after truncation; raise the dimension"),
            });
        }
        if deficit > TRACE_TOL {
            debug!("trace deficit {deficit:e} at tau = {tau}");
        }
        rho /= Complex64::new(trace, 0.0);
        let state = FockState { rho };
        if i % opts.check_every == 0 || i == last {
            let min_eig = state.min_eigenvalue();
            if min_eig < -NEGATIVITY_TOL {
                return Err(Error::Integration {
                    tau,
                    reason: format!("density matrix lost positivity (eigenvalue {min_eig:e})"),
                });
            }
        }
        out.times.push(tau);
        out.states.push(state);
    }
    Ok(out)
}

/// out = rho + h·k
fn stage(out: &mut DMatrix<Complex64>, rho: &DMatrix<Complex64>, h: f64, k: &DMatrix<Complex64>) {
    for ((o, r), k) in out.as_mut_slice().iter_mut().zip(rho.as_slice()).zip(k.as_slice()) {
        *o = r + k * h;
    }
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    for k in 1..=n {
        out.push(out[k - 1] + (k as f64).ln());
    }
    out
}

/// W(α) = (2/π) Tr[ρ D(2α) Π] expanded in generalised Laguerre polynomials.
fn wigner_point(rho: &DMatrix<Complex64>, alpha: Complex64, ln_fact: &[f64]) -> f64 {
    let dim = rho.nrows();
    let r2 = alpha.norm_sqr();
    let x = 4.0 * r2;
    let mut total = 0.0;
    let mut laguerre = vec![0.0; dim];
    for k in 0..dim {
        if k > 0 && r2 == 0.0 {
            break;
        }
        let len = dim - k;
        // L_m^{(k)}(x) for m = 0..len
        laguerre[0] = 1.0;
        if len > 1 {
            laguerre[1] = 1.0 + k as f64 - x;
        }
        for m in 1..len.saturating_sub(1) {
            let mf = m as f64;
            laguerre[m + 1] =
                ((2.0 * mf + 1.0 + k as f64 - x) * laguerre[m] - (mf + k as f64) * laguerre[m - 1]) / (mf + 1.0);
        }
        let phase = Complex64::from_polar(1.0, k as f64 * alpha.arg());
        let ln_two_r = if k > 0 { (2.0 * r2.sqrt()).ln() } else { 0.0 };
        let mut acc = Complex64::new(0.0, 0.0);
        for m in 0..len {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let scale = (0.5 * (ln_fact[m] - ln_fact[m + k]) + k as f64 * ln_two_r - 2.0 * r2).exp();
            acc += rho[(m, m + k)] * (sign * scale * laguerre[m]);
        }
        let contrib = (acc * phase).re;
        total += if k == 0 { contrib } else { 2.0 * contrib };
    }
    2.0 / PI * total
}

/// Wigner function of a number-basis state on a grid, normalised like the
/// rest of the crate (∫ W d²α = 1).
pub fn fock_to_wigner(state: &FockState, spec: &GridSpec) -> Result<WignerGrid> {
    spec.validate()?;
    let ln_fact = ln_factorials(2 * state.dim());
    Ok(spec.fill(|alpha| wigner_point(&state.rho, alpha, &ln_fact)))
}
