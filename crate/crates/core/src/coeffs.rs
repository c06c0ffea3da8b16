//! Reservoir parameters and the time-dependent master-equation coefficients.
//!
//! Units: ħ = 1, the reservoir cutoff ω_c = 1, so τ = ω_c t and every rate is
//! measured in units of ω_c. The oscillator frequency is ω₀ = 1/r.
//!
//! For the high-temperature Ohmic reservoir
//!
//! ```text
//! Δ(τ) = 2 g² (kT/ω_c) r²/(1+r²) · {1 − e^{−τ} [cos(τ/r) − (1/r) sin(τ/r)]}
//! γ(τ) = g² r/(1+r²) · [1 − e^{−τ} cos(τ/r) − r e^{−τ} sin(τ/r)]
//! Γ(τ) = 2 ∫₀^τ γ
//! Δ_Γ(τ) = e^{−Γ(τ)} ∫₀^τ e^{Γ(s)} Δ(s) ds
//! ```
//!
//! Γ has an elementary antiderivative and is evaluated in closed form; Δ_Γ
//! is not and goes through adaptive quadrature.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_adaptive, AdaptiveOptions};

/// Default relative tolerance for Δ_Γ.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Width below which sign-change brackets stop being bisected.
const SIGN_CHANGE_RESOLUTION: f64 = 1e-9;

/// Dimensionless model parameters.
///
/// The high-temperature assumption (kT ≫ ω_c, ω₀) is not enforced; the
/// coefficient formulas stay well defined for any positive temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// System-reservoir coupling constant.
    pub g: f64,
    /// Ratio ω_c/ω₀.
    pub r: f64,
    /// kT/(ħω_c).
    pub kt_over_wc: f64,
}

impl PhysicalParams {
    pub fn new(g: f64, r: f64, kt_over_wc: f64) -> Result<Self> {
        let p = Self { g, r, kt_over_wc };
        p.validate()?;
        Ok(p)
    }

    /// Builds the parameter set from ω_c/(2πkT), the way reservoir
    /// temperatures are usually quoted for this model.
    pub fn from_wc_over_2pikt(g: f64, r: f64, wc_over_2pikt: f64) -> Result<Self> {
        if !(wc_over_2pikt.is_finite() && wc_over_2pikt > 0.0) {
            return Err(Error::Domain(format!(
                "wc_over_2pikt must be positive and finite, got {wc_over_2pikt}"
            )));
        }
        Self::new(g, r, kt_from_wc_over_2pikt(wc_over_2pikt))
    }

    /// g = 0.1, r = 0.05, ω_c/(2πkT) = 3·10⁻⁵: the engineered-reservoir
    /// regime with ω_c ≪ ω₀ where the coefficients go transiently negative.
    pub fn reference() -> Self {
        Self {
            g: 0.1,
            r: 0.05,
            kt_over_wc: kt_from_wc_over_2pikt(3e-5),
        }
    }

    /// g may be zero (decoupled oscillator); r and the temperature must be
    /// strictly positive.
    pub fn validate(&self) -> Result<()> {
        let ok = self.g.is_finite()
            && self.g >= 0.0
            && self.r.is_finite()
            && self.r > 0.0
            && self.kt_over_wc.is_finite()
            && self.kt_over_wc > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "require g >= 0, r > 0, kt_over_wc > 0 (all finite), got {self:?}"
            )))
        }
    }

    pub fn omega0(&self) -> f64 {
        1.0 / self.r
    }

    /// Δ(∞).
    pub fn asymptotic_delta(&self) -> f64 {
        2.0 * self.g * self.g * self.kt_over_wc * self.r * self.r / (1.0 + self.r * self.r)
    }

    /// γ(∞) = g² ω₀ r²/(1+r²) = g² r/(1+r²).
    pub fn asymptotic_gamma(&self) -> f64 {
        self.g * self.g * self.r / (1.0 + self.r * self.r)
    }

    /// Complex exponent z = −1 + iω₀ so that e^{−τ}(cos ω₀τ + i sin ω₀τ) = e^{zτ}.
    fn z(&self) -> Complex64 {
        Complex64::new(-1.0, self.omega0())
    }

    /// The Markovian channel obtained by freezing Δ and γ at their limits.
    pub fn frozen(&self) -> FrozenCoefficients {
        FrozenCoefficients {
            delta: self.asymptotic_delta(),
            gamma: self.asymptotic_gamma(),
            omega0: self.omega0(),
        }
    }
}

pub fn kt_from_wc_over_2pikt(wc_over_2pikt: f64) -> f64 {
    1.0 / (2.0 * std::f64::consts::PI * wc_over_2pikt)
}

/// e^w − Σ_{k<order} w^k/k! by its Taylor tail; only used for |w| < 1.
fn exp_remainder(w: Complex64, order: u32) -> Complex64 {
    let mut term = Complex64::new(1.0, 0.0);
    for k in 1..=order {
        term *= w / k as f64;
    }
    let mut sum = term;
    for k in (order + 1)..64 {
        term *= w / k as f64;
        sum += term;
        if term.norm() < 1e-17 * sum.norm() {
            break;
        }
    }
    sum
}

/// Time-dependent diffusion/dissipation pair driving the master equation.
///
/// Implementations assume τ ≥ 0; the public free functions below validate.
pub trait CoefficientModel: Sync {
    /// Δ(τ).
    fn delta(&self, tau: f64) -> f64;
    /// γ(τ).
    fn gamma(&self, tau: f64) -> f64;
    /// Γ(τ) = 2∫₀^τ γ.
    fn big_gamma(&self, tau: f64) -> f64;
    /// Oscillator frequency in units of ω_c.
    fn omega0(&self) -> f64;

    /// ∫ₐᵇ e^{Γ(s)} Δ(s) ds.
    fn weighted_diffusion(&self, a: f64, b: f64, opts: &AdaptiveOptions) -> Result<f64> {
        let res = integrate_adaptive(|s| self.big_gamma(s).exp() * self.delta(s), a, b, opts)?;
        if !res.converged {
            return Err(Error::Quadrature {
                a,
                b,
                value: res.value,
                error: res.error_estimate,
                evaluations: res.evaluations,
            });
        }
        Ok(res.value)
    }

    /// Δ_Γ(τ).
    fn delta_big_gamma(&self, tau: f64, tol: f64) -> Result<f64> {
        let integral = self.weighted_diffusion(0.0, tau, &AdaptiveOptions::with_tol(tol))?;
        Ok((-self.big_gamma(tau)).exp() * integral)
    }
}

impl CoefficientModel for PhysicalParams {
    // Each transient is Re[k e^{zτ}] for a complex constant k. Close to τ = 0
    // the leading Taylor terms cancel against the constant part, so there the
    // remainder series is summed instead.

    fn delta(&self, tau: f64) -> f64 {
        let w = self.z() * tau;
        let k = Complex64::new(1.0, self.omega0());
        let bracket = if w.norm() < 1.0 {
            -(k * exp_remainder(w, 1)).re
        } else {
            1.0 - (k * w.exp()).re
        };
        self.asymptotic_delta() * bracket
    }

    fn gamma(&self, tau: f64) -> f64 {
        // Re[(1 − ir) z] = 0, so the linear Taylor term drops as well.
        let w = self.z() * tau;
        let k = Complex64::new(1.0, -self.r);
        let bracket = if w.norm() < 1.0 {
            -(k * exp_remainder(w, 2)).re
        } else {
            1.0 - (k * w.exp()).re
        };
        self.asymptotic_gamma() * bracket
    }

    fn big_gamma(&self, tau: f64) -> f64 {
        // 2c ∫₀^τ {1 − Re[(1 − ir) e^{zs}]} ds = 2c {τ − Re[(1 − ir)(e^{zτ} − 1)/z]}
        let z = self.z();
        let w = z * tau;
        let k = Complex64::new(1.0, -self.r);
        let bracket = if w.norm() < 1.0 {
            -(k * exp_remainder(w, 3) / z).re
        } else {
            tau - (k * (w.exp() - 1.0) / z).re
        };
        2.0 * self.asymptotic_gamma() * bracket
    }

    fn omega0(&self) -> f64 {
        PhysicalParams::omega0(self)
    }
}

/// Constant coefficients: the Markovian (semigroup) counterpart of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrozenCoefficients {
    pub delta: f64,
    pub gamma: f64,
    pub omega0: f64,
}

impl CoefficientModel for FrozenCoefficients {
    fn delta(&self, _tau: f64) -> f64 {
        self.delta
    }

    fn gamma(&self, _tau: f64) -> f64 {
        self.gamma
    }

    fn big_gamma(&self, tau: f64) -> f64 {
        2.0 * self.gamma * tau
    }

    fn omega0(&self) -> f64 {
        self.omega0
    }

    fn weighted_diffusion(&self, a: f64, b: f64, _opts: &AdaptiveOptions) -> Result<f64> {
        let rate = 2.0 * self.gamma;
        if rate == 0.0 {
            return Ok(self.delta * (b - a));
        }
        Ok(self.delta * (rate * a).exp() * (rate * (b - a)).exp_m1() / rate)
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("tau must be finite and >= 0, got {tau}")))
    }
}

/// Δ(τ)/ω_c.
pub fn delta_coeff(p: &PhysicalParams, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(p.delta(tau))
}

/// γ(τ)/ω_c.
pub fn gamma_coeff(p: &PhysicalParams, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(p.gamma(tau))
}

/// Γ(τ), closed form.
pub fn big_gamma(p: &PhysicalParams, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(p.big_gamma(tau))
}

/// Δ_Γ(τ) to relative tolerance `tol`.
pub fn delta_big_gamma(p: &PhysicalParams, tau: f64, tol: f64) -> Result<f64> {
    check_tau(tau)?;
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    p.delta_big_gamma(tau, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSample {
    pub tau: f64,
    pub delta: f64,
    pub gamma: f64,
    pub big_gamma: f64,
    pub delta_gamma: f64,
}

/// Walks Δ_Γ forward along a non-decreasing time grid, carrying the raw
/// integral ∫₀^τ e^Γ Δ so each step only integrates the new slice.
pub struct DiffusionAccumulator<'a, M: CoefficientModel + ?Sized> {
    model: &'a M,
    tol: f64,
    tau: f64,
    integral: f64,
}

impl<'a, M: CoefficientModel + ?Sized> DiffusionAccumulator<'a, M> {
    pub fn new(model: &'a M, tol: f64) -> Self {
        Self {
            model,
            tol,
            tau: 0.0,
            integral: 0.0,
        }
    }

    /// Advances to `tau` and returns Δ_Γ(tau).
    pub fn advance(&mut self, tau: f64) -> Result<f64> {
        check_tau(tau)?;
        if tau < self.tau {
            return Err(Error::Domain(format!(
                "time grid must be non-decreasing: {tau} after {}",
                self.tau
            )));
        }
        let opts = AdaptiveOptions {
            tol: self.tol,
            abs_floor: (self.tol * self.integral.abs()).max(1e-14),
            ..AdaptiveOptions::default()
        };
        self.integral += self.model.weighted_diffusion(self.tau, tau, &opts)?;
        self.tau = tau;
        Ok((-self.model.big_gamma(tau)).exp() * self.integral)
    }

    pub fn sample(&mut self, tau: f64) -> Result<CoefficientSample> {
        let delta_gamma = self.advance(tau)?;
        Ok(CoefficientSample {
            tau,
            delta: self.model.delta(tau),
            gamma: self.model.gamma(tau),
            big_gamma: self.model.big_gamma(tau),
            delta_gamma,
        })
    }
}

/// Coefficient samples on a non-decreasing grid.
pub fn sample_coefficients<M: CoefficientModel + ?Sized>(
    model: &M,
    taus: &[f64],
    tol: f64,
) -> Result<Vec<CoefficientSample>> {
    let mut acc = DiffusionAccumulator::new(model, tol);
    taus.iter().map(|&t| acc.sample(t)).collect()
}

/// `n` evenly spaced points on [0, tau_max], endpoints included.
pub fn uniform_grid(tau_max: f64, n: usize) -> Vec<f64> {
    let last = (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { tau_max } else { tau_max * i as f64 / last })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LindbladClassification {
    /// True when Δ + γ and Δ − γ are both non-negative on the scanned window.
    pub is_lindblad_type: bool,
    /// Intervals where Δ + γ < 0.
    pub delta_plus_gamma_negative: Vec<(f64, f64)>,
    /// Intervals where Δ − γ < 0.
    pub delta_minus_gamma_negative: Vec<(f64, f64)>,
}

/// Scans Δ ± γ on a uniform grid of `n_samples` points over [0, tau_max] and
/// refines each sign change by bisection. A value of exactly zero counts as
/// non-negative.
pub fn classify_lindblad<M: CoefficientModel + ?Sized>(
    model: &M,
    tau_max: f64,
    n_samples: usize,
) -> Result<LindbladClassification> {
    if !(tau_max.is_finite() && tau_max > 0.0) {
        return Err(Error::Domain(format!("tau_max must be positive, got {tau_max}")));
    }
    if n_samples < 2 {
        return Err(Error::Domain(format!("need at least 2 samples, got {n_samples}")));
    }
    let grid = uniform_grid(tau_max, n_samples);
    let plus = negative_intervals(|t| model.delta(t) + model.gamma(t), &grid);
    let minus = negative_intervals(|t| model.delta(t) - model.gamma(t), &grid);
    Ok(LindbladClassification {
        is_lindblad_type: plus.is_empty() && minus.is_empty(),
        delta_plus_gamma_negative: plus,
        delta_minus_gamma_negative: minus,
    })
}

fn negative_intervals(f: impl Fn(f64) -> f64, grid: &[f64]) -> Vec<(f64, f64)> {
    let negative = |t: f64| f(t) < 0.0;
    let refine = |mut lo: f64, mut hi: f64| {
        let lo_neg = negative(lo);
        while hi - lo > SIGN_CHANGE_RESOLUTION {
            let mid = 0.5 * (lo + hi);
            if negative(mid) == lo_neg {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };

    let mut intervals = Vec::new();
    let mut open: Option<f64> = negative(grid[0]).then_some(grid[0]);
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        match (negative(a), negative(b)) {
            (false, true) => open = Some(refine(a, b)),
            (true, false) => {
                let start = open.take().expect("open interval");
                intervals.push((start, refine(a, b)));
            }
            _ => {}
        }
    }
    if let Some(start) = open {
        intervals.push((start, *grid.last().expect("non-empty grid")));
    }
    intervals
}
