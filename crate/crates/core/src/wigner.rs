//! Wigner functions on rectangular phase-space grids.
//!
//! Grids live in α coordinates, α = α_x + iα_y with α_x = x/√2 and
//! α_y = y/√2, and are normalised so that ∫ W d²α = 1. Grid values are taken
//! at cell centres, so [`WignerGrid::integral`] is the midpoint rule.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

use crate::coeffs::CoefficientModel;
use crate::error::{Error, Result};
use crate::gaussian::GaussianState;

/// Extents (in α_x, α_y) and cell counts of a phase-space grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, nx: usize, ny: usize) -> Result<Self> {
        let spec = Self {
            x_min,
            x_max,
            y_min,
            y_max,
            nx,
            ny,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Square grid [−half, half]² with `n` cells per side.
    pub fn square(half: f64, n: usize) -> Result<Self> {
        Self::new(-half, half, -half, half, n, n)
    }

    /// Axis-aligned box covering `n_sigma` standard deviations of `state`
    /// around its mean.
    pub fn covering(state: &GaussianState, n_sigma: f64, nx: usize, ny: usize) -> Result<Self> {
        let centre = state.mean / SQRT_2;
        let hx = n_sigma * (state.var_x() / 2.0).sqrt();
        let hy = n_sigma * (state.var_y() / 2.0).sqrt();
        Self::new(centre.x - hx, centre.x + hx, centre.y - hy, centre.y + hy, nx, ny)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x_min >= self.x_max || self.y_min >= self.y_max {
            return Err(Error::Domain(format!(
                "grid extents must be finite and ordered: {self:?}"
            )));
        }
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::Domain(format!(
                "grid needs at least one cell per axis: {self:?}"
            )));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / self.ny as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx()
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y_min + (j as f64 + 0.5) * self.dy()
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    /// Fills a grid from a pointwise function of α. Rows are evaluated in
    /// parallel.
    pub fn fill(&self, f: impl Fn(Complex64) -> f64 + Sync) -> WignerGrid {
        let mut values = vec![0.0; self.nx * self.ny];
        values.par_chunks_mut(self.nx).enumerate().for_each(|(j, row)| {
            let y = self.y(j);
            for (i, v) in row.iter_mut().enumerate() {
                *v = f(Complex64::new(self.x(i), y));
            }
        });
        WignerGrid { spec: *self, values }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub spec: GridSpec,
    /// Row-major: `values[j * nx + i]` is W at (x(i), y(j)).
    pub values: Vec<f64>,
}

impl WignerGrid {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.spec.nx + i]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.spec.nx)
    }

    /// Midpoint-rule integral over the grid.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spec.cell_area()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Grid location of the largest value.
    pub fn argmax(&self) -> Complex64 {
        let (k, _) =
            self.values.iter().enumerate().fold(
                (0, f64::NEG_INFINITY),
                |best, (k, &v)| if v > best.1 { (k, v) } else { best },
            );
        Complex64::new(self.spec.x(k % self.spec.nx), self.spec.y(k / self.spec.nx))
    }

    /// First and second moments of the grid in quadrature units (x, y).
    pub fn quadrature_moments(&self) -> (Vector2<f64>, Matrix2<f64>) {
        let area = self.spec.cell_area();
        let mut mass = 0.0;
        let mut m = Vector2::zeros();
        for j in 0..self.spec.ny {
            for i in 0..self.spec.nx {
                let w = self.value(i, j) * area;
                mass += w;
                m += Vector2::new(self.spec.x(i), self.spec.y(j)) * w;
            }
        }
        m /= mass;
        let mut c = Matrix2::zeros();
        for j in 0..self.spec.ny {
            for i in 0..self.spec.nx {
                let w = self.value(i, j) * area;
                let d = Vector2::new(self.spec.x(i), self.spec.y(j)) - m;
                c += d * d.transpose() * w;
            }
        }
        c /= mass;
        (m * SQRT_2, c * 2.0)
    }
}

/// Bivariate Gaussian density in α coordinates.
#[derive(Debug, Clone, Copy)]
pub struct GaussianDensity {
    centre: Vector2<f64>,
    precision: Matrix2<f64>,
    norm: f64,
}

impl GaussianDensity {
    pub fn from_state(state: &GaussianState) -> Result<Self> {
        let cov = state.cov / 2.0;
        let det = cov.determinant();
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::Unphysical(format!("singular covariance, det = {det}")));
        }
        let precision = cov
            .try_inverse()
            .ok_or_else(|| Error::Unphysical("covariance is not invertible".into()))?;
        Ok(Self {
            centre: state.mean / SQRT_2,
            precision,
            norm: 1.0 / (2.0 * PI * det.sqrt()),
        })
    }

    pub fn eval(&self, alpha: Complex64) -> f64 {
        let d = Vector2::new(alpha.re, alpha.im) - self.centre;
        self.norm * (-0.5 * d.dot(&(self.precision * d))).exp()
    }
}

/// Wigner function of a Gaussian state on a grid.
pub fn wigner_gaussian(state: &GaussianState, spec: &GridSpec) -> Result<WignerGrid> {
    spec.validate()?;
    let density = GaussianDensity::from_state(state)?;
    Ok(spec.fill(|a| density.eval(a)))
}

/// Transition kernel W_τ(α | α₀) of the channel: an isotropic Gaussian of
/// width Δ_Γ centred on the damped, rotated starting point
/// α₀ e^{−Γ/2} e^{−iω₀τ}. Integrates to one over α.
#[derive(Debug, Clone, Copy)]
pub struct Propagator {
    drift: Complex64,
    delta_gamma: f64,
}

impl Propagator {
    pub fn new<M: CoefficientModel + ?Sized>(model: &M, tau: f64, tol: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::Domain(format!(
                "propagator needs tau > 0 (it is a delta function at 0), got {tau}"
            )));
        }
        let delta_gamma = model.delta_big_gamma(tau, tol)?;
        if !(delta_gamma > 0.0) {
            return Err(Error::Unphysical(format!(
                "propagator width Δ_Γ({tau}) = {delta_gamma} is not positive"
            )));
        }
        let drift = Complex64::from_polar((-0.5 * model.big_gamma(tau)).exp(), -model.omega0() * tau);
        Ok(Self { drift, delta_gamma })
    }

    pub fn delta_gamma(&self) -> f64 {
        self.delta_gamma
    }

    /// Where a point starting at `alpha0` ends up on average.
    pub fn centre(&self, alpha0: Complex64) -> Complex64 {
        alpha0 * self.drift
    }

    pub fn eval(&self, alpha: Complex64, alpha0: Complex64) -> f64 {
        let b = alpha - self.centre(alpha0);
        (-b.norm_sqr() / self.delta_gamma).exp() / (PI * self.delta_gamma)
    }
}

/// W_τ(α | α₀) for a single pair of points.
pub fn propagator<M: CoefficientModel + ?Sized>(
    model: &M,
    tau: f64,
    alpha: Complex64,
    alpha0: Complex64,
    tol: f64,
) -> Result<f64> {
    Ok(Propagator::new(model, tau, tol)?.eval(alpha, alpha0))
}

/// Evolved Wigner function by direct numerical convolution of the initial
/// Wigner function (sampled on `inner`) with the propagator. Brute force;
/// meant as a cross-check of the closed forms.
pub fn wigner_by_convolution<M: CoefficientModel + ?Sized>(
    state0: &GaussianState,
    model: &M,
    tau: f64,
    spec: &GridSpec,
    inner: &GridSpec,
    tol: f64,
) -> Result<WignerGrid> {
    spec.validate()?;
    let kernel = Propagator::new(model, tau, tol)?;
    let initial = wigner_gaussian(state0, inner)?;
    let area = inner.cell_area();
    // Pre-map every source cell to its drifted centre and weight.
    let sources: Vec<(Complex64, f64)> = (0..inner.ny)
        .flat_map(|j| (0..inner.nx).map(move |i| (i, j)))
        .map(|(i, j)| {
            let a0 = Complex64::new(inner.x(i), inner.y(j));
            (kernel.centre(a0), initial.value(i, j) * area)
        })
        .filter(|&(_, w)| w > 0.0)
        .collect();
    let inv_width = 1.0 / kernel.delta_gamma;
    let norm = inv_width / PI;
    Ok(spec.fill(|alpha| {
        sources
            .iter()
            .map(|&(c, w)| w * (-(alpha - c).norm_sqr() * inv_width).exp())
            .sum::<f64>()
            * norm
    }))
}

/// Width parameter D(τ) = Δ_Γ(τ) + e^{−Γ(τ)}/2 of an evolved coherent state,
/// W ∝ exp(−|α − α_c|²/D).
pub fn coherent_width<M: CoefficientModel + ?Sized>(model: &M, tau: f64, tol: f64) -> Result<f64> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::Domain(format!("tau must be finite and >= 0, got {tau}")));
    }
    Ok(model.delta_big_gamma(tau, tol)? + 0.5 * (-model.big_gamma(tau)).exp())
}

/// Evolved Wigner function of the coherent state |α₀⟩ in closed form:
/// W = exp(−|α₀ e^{−Γ/2} e^{−iω₀τ} − α|²/D)/(πD).
pub fn wigner_coherent_closed<M: CoefficientModel + ?Sized>(
    alpha0: Complex64,
    model: &M,
    tau: f64,
    spec: &GridSpec,
    tol: f64,
) -> Result<WignerGrid> {
    spec.validate()?;
    let width = coherent_width(model, tau, tol)?;
    let centre = alpha0 * Complex64::from_polar((-0.5 * model.big_gamma(tau)).exp(), -model.omega0() * tau);
    Ok(spec.fill(|alpha| (-(centre - alpha).norm_sqr() / width).exp() / (PI * width)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{PhysicalParams, DEFAULT_TOL};
    use crate::gaussian::propagate;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn vacuum_peak_and_normalisation() {
        let spec = GridSpec::square(3.0, 301).unwrap();
        let w = wigner_gaussian(&GaussianState::vacuum(), &spec).unwrap();
        // Centre cell of an odd grid sits on the origin.
        assert!((w.value(150, 150) - 2.0 / PI).abs() < 1e-14);
        assert!((w.integral() - 1.0).abs() < 1e-6);
        assert!(w.min_value() >= 0.0);
    }

    #[test]
    fn normalised_on_six_sigma_grid() {
        let states = [
            GaussianState::squeezed_sigma2(c(0.4, -1.2), 0.1, 0.9).unwrap(),
            GaussianState::coherent(c(2.0, 1.0)),
            GaussianState::thermal(3.0).unwrap(),
        ];
        for s in &states {
            let spec = GridSpec::covering(s, 6.0, 401, 401).unwrap();
            let w = wigner_gaussian(s, &spec).unwrap();
            assert!((w.integral() - 1.0).abs() < 1e-6, "{}", w.integral());
        }
    }

    #[test]
    fn squeezed_aspect_ratio() {
        let s = GaussianState::squeezed_sigma2(c(0.0, 0.0), 0.1, 0.0).unwrap();
        let w = wigner_gaussian(&s, &GridSpec::covering(&s, 6.0, 401, 401).unwrap()).unwrap();
        let (_, cov) = w.quadrature_moments();
        let ratio = (cov[(1, 1)] / cov[(0, 0)]).sqrt();
        assert!((ratio - 10.0).abs() < 1e-5, "{ratio}");
    }

    #[test]
    fn moments_round_trip() {
        let s = GaussianState::squeezed(c(0.5, 0.25), 0.6, 1.1).unwrap();
        let w = wigner_gaussian(&s, &GridSpec::covering(&s, 7.0, 401, 401).unwrap()).unwrap();
        let (m, cov) = w.quadrature_moments();
        assert!((m - s.mean).norm() < 1e-8);
        assert!((cov - s.cov).norm() < 1e-7);
    }

    #[test]
    fn singular_covariance_rejected() {
        let bad = GaussianState {
            mean: Vector2::zeros(),
            cov: Matrix2::new(1.0, 1.0, 1.0, 1.0),
        };
        assert!(wigner_gaussian(&bad, &GridSpec::square(1.0, 3).unwrap()).is_err());
        assert!(GridSpec::new(1.0, 0.0, 0.0, 1.0, 3, 3).is_err());
        assert!(GridSpec::square(1.0, 0).is_err());
    }

    #[test]
    fn propagator_is_normalised_and_centred() {
        let p = PhysicalParams::reference();
        let k = Propagator::new(&p, 0.3, DEFAULT_TOL).unwrap();
        let a0 = c(1.0, 0.0);
        let centre = k.centre(a0);
        let half = 6.0 * (k.delta_gamma() / 2.0).sqrt();
        let spec = GridSpec::new(
            centre.re - half,
            centre.re + half,
            centre.im - half,
            centre.im + half,
            301,
            301,
        )
        .unwrap();
        let grid = spec.fill(|a| k.eval(a, a0));
        assert!((grid.integral() - 1.0).abs() < 1e-6);
        // Peak against the mean of the propagated coherent state.
        let evolved = propagate(&GaussianState::coherent(a0), &p, 0.3, DEFAULT_TOL).unwrap();
        let peak = grid.argmax();
        assert!((peak - evolved.alpha()).norm() <= spec.dx());
    }

    #[test]
    fn propagator_rejects_zero_time() {
        let p = PhysicalParams::reference();
        assert!(matches!(
            propagator(&p, 0.0, c(0.0, 0.0), c(0.0, 0.0), DEFAULT_TOL),
            Err(Error::Domain(_))
        ));
        let decoupled = PhysicalParams::new(0.0, 0.05, 1.0).unwrap();
        assert!(matches!(
            propagator(&decoupled, 0.5, c(0.0, 0.0), c(0.0, 0.0), DEFAULT_TOL),
            Err(Error::Unphysical(_))
        ));
    }

    #[test]
    fn propagator_narrows_towards_delta() {
        let p = PhysicalParams::reference();
        let mut last = f64::INFINITY;
        for k in 1..=6 {
            let tau = 10f64.powi(-k);
            let prop = Propagator::new(&p, tau, DEFAULT_TOL).unwrap();
            // FWHM of exp(−|b|²/Δ_Γ) along one axis.
            let fwhm = 2.0 * (prop.delta_gamma() * 2f64.ln()).sqrt();
            assert!(fwhm < last);
            last = fwhm;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn propagator_forgets_start_at_long_times() {
        let p = PhysicalParams::new(1.0, 0.5, 10.0).unwrap();
        let k = Propagator::new(&p, 100.0, DEFAULT_TOL).unwrap();
        for a in [c(0.0, 0.0), c(1.0, -2.0), c(5.0, 3.0)] {
            let base = k.eval(a, c(0.0, 0.0));
            for a0 in [c(1.0, 0.0), c(-3.0, 2.0)] {
                assert!((k.eval(a, a0) - base).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn coherent_closed_form_at_zero_matches_gaussian() {
        let p = PhysicalParams::reference();
        let a0 = c(1.0, -0.5);
        let spec = GridSpec::square(4.0, 81).unwrap();
        let closed = wigner_coherent_closed(a0, &p, 0.0, &spec, DEFAULT_TOL).unwrap();
        let gauss = wigner_gaussian(&GaussianState::coherent(a0), &spec).unwrap();
        for (x, y) in closed.values.iter().zip(&gauss.values) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn coherent_closed_form_matches_propagated_moments() {
        let p = PhysicalParams::reference();
        let a0 = c(1.0, 0.0);
        for &tau in &[0.15, 0.3, 0.45] {
            let spec = GridSpec::square(5.0, 101).unwrap();
            let closed = wigner_coherent_closed(a0, &p, tau, &spec, DEFAULT_TOL).unwrap();
            let state = propagate(&GaussianState::coherent(a0), &p, tau, DEFAULT_TOL).unwrap();
            let gauss = wigner_gaussian(&state, &spec).unwrap();
            let worst = closed
                .values
                .iter()
                .zip(&gauss.values)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(worst < 1e-12, "τ={tau}: {worst}");
        }
    }

    #[test]
    fn vacuum_spreads_about_origin() {
        let p = PhysicalParams::reference();
        let spec = GridSpec::square(4.0, 81).unwrap();
        let w = wigner_coherent_closed(c(0.0, 0.0), &p, 0.1, &spec, DEFAULT_TOL).unwrap();
        assert!((w.argmax()).norm() < spec.dx());
        assert!(coherent_width(&p, 0.1, DEFAULT_TOL).unwrap() > 0.5);
    }

    #[test]
    fn coherent_width_breathes_only_with_memory() {
        let p = PhysicalParams::reference();
        let widths: Vec<f64> = (0..=500)
            .map(|k| coherent_width(&p, k as f64 / 500.0, DEFAULT_TOL).unwrap())
            .collect();
        assert!(widths.windows(2).any(|w| w[1] < w[0]));
        let frozen = p.frozen();
        let widths: Vec<f64> = (0..=500)
            .map(|k| coherent_width(&frozen, k as f64 / 500.0, DEFAULT_TOL).unwrap())
            .collect();
        assert!(widths.windows(2).all(|w| w[1] >= w[0]));
    }
}
