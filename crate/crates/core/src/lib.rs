//! Exact non-Markovian phase-space dynamics of a damped harmonic oscillator
//! coupled to a high-temperature Ohmic reservoir.
//!
//! The reduced dynamics is a Gaussian channel: the characteristic function
//! evolves as `χ_τ(ξ) = exp(−Δ_Γ(τ)|ξ|²) χ₀(e^{−Γ(τ)/2} e^{−iω₀τ} ξ)`, so
//! Gaussian states stay Gaussian and are propagated exactly through their
//! first two moments ([`gaussian`]). The time-dependent coefficients live in
//! [`coeffs`], phase-space grids in [`wigner`], and a brute-force Fock-basis
//! integrator of the master equation in [`fock`] serves as an independent
//! cross-check. [`cli`] holds the command-line front end.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod coeffs;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod quadrature;
pub mod wigner;

pub use coeffs::{CoefficientModel, CoefficientSample, FrozenCoefficients, PhysicalParams};
pub use error::{Error, Result};
