//! One-dimensional quadrature.
//!
//! [`integrate_adaptive`] is a globally adaptive Gauss–Kronrod (7, 15) scheme:
//! the interval with the largest error estimate is bisected until the summed
//! estimate meets the requested relative tolerance. [`integrate_fixed`] is a
//! plain composite Simpson rule, kept deliberately simple so tests can use it
//! as an independent reference.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Kronrod abscissae on [-1, 1]; the odd entries are the 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    /// Relative tolerance on the integral.
    pub tol: f64,
    /// Absolute error floor, so integrals close to zero can still converge.
    pub abs_floor: f64,
    /// Maximum bisection depth of any single subinterval.
    pub max_depth: u32,
    /// Cap on integrand evaluations.
    pub max_evaluations: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            abs_floor: 1e-14,
            max_depth: 50,
            max_evaluations: 1_000_000,
        }
    }
}

impl AdaptiveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

fn eval_checked(f: &impl Fn(f64) -> f64, x: f64) -> Result<f64> {
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::NonFinite { at: x, value: y })
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    depth: u32,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Single 15-point Kronrod pass on [a, b]. Returns (K15 value, |K15 - G7|).
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = eval_checked(f, center)?;
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = half * x;
        let pair = eval_checked(f, center - dx)? + eval_checked(f, center + dx)?;
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Ok((kronrod * half, ((kronrod - gauss) * half).abs()))
}

/// Adaptive integral of `f` over `[a, b]`.
///
/// Returns `converged = false` (not an error) when the depth or evaluation
/// budget runs out; callers decide whether that is fatal. A non-finite
/// integrand value is always an error.
pub fn integrate_adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, opts: &AdaptiveOptions) -> Result<QuadratureResult> {
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::Domain(format!(
            "integration bounds must be finite with a <= b, got [{a}, {b}]"
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {}", opts.tol)));
    }
    if a == b {
        return Ok(QuadratureResult {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
            converged: true,
        });
    }

    let (value, error) = gk15(&f, a, b)?;
    let mut evaluations = 15;
    let mut total = value;
    let mut total_err = error;
    let mut heap = BinaryHeap::new();
    heap.push(Segment {
        a,
        b,
        value,
        error,
        depth: 0,
    });

    let target = |total: f64| (opts.tol * total.abs()).max(opts.abs_floor);
    let mut converged = total_err <= target(total);
    while !converged {
        let worst = heap.pop().expect("heap holds at least one segment");
        if worst.depth >= opts.max_depth || evaluations + 30 > opts.max_evaluations {
            heap.push(worst);
            break;
        }
        let mid = 0.5 * (worst.a + worst.b);
        let (lv, le) = gk15(&f, worst.a, mid)?;
        let (rv, re) = gk15(&f, mid, worst.b)?;
        evaluations += 30;
        total += lv + rv - worst.value;
        total_err += le + re - worst.error;
        for (sa, sb, value, error) in [(worst.a, mid, lv, le), (mid, worst.b, rv, re)] {
            heap.push(Segment {
                a: sa,
                b: sb,
                value,
                error,
                depth: worst.depth + 1,
            });
        }
        converged = total_err <= target(total);
    }

    // Re-sum to shed the drift of the running updates.
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let error_estimate: f64 = heap.iter().map(|s| s.error).sum();
    Ok(QuadratureResult {
        value,
        error_estimate,
        evaluations,
        converged: converged && error_estimate <= target(value),
    })
}

/// Composite Simpson rule on a uniform grid. Odd panel counts are rounded up.
pub fn integrate_fixed(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> Result<f64> {
    if panels == 0 {
        return Err(Error::Domain("panel count must be at least 1".into()));
    }
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::Domain(format!(
            "integration bounds must be finite with a <= b, got [{a}, {b}]"
        )));
    }
    let n = panels + panels % 2;
    let h = (b - a) / n as f64;
    let mut sum = eval_checked(&f, a)? + eval_checked(&f, b)?;
    for i in 1..n {
        let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += weight * eval_checked(&f, a + i as f64 * h)?;
    }
    Ok(sum * h / 3.0)
}
