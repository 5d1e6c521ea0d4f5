//! Closed-form resonance theory: Landau-Zener step probability, the
//! ladder-climbing efficiency product, regime boundaries and diagnostic
//! parameters.
//!
//! The `(P1, P2)` plane splits into a quantum ladder-climbing region
//! (`P2 > 1/4 + P1/16`: crossings well separated) and a classical region
//! where capture into autoresonance needs `P1 P2 > 1/2`. Both boundaries
//! are drawn at equality; [`RegimeReport`] carries the raw boundary values
//! so callers can apply their own margins.

use serde::{Deserialize, Serialize};

use crate::coupling::b_coefficient;
use crate::error::{Error, Result};

/// Transfer probability of a single Landau-Zener step with coupling
/// `P1 b`: `1 - exp[-2 pi (P1 b)^2]`.
pub fn lz_probability(p1: f64, b: f64) -> f64 {
    let x = p1 * b;
    1.0 - (-2.0 * std::f64::consts::PI * x * x).exp()
}

/// Ground-state (`C = 0`) climbing efficiency up to level `l_hat`: the
/// product of the LZ step probabilities over `l = 2, 4, .., l_hat`.
pub fn lc_efficiency(p1: f64, l_hat: u32) -> Result<f64> {
    if l_hat < 2 || !l_hat.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "lc_efficiency needs even l_hat >= 2, got {l_hat}"
        )));
    }
    let mut f = 1.0;
    for n in 1..=l_hat / 2 {
        let l = 2 * n;
        f *= lz_probability(p1, b_coefficient(l, l as i32)?);
    }
    Ok(f)
}

/// Excitation regime of a parameter-space point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    LadderClimbing,
    AutoresonantClassical,
    BelowArThreshold,
    /// Exactly on one of the drawn boundary lines.
    Boundary,
}

/// Classification of `(P1, P2)` with the raw boundary values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    /// `P2 - (1/4 + P1/16)`; positive in the ladder-climbing region.
    pub lc_boundary_value: f64,
    /// `P1 P2`; autoresonant capture requires > 1/2.
    pub ar_product: f64,
    pub classification: Regime,
}

/// Classify a parameter-space point against the two boundary lines.
pub fn classify_regime(p1: f64, p2: f64) -> Result<RegimeReport> {
    if !(p1 >= 0.0) || !p1.is_finite() {
        return Err(Error::invalid(format!("P1 must be >= 0, got {p1}")));
    }
    if !(p2 > 0.0) || !p2.is_finite() {
        return Err(Error::invalid(format!("P2 must be > 0, got {p2}")));
    }
    let lc_boundary_value = p2 - (0.25 + p1 / 16.0);
    let ar_product = p1 * p2;
    let classification = if lc_boundary_value > 0.0 {
        Regime::LadderClimbing
    } else if lc_boundary_value == 0.0 {
        Regime::Boundary
    } else if ar_product > 0.5 {
        Regime::AutoresonantClassical
    } else if ar_product == 0.5 {
        Regime::Boundary
    } else {
        Regime::BelowArThreshold
    };
    Ok(RegimeReport {
        lc_boundary_value,
        ar_product,
        classification,
    })
}

/// `P1` at which the climbing efficiency to `l_hat` is 1/2; the threshold
/// for efficient ladder climbing. Bisection to 1e-6 in `P1`.
pub fn efficient_lc_threshold(l_hat: u32) -> Result<f64> {
    if l_hat < 2 || !l_hat.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "efficient_lc_threshold needs even l_hat >= 2, got {l_hat}"
        )));
    }
    let mut lo = 0.0f64;
    let mut hi = 64.0f64;
    debug_assert!(lc_efficiency(hi, l_hat)? > 0.5);
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if lc_efficiency(mid, l_hat)? < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The level `l* = (1/P2 + 1)/2` at which the slowest neglected RWA
/// frequency `P2 (2l - 1)` reaches 1. The RWA is good for `l >> l*`; for
/// thermal ensembles the same number `(1 + P2)/(2 P2)` is the guard that
/// `l_c` should dominate.
pub fn rwa_min_l(p2: f64) -> Result<f64> {
    if !(p2 > 0.0) || !p2.is_finite() {
        return Err(Error::invalid(format!("P2 must be > 0, got {p2}")));
    }
    Ok((1.0 / p2 + 1.0) / 2.0)
}

/// Weak-drive parameter `sqrt(2 P1 / (l_c (l_c + 1) P2))` of the classical
/// thermal efficiency theory; the theory assumes it is much below 1. The
/// combination is independent of the action scale used to define `P1, P2`.
pub fn weak_drive_param(p1: f64, p2: f64, l_c: f64) -> Result<f64> {
    if !(l_c > 0.0) {
        return Err(Error::invalid(format!("l_c must be > 0, got {l_c}")));
    }
    if !(p2 > 0.0) {
        return Err(Error::invalid(format!("P2 must be > 0, got {p2}")));
    }
    Ok((2.0 / (l_c * (l_c + 1.0)) * p1 / p2).sqrt())
}
