//! Excitation metrics applied uniformly to quantum and classical outputs.
//!
//! Everything works on a normalized distribution over integer `l`. The
//! excitation efficiency counts population at or beyond `l_hat = 0.8 l_f`
//! (a one-sided window); classical angular momenta are first binned to the
//! quantum grid via `l = L / P2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Level resonant with the drive at the final time:
/// `l_f = 1/2 + tau_f / (2 P2)`. Requires `p2 > 0`.
pub fn target_l(tau_f: f64, p2: f64) -> f64 {
    debug_assert!(p2 > 0.0);
    0.5 + tau_f / (2.0 * p2)
}

/// Final time at which `l_f` is the resonant level (inverse of
/// [`target_l`]): `tau_f = P2 (2 l_f - 1)`.
pub fn tau_for_target(l_f: f64, p2: f64) -> f64 {
    p2 * (2.0 * l_f - 1.0)
}

/// Efficiency and bunch-shape summary of a final distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub l_f: f64,
    /// One-sided excitation threshold `0.8 l_f`.
    pub l_hat: f64,
    /// Population with `l >= l_hat`.
    pub efficiency: f64,
    /// Mean `l` over the excited region (0 when empty).
    pub bunch_mean_l: f64,
    /// FWHM of the excited bunch in `l` (0 for single-point support).
    pub bunch_fwhm_l: f64,
    /// Population with `l < l_hat`.
    pub left_behind: f64,
}

/// First index at or above the threshold `l_hat` (integer grid).
fn region_start(l_hat: f64) -> usize {
    // inclusive at integer l_hat, guard float fuzz
    (l_hat - 1e-9).ceil().max(0.0) as usize
}

/// Compute the efficiency report of a normalized distribution over `l`
/// (index = `l`). Rejects distributions off unit mass by more than 1e-3.
pub fn efficiency(dist: &[f64], l_f: f64) -> Result<EfficiencyReport> {
    let total: f64 = dist.iter().sum();
    if (total - 1.0).abs() > 1e-3 {
        return Err(Error::invalid(format!(
            "distribution not normalized: total = {total}"
        )));
    }
    let l_hat = 0.8 * l_f;
    let start = region_start(l_hat).min(dist.len());
    let excited = &dist[start..];
    let eff: f64 = excited.iter().sum();
    let left: f64 = dist[..start].iter().sum();
    let bunch_mean_l = if eff > 1e-12 {
        excited
            .iter()
            .enumerate()
            .map(|(i, &p)| (start + i) as f64 * p)
            .sum::<f64>()
            / eff
    } else {
        0.0
    };
    let bunch_fwhm_l = if eff > 1e-12 {
        bunch_width(dist, start..dist.len())?
    } else {
        0.0
    };
    Ok(EfficiencyReport {
        l_f,
        l_hat,
        efficiency: eff,
        bunch_mean_l,
        bunch_fwhm_l,
        left_behind: left,
    })
}

/// Full width at half maximum of `dist` restricted to `region`, by linear
/// interpolation between integer `l`; plateau ties widen the width. A
/// single-point support gives 0 by convention.
pub fn bunch_width(dist: &[f64], region: std::ops::Range<usize>) -> Result<f64> {
    if region.is_empty() || region.end > dist.len() {
        return Err(Error::invalid(format!(
            "empty or out-of-range region {region:?} (len {})",
            dist.len()
        )));
    }
    let slice = &dist[region.clone()];
    let support = slice.iter().filter(|&&p| p > 0.0).count();
    if support <= 1 {
        return Ok(0.0);
    }
    let (peak_off, &peak) = slice
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty region");
    if peak <= 0.0 {
        return Ok(0.0);
    }
    let half = peak / 2.0;
    let peak_idx = region.start + peak_off;

    // walk left to the first sample strictly below half, then interpolate
    let mut left = region.start as f64; // default: clipped at region edge
    let mut i = peak_idx;
    while i > region.start {
        i -= 1;
        if dist[i] < half {
            let p_lo = dist[i];
            let p_hi = dist[i + 1];
            left = i as f64 + (half - p_lo) / (p_hi - p_lo);
            break;
        }
    }
    let mut right = (region.end - 1) as f64;
    let mut i = peak_idx;
    while i + 1 < region.end {
        i += 1;
        if dist[i] < half {
            let p_hi = dist[i - 1];
            let p_lo = dist[i];
            right = i as f64 - (half - p_lo) / (p_hi - p_lo);
            break;
        }
    }
    Ok(right - left)
}

/// Bin dimensionless classical angular momenta onto the quantum `l` grid
/// (`l = L / P2`, nearest integer), returning a normalized distribution of
/// length `l_max + 1`. Values beyond `l_max` land in the top bin.
pub fn bin_classical_l(big_l: &[f64], p2: f64, l_max: usize) -> Result<Vec<f64>> {
    if big_l.is_empty() {
        return Err(Error::invalid("no classical samples to bin".to_string()));
    }
    if !(p2 > 0.0) {
        return Err(Error::invalid(format!("P2 must be > 0, got {p2}")));
    }
    let mut out = vec![0.0; l_max + 1];
    let w = 1.0 / big_l.len() as f64;
    for &v in big_l {
        let l = (v / p2).round().max(0.0) as usize;
        out[l.min(l_max)] += w;
    }
    Ok(out)
}
