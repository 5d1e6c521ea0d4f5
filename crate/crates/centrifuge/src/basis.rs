//! Truncated (l, m) spherical-harmonic basis with index maps and symmetry
//! sectors.
//!
//! The drive couples `|l,m>` only to `delta l, delta m in {0, +-2}`, so the
//! parities of `l` and `m` are conserved separately and the difference
//! `C = l - m` stays bounded during climbing. The basis is truncated by
//! `l <= l_max` and `0 <= C <= c_max`, optionally restricted to one parity
//! sector.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Parity of an integer quantum number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(n: i64) -> Parity {
        if n.rem_euclid(2) == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn matches(self, n: i64) -> bool {
        Parity::of(n) == self
    }
}

/// Indexed basis of `(l, m)` states. Iteration order is ascending `l`, then
/// ascending `m`; the index map is bijective.
#[derive(Debug, Clone)]
pub struct BasisMap {
    l_max: u32,
    c_max: u32,
    parity_l: Option<Parity>,
    parity_m: Option<Parity>,
    states: Vec<(u32, i32)>,
    index: HashMap<(u32, i32), usize>,
}

/// Enumerate the basis. `parity_l` / `parity_m` of `None` admit both
/// parities (a union of sectors; dynamics never mixes them).
pub fn build_basis(
    l_max: u32,
    c_max: u32,
    parity_l: Option<Parity>,
    parity_m: Option<Parity>,
) -> Result<BasisMap> {
    let mut states = Vec::new();
    for l in 0..=l_max {
        if let Some(p) = parity_l {
            if !p.matches(l as i64) {
                continue;
            }
        }
        let m_min = (l as i64 - c_max as i64).max(-(l as i64));
        for m in m_min..=l as i64 {
            if let Some(p) = parity_m {
                if !p.matches(m) {
                    continue;
                }
            }
            states.push((l, m as i32));
        }
    }
    if states.is_empty() {
        return Err(Error::invalid(format!(
            "empty basis: l_max={l_max}, c_max={c_max}, parity_l={parity_l:?}, parity_m={parity_m:?}"
        )));
    }
    let index = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    Ok(BasisMap {
        l_max,
        c_max,
        parity_l,
        parity_m,
        states,
        index,
    })
}

impl BasisMap {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty bases
    }

    pub fn l_max(&self) -> u32 {
        self.l_max
    }

    pub fn c_max(&self) -> u32 {
        self.c_max
    }

    pub fn parity_l(&self) -> Option<Parity> {
        self.parity_l
    }

    pub fn parity_m(&self) -> Option<Parity> {
        self.parity_m
    }

    /// State at dense index `i`.
    pub fn state(&self, i: usize) -> (u32, i32) {
        self.states[i]
    }

    /// Dense index of `(l, m)`, if present.
    pub fn index_of(&self, l: u32, m: i32) -> Option<usize> {
        self.index.get(&(l, m)).copied()
    }

    pub fn contains(&self, l: u32, m: i32) -> bool {
        self.index.contains_key(&(l, m))
    }

    pub fn states(&self) -> &[(u32, i32)] {
        &self.states
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u32, i32)> + '_ {
        self.states.iter().enumerate().map(|(i, &(l, m))| (i, l, m))
    }

    /// Indices of the chain `C = l - m`, ascending in `l`.
    pub fn chain_indices(&self, c: u32) -> Vec<usize> {
        self.iter()
            .filter(|&(_, l, m)| l as i64 - m as i64 == c as i64)
            .map(|(i, _, _)| i)
            .collect()
    }
}

/// Amplitude frame: lab (`a_{l,m}`) or rotating (`W_{l,m} = e^{i l phi_d} a_{l,m}`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Lab,
    Rotating,
}

/// Complex amplitudes aligned with a [`BasisMap`].
#[derive(Debug, Clone)]
pub struct StateVector {
    pub amps: Vec<Complex64>,
    pub frame: Frame,
}

impl StateVector {
    /// Zero state aligned with `basis`.
    pub fn zeros(basis: &BasisMap, frame: Frame) -> Self {
        StateVector {
            amps: vec![Complex64::ZERO; basis.len()],
            frame,
        }
    }

    /// Unit population in `|l, m>`.
    pub fn basis_state(basis: &BasisMap, l: u32, m: i32, frame: Frame) -> Result<Self> {
        let idx = basis
            .index_of(l, m)
            .ok_or_else(|| Error::invalid(format!("state ({l}, {m}) not in basis")))?;
        let mut sv = StateVector::zeros(basis, frame);
        sv.amps[idx] = Complex64::ONE;
        Ok(sv)
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Population per `l` (summed over `m`), indexed `0..=l_max`.
    pub fn populations_by_l(&self, basis: &BasisMap) -> Vec<f64> {
        let mut out = vec![0.0; basis.l_max() as usize + 1];
        for (i, l, _) in basis.iter() {
            out[l as usize] += self.amps[i].norm_sqr();
        }
        out
    }
}
