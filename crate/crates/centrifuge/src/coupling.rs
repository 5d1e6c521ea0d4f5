//! Coupling coefficients of the centrifuge interaction in the (l, m) basis.
//!
//! The angle-averaged interaction is a rank-2 tensor, so a state couples to
//! itself and (at most) eight neighbours with `delta l, delta m in {0, +-2}`.
//! The coefficients below are the closed forms of the nine allowed
//! transitions; the `e^{i delta_m phi_d}` drive phase is *not* included here
//! and is applied by the evolution modules. The resonant coefficient
//! `B_{l,m} = c_{l,m}^{-2,-2} = c_{l-2,m-2}^{2,2}` controls each
//! Landau-Zener step of the climbing ladder; its magnitude is bounded by
//! 1/4, which prevents a dynamical transition out of the quantum regime.

use crate::basis::BasisMap;
use crate::error::{Error, Result};

fn prod4(a: i64, b: i64, c: i64, d: i64) -> f64 {
    (a * b * c * d) as f64
}

/// Coupling coefficient for `|l,m> -> |l+dl, m+dm>`.
///
/// Returns 0 when the target state is invalid (`l+dl < 0` or
/// `|m+dm| > l+dl`) or a radicand factor vanishes. `|m| > l` or a
/// disallowed `(dl, dm)` is an error.
pub fn coefficient(l: u32, m: i32, dl: i32, dm: i32) -> Result<f64> {
    let li = l as i64;
    let mi = m as i64;
    if mi.abs() > li {
        return Err(Error::invalid(format!("|m| = {} exceeds l = {l}", m.abs())));
    }
    if ![0, 2, -2].contains(&dl) || ![0, 2, -2].contains(&dm) {
        return Err(Error::invalid(format!(
            "(dl, dm) = ({dl}, {dm}) not in {{0, +-2}}^2"
        )));
    }
    let lt = li + dl as i64;
    let mt = mi + dm as i64;
    if lt < 0 || mt.abs() > lt {
        return Ok(0.0);
    }
    let value = match (dl, dm) {
        (0, 0) => {
            let num = (li * li + li - 3 * mi * mi) as f64;
            let den = ((2 * li - 1) * (2 * li + 3)) as f64;
            -(1.0 / 3.0) * (1.0 - num / den)
        }
        (2, 0) => {
            let num = prod4(li - mi + 1, li - mi + 2, li + mi + 1, li + mi + 2);
            let den = ((2 * li + 1) * (2 * li + 3) * (2 * li + 3) * (2 * li + 5)) as f64;
            0.5 * (num / den).sqrt()
        }
        (-2, 0) => {
            let num = prod4(li - mi - 1, li - mi, li + mi - 1, li + mi);
            let den = ((2 * li + 1) * (2 * li - 1) * (2 * li - 1) * (2 * li - 3)) as f64;
            0.5 * (num / den).sqrt()
        }
        (0, 2) => {
            let num = prod4(li + mi + 1, li + mi + 2, li - mi - 1, li - mi);
            let den = ((2 * li - 1) * (2 * li + 3)) as f64;
            0.5 * num.sqrt() / den
        }
        (0, -2) => {
            let num = prod4(li - mi + 1, li - mi + 2, li + mi - 1, li + mi);
            let den = ((2 * li - 1) * (2 * li + 3)) as f64;
            0.5 * num.sqrt() / den
        }
        (2, 2) => {
            let num = prod4(li + mi + 1, li + mi + 2, li + mi + 3, li + mi + 4);
            let den = ((2 * li + 1) * (2 * li + 3) * (2 * li + 3) * (2 * li + 5)) as f64;
            -0.25 * (num / den).sqrt()
        }
        (2, -2) => {
            let num = prod4(li - mi + 1, li - mi + 2, li - mi + 3, li - mi + 4);
            let den = ((2 * li + 1) * (2 * li + 3) * (2 * li + 3) * (2 * li + 5)) as f64;
            -0.25 * (num / den).sqrt()
        }
        (-2, 2) => {
            let num = prod4(li - mi, li - mi - 1, li - mi - 2, li - mi - 3);
            let den = ((2 * li + 1) * (2 * li - 1) * (2 * li - 1) * (2 * li - 3)) as f64;
            -0.25 * (num / den).sqrt()
        }
        (-2, -2) => {
            let num = prod4(li + mi, li + mi - 1, li + mi - 2, li + mi - 3);
            let den = ((2 * li + 1) * (2 * li - 1) * (2 * li - 1) * (2 * li - 3)) as f64;
            -0.25 * (num / den).sqrt()
        }
        _ => unreachable!(),
    };
    Ok(value)
}

/// Resonant coupling `B_{l,m} = c_{l,m}^{-2,-2}` of the `l-2 -> l` two-level
/// crossing. Requires `l >= 2`.
pub fn b_coefficient(l: u32, m: i32) -> Result<f64> {
    if l < 2 {
        return Err(Error::invalid(format!("B requires l >= 2, got l = {l}")));
    }
    coefficient(l, m, -2, -2)
}

/// Large-l limits of the resonant coefficients at fixed `m/l`:
/// `c^{0,0} -> -1/2 + (1 - m^2/l^2)/4` and `B -> -(1 + m/l)^2 / 16`.
pub fn semiclassical_limits(l: u32, m: i32) -> Result<(f64, f64)> {
    if l == 0 {
        return Err(Error::invalid(
            "semiclassical limit requires l > 0".to_string(),
        ));
    }
    let x = m as f64 / l as f64;
    let c00 = -0.5 + 0.25 * (1.0 - x * x);
    let b = -(1.0 + x) * (1.0 + x) / 16.0;
    Ok((c00, b))
}

/// One stored transition `state(i) -> state(j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingEntry {
    /// Dense index of the target state.
    pub target: u32,
    /// Real coefficient from the table (drive phase excluded).
    pub coeff: f64,
    pub dl: i8,
    pub dm: i8,
}

/// Sparse symmetric coupling matrix over a basis: per-state diagonal
/// `c^{0,0}` plus the off-diagonal transitions that stay inside the basis.
/// Couplings to out-of-basis states are dropped (truncation).
#[derive(Debug, Clone)]
pub struct CouplingTable {
    offsets: Vec<u32>,
    entries: Vec<CouplingEntry>,
    diag: Vec<f64>,
}

const OFF_DIAGONAL_STEPS: [(i32, i32); 8] = [
    (2, 2),
    (2, 0),
    (2, -2),
    (0, 2),
    (0, -2),
    (-2, 2),
    (-2, 0),
    (-2, -2),
];

/// Build the coupling table internal to `basis`.
pub fn build_coupling(basis: &BasisMap) -> CouplingTable {
    let n = basis.len();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut entries = Vec::new();
    let mut diag = Vec::with_capacity(n);
    offsets.push(0u32);
    for (_, l, m) in basis.iter() {
        diag.push(coefficient(l, m, 0, 0).expect("basis state is valid"));
        for (dl, dm) in OFF_DIAGONAL_STEPS {
            let lt = l as i64 + dl as i64;
            let mt = m as i64 + dm as i64;
            if lt < 0 || mt.abs() > lt {
                continue;
            }
            let Some(j) = basis.index_of(lt as u32, mt as i32) else {
                continue;
            };
            let coeff = coefficient(l, m, dl, dm).expect("valid arguments");
            if coeff == 0.0 {
                continue;
            }
            entries.push(CouplingEntry {
                target: j as u32,
                coeff,
                dl: dl as i8,
                dm: dm as i8,
            });
        }
        offsets.push(entries.len() as u32);
    }
    CouplingTable {
        offsets,
        entries,
        diag,
    }
}

impl CouplingTable {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Off-diagonal transitions out of state `i`.
    pub fn entries_for(&self, i: usize) -> &[CouplingEntry] {
        &self.entries[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    /// Diagonal coefficient `c^{0,0}` of state `i`.
    pub fn diag(&self, i: usize) -> f64 {
        self.diag[i]
    }

    pub fn diag_slice(&self) -> &[f64] {
        &self.diag
    }

    pub fn n_entries(&self) -> usize {
        self.entries.len()
    }

    /// All stored transitions as `(l, m, dl, dm, value)`, diagonal included.
    pub fn rows<'a>(
        &'a self,
        basis: &'a BasisMap,
    ) -> impl Iterator<Item = (u32, i32, i8, i8, f64)> + 'a {
        basis.iter().flat_map(move |(i, l, m)| {
            std::iter::once((l, m, 0i8, 0i8, self.diag[i])).chain(
                self.entries_for(i)
                    .iter()
                    .map(move |e| (l, m, e.dl, e.dm, e.coeff)),
            )
        })
    }
}
