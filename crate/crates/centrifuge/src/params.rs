//! Physical-to-dimensionless parameter conversion.
//!
//! The chirped-drive rotor problem has three time scales: the sweep time
//! `1/sqrt(beta)`, the Rabi time `hbar/epsilon` and the rotational time
//! `I/hbar`. Their ratios give the two control parameters
//!
//! * `P1 = epsilon / (hbar sqrt(beta))` — drive strength,
//! * `P2 = hbar / (I sqrt(beta))` — nonlinearity (quantumness).
//!
//! All dynamics modules work in these dimensionless units; this module is
//! the only place SI quantities appear.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Reduced Planck constant, J s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const KB_SI: f64 = 1.380_649e-23;

/// Polarizability anisotropy and field amplitude, for cross-checking the
/// drive coupling `epsilon = (alpha_par - alpha_perp) E0^2 / 4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizabilityDrive {
    /// Parallel polarizability volume (SI).
    pub alpha_par: f64,
    /// Perpendicular polarizability volume (SI).
    pub alpha_perp: f64,
    /// Electric field amplitude (SI).
    pub e0: f64,
}

/// Laboratory-frame parameters of a drive/molecule combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Drive coupling energy `epsilon`, J.
    pub epsilon: f64,
    /// Chirp rate `beta`, 1/s^2.
    pub beta: f64,
    /// Moment of inertia `I`, kg m^2.
    pub inertia: f64,
    /// Action scale, J s. Normally [`HBAR_SI`].
    pub hbar: f64,
    /// Thermal energy `kB T`, J, when modelling a thermal ensemble.
    pub kb_t: Option<f64>,
    /// Optional drive decomposition; must reproduce `epsilon` when given.
    pub drive: Option<PolarizabilityDrive>,
}

impl PhysicalParams {
    pub fn new(epsilon: f64, beta: f64, inertia: f64, hbar: f64) -> Self {
        PhysicalParams {
            epsilon,
            beta,
            inertia,
            hbar,
            kb_t: None,
            drive: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::invalid(format!(
                "beta must be > 0, got {}",
                self.beta
            )));
        }
        if !(self.inertia > 0.0) || !self.inertia.is_finite() {
            return Err(Error::invalid(format!(
                "inertia must be > 0, got {}",
                self.inertia
            )));
        }
        if !(self.hbar > 0.0) || !self.hbar.is_finite() {
            return Err(Error::invalid(format!(
                "hbar must be > 0, got {}",
                self.hbar
            )));
        }
        if !self.epsilon.is_finite() || self.epsilon < 0.0 {
            return Err(Error::invalid(format!(
                "epsilon must be finite and >= 0, got {}",
                self.epsilon
            )));
        }
        if let Some(kb_t) = self.kb_t {
            if kb_t < 0.0 {
                return Err(Error::invalid(format!("kB T must be >= 0, got {kb_t}")));
            }
        }
        if let Some(d) = &self.drive {
            let eps = (d.alpha_par - d.alpha_perp) * d.e0 * d.e0 / 4.0;
            let scale = eps.abs().max(self.epsilon.abs());
            if (eps - self.epsilon).abs() > 1e-12 * scale {
                return Err(Error::invalid(format!(
                    "epsilon = {} inconsistent with (alpha_par - alpha_perp) E0^2/4 = {eps}",
                    self.epsilon
                )));
            }
        }
        Ok(())
    }
}

/// The two dimensionless control parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DimensionlessParams {
    /// Drive strength `P1 >= 0`.
    pub p1: f64,
    /// Nonlinearity `P2 > 0`.
    pub p2: f64,
}

impl DimensionlessParams {
    pub fn new(p1: f64, p2: f64) -> Result<Self> {
        if !(p1 >= 0.0) || !p1.is_finite() {
            return Err(Error::invalid(format!("P1 must be >= 0, got {p1}")));
        }
        if !(p2 > 0.0) || !p2.is_finite() {
            return Err(Error::invalid(format!("P2 must be > 0, got {p2}")));
        }
        Ok(DimensionlessParams { p1, p2 })
    }

    /// The product `P1 P2 = epsilon/(I beta)`, shared with the classical
    /// description (`P1 P2 = P1_cl P2_cl`).
    pub fn p1p2(&self) -> f64 {
        self.p1 * self.p2
    }
}

/// Convert physical parameters to the dimensionless pair.
pub fn derive_params(phys: &PhysicalParams) -> Result<DimensionlessParams> {
    phys.validate()?;
    let sqrt_beta = phys.beta.sqrt();
    let p1 = phys.epsilon / (phys.hbar * sqrt_beta);
    let p2 = phys.hbar / (phys.inertia * sqrt_beta);
    DimensionlessParams::new(p1, p2)
}

/// Characteristic thermal rotational quantum number: the non-negative root
/// of `kB T = hbar^2 l_c (l_c + 1) / (2 I)`.
pub fn thermal_lc(kb_t: f64, inertia: f64, hbar: f64) -> Result<f64> {
    if kb_t < 0.0 || !kb_t.is_finite() {
        return Err(Error::invalid(format!("kB T must be >= 0, got {kb_t}")));
    }
    if !(inertia > 0.0) || !(hbar > 0.0) {
        return Err(Error::invalid("inertia and hbar must be > 0".to_string()));
    }
    // l_c (l_c + 1) = x, x = 2 I kB T / hbar^2
    let x = 2.0 * inertia * kb_t / (hbar * hbar);
    Ok(0.5 * ((1.0 + 4.0 * x).sqrt() - 1.0))
}

const BUILTIN_MOLECULES: &str = include_str!("../data/molecules.txt");

/// Parse a molecule table: one `name inertia` pair per line, `#` comments,
/// inertia in kg m^2.
pub fn parse_inertia_table(text: &str) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let name = it.next().unwrap().to_string();
        let value = it
            .next()
            .ok_or_else(|| {
                Error::invalid(format!("molecule table line {}: missing value", lineno + 1))
            })?
            .parse::<f64>()
            .map_err(|e| Error::invalid(format!("molecule table line {}: {e}", lineno + 1)))?;
        if it.next().is_some() {
            return Err(Error::invalid(format!(
                "molecule table line {}: trailing tokens",
                lineno + 1
            )));
        }
        if !(value > 0.0) {
            return Err(Error::invalid(format!(
                "molecule table line {}: inertia must be > 0",
                lineno + 1
            )));
        }
        out.push((name, value));
    }
    Ok(out)
}

fn builtin_table() -> &'static [(String, f64)] {
    static TABLE: OnceLock<Vec<(String, f64)>> = OnceLock::new();
    TABLE.get_or_init(|| parse_inertia_table(BUILTIN_MOLECULES).expect("bundled molecule table"))
}

/// Moment of inertia (kg m^2) of a bundled molecule, if known.
pub fn molecule_inertia(name: &str) -> Option<f64> {
    builtin_table()
        .iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .map(|&(_, v)| v)
}

/// Names in the bundled molecule table.
pub fn molecule_names() -> Vec<&'static str> {
    builtin_table().iter().map(|(n, _)| n.as_str()).collect()
}
