//! Drive pulse: chirped phase and amplitude envelope.
//!
//! The polarization angle accelerates linearly, `d phi_d / d tau = tau / 2`
//! in dimensionless time, starting from zero frequency at `tau = 0`. The
//! amplitude is either constant (switched on at `tau = 0`) or a Gaussian
//! peaked at `tau = 0`, optionally truncated (set to zero) past a cutoff.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Drive phase `phi_d(tau) = tau^2 / 4` (integral of the instantaneous
/// frequency `tau / 2`, with `phi_d(0) = 0`).
pub fn drive_phase(tau: f64) -> f64 {
    tau * tau * 0.25
}

/// Amplitude envelope shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Envelope {
    /// `P1(tau) = p1` for all `tau >= 0`.
    Constant { p1: f64 },
    /// `P1(tau) = p10 exp(-tau^2 / (2 sigma^2))`, peak at `tau = 0`.
    Gaussian { p10: f64, sigma: f64 },
}

/// Drive amplitude as a function of dimensionless time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrivePulse {
    pub envelope: Envelope,
    /// Amplitude is zero for `tau > truncation_tau` when set.
    #[serde(default)]
    pub truncation_tau: Option<f64>,
}

impl DrivePulse {
    /// Constant-envelope pulse with amplitude `p1`, no truncation.
    pub fn constant(p1: f64) -> Self {
        DrivePulse {
            envelope: Envelope::Constant { p1 },
            truncation_tau: None,
        }
    }

    /// Gaussian-envelope pulse, peak amplitude `p10` at `tau = 0`.
    pub fn gaussian(p10: f64, sigma: f64) -> Self {
        DrivePulse {
            envelope: Envelope::Gaussian { p10, sigma },
            truncation_tau: None,
        }
    }

    pub fn with_truncation(mut self, tau: f64) -> Self {
        self.truncation_tau = Some(tau);
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.envelope {
            Envelope::Constant { p1 } => {
                if !(p1 >= 0.0) || !p1.is_finite() {
                    return Err(Error::invalid(format!(
                        "pulse amplitude must be >= 0, got {p1}"
                    )));
                }
            }
            Envelope::Gaussian { p10, sigma } => {
                if !(p10 > 0.0) || !p10.is_finite() {
                    return Err(Error::invalid(format!(
                        "Gaussian P10 must be > 0, got {p10}"
                    )));
                }
                if !(sigma > 0.0) || !sigma.is_finite() {
                    return Err(Error::invalid(format!(
                        "Gaussian sigma must be > 0, got {sigma}"
                    )));
                }
            }
        }
        if let Some(t) = self.truncation_tau {
            if !t.is_finite() || t < 0.0 {
                return Err(Error::invalid(format!(
                    "truncation tau must be >= 0, got {t}"
                )));
            }
        }
        Ok(())
    }

    /// Instantaneous drive amplitude `P1(tau)`.
    pub fn amplitude(&self, tau: f64) -> f64 {
        if let Some(cut) = self.truncation_tau {
            if tau > cut {
                return 0.0;
            }
        }
        match self.envelope {
            Envelope::Constant { p1 } => p1,
            Envelope::Gaussian { p10, sigma } => p10 * (-tau * tau / (2.0 * sigma * sigma)).exp(),
        }
    }

    /// Peak amplitude (`p1` or `p10`).
    pub fn nominal_amplitude(&self) -> f64 {
        match self.envelope {
            Envelope::Constant { p1 } => p1,
            Envelope::Gaussian { p10, .. } => p10,
        }
    }

    /// `amplitude(tau) / nominal_amplitude`, in [0, 1].
    pub fn envelope_fraction(&self, tau: f64) -> f64 {
        let nominal = self.nominal_amplitude();
        if nominal == 0.0 {
            0.0
        } else {
            self.amplitude(tau) / nominal
        }
    }
}
