//! Optical-centrifuge dynamics toolkit.
//!
//! Simulates rotational excitation of rigid-rotor molecules by a chirped
//! rotating drive, in both its quantum regime (ladder climbing by
//! successive Landau-Zener transitions) and its classical regime
//! (autoresonance), together with the closed-form theory that separates
//! the two in the `(P1, P2)` parameter space.
//!
//! Layout:
//!
//! * [`params`] — physical units in, dimensionless `P1`/`P2` out.
//! * [`pulse`] — chirp phase and amplitude envelope.
//! * [`basis`] — truncated `(l, m)` basis with parity sectors.
//! * [`coupling`] — exact interaction coefficients and their limits.
//! * [`ode`] — adaptive Dormand-Prince 5(4) integrator.
//! * [`evolve`] — full, RWA-chain and two-level quantum propagation.
//! * [`thermal`] — Boltzmann ensembles and a von Neumann cross-check.
//! * [`theory`] — Landau-Zener step/efficiency formulas, regime map.
//! * [`classical`] — rigid-rotor Monte Carlo in the rotating potential.
//! * [`analysis`] — excitation-efficiency and bunch-width metrics.

// `!(x > 0)`-style guards are used throughout validation: unlike `x <= 0`
// they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod basis;
pub mod classical;
pub mod coupling;
pub mod error;
pub mod evolve;
pub mod ode;
pub mod params;
pub mod pulse;
pub mod theory;
pub mod thermal;

pub use basis::{build_basis, BasisMap, Frame, Parity, StateVector};
pub use coupling::{
    b_coefficient, build_coupling, coefficient, semiclassical_limits, CouplingTable,
};
pub use error::{Error, Result};
pub use params::{derive_params, thermal_lc, DimensionlessParams, PhysicalParams};
pub use pulse::{drive_phase, DrivePulse, Envelope};

/// Common imports for working with the toolkit.
pub mod prelude {
    pub use crate::analysis::{
        bin_classical_l, bunch_width, efficiency, target_l, tau_for_target, EfficiencyReport,
    };
    pub use crate::basis::{build_basis, BasisMap, Frame, Parity, StateVector};
    pub use crate::classical::{
        classical_p2, mc_efficiency, sample_thermal_classical, ClassicalEnsembleSpec,
        ClassicalState, McResult,
    };
    pub use crate::coupling::{
        b_coefficient, build_coupling, coefficient, semiclassical_limits, CouplingTable,
    };
    pub use crate::error::{Error, Result};
    pub use crate::evolve::{
        crossing_time, evolve_full, evolve_rwa_chain, two_level_lz, EvolveConfig, Trajectory,
    };
    pub use crate::params::{derive_params, thermal_lc, DimensionlessParams, PhysicalParams};
    pub use crate::pulse::{drive_phase, DrivePulse, Envelope};
    pub use crate::theory::{
        classify_regime, efficient_lc_threshold, lc_efficiency, lz_probability, rwa_min_l,
        weak_drive_param, Regime, RegimeReport,
    };
    pub use crate::thermal::{
        evolve_thermal, thermal_weights, von_neumann_check, EnsembleResult, ThermalNumerics,
        ThermalSpec,
    };
}

#[cfg(doctest)]
mod readme_doctest {
    macro_rules! doc_check {
        ($x:expr) => {
            #[doc = $x]
            extern "C" {}
        };
    }
    doc_check!(include_str!("../../../README.md"));
}
