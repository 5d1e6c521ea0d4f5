//! Classical rigid rotor in the rotating-polarization potential, with
//! thermal Monte Carlo sampling.
//!
//! Dimensionless Hamiltonian (momenta scaled by `I sqrt(beta)`, time by
//! `1/sqrt(beta)`):
//!
//! ```text
//! H = (pi_theta^2 + pi_phi^2 / sin^2 theta) / 2
//!     - u(tau) sin^2 theta cos^2(phi - phi_d),   u = P1 P2 * envelope
//! ```
//!
//! The potential is linear in the drive coupling, so the envelope enters
//! `u` linearly (not squared). Capture into autoresonance drags the
//! angular momentum `L` up with the chirp; the Monte Carlo efficiency
//! counts trajectories with final `L >= 0.8 L_f`, `L_f = tau_f / 2`,
//! mirroring the quantum metric.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ode::{Dopri5, OdeOptions, RhsFailure, StepStats};
use crate::pulse::{drive_phase, DrivePulse};

/// Phase-space point `(theta, phi, pi_theta, pi_phi)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ClassicalState {
    pub theta: f64,
    pub phi: f64,
    pub pi_theta: f64,
    pub pi_phi: f64,
}

impl ClassicalState {
    /// Total dimensionless angular momentum
    /// `L = sqrt(pi_theta^2 + pi_phi^2 / sin^2 theta)`.
    pub fn angular_momentum(&self) -> f64 {
        let s = self.theta.sin();
        (self.pi_theta * self.pi_theta + self.pi_phi * self.pi_phi / (s * s)).sqrt()
    }

    /// Kinetic plus potential energy at `tau`.
    pub fn energy(&self, tau: f64, p1p2: f64, pulse: &DrivePulse) -> f64 {
        let s = self.theta.sin();
        let kin = 0.5 * (self.pi_theta * self.pi_theta + self.pi_phi * self.pi_phi / (s * s));
        let u = p1p2 * pulse.envelope_fraction(tau);
        let cosd = (self.phi - drive_phase(tau)).cos();
        kin - u * s * s * cosd * cosd
    }
}

const POLE_GUARD: f64 = 1e-9;

/// Hamilton equations of motion. The effective coupling is
/// `u(tau) = p1p2 * envelope_fraction(tau)`; `phi_d` is the standard chirp
/// phase. Errors when `|sin theta|` drops below the pole guard.
pub fn classical_derivatives(
    state: &ClassicalState,
    tau: f64,
    p1p2: f64,
    pulse: &DrivePulse,
) -> Result<ClassicalState> {
    derivatives_with_phase(state, tau, p1p2, pulse, drive_phase).map_err(|_| {
        Error::PoleSingularity {
            tau,
            sin_theta: state.theta.sin(),
        }
    })
}

fn derivatives_with_phase(
    state: &ClassicalState,
    tau: f64,
    p1p2: f64,
    pulse: &DrivePulse,
    phase: impl Fn(f64) -> f64,
) -> std::result::Result<ClassicalState, RhsFailure> {
    let s = state.theta.sin();
    if s.abs() < POLE_GUARD {
        return Err(RhsFailure {
            reason: format!("polar singularity: |sin theta| = {:e}", s.abs()),
        });
    }
    let c = state.theta.cos();
    let u = p1p2 * pulse.envelope_fraction(tau);
    let delta = state.phi - phase(tau);
    let cos_d = delta.cos();
    let s2 = s * s;
    Ok(ClassicalState {
        theta: state.pi_theta,
        phi: state.pi_phi / s2,
        pi_theta: state.pi_phi * state.pi_phi * c / (s2 * s) + 2.0 * u * s * c * cos_d * cos_d,
        pi_phi: -u * s2 * (2.0 * delta).sin(),
    })
}

/// Thermal ensemble description in classical dimensionless units.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ClassicalEnsembleSpec {
    pub n_samples: usize,
    /// Thermal momentum scale `P2_cl = sqrt(kB T / (I beta))`.
    pub p2_cl: f64,
    pub rng_seed: u64,
}

/// Map the quantum parameters to the classical thermal momentum scale:
/// `P2_cl = P2 sqrt(l_c (l_c + 1) / 2)`.
pub fn classical_p2(p2: f64, l_c: f64) -> f64 {
    p2 * (l_c * (l_c + 1.0) / 2.0).sqrt()
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    // independent, order-free streams: one mixed seed per sample
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(index.wrapping_add(1))))
}

fn draw_sample(spec: &ClassicalEnsembleSpec, index: u64) -> ClassicalState {
    let mut rng = sample_rng(spec.rng_seed, index);
    let uni = Uniform::new(0.0f64, 1.0).expect("unit interval");
    let theta = f64::acos(1.0 - 2.0 * uni.sample(&mut rng));
    let phi = std::f64::consts::TAU * uni.sample(&mut rng);
    if spec.p2_cl == 0.0 {
        return ClassicalState {
            theta,
            phi,
            pi_theta: 0.0,
            pi_phi: 0.0,
        };
    }
    let n_theta = Normal::new(0.0, spec.p2_cl).expect("positive std");
    let n_phi = Normal::new(0.0, spec.p2_cl * theta.sin()).expect("positive std");
    ClassicalState {
        theta,
        phi,
        pi_theta: n_theta.sample(&mut rng),
        pi_phi: n_phi.sample(&mut rng),
    }
}

/// Canonical thermal sample of the free rotor: `theta ~ sin(theta)`, `phi`
/// uniform, `pi_theta ~ N(0, P2_cl^2)`, `pi_phi ~ N(0, P2_cl^2 sin^2 theta)`.
/// Deterministic for a given seed, independent of evaluation order.
pub fn sample_thermal_classical(spec: &ClassicalEnsembleSpec) -> Result<Vec<ClassicalState>> {
    if spec.n_samples == 0 {
        return Err(Error::invalid("n_samples must be >= 1".to_string()));
    }
    if !(spec.p2_cl >= 0.0) || !spec.p2_cl.is_finite() {
        return Err(Error::invalid(format!(
            "p2_cl must be >= 0, got {}",
            spec.p2_cl
        )));
    }
    Ok((0..spec.n_samples as u64)
        .map(|i| draw_sample(spec, i))
        .collect())
}

/// Default integration accuracy for classical trajectories.
fn classical_ode_options() -> OdeOptions {
    OdeOptions {
        rel_tol: 1e-8,
        abs_tol: 1e-10,
        ..Default::default()
    }
}

pub(crate) fn evolve_classical_with_phase(
    state0: &ClassicalState,
    p1p2: f64,
    pulse: &DrivePulse,
    tau_f: f64,
    phase: impl Fn(f64) -> f64 + Copy,
    mut on_step: impl FnMut(f64, &ClassicalState),
) -> Result<(ClassicalState, StepStats)> {
    evolve_classical_with_phase_opts(
        state0,
        p1p2,
        pulse,
        (0.0, tau_f),
        phase,
        &mut on_step,
        classical_ode_options(),
    )
}

pub(crate) fn evolve_classical_with_phase_opts(
    state0: &ClassicalState,
    p1p2: f64,
    pulse: &DrivePulse,
    span: (f64, f64),
    phase: impl Fn(f64) -> f64 + Copy,
    on_step: &mut impl FnMut(f64, &ClassicalState),
    opts: OdeOptions,
) -> Result<(ClassicalState, StepStats)> {
    let pulse = *pulse;
    let rhs =
        move |tau: f64, y: &Vec<f64>, dy: &mut Vec<f64>| -> std::result::Result<(), RhsFailure> {
            let s = ClassicalState {
                theta: y[0],
                phi: y[1],
                pi_theta: y[2],
                pi_phi: y[3],
            };
            let d = derivatives_with_phase(&s, tau, p1p2, &pulse, phase)?;
            dy[0] = d.theta;
            dy[1] = d.phi;
            dy[2] = d.pi_theta;
            dy[3] = d.pi_phi;
            Ok(())
        };
    let mut y = vec![state0.theta, state0.phi, state0.pi_theta, state0.pi_phi];
    let mut solver = Dopri5::new(opts, &y);
    let stats = solver.integrate(rhs, span.0, span.1, &mut y, |t, y| {
        on_step(
            t,
            &ClassicalState {
                theta: y[0],
                phi: y[1],
                pi_theta: y[2],
                pi_phi: y[3],
            },
        )
    })?;
    Ok((
        ClassicalState {
            theta: y[0],
            phi: y[1],
            pi_theta: y[2],
            pi_phi: y[3],
        },
        stats,
    ))
}

/// Integrate one classical trajectory under the standard chirp.
pub fn evolve_classical_trajectory(
    state0: &ClassicalState,
    p1p2: f64,
    pulse: &DrivePulse,
    tau_f: f64,
) -> Result<ClassicalState> {
    evolve_classical_with_phase(state0, p1p2, pulse, tau_f, drive_phase, |_, _| {}).map(|(s, _)| s)
}

/// Monte Carlo excitation efficiency.
#[derive(Debug, Clone)]
pub struct McResult {
    /// Fraction of samples with final `L >= 0.8 L_f`.
    pub efficiency: f64,
    /// Binomial standard error `sqrt(p (1-p) / n)`.
    pub std_error: f64,
    pub n_samples: usize,
    pub n_failed: usize,
    /// Capture threshold used, `0.8 L_f`.
    pub capture_threshold: f64,
    /// Final state and `L` per sample (`None` for failed trajectories).
    pub samples: Vec<Option<(ClassicalState, f64)>>,
}

/// Monte Carlo estimate of the autoresonant excitation efficiency at
/// `(P1, P2)`: evolve `n_samples` thermal trajectories to `tau_f` and count
/// those with `L >= 0.8 L_f`, `L_f = tau_f / 2`. Fails when more than 0.1%
/// of trajectories do not integrate.
pub fn mc_efficiency(
    spec: &ClassicalEnsembleSpec,
    p1: f64,
    p2: f64,
    pulse: &DrivePulse,
    tau_f: f64,
) -> Result<McResult> {
    if spec.n_samples < 100 {
        return Err(Error::invalid(format!(
            "mc_efficiency needs n_samples >= 100, got {}",
            spec.n_samples
        )));
    }
    if !(tau_f > 0.0) {
        return Err(Error::invalid(format!("tau_f must be > 0, got {tau_f}")));
    }
    pulse.validate()?;
    let p1p2 = p1 * p2;
    let l_big_f = tau_f / 2.0;
    let threshold = 0.8 * l_big_f;

    let samples: Vec<Option<(ClassicalState, f64)>> = (0..spec.n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let s0 = draw_sample(spec, i);
            match evolve_classical_trajectory(&s0, p1p2, pulse, tau_f) {
                Ok(sf) => {
                    let l = sf.angular_momentum();
                    Some((sf, l))
                }
                Err(_) => None,
            }
        })
        .collect();

    let n_failed = samples.iter().filter(|s| s.is_none()).count();
    if n_failed as f64 > 0.001 * spec.n_samples as f64 {
        return Err(Error::Integration {
            tau: tau_f,
            reason: format!(
                "{n_failed} of {} classical trajectories failed",
                spec.n_samples
            ),
        });
    }
    let n_ok = spec.n_samples - n_failed;
    let captured = samples
        .iter()
        .flatten()
        .filter(|(_, l)| *l >= threshold)
        .count();
    let p = captured as f64 / n_ok as f64;
    let std_error = (p * (1.0 - p) / n_ok as f64).sqrt();
    Ok(McResult {
        efficiency: p,
        std_error,
        n_samples: spec.n_samples,
        n_failed,
        capture_threshold: threshold,
        samples,
    })
}
