//! Embedded Dormand-Prince 5(4) integrator with PI step control.
//!
//! Works on real or complex state vectors through the [`OdeVector`] trait.
//! The right-hand side may fail (e.g. a coordinate singularity); the step is
//! then retried with a halved step until a floor is reached. Error control
//! uses the usual mixed absolute/relative per-component weighting and the
//! PI controller of Hairer's DOPRI5 (beta = 0.04).

use num_complex::Complex64;

use crate::error::{Error, Result};

/// State container the integrator can do axpy arithmetic on. `dims` counts
/// error-control components (one per complex amplitude).
pub trait OdeVector: Clone {
    fn dims(&self) -> usize;
    fn fill_zero(&mut self);
    /// `self += c * other`
    fn scaled_add(&mut self, c: f64, other: &Self);
    fn assign(&mut self, other: &Self);
    fn component_mag(&self, i: usize) -> f64;
}

impl OdeVector for Vec<f64> {
    fn dims(&self) -> usize {
        self.len()
    }
    fn fill_zero(&mut self) {
        self.iter_mut().for_each(|x| *x = 0.0);
    }
    fn scaled_add(&mut self, c: f64, other: &Self) {
        debug_assert_eq!(self.len(), other.len());
        for (x, o) in self.iter_mut().zip(other) {
            *x += c * o;
        }
    }
    fn assign(&mut self, other: &Self) {
        self.copy_from_slice(other);
    }
    fn component_mag(&self, i: usize) -> f64 {
        self[i].abs()
    }
}

impl OdeVector for Vec<Complex64> {
    fn dims(&self) -> usize {
        self.len()
    }
    fn fill_zero(&mut self) {
        self.iter_mut().for_each(|z| *z = Complex64::ZERO);
    }
    fn scaled_add(&mut self, c: f64, other: &Self) {
        debug_assert_eq!(self.len(), other.len());
        for (z, o) in self.iter_mut().zip(other) {
            *z += c * o;
        }
    }
    fn assign(&mut self, other: &Self) {
        self.copy_from_slice(other);
    }
    fn component_mag(&self, i: usize) -> f64 {
        self[i].norm()
    }
}

/// Right-hand-side failure; the integrator retries with a smaller step.
#[derive(Debug, Clone)]
pub struct RhsFailure {
    pub reason: String,
}

pub type RhsResult = std::result::Result<(), RhsFailure>;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: Option<f64>,
    pub initial_step: Option<f64>,
    pub max_steps: u64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: None,
            initial_step: None,
            max_steps: 200_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StepStats {
    pub accepted: u64,
    pub rejected: u64,
    pub rhs_evals: u64,
    pub rhs_failures: u64,
}

impl StepStats {
    fn merge(&mut self, other: StepStats) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.rhs_evals += other.rhs_evals;
        self.rhs_failures += other.rhs_failures;
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const A7: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// b - bhat: weights of the embedded error estimate.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Adaptive integrator with persistent step-size memory, so consecutive
/// spans (e.g. between snapshots) do not restart cold.
pub struct Dopri5<V: OdeVector> {
    opts: OdeOptions,
    h: Option<f64>,
    facold: f64,
    k: Vec<V>,
    ytmp: V,
    ynew: V,
    yerr: V,
    fsal_valid: bool,
}

impl<V: OdeVector> Dopri5<V> {
    pub fn new(opts: OdeOptions, prototype: &V) -> Self {
        let mut zero = prototype.clone();
        zero.fill_zero();
        Dopri5 {
            opts,
            h: opts.initial_step,
            facold: 1e-4,
            k: vec![zero.clone(); 7],
            ytmp: zero.clone(),
            ynew: zero.clone(),
            yerr: zero,
            fsal_valid: false,
        }
    }

    /// Invalidate the FSAL cache (call when the RHS changes discontinuously,
    /// e.g. at a pulse truncation time).
    pub fn reset_fsal(&mut self) {
        self.fsal_valid = false;
    }

    /// Integrate `y` from `t0` to `t1` (`t1 > t0`), calling `on_step(t, y)`
    /// after every accepted step.
    pub fn integrate<F, G>(
        &mut self,
        mut rhs: F,
        t0: f64,
        t1: f64,
        y: &mut V,
        mut on_step: G,
    ) -> Result<StepStats>
    where
        F: FnMut(f64, &V, &mut V) -> RhsResult,
        G: FnMut(f64, &V),
    {
        let mut stats = StepStats::default();
        if t1 <= t0 {
            if t1 == t0 {
                return Ok(stats);
            }
            return Err(Error::invalid(format!(
                "integration span reversed: {t0} -> {t1}"
            )));
        }
        let span = t1 - t0;
        let hmax = self.opts.max_step.unwrap_or(span).min(span);
        let mut h = self.h.unwrap_or(span * 1e-6).min(hmax).max(span * 1e-300);
        let mut t = t0;

        // FSAL: k[0] at (t, y)
        if !self.fsal_valid {
            stats.rhs_evals += 1;
            if let Err(failure) = rhs(t, y, &mut self.k[0]) {
                // cannot shrink h around the initial evaluation
                return Err(Error::Integration {
                    tau: t,
                    reason: failure.reason,
                });
            }
            self.fsal_valid = true;
        }

        let mut rejected_prev = false;
        loop {
            if stats.accepted + stats.rejected >= self.opts.max_steps {
                return Err(Error::Integration {
                    tau: t,
                    reason: format!("step budget exhausted ({} steps)", self.opts.max_steps),
                });
            }
            let min_h = 1e3 * f64::EPSILON * t.abs().max(1.0);
            if h < min_h {
                return Err(Error::Integration {
                    tau: t,
                    reason: format!("step size underflow (h = {h:e})"),
                });
            }
            let mut last = t + h >= t1;
            if last {
                h = t1 - t;
                last = true;
            }

            match self.stages(&mut rhs, t, h, y, &mut stats) {
                Ok(()) => {}
                Err(failure) => {
                    // RHS singularity inside the step: retry smaller.
                    stats.rhs_failures += 1;
                    h *= 0.5;
                    if h < min_h {
                        return Err(Error::Integration {
                            tau: t,
                            reason: failure.reason,
                        });
                    }
                    continue;
                }
            }

            // weighted RMS error norm
            let n = y.dims();
            let mut err_sq = 0.0;
            for i in 0..n {
                let sc = self.opts.abs_tol
                    + self.opts.rel_tol * y.component_mag(i).max(self.ynew.component_mag(i));
                let e = self.yerr.component_mag(i) / sc;
                err_sq += e * e;
            }
            let err = (err_sq / n.max(1) as f64).sqrt();

            let fac11 = err.powf(EXPO1);
            if err <= 1.0 {
                // accept
                self.facold = err.max(1e-4);
                stats.accepted += 1;
                t += h;
                y.assign(&self.ynew);
                self.k.swap(0, 6); // FSAL
                on_step(t, y);
                if last || (t1 - t) <= f64::EPSILON * t1.abs().max(1.0) {
                    self.h = Some(h.min(hmax));
                    return Ok(stats);
                }
                let mut fac = fac11 / self.facold.powf(BETA);
                fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                let mut hnew = h / fac;
                if rejected_prev {
                    hnew = hnew.min(h);
                }
                rejected_prev = false;
                h = hnew.min(hmax);
            } else {
                stats.rejected += 1;
                rejected_prev = true;
                h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
            }
        }
    }

    /// Evaluate the seven stages; on success fills `ynew` (5th order) and
    /// `yerr` (embedded difference).
    fn stages<F>(
        &mut self,
        rhs: &mut F,
        t: f64,
        h: f64,
        y: &V,
        stats: &mut StepStats,
    ) -> std::result::Result<(), RhsFailure>
    where
        F: FnMut(f64, &V, &mut V) -> RhsResult,
    {
        let a_rows: [&[f64]; 5] = [&A2, &A3, &A4, &A5, &A6];
        for (stage, a) in a_rows.iter().enumerate() {
            self.ytmp.assign(y);
            for (j, &aj) in a.iter().enumerate() {
                if aj != 0.0 {
                    self.ytmp.scaled_add(h * aj, &self.k[j]);
                }
            }
            stats.rhs_evals += 1;
            let (head, tail) = self.k.split_at_mut(stage + 1);
            let _ = head;
            rhs(t + C[stage + 1] * h, &self.ytmp, &mut tail[0])?;
        }
        // 5th-order solution; also stage 7 position (FSAL)
        self.ynew.assign(y);
        for (j, &aj) in A7.iter().enumerate() {
            if aj != 0.0 {
                self.ynew.scaled_add(h * aj, &self.k[j]);
            }
        }
        stats.rhs_evals += 1;
        {
            let (head, tail) = self.k.split_at_mut(6);
            let _ = head;
            rhs(t + h, &self.ynew, &mut tail[0])?;
        }
        self.yerr.fill_zero();
        for (j, &ej) in E.iter().enumerate() {
            if ej != 0.0 {
                self.yerr.scaled_add(h * ej, &self.k[j]);
            }
        }
        Ok(())
    }
}

/// One-shot convenience wrapper.
pub fn integrate<V, F>(rhs: F, t0: f64, t1: f64, y: &mut V, opts: OdeOptions) -> Result<StepStats>
where
    V: OdeVector,
    F: FnMut(f64, &V, &mut V) -> RhsResult,
{
    let mut solver = Dopri5::new(opts, y);
    let mut stats = StepStats::default();
    stats.merge(solver.integrate(rhs, t0, t1, y, |_, _| {})?);
    Ok(stats)
}
