//! Thermal initial conditions and mixed-state evolution.
//!
//! A thermal state of the free rotor is diagonal in the `(l, m)` basis, so
//! its unitary evolution equals a weighted average of independently evolved
//! pure basis states. That ensemble decomposition is O(N) in the basis size
//! where direct density-matrix integration is O(N^2); the latter is kept on
//! small bases as the [`von_neumann_check`] oracle. Members never exchange
//! population across `(l mod 2, m mod 2)` parity sectors, and each member
//! is evolved in its own sector basis.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::analysis::{efficiency, target_l};
use crate::basis::{build_basis, BasisMap, Frame, Parity, StateVector};
use crate::coupling::build_coupling;
use crate::error::{Error, Result};
use crate::evolve::{evolve_full, evolve_rwa_chain, EvolveConfig};
use crate::ode::{integrate, OdeOptions, RhsResult};
use crate::params::DimensionlessParams;
use crate::pulse::{drive_phase, DrivePulse};

/// Boltzmann ensemble description via the characteristic `l_c`
/// (`kB T = hbar^2 l_c (l_c + 1) / (2 I)`).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ThermalSpec {
    pub l_c: f64,
    /// Members below this weight are discarded (then weights renormalize).
    pub weight_cutoff: f64,
    /// Highest shell considered; `None` picks the smallest value retaining
    /// 99.99% of the total weight.
    pub l0_max: Option<u32>,
}

impl ThermalSpec {
    pub fn new(l_c: f64) -> Result<Self> {
        if !(l_c >= 0.0) || !l_c.is_finite() {
            return Err(Error::invalid(format!("l_c must be >= 0, got {l_c}")));
        }
        Ok(ThermalSpec {
            l_c,
            weight_cutoff: 1e-4,
            l0_max: None,
        })
    }

    pub fn with_cutoff(mut self, cutoff: f64) -> Self {
        self.weight_cutoff = cutoff;
        self
    }

    pub fn with_l0_max(mut self, l0_max: u32) -> Self {
        self.l0_max = Some(l0_max);
        self
    }
}

/// One initial pure state of the mixture.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EnsembleMember {
    pub l0: u32,
    pub m0: i32,
    pub weight: f64,
}

/// Boltzmann weights over `(l0, m0)`: `w ~ exp[-l0(l0+1) / (l_c(l_c+1))]`,
/// equal within an `l0` shell (per-state weights; shell degeneracy comes
/// from the `2 l0 + 1` members). Renormalized after the cutoff; the
/// discarded fraction is also returned.
pub fn thermal_weights(spec: &ThermalSpec) -> Result<(Vec<EnsembleMember>, f64)> {
    if !(spec.l_c >= 0.0) || !spec.l_c.is_finite() {
        return Err(Error::invalid(format!(
            "l_c must be >= 0, got {}",
            spec.l_c
        )));
    }
    if spec.l_c == 0.0 {
        return Ok((
            vec![EnsembleMember {
                l0: 0,
                m0: 0,
                weight: 1.0,
            }],
            0.0,
        ));
    }
    let x = spec.l_c * (spec.l_c + 1.0);
    let shell = |l0: u32| -> f64 {
        let lf = l0 as f64;
        (2.0 * lf + 1.0) * (-lf * (lf + 1.0) / x).exp()
    };
    // total weight of the untruncated distribution
    let mut z_total = 0.0;
    let mut l0 = 0u32;
    loop {
        let s = shell(l0);
        z_total += s;
        if l0 > 4 && s < 1e-18 * z_total {
            break;
        }
        l0 += 1;
        if l0 > 100_000 {
            return Err(Error::invalid(format!(
                "thermal sum did not converge for l_c = {}",
                spec.l_c
            )));
        }
    }
    // shell bound: given, or smallest retaining 99.99% of the weight
    let l0_max = match spec.l0_max {
        Some(v) => v,
        None => {
            let mut cum = 0.0;
            let mut l = 0u32;
            loop {
                cum += shell(l);
                if cum >= 0.9999 * z_total {
                    break l;
                }
                l += 1;
            }
        }
    };
    let mut members = Vec::new();
    let mut kept = 0.0;
    for l0 in 0..=l0_max {
        let lf = l0 as f64;
        let w = (-lf * (lf + 1.0) / x).exp() / z_total;
        if w < spec.weight_cutoff {
            continue;
        }
        for m0 in -(l0 as i32)..=(l0 as i32) {
            members.push(EnsembleMember { l0, m0, weight: w });
            kept += w;
        }
    }
    if members.is_empty() {
        return Err(Error::invalid(format!(
            "weight cutoff {} discards the whole ensemble",
            spec.weight_cutoff
        )));
    }
    let discarded = (1.0 - kept).max(0.0);
    for m in &mut members {
        m.weight /= kept;
    }
    Ok((members, discarded))
}

/// Basis sizing for ensemble members.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalNumerics {
    /// Override for `l_max`; default is `ceil(1.5 l_f)` (and at least
    /// `l0 + c_buffer` per member).
    pub l_max: Option<u32>,
    /// Non-RWA member bases keep `C <= (l0 - m0) + c_buffer`.
    pub c_buffer: u32,
}

impl Default for ThermalNumerics {
    fn default() -> Self {
        ThermalNumerics {
            l_max: None,
            c_buffer: 12,
        }
    }
}

/// Outcome of one evolved member.
#[derive(Debug, Clone)]
pub struct MemberOutcome {
    pub member: EnsembleMember,
    pub efficiency: f64,
    pub populations: Vec<f64>,
    pub norm_drift: f64,
}

/// Weighted mixture result.
#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub members: Vec<MemberOutcome>,
    /// Weighted final distribution over `l`.
    pub weighted_populations: Vec<f64>,
    /// Weight dropped by the cutoff (before renormalization).
    pub discarded_weight: f64,
    pub l_f: f64,
}

impl EnsembleResult {
    /// Weighted excitation efficiency (equals the efficiency of the
    /// weighted distribution).
    pub fn efficiency(&self) -> f64 {
        self.members
            .iter()
            .map(|m| m.member.weight * m.efficiency)
            .sum()
    }
}

/// Evolve a thermal mixture member-by-member and weight-average.
///
/// With `use_rwa` each member `(l0, m0)` climbs its own `C = l0 - m0`
/// chain; otherwise each member is propagated with the full coupling on a
/// basis with `C <= C0 + c_buffer` in its parity sector.
pub fn evolve_thermal(
    spec: &ThermalSpec,
    params: DimensionlessParams,
    pulse: &DrivePulse,
    tau_f: f64,
    cfg: &EvolveConfig,
    use_rwa: bool,
    numerics: &ThermalNumerics,
) -> Result<EnsembleResult> {
    cfg.validate()?;
    pulse.validate()?;
    if !(tau_f > 0.0) {
        return Err(Error::invalid(format!("tau_f must be > 0, got {tau_f}")));
    }
    let (members, discarded_weight) = thermal_weights(spec)?;
    let l_f = target_l(tau_f, params.p2);
    let base_l_max = numerics.l_max.unwrap_or((1.5 * l_f).ceil() as u32);

    let mut cfg = *cfg;
    cfg.snapshot_every = None;
    cfg.store_lm_snapshots = false;

    let outcomes: Vec<Result<MemberOutcome>> = members
        .par_iter()
        .map(|&member| {
            evolve_member(
                member, params, pulse, tau_f, &cfg, use_rwa, numerics, base_l_max, l_f,
            )
            .map_err(|e| Error::Member {
                l0: member.l0,
                m0: member.m0,
                source: Box::new(e),
            })
        })
        .collect();

    let mut resolved = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        resolved.push(o?);
    }
    let n_l = resolved
        .iter()
        .map(|m| m.populations.len())
        .max()
        .unwrap_or(1);
    let mut weighted = vec![0.0; n_l];
    for m in &resolved {
        for (l, &p) in m.populations.iter().enumerate() {
            weighted[l] += m.member.weight * p;
        }
    }
    Ok(EnsembleResult {
        members: resolved,
        weighted_populations: weighted,
        discarded_weight,
        l_f,
    })
}

#[allow(clippy::too_many_arguments)]
fn evolve_member(
    member: EnsembleMember,
    params: DimensionlessParams,
    pulse: &DrivePulse,
    tau_f: f64,
    cfg: &EvolveConfig,
    use_rwa: bool,
    numerics: &ThermalNumerics,
    base_l_max: u32,
    l_f: f64,
) -> Result<MemberOutcome> {
    let c0 = member.l0 as i64 - member.m0 as i64;
    debug_assert!(c0 >= 0);
    let c0 = c0 as u32;
    let l_max = base_l_max.max(member.l0 + numerics.c_buffer);
    let pl = Parity::of(member.l0 as i64);
    let pm = Parity::of(member.m0 as i64);
    let traj = if use_rwa {
        let basis = build_basis(l_max, c0, Some(pl), Some(pm))?;
        let w0 = StateVector::basis_state(&basis, member.l0, member.m0, Frame::Rotating)?;
        evolve_rwa_chain(&w0, &basis, c0, params, pulse, tau_f, cfg)?
    } else {
        let basis = build_basis(l_max, c0 + numerics.c_buffer, Some(pl), Some(pm))?;
        let psi0 = StateVector::basis_state(&basis, member.l0, member.m0, Frame::Lab)?;
        evolve_full(&psi0, &basis, params, pulse, tau_f, cfg)?
    };
    let populations = traj.final_populations().to_vec();
    let eff = efficiency(&populations, l_f)?.efficiency;
    Ok(MemberOutcome {
        member,
        efficiency: eff,
        populations,
        norm_drift: traj.norm_drift,
    })
}

const VN_L_MAX_LIMIT: u32 = 16;

/// Integrate the von Neumann equation `i d rho / d tau = [H, rho]` for the
/// thermal density matrix on a small basis (all four parity sectors) and
/// compare with the pure-state ensemble average on the same basis. Returns
/// `max_l |P_vn(l) - P_ensemble(l)|`.
pub fn von_neumann_check(
    spec: &ThermalSpec,
    params: DimensionlessParams,
    pulse: &DrivePulse,
    tau_f: f64,
    small_l_max: u32,
) -> Result<f64> {
    if small_l_max > VN_L_MAX_LIMIT {
        return Err(Error::TooLarge {
            context: "von Neumann check basis (l_max limit)",
            size: small_l_max as usize,
            limit: VN_L_MAX_LIMIT as usize,
        });
    }
    pulse.validate()?;
    if !(tau_f > 0.0) {
        return Err(Error::invalid(format!("tau_f must be > 0, got {tau_f}")));
    }
    // Members truncated to the small basis, re-normalized: both routes then
    // solve exactly the same finite problem.
    let (mut members, _) = thermal_weights(spec)?;
    members.retain(|m| m.l0 <= small_l_max);
    let total: f64 = members.iter().map(|m| m.weight).sum();
    for m in &mut members {
        m.weight /= total;
    }

    let n_l = small_l_max as usize + 1;
    let mut p_vn = vec![0.0; n_l];
    let mut p_ens = vec![0.0; n_l];

    let sectors = [
        (Parity::Even, Parity::Even),
        (Parity::Even, Parity::Odd),
        (Parity::Odd, Parity::Even),
        (Parity::Odd, Parity::Odd),
    ];
    let cfg = EvolveConfig::default().with_tolerances(1e-10, 1e-12);
    for (pl, pm) in sectors {
        let sector_members: Vec<EnsembleMember> = members
            .iter()
            .copied()
            .filter(|m| pl.matches(m.l0 as i64) && pm.matches(m.m0 as i64))
            .collect();
        if sector_members.is_empty() {
            continue;
        }
        let basis = build_basis(small_l_max, 2 * small_l_max, Some(pl), Some(pm))?;

        // ensemble side: one full propagation per member on this basis
        for m in &sector_members {
            let psi0 = StateVector::basis_state(&basis, m.l0, m.m0, Frame::Lab)?;
            let traj = evolve_full(&psi0, &basis, params, pulse, tau_f, &cfg)?;
            for (l, &p) in traj.final_populations().iter().enumerate() {
                p_ens[l] += m.weight * p;
            }
        }

        // von Neumann side: one density-matrix propagation per sector
        let pops = evolve_density_sector(&basis, &sector_members, params, pulse, tau_f, &cfg)?;
        for (l, p) in pops.iter().enumerate() {
            p_vn[l] += p;
        }
    }

    let max_dev = p_vn
        .iter()
        .zip(&p_ens)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(max_dev)
}

/// Dense density-matrix propagation of one parity sector, in the same
/// interaction picture as `evolve_full` (diagonal populations are
/// picture-invariant). Returns the weighted `P(l)` contribution.
fn evolve_density_sector(
    basis: &BasisMap,
    members: &[EnsembleMember],
    params: DimensionlessParams,
    pulse: &DrivePulse,
    tau_f: f64,
    cfg: &EvolveConfig,
) -> Result<Vec<f64>> {
    let table = build_coupling(basis);
    let n = basis.len();

    #[derive(Clone, Copy)]
    struct Ent {
        i: u32,
        j: u32,
        coeff: f64,
        dm: i8,
        k: i32,
    }
    let mut ents = Vec::with_capacity(table.n_entries());
    let mut kmax = 0usize;
    for (i, l, _m) in basis.iter() {
        for e in table.entries_for(i) {
            let k = match e.dl {
                2 => 2 * l as i32 + 3,
                -2 => -(2 * l as i32 - 1),
                _ => 0,
            };
            kmax = kmax.max(k.unsigned_abs() as usize);
            ents.push(Ent {
                i: i as u32,
                j: e.target,
                coeff: e.coeff,
                dm: e.dm,
                k,
            });
        }
    }
    let diag: Vec<f64> = table.diag_slice().to_vec();
    let include_c0 = cfg.include_c0_shift;
    let p2 = params.p2;
    let pulse = *pulse;
    let mut ktab: Vec<Complex64> = vec![Complex64::ONE; kmax + 1];
    let mut w: Vec<Complex64> = vec![Complex64::ZERO; ents.len()];

    let rhs = move |tau: f64, rho: &Vec<Complex64>, drho: &mut Vec<Complex64>| -> RhsResult {
        let amp = pulse.amplitude(tau);
        drho.iter_mut().for_each(|z| *z = Complex64::ZERO);
        if amp == 0.0 {
            return Ok(());
        }
        let base = Complex64::from_polar(1.0, -p2 * tau);
        for k in 1..=kmax {
            ktab[k] = ktab[k - 1] * base;
        }
        let z2 = Complex64::from_polar(1.0, 2.0 * drive_phase(tau));
        for (we, e) in w.iter_mut().zip(&ents) {
            let kphase = if e.k >= 0 {
                ktab[e.k as usize]
            } else {
                ktab[(-e.k) as usize].conj()
            };
            *we = match e.dm {
                2 => kphase * z2,
                -2 => kphase * z2.conj(),
                _ => kphase,
            } * e.coeff;
        }
        // -i [H, rho] with H = D + sum_e w_e |i_e><j_e| (Hermitian pairs
        // are both present in the entry list).
        let minus_i = Complex64::new(0.0, -1.0);
        if include_c0 {
            for i in 0..n {
                for j in 0..n {
                    drho[i * n + j] += (diag[i] - diag[j]) * rho[i * n + j];
                }
            }
        }
        for (we, e) in w.iter().zip(&ents) {
            let (i, j) = (e.i as usize, e.j as usize);
            // H rho: row i gains w_e * rho[j, :]
            for col in 0..n {
                drho[i * n + col] += *we * rho[j * n + col];
            }
            // rho H: column j gains rho[:, i] * w_e (H_{i j} entering via
            // rho_{., i} H_{i j}; note H_{i j} = w_e)
            for row in 0..n {
                drho[row * n + j] -= rho[row * n + i] * *we;
            }
        }
        for z in drho.iter_mut() {
            *z *= minus_i * amp;
        }
        Ok(())
    };

    let mut rho = vec![Complex64::ZERO; n * n];
    for m in members {
        let idx = basis
            .index_of(m.l0, m.m0)
            .ok_or_else(|| Error::invalid(format!("member ({}, {}) not in basis", m.l0, m.m0)))?;
        rho[idx * n + idx] = Complex64::new(m.weight, 0.0);
    }
    let opts = OdeOptions {
        rel_tol: cfg.rel_tol,
        abs_tol: cfg.abs_tol,
        max_step: cfg.max_step,
        ..Default::default()
    };
    integrate(rhs, 0.0, tau_f, &mut rho, opts)?;

    let mut pops = vec![0.0; basis.l_max() as usize + 1];
    for (i, l, _) in basis.iter() {
        pops[l as usize] += rho[i * n + i].re;
    }
    Ok(pops)
}
