//! Acceptance suite: one test per criterion, each printing a PASS line
//! with its measured numbers (visible with `--nocapture`).
//!
//! The slowest sweeps default to a smoke resolution that exercises every
//! assertion; set `CENTRIFUGE_ACCEPTANCE_FULL=1` for the full grids.

mod quadrature;

use centrifuge::analysis::{bunch_width, efficiency, tau_for_target};
use centrifuge::basis::{build_basis, Frame, Parity, StateVector};
use centrifuge::classical::{classical_p2, mc_efficiency, ClassicalEnsembleSpec};
use centrifuge::coupling::{b_coefficient, coefficient};
use centrifuge::evolve::{
    crossing_time, diabatic_energies, evolve_full, evolve_rwa_chain, two_level_lz, EvolveConfig,
};
use centrifuge::params::DimensionlessParams;
use centrifuge::pulse::DrivePulse;
use centrifuge::theory::{classify_regime, lc_efficiency, lz_probability, Regime};
use centrifuge::thermal::{evolve_thermal, von_neumann_check, ThermalNumerics, ThermalSpec};
use rayon::prelude::*;

fn full_resolution() -> bool {
    std::env::var("CENTRIFUGE_ACCEPTANCE_FULL").is_ok_and(|v| v == "1")
}

fn pass(n: u32, name: &str, details: String) {
    println!("ACCEPTANCE {n:02} ({name}): PASS - {details}");
}

fn params(p1: f64, p2: f64) -> DimensionlessParams {
    DimensionlessParams::new(p1, p2).unwrap()
}

/// Criterion 1: every Table-coefficient for l <= 60 matches the
/// numerical-quadrature oracle within 1e-10; Hermiticity and |B| <= 1/4
/// hold exhaustively.
#[test]
fn c01_coupling_against_quadrature_oracle() {
    let (nodes, weights) = quadrature::gauss_legendre(96);
    // the oracle itself must resolve orthonormality first
    let defect = quadrature::orthonormality_defect(30, &nodes, &weights);
    assert!(defect < 1e-12, "oracle orthonormality defect {defect:e}");

    let steps = [-2i32, 0, 2];
    let mut max_dev = 0.0f64;
    let mut checked = 0u64;
    for l in 0..=60u32 {
        for m in -(l as i32)..=(l as i32) {
            for dl in steps {
                for dm in steps {
                    let table = coefficient(l, m, dl, dm).unwrap();
                    let oracle = quadrature::oracle_coefficient(l, m, dl, dm, &nodes, &weights);
                    let dev = (table - oracle).abs();
                    assert!(
                        dev <= 1e-10,
                        "(l={l}, m={m}, dl={dl}, dm={dm}): table {table} vs quadrature {oracle}"
                    );
                    max_dev = max_dev.max(dev);
                    // Hermiticity against the reverse transition
                    let lt = l as i64 + dl as i64;
                    let mt = m as i64 + dm as i64;
                    if lt >= 0 && mt.abs() <= lt {
                        let back = coefficient(lt as u32, mt as i32, -dl, -dm).unwrap();
                        assert!(
                            (table - back).abs() <= 1e-14 * table.abs().max(1.0),
                            "hermiticity at (l={l}, m={m}, dl={dl}, dm={dm})"
                        );
                    }
                    checked += 1;
                }
            }
            if l >= 2 {
                let b = b_coefficient(l, m).unwrap();
                assert!(b.abs() <= 0.25, "|B({l},{m})| = {} > 1/4", b.abs());
            }
        }
    }
    pass(
        1,
        "coupling quadrature",
        format!("{checked} elements, max |table - quadrature| = {max_dev:.2e}"),
    );
}

/// Criterion 2: isolated two-level crossings match the closed-form step
/// probability within 1% relative at P2 = 20.
#[test]
fn c02_landau_zener_oracle() {
    let p2 = 20.0;
    let window = 10.0 * p2;
    let cfg = EvolveConfig::default();
    let mut worst = 0.0f64;
    for &l in &[4u32, 10, 30] {
        for &p1 in &[0.5f64, 2.0, 8.0] {
            let p = params(p1, p2);
            let numeric = two_level_lz(l, p, window, &cfg).unwrap();
            let exact = lz_probability(p1, b_coefficient(l, l as i32).unwrap());
            let rel = (numeric - exact).abs() / exact;
            assert!(
                rel <= 0.01,
                "l={l}, P1={p1}: numeric {numeric} vs formula {exact} (rel {rel:.3})"
            );
            worst = worst.max(rel);
        }
    }
    pass(
        2,
        "LZ step oracle",
        format!("9 crossings, worst relative deviation {worst:.2e}"),
    );
}

/// Criterion 3: simulated climbing efficiency tracks the step-product
/// formula within 0.05 over a 10-point P1 sweep for l_f in {20, 50, 100};
/// the P1 = 3.1, l_f = 50 point sits at 0.5 +- 0.05.
#[test]
fn c03_lc_efficiency_curves() {
    let p2 = 10.0;
    let sweep: Vec<f64> = (0..10).map(|i| 0.5 + 4.5 * i as f64 / 9.0).collect();
    let mut cases: Vec<(f64, u32)> = Vec::new();
    for &l_f in &[20u32, 50, 100] {
        for &p1 in &sweep {
            cases.push((p1, l_f));
        }
    }
    cases.push((3.1, 50));

    let results: Vec<(f64, u32, f64, f64)> = cases
        .par_iter()
        .map(|&(p1, l_f)| {
            let p = params(p1, p2);
            let tau_f = tau_for_target(l_f as f64, p2);
            let l_max = (1.5 * l_f as f64).ceil() as u32;
            let basis = build_basis(l_max, 0, Some(Parity::Even), Some(Parity::Even)).unwrap();
            let w0 = StateVector::basis_state(&basis, 0, 0, Frame::Rotating).unwrap();
            let cfg = EvolveConfig::rwa().with_tolerances(1e-7, 1e-9);
            let traj = evolve_rwa_chain(&w0, &basis, 0, p, &DrivePulse::constant(p1), tau_f, &cfg)
                .unwrap();
            let sim = efficiency(traj.final_populations(), l_f as f64)
                .unwrap()
                .efficiency;
            let theory = lc_efficiency(p1, (0.8 * l_f as f64).round() as u32).unwrap();
            (p1, l_f, sim, theory)
        })
        .collect();

    let mut worst = 0.0f64;
    for &(p1, l_f, sim, theory) in &results[..results.len() - 1] {
        let dev = (sim - theory).abs();
        assert!(
            dev <= 0.05,
            "P1={p1}, l_f={l_f}: sim {sim:.4} vs product formula {theory:.4}"
        );
        worst = worst.max(dev);
    }
    let (_, _, half_sim, _) = results[results.len() - 1];
    assert!(
        (half_sim - 0.5).abs() <= 0.05,
        "P1=3.1, l_f=50: sim {half_sim:.4} not at 0.5 +- 0.05"
    );
    pass(
        3,
        "climbing efficiency curves",
        format!("30 sweep points, worst |sim - formula| = {worst:.3}; f(3.1, 50) = {half_sim:.3}"),
    );
}

/// Criterion 4: the ground-state showcase (P1 = P2 = 10, tau_f = 99 P2)
/// reaches efficiency >= 0.95 with unit norm to 1e-6, and a mixed-parity
/// basis picks up no odd population.
#[test]
fn c04_ground_state_showcase() {
    let p = params(10.0, 10.0);
    let tau_f = 99.0 * p.p2;
    let pulse = DrivePulse::constant(p.p1);

    let basis = build_basis(75, 8, Some(Parity::Even), Some(Parity::Even)).unwrap();
    let psi0 = StateVector::basis_state(&basis, 0, 0, Frame::Lab).unwrap();
    let traj = evolve_full(&psi0, &basis, p, &pulse, tau_f, &EvolveConfig::default()).unwrap();
    let report = efficiency(traj.final_populations(), 50.0).unwrap();
    assert!(
        report.efficiency >= 0.95,
        "efficiency {:.4}",
        report.efficiency
    );
    assert!(
        traj.norm_drift <= 1e-6,
        "norm drift {:.2e}",
        traj.norm_drift
    );

    // parity conservation with both parities present in the basis: climb
    // the first few rungs and measure odd-sector leakage directly
    let mixed = build_basis(16, 16, None, None).unwrap();
    let psi0 = StateVector::basis_state(&mixed, 0, 0, Frame::Lab).unwrap();
    let short = evolve_full(&psi0, &mixed, p, &pulse, 150.0, &EvolveConfig::default()).unwrap();
    let mut odd = 0.0;
    for (i, l, m) in mixed.iter() {
        if l % 2 == 1 || m.rem_euclid(2) == 1 {
            odd += short.final_state.amps[i].norm_sqr();
        }
    }
    assert!(odd < 1e-10, "odd-parity population {odd:e}");
    pass(
        4,
        "ground-state showcase",
        format!(
            "efficiency {:.4}, norm drift {:.1e}, odd-parity leakage {odd:.1e}",
            report.efficiency, traj.norm_drift
        ),
    );
}

/// Criterion 5: the thermal ensemble at l_c = 11.5, (P1, P2) = (10, 10)
/// excites 17% +- 3% with both parities populated near the target.
#[test]
fn c05_thermal_ladder_climbing() {
    let p = params(10.0, 10.0);
    let tau_f = 99.0 * p.p2;
    let spec = ThermalSpec::new(11.5).unwrap();
    let cfg = EvolveConfig::rwa().with_tolerances(1e-7, 1e-9);
    let ens = evolve_thermal(
        &spec,
        p,
        &DrivePulse::constant(p.p1),
        tau_f,
        &cfg,
        true,
        &ThermalNumerics::default(),
    )
    .unwrap();
    let eff = ens.efficiency();
    assert!(
        (eff - 0.17).abs() <= 0.03,
        "thermal efficiency {eff:.4} not within 0.17 +- 0.03"
    );
    let pops = &ens.weighted_populations;
    let even: f64 = (40..=60).step_by(2).map(|l| pops[l]).sum();
    let odd: f64 = (41..=59).step_by(2).map(|l| pops[l]).sum();
    assert!(
        even > 0.01 && odd > 0.01,
        "parities near target: even {even:.4}, odd {odd:.4}"
    );
    let max_drift = ens
        .members
        .iter()
        .map(|m| m.norm_drift)
        .fold(0.0f64, f64::max);
    pass(
        5,
        "thermal ladder climbing",
        format!(
            "efficiency {eff:.4} ({} members, discarded {:.3}), near-target even {even:.3} / odd {odd:.3}, max drift {max_drift:.1e}",
            ens.members.len(),
            ens.discarded_weight
        ),
    );
}

/// Criterion 6: thermal quantum (RWA and full) and classical Monte Carlo
/// agree along P1 sweeps at P2 = 0.23 and 0.1, and the quantum-classical
/// gap does not worsen as P2 decreases.
#[test]
fn c06_quantum_classical_agreement() {
    let l_c = 11.5;
    let p1_points: Vec<f64> = if full_resolution() {
        vec![2.0, 4.0, 6.0, 8.0, 10.0, 12.0]
    } else {
        vec![4.0, 8.0, 12.0]
    };
    let n_samples = 10_000;

    let mut mean_gap = [0.0f64; 2];
    let mut mean_var = [0.0f64; 2];
    let mut lines = Vec::new();
    for (k, &p2) in [0.23f64, 0.1].iter().enumerate() {
        let tau_f = 99.0 * p2;
        let results: Vec<(f64, f64, f64, f64, f64)> = p1_points
            .par_iter()
            .map(|&p1| {
                let p = params(p1, p2);
                let pulse = DrivePulse::constant(p1);
                let spec = ThermalSpec::new(l_c).unwrap();
                let cfg = EvolveConfig::rwa().with_tolerances(1e-7, 1e-9);
                let rwa = evolve_thermal(
                    &spec,
                    p,
                    &pulse,
                    tau_f,
                    &cfg,
                    true,
                    &ThermalNumerics::default(),
                )
                .unwrap()
                .efficiency();
                let cfg_full = EvolveConfig::default().with_tolerances(1e-7, 1e-9);
                let full = evolve_thermal(
                    &spec,
                    p,
                    &pulse,
                    tau_f,
                    &cfg_full,
                    false,
                    &ThermalNumerics::default(),
                )
                .unwrap()
                .efficiency();
                let mc = mc_efficiency(
                    &ClassicalEnsembleSpec {
                        n_samples,
                        p2_cl: classical_p2(p2, l_c),
                        rng_seed: 0x6f63_2d61_6363_0001 + k as u64,
                    },
                    p1,
                    p2,
                    &pulse,
                    tau_f,
                )
                .unwrap();
                (p1, rwa, full, mc.efficiency, mc.std_error)
            })
            .collect();

        for &(p1, rwa, full, mc, sigma) in &results {
            assert!(
                (rwa - full).abs() <= 0.05,
                "P2={p2}, P1={p1}: RWA {rwa:.4} vs full {full:.4}"
            );
            for (tag, q) in [("rwa", rwa), ("full", full)] {
                assert!(
                    (q - mc).abs() <= 0.05 + 2.0 * sigma,
                    "P2={p2}, P1={p1}: {tag} {q:.4} vs MC {mc:.4} +- {sigma:.4}"
                );
            }
            mean_gap[k] += (full - mc).abs() / results.len() as f64;
            mean_var[k] += sigma * sigma / (results.len() * results.len()) as f64;
            lines.push(format!(
                "P2={p2} P1={p1}: rwa {rwa:.3} full {full:.3} mc {mc:.3}+-{sigma:.3}"
            ));
        }
    }
    let sigma_comb = (mean_var[0] + mean_var[1]).sqrt();
    assert!(
        mean_gap[1] <= mean_gap[0] + 2.0 * sigma_comb,
        "agreement at P2=0.1 (gap {:.4}) worse than at P2=0.23 (gap {:.4})",
        mean_gap[1],
        mean_gap[0]
    );
    pass(
        6,
        "quantum-classical agreement",
        format!(
            "{} points/P2; mean |full - mc|: {:.4} (P2=0.23) vs {:.4} (P2=0.1); {}",
            p1_points.len(),
            mean_gap[0],
            mean_gap[1],
            lines.join("; ")
        ),
    );
}

/// Criterion 7: the capture threshold P1 P2 = 1/2 brackets the Monte
/// Carlo efficiency at l_c = 11.5.
#[test]
fn c07_autoresonance_threshold() {
    let p2 = 0.1;
    let l_c = 11.5;
    let tau_f = 99.0 * p2;
    let mut shown = Vec::new();
    for (p1p2, below) in [(0.1, true), (0.25, true), (2.0, false), (4.0, false)] {
        let p1 = p1p2 / p2;
        let spec = ClassicalEnsembleSpec {
            n_samples: 10_000,
            p2_cl: classical_p2(p2, l_c),
            rng_seed: 0x6172_7468,
        };
        let r = mc_efficiency(&spec, p1, p2, &DrivePulse::constant(p1), tau_f).unwrap();
        if below {
            assert!(
                r.efficiency < 0.02,
                "P1P2={p1p2}: efficiency {:.4}",
                r.efficiency
            );
        } else {
            assert!(
                r.efficiency > 0.2,
                "P1P2={p1p2}: efficiency {:.4}",
                r.efficiency
            );
        }
        shown.push(format!("P1P2={p1p2}: {:.4}", r.efficiency));
    }
    pass(7, "autoresonance threshold", shown.join(", "));
}

/// Criterion 8: the diabatic crossing of the two-level matrix happens at
/// exactly tau_l = P2 (2l - 1), with consecutive crossings 4 P2 apart.
#[test]
fn c08_crossing_time_identity() {
    let mut checked = 0u64;
    for &p2 in &[0.09, 0.73, 1.0, 10.0, 30.0] {
        let p = params(1.0, p2);
        for l in (2..=400u32).step_by(7) {
            let tau_l = crossing_time(l, p2);
            let (lo, hi) = diabatic_energies(l, p, tau_l);
            assert!(
                (lo - hi).abs() <= 1e-13 * lo.abs().max(1.0),
                "l={l}, P2={p2}: diabatic gap {:.2e} at tau_l",
                lo - hi
            );
            let spacing = crossing_time(l + 2, p2) - tau_l;
            assert!(
                (spacing - 4.0 * p2).abs() <= 1e-12 * (4.0 * p2),
                "l={l}, P2={p2}: spacing {spacing}"
            );
            checked += 1;
        }
    }
    pass(
        8,
        "crossing-time identity",
        format!("{checked} crossings, exact to rounding"),
    );
}

/// Gaussian pulse run shared by criterion 9 and its companion; returns
/// the final distribution.
fn gaussian_pulse_run(p10: f64, truncation: Option<f64>, tau_end: f64, l_max: u32) -> Vec<f64> {
    let p2 = 0.73;
    let mut pulse = DrivePulse::gaussian(p10, 52.0);
    if let Some(t) = truncation {
        pulse = pulse.with_truncation(t);
    }
    let p = params(p10, p2);
    let basis = build_basis(l_max, 0, Some(Parity::Even), Some(Parity::Even)).unwrap();
    let w0 = StateVector::basis_state(&basis, 0, 0, Frame::Rotating).unwrap();
    let cfg = EvolveConfig::rwa();
    evolve_rwa_chain(&w0, &basis, 0, p, &pulse, tau_end, &cfg)
        .unwrap()
        .final_populations()
        .to_vec()
}

/// FWHM of the excited feature in l units, measured on the populated
/// even-l comb away from the low-l leftovers.
fn excited_fwhm(dist: &[f64]) -> f64 {
    let comb: Vec<f64> = dist.iter().skip(10).step_by(2).copied().collect();
    2.0 * bunch_width(&comb, 0..comb.len()).unwrap()
}

/// Criterion 9, exactly as stated: P10 = 6, sigma = 52, truncation at
/// tau = 97 should freeze a bunch of FWHM <= 4 l-states, three times
/// narrower than the untruncated run.
///
/// This parameter combination is internally inconsistent and the test is
/// expected to FAIL: the quoted peak amplitude decays through the
/// efficient-climbing threshold (P1 ~ 3.1) near tau ~ 60, so by tau = 97
/// the bunch has already dispersed (FWHM ~ 16, identical with and without
/// truncation). `c09_truncation_property_at_consistent_time` verifies the
/// underlying effect at the self-consistent truncation time; truncating at
/// tau = 97 would need a peak amplitude near 20 instead.
#[test]
fn c09_gaussian_pulse_truncation_as_stated() {
    let truncated = gaussian_pulse_run(6.0, Some(97.0), 100.0, 140);
    let free = gaussian_pulse_run(6.0, None, 250.0, 160);
    let w_truncated = excited_fwhm(&truncated);
    let w_free = excited_fwhm(&free);
    let verdict_narrow = w_truncated <= 4.0;
    let verdict_ratio = w_free >= 3.0 * w_truncated;
    assert!(
        verdict_narrow && verdict_ratio,
        "documented inconsistency in the quoted parameter set: truncated-at-97 FWHM = \
         {w_truncated:.2} l-units (bound 4), free FWHM = {w_free:.2} (bound {:.2}); the pulse \
         falls below the efficient-climbing threshold P1 = 3.1 already at tau = 60, so the \
         tau = 97 truncation freezes an already-dispersed bunch. See \
         c09_truncation_property_at_consistent_time for the verified effect.",
        3.0 * w_truncated
    );
    pass(
        9,
        "Gaussian truncation (as stated)",
        format!("FWHM truncated {w_truncated:.2} vs free {w_free:.2}"),
    );
}

/// Criterion 9 companion: the truncation property itself, at the
/// truncation time the step-product theory predicts. Truncating while the
/// drive still exceeds the 50%-efficiency threshold freezes a narrow bunch
/// (<= 4 l-units FWHM, i.e. the 2-3 populated states of the narrow
/// experimental feature); the untruncated pulse disperses it at least
/// three times wider.
#[test]
fn c09_truncation_property_at_consistent_time() {
    let p10 = 6.0;
    let sigma = 52.0;
    // P1(tau*) = threshold  =>  tau* = sigma sqrt(2 ln(P10 / threshold))
    let threshold = centrifuge::theory::efficient_lc_threshold(40).unwrap();
    let tau_star = sigma * (2.0 * (p10 / threshold).ln()).sqrt();
    let truncated = gaussian_pulse_run(p10, Some(tau_star), tau_star + 3.0, 140);
    let free = gaussian_pulse_run(p10, None, 250.0, 160);
    let w_truncated = excited_fwhm(&truncated);
    let w_free = excited_fwhm(&free);
    assert!(
        w_truncated <= 4.0,
        "bunch truncated at tau* = {tau_star:.1} has FWHM {w_truncated:.2}"
    );
    assert!(
        w_free >= 3.0 * w_truncated,
        "free FWHM {w_free:.2} vs truncated {w_truncated:.2}"
    );
    pass(
        9,
        "Gaussian truncation (property)",
        format!(
            "truncated at tau* = {tau_star:.1} (drive at the 50% threshold): FWHM {w_truncated:.2} \
             l-units; free pulse: {w_free:.2} ({}x wider)",
            (w_free / w_truncated).round()
        ),
    );
}

/// Criterion 10: the pure-state ensemble average equals direct von Neumann
/// density-matrix evolution to 1e-8 on a small basis.
#[test]
fn c10_ensemble_von_neumann_equivalence() {
    let spec = ThermalSpec::new(2.0).unwrap();
    let p = params(1.0, 5.0);
    let dev = von_neumann_check(&spec, p, &DrivePulse::constant(p.p1), 10.0, 12).unwrap();
    assert!(dev < 1e-8, "max |P_vn - P_ensemble| = {dev:e}");
    pass(
        10,
        "ensemble / von Neumann equivalence",
        format!("max |Delta P(l)| = {dev:.2e} on the l_max = 12 basis"),
    );
}

/// Fig. 2 rider: the classification overlay matches the boundary lines
/// exactly (points on the lines report `boundary`, neighbours flip).
#[test]
fn c11_regime_overlay_matches_boundary_lines() {
    for &p1 in &[0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 30.0] {
        // on the quantum/classical separation line
        let p2_line = 0.25 + p1 / 16.0;
        assert_eq!(
            classify_regime(p1, p2_line).unwrap().classification,
            Regime::Boundary
        );
        assert_eq!(
            classify_regime(p1, p2_line * (1.0 + 1e-12))
                .unwrap()
                .classification,
            Regime::LadderClimbing
        );
        // on the capture hyperbola (when below the separation line)
        let p2_ar = 0.5 / p1;
        if p2_ar < p2_line {
            let r = classify_regime(p1, p2_ar).unwrap();
            assert_eq!(r.classification, Regime::Boundary);
            assert_eq!(
                classify_regime(p1, p2_ar * (1.0 - 1e-12))
                    .unwrap()
                    .classification,
                Regime::BelowArThreshold
            );
        }
    }
    pass(
        11,
        "regime overlay",
        "boundary lines classify exactly".to_string(),
    );
}
