//! Scenario execution: expand the parameter grid, run every point, write
//! artifacts and the manifest.

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use centrifuge::analysis::{bin_classical_l, efficiency, target_l, EfficiencyReport};
use centrifuge::basis::{build_basis, BasisMap, Frame, Parity, StateVector};
use centrifuge::classical::{classical_p2, mc_efficiency, ClassicalEnsembleSpec};
use centrifuge::evolve::{evolve_full, evolve_rwa_chain, EvolveConfig, Trajectory};
use centrifuge::params::{molecule_inertia, molecule_names, DimensionlessParams, HBAR_SI};

use centrifuge::theory::{
    classify_regime, lc_efficiency, rwa_min_l, weak_drive_param, Regime, RegimeReport,
};
use centrifuge::thermal::{evolve_thermal, ThermalNumerics, ThermalSpec};

use crate::config::{ConfigDoc, Mode, NamedScenario, OutputFlags, PulseSpec, Scenario};
use crate::output::{distribution_csv, ndjson, trajectory_csv, OutputSink};

/// One grid point of one run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PointId {
    pub index: usize,
    pub p1: f64,
    pub p2: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum PointOutcome {
    Ok(Box<PointReport>),
    Error { error: String },
}

/// NDJSON row for one completed point.
#[derive(Debug, Clone, Serialize)]
pub struct PointReport {
    pub mode: &'static str,
    pub tau_f: f64,
    pub regime: Regime,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<EfficiencyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theory: Option<TheoryReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm_drift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discarded_weight: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_failed: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoryReport {
    #[serde(flatten)]
    pub regime: RegimeReport,
    pub l_hat: u32,
    pub lc_efficiency: f64,
    pub rwa_min_l: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weak_drive_param: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct NdjsonRow<'a> {
    run: &'a str,
    point: PointId,
    seed: u64,
    #[serde(flatten)]
    outcome: &'a PointOutcome,
}

/// Everything produced by one point, before files are written.
struct PointArtifacts {
    outcome: PointOutcome,
    distribution: Option<Vec<f64>>,
    trajectory: Option<Trajectory>,
    members: Option<String>,
    samples: Option<String>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn point_seed(master: u64, run_name: &str, index: usize) -> u64 {
    let mut h = master;
    for b in run_name.bytes() {
        h = splitmix64(h ^ b as u64);
    }
    splitmix64(h ^ index as u64)
}

fn evolve_config(s: &Scenario, rwa: bool, flags: &OutputFlags) -> EvolveConfig {
    EvolveConfig {
        rel_tol: s.numerics.rel_tol,
        abs_tol: s.numerics.abs_tol,
        max_step: None,
        snapshot_every: s.numerics.snapshot_every,
        include_c0_shift: s.numerics.include_c0_shift.unwrap_or(!rwa),
        store_lm_snapshots: flags.lm_snapshots,
    }
}

fn ground_basis(
    s: &Scenario,
    params: DimensionlessParams,
    l_f: f64,
    chain_only: bool,
) -> Result<BasisMap> {
    let l_max = s.numerics.l_max.unwrap_or((1.5 * l_f).ceil() as u32);
    let c_max = if chain_only {
        0
    } else {
        s.numerics.c_max.unwrap_or_else(|| {
            // ladder climbing keeps C bounded; classical-regime ground runs
            // spread in m and need the full range
            let lc_regime = classify_regime(params.p1, params.p2)
                .map(|r| r.classification == Regime::LadderClimbing)
                .unwrap_or(false);
            if lc_regime {
                12
            } else {
                2 * l_max
            }
        })
    };
    Ok(build_basis(
        l_max,
        c_max,
        Some(Parity::Even),
        Some(Parity::Even),
    )?)
}

fn run_point(
    s: &Scenario,
    point: PointId,
    seed: u64,
    flags: &OutputFlags,
) -> Result<PointArtifacts> {
    let params = DimensionlessParams::new(point.p1, point.p2)?;
    let tau_f = s.tau_f_at(point.p2);
    let l_f = target_l(tau_f, point.p2);
    let pulse = s
        .pulse
        .unwrap_or(PulseSpec {
            envelope: crate::config::EnvelopeSpec::Constant,
            truncation_tau: None,
        })
        .build(point.p1);
    let regime = classify_regime(point.p1, point.p2)?.classification;

    let mut distribution = None;
    let mut trajectory = None;
    let mut members = None;
    let mut samples = None;

    let report = match s.mode {
        Mode::GroundFull | Mode::GroundRwa => {
            let rwa = s.mode == Mode::GroundRwa;
            let cfg = evolve_config(s, rwa, flags);
            let basis = ground_basis(s, params, l_f, rwa)?;
            let traj = if rwa {
                let w0 = StateVector::basis_state(&basis, 0, 0, Frame::Rotating)?;
                evolve_rwa_chain(&w0, &basis, 0, params, &pulse, tau_f, &cfg)?
            } else {
                let psi0 = StateVector::basis_state(&basis, 0, 0, Frame::Lab)?;
                evolve_full(&psi0, &basis, params, &pulse, tau_f, &cfg)?
            };
            let dist = traj.final_populations().to_vec();
            let report = efficiency(&dist, l_f)?;
            let drift = traj.norm_drift;
            distribution = Some(dist);
            trajectory = Some(traj);
            PointReport {
                mode: s.mode.as_str(),
                tau_f,
                regime,
                report: Some(report),
                theory: None,
                norm_drift: Some(drift),
                discarded_weight: None,
                mc_std_error: None,
                mc_failed: None,
            }
        }
        Mode::ThermalRwa | Mode::ThermalFull => {
            let rwa = s.mode == Mode::ThermalRwa;
            let cfg = evolve_config(s, rwa, flags);
            let mut spec =
                ThermalSpec::new(s.l_c.unwrap_or(0.0))?.with_cutoff(s.numerics.weight_cutoff);
            if let Some(l0_max) = s.numerics.l0_max {
                spec = spec.with_l0_max(l0_max);
            }
            let numerics = ThermalNumerics {
                l_max: s.numerics.l_max,
                c_buffer: s.numerics.c_buffer,
            };
            let ens = evolve_thermal(&spec, params, &pulse, tau_f, &cfg, rwa, &numerics)?;
            let report = efficiency(&ens.weighted_populations, l_f)?;
            if flags.per_member {
                #[derive(Serialize)]
                struct MemberRow {
                    l0: u32,
                    m0: i32,
                    weight: f64,
                    efficiency: f64,
                    norm_drift: f64,
                }
                members = Some(ndjson(ens.members.iter().map(|m| MemberRow {
                    l0: m.member.l0,
                    m0: m.member.m0,
                    weight: m.member.weight,
                    efficiency: m.efficiency,
                    norm_drift: m.norm_drift,
                }))?);
            }
            let max_drift = ens.members.iter().map(|m| m.norm_drift).fold(0.0, f64::max);
            let discarded = ens.discarded_weight;
            distribution = Some(ens.weighted_populations);
            PointReport {
                mode: s.mode.as_str(),
                tau_f,
                regime,
                report: Some(report),
                theory: None,
                norm_drift: Some(max_drift),
                discarded_weight: Some(discarded),
                mc_std_error: None,
                mc_failed: None,
            }
        }
        Mode::ClassicalMc => {
            let l_c = s.l_c.unwrap_or(0.0);
            let spec = ClassicalEnsembleSpec {
                n_samples: s.numerics.n_samples,
                p2_cl: classical_p2(point.p2, l_c),
                rng_seed: seed,
            };
            let mc = mc_efficiency(&spec, point.p1, point.p2, &pulse, tau_f)?;
            let finals: Vec<f64> = mc.samples.iter().flatten().map(|(_, l)| *l).collect();
            let l_max_bin = s.numerics.l_max.unwrap_or((1.5 * l_f).ceil() as u32) as usize;
            let dist = bin_classical_l(&finals, point.p2, l_max_bin)?;
            let report = efficiency(&dist, l_f)?;
            if flags.per_sample {
                #[derive(Serialize)]
                struct SampleRow {
                    index: usize,
                    #[serde(flatten)]
                    state: Option<centrifuge::classical::ClassicalState>,
                    #[serde(skip_serializing_if = "Option::is_none")]
                    l: Option<f64>,
                    failed: bool,
                }
                samples = Some(ndjson(mc.samples.iter().enumerate().map(|(i, s)| {
                    SampleRow {
                        index: i,
                        state: s.as_ref().map(|(st, _)| *st),
                        l: s.as_ref().map(|(_, l)| *l),
                        failed: s.is_none(),
                    }
                }))?);
            }
            distribution = Some(dist);
            PointReport {
                mode: s.mode.as_str(),
                tau_f,
                regime,
                // the MC capture count is the efficiency; the binned report
                // adds bunch statistics on the same footing as quantum runs
                report: Some(EfficiencyReport {
                    efficiency: mc.efficiency,
                    ..report
                }),
                theory: None,
                norm_drift: None,
                discarded_weight: None,
                mc_std_error: Some(mc.std_error),
                mc_failed: Some(mc.n_failed),
            }
        }
        Mode::TheoryOnly => {
            let l_hat_f = 0.8 * l_f;
            let mut l_hat = l_hat_f.round().max(2.0) as u32;
            if l_hat % 2 == 1 {
                l_hat += 1;
            }
            let regime_report = classify_regime(point.p1, point.p2)?;
            let theory = TheoryReport {
                regime: regime_report,
                l_hat,
                lc_efficiency: lc_efficiency(point.p1, l_hat)?,
                rwa_min_l: rwa_min_l(point.p2)?,
                weak_drive_param: match s.l_c {
                    Some(l_c) if l_c > 0.0 => Some(weak_drive_param(point.p1, point.p2, l_c)?),
                    _ => None,
                },
            };
            PointReport {
                mode: s.mode.as_str(),
                tau_f,
                regime,
                report: None,
                theory: Some(theory),
                norm_drift: None,
                discarded_weight: None,
                mc_std_error: None,
                mc_failed: None,
            }
        }
    };

    Ok(PointArtifacts {
        outcome: PointOutcome::Ok(Box::new(report)),
        distribution,
        trajectory,
        members,
        samples,
    })
}

/// Expanded grid of a scenario, `p1` outer, `p2` inner.
pub fn grid_points(s: &Scenario) -> Result<Vec<PointId>> {
    let p1s = s.params.p1.values()?;
    let p2s = s.params.p2.values()?;
    let mut out = Vec::with_capacity(p1s.len() * p2s.len());
    for &p1 in &p1s {
        for &p2 in &p2s {
            out.push(PointId {
                index: out.len(),
                p1,
                p2,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub run: String,
    pub points: usize,
    pub failed: usize,
}

/// Execute one named run into `sink` under `runs/<name>/`. Points execute
/// in parallel; outputs are written in deterministic grid order.
fn execute_run(doc_seed: u64, named: &NamedScenario, sink: &mut OutputSink) -> Result<RunSummary> {
    let s = &named.scenario;
    let points = grid_points(s)?;
    let results: Vec<(PointId, u64, PointArtifacts)> = points
        .par_iter()
        .map(|&point| {
            let seed = point_seed(doc_seed, &named.name, point.index);
            let artifacts = match run_point(s, point, seed, &s.outputs) {
                Ok(a) => a,
                Err(e) => PointArtifacts {
                    outcome: PointOutcome::Error {
                        error: format!("{e:#}"),
                    },
                    distribution: None,
                    trajectory: None,
                    members: None,
                    samples: None,
                },
            };
            (point, seed, artifacts)
        })
        .collect();

    let prefix = format!("runs/{}", named.name);
    let mut rows = String::new();
    let mut failed = 0usize;
    for (point, seed, artifacts) in &results {
        if matches!(artifacts.outcome, PointOutcome::Error { .. }) {
            failed += 1;
        }
        rows.push_str(&serde_json::to_string(&NdjsonRow {
            run: &named.name,
            point: *point,
            seed: *seed,
            outcome: &artifacts.outcome,
        })?);
        rows.push('\n');
        let tag = format!("point_{:04}", point.index);
        if s.outputs.distributions {
            if let Some(dist) = &artifacts.distribution {
                sink.write(
                    &format!("{prefix}/dist_{tag}.csv"),
                    distribution_csv(dist).as_bytes(),
                )?;
            }
        }
        if s.outputs.trajectory {
            if let Some(traj) = &artifacts.trajectory {
                sink.write(
                    &format!("{prefix}/traj_{tag}.csv"),
                    trajectory_csv(&traj.times, &traj.populations).as_bytes(),
                )?;
            }
        }
        if s.outputs.lm_snapshots {
            if let Some(traj) = &artifacts.trajectory {
                if let Some(text) = lm_snapshot_ndjson(traj)? {
                    sink.write(&format!("{prefix}/lm_{tag}.ndjson"), text.as_bytes())?;
                }
            }
        }
        if let Some(text) = &artifacts.members {
            sink.write(&format!("{prefix}/members_{tag}.ndjson"), text.as_bytes())?;
        }
        if let Some(text) = &artifacts.samples {
            sink.write(&format!("{prefix}/samples_{tag}.ndjson"), text.as_bytes())?;
        }
    }
    sink.write(&format!("{prefix}/reports.ndjson"), rows.as_bytes())?;
    sink.write(
        &format!("{prefix}/efficiency.csv"),
        efficiency_curve_csv(&results).as_bytes(),
    )?;
    Ok(RunSummary {
        run: named.name.clone(),
        points: points.len(),
        failed,
    })
}

/// Flat efficiency-vs-parameters curve across the grid.
fn efficiency_curve_csv(results: &[(PointId, u64, PointArtifacts)]) -> String {
    let mut out = String::from("index,p1,p2,efficiency,std_error,status\n");
    for (point, _, artifacts) in results {
        match &artifacts.outcome {
            PointOutcome::Ok(r) => {
                let eff = r
                    .report
                    .as_ref()
                    .map(|rep| format!("{:e}", rep.efficiency))
                    .unwrap_or_default();
                let sigma = r.mc_std_error.map(|s| format!("{s:e}")).unwrap_or_default();
                out.push_str(&format!(
                    "{},{:e},{:e},{eff},{sigma},ok\n",
                    point.index, point.p1, point.p2
                ));
            }
            PointOutcome::Error { .. } => {
                out.push_str(&format!(
                    "{},{:e},{:e},,,error\n",
                    point.index, point.p1, point.p2
                ));
            }
        }
    }
    out
}

fn lm_snapshot_ndjson(traj: &Trajectory) -> Result<Option<String>> {
    // The (l, m) labels are reconstructed by the consumer from the basis
    // parameters in the manifest; rows carry tau plus |a|^2 per basis index.
    let Some(grids) = &traj.lm_snapshots else {
        return Ok(None);
    };
    #[derive(Serialize)]
    struct Row<'a> {
        tau: f64,
        p: &'a [f64],
    }
    Ok(Some(ndjson(
        traj.times.iter().zip(grids).map(|(&tau, p)| Row { tau, p }),
    )?))
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub schema: u32,
    pub seed: u64,
    pub config: serde_json::Value,
    pub runs: Vec<RunSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence: Option<Vec<ConvergenceReport>>,
    pub outputs: Vec<crate::output::FileRecord>,
}

/// Execute a whole config document. Returns the summaries (any failed
/// point makes the process exit nonzero).
pub fn run_scenario(
    doc: &ConfigDoc,
    config_echo: serde_json::Value,
    out_dir: &str,
) -> Result<Vec<RunSummary>> {
    let mut sink = OutputSink::new(out_dir)?;
    let mut summaries = Vec::new();
    for named in &doc.runs {
        let summary = execute_run(doc.seed, named, &mut sink)
            .with_context(|| format!("run '{}'", named.name))?;
        summaries.push(summary);
    }
    if matches!(
        doc.runs.first().map(|r| r.scenario.mode),
        Some(Mode::TheoryOnly)
    ) {
        sink.write("molecules.csv", molecules_csv().as_bytes())?;
    }
    let manifest = Manifest {
        tool: "centrifuge",
        version: env!("CARGO_PKG_VERSION"),
        schema: doc.schema,
        seed: doc.seed,
        config: config_echo,
        runs: summaries.clone(),
        convergence: None,
        outputs: sink.records().to_vec(),
    };
    sink.write_manifest(&manifest)?;
    Ok(summaries)
}

/// Bundled molecule table with the `P2` each molecule reaches at a
/// 1 ps^-2 chirp.
fn molecules_csv() -> String {
    let mut out = String::from("molecule,inertia_kg_m2,p2_at_beta_1ps2\n");
    for name in molecule_names() {
        let inertia = molecule_inertia(name).expect("bundled");
        let p2 = HBAR_SI / (inertia * 1e12);
        out.push_str(&format!("{name},{inertia:e},{p2:e}\n"));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub run: String,
    pub point: PointId,
    pub efficiency_base: f64,
    pub efficiency_refined: f64,
    pub delta: f64,
    pub flagged: bool,
    pub note: String,
}

/// Re-run a sample point of each run with doubled basis cuts and 10x
/// tighter tolerances; flag efficiency shifts above 1e-3.
pub fn convergence_check(doc: &ConfigDoc) -> Result<Vec<ConvergenceReport>> {
    let mut out = Vec::new();
    for named in &doc.runs {
        let s = &named.scenario;
        let points = grid_points(s)?;
        let probe = points[points.len() / 2];
        if s.mode == Mode::TheoryOnly {
            out.push(ConvergenceReport {
                run: named.name.clone(),
                point: probe,
                efficiency_base: 0.0,
                efficiency_refined: 0.0,
                delta: 0.0,
                flagged: false,
                note: "theory_only: closed forms, trivially converged".to_string(),
            });
            continue;
        }
        let seed = point_seed(doc.seed, &named.name, probe.index);
        let flags = OutputFlags {
            distributions: false,
            trajectory: false,
            lm_snapshots: false,
            per_member: false,
            per_sample: false,
        };
        let base = run_point(s, probe, seed, &flags)?;
        let mut refined_scenario = s.clone();
        let l_f = target_l(s.tau_f_at(probe.p2), probe.p2);
        let base_l_max = s.numerics.l_max.unwrap_or((1.5 * l_f).ceil() as u32);
        refined_scenario.numerics.l_max = Some(2 * base_l_max);
        refined_scenario.numerics.c_max = s.numerics.c_max.map(|c| 2 * c).or(Some({
            // double the default ladder-climbing cut
            24
        }));
        refined_scenario.numerics.c_buffer = 2 * s.numerics.c_buffer;
        refined_scenario.numerics.rel_tol = s.numerics.rel_tol / 10.0;
        refined_scenario.numerics.abs_tol = s.numerics.abs_tol / 10.0;
        if s.mode == Mode::ClassicalMc {
            refined_scenario.numerics.n_samples = 4 * s.numerics.n_samples;
        }
        let refined = run_point(&refined_scenario, probe, seed, &flags)?;
        let eff = |a: &PointArtifacts| -> f64 {
            match &a.outcome {
                PointOutcome::Ok(r) => r.report.as_ref().map(|r| r.efficiency).unwrap_or(0.0),
                PointOutcome::Error { .. } => f64::NAN,
            }
        };
        let (e0, e1) = (eff(&base), eff(&refined));
        let delta = (e1 - e0).abs();
        // statistical allowance for Monte Carlo probes
        let stat = match (&base.outcome, s.mode) {
            (PointOutcome::Ok(r), Mode::ClassicalMc) => r.mc_std_error.unwrap_or(0.0) * 3.0,
            _ => 0.0,
        };
        let threshold = 1e-3_f64.max(stat);
        let flagged = !(delta <= threshold);
        let note = if flagged {
            let near = classify_regime(probe.p1, probe.p2)?.ar_product;
            if (near - 0.5).abs() < 0.25 {
                "near the capture threshold population separation is slow; consider a larger tau_f"
                    .to_string()
            } else {
                "efficiency shifted more than 1e-3 under refinement".to_string()
            }
        } else {
            "converged".to_string()
        };
        out.push(ConvergenceReport {
            run: named.name.clone(),
            point: probe,
            efficiency_base: e0,
            efficiency_refined: e1,
            delta,
            flagged,
            note,
        });
    }
    Ok(out)
}

/// Coupling-table CSV dump for cross-checks.
pub fn dump_coupling_csv(
    l_max: u32,
    c_max: u32,
    parity_l: Option<Parity>,
    parity_m: Option<Parity>,
) -> Result<String> {
    let basis = build_basis(l_max, c_max, parity_l, parity_m)?;
    let table = centrifuge::coupling::build_coupling(&basis);
    let mut out = String::from("l,m,dl,dm,value\n");
    for (l, m, dl, dm, v) in table.rows(&basis) {
        out.push_str(&format!("{l},{m},{dl},{dm},{v:e}\n"));
    }
    Ok(out)
}
