//! Scenario configuration: a versioned JSON document describing one or more
//! runs (mode, parameters or a parameter grid, pulse, horizon, numerics).

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use centrifuge::analysis::tau_for_target;
use centrifuge::pulse::{DrivePulse, Envelope};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    GroundFull,
    GroundRwa,
    ThermalRwa,
    ThermalFull,
    ClassicalMc,
    TheoryOnly,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::GroundFull => "ground_full",
            Mode::GroundRwa => "ground_rwa",
            Mode::ThermalRwa => "thermal_rwa",
            Mode::ThermalFull => "thermal_full",
            Mode::ClassicalMc => "classical_mc",
            Mode::TheoryOnly => "theory_only",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GridScale {
    #[default]
    Linear,
    Log,
}

/// One parameter axis: a fixed value or a swept grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisSpec {
    Fixed(f64),
    Grid {
        min: f64,
        max: f64,
        steps: usize,
        #[serde(default)]
        scale: GridScale,
    },
}

impl AxisSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        match *self {
            AxisSpec::Fixed(v) => Ok(vec![v]),
            AxisSpec::Grid {
                min,
                max,
                steps,
                scale,
            } => {
                if steps < 1 {
                    bail!("grid steps must be >= 1");
                }
                if !(min.is_finite() && max.is_finite()) || min > max {
                    bail!("grid range [{min}, {max}] invalid");
                }
                if steps == 1 {
                    return Ok(vec![min]);
                }
                let n = steps as f64 - 1.0;
                let vals = match scale {
                    GridScale::Linear => (0..steps)
                        .map(|i| min + (max - min) * i as f64 / n)
                        .collect(),
                    GridScale::Log => {
                        if min <= 0.0 {
                            bail!("log grid requires min > 0");
                        }
                        let (la, lb) = (min.ln(), max.ln());
                        (0..steps)
                            .map(|i| (la + (lb - la) * i as f64 / n).exp())
                            .collect()
                    }
                };
                Ok(vals)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamsSpec {
    pub p1: AxisSpec,
    pub p2: AxisSpec,
}

/// Pulse description; a missing pulse means a constant envelope at the
/// point's `P1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub envelope: EnvelopeSpec,
    #[serde(default)]
    pub truncation_tau: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum EnvelopeSpec {
    Constant,
    Gaussian { sigma: f64 },
}

impl PulseSpec {
    /// Materialize for a grid point: constant envelopes take the point's
    /// `P1`; Gaussian envelopes use it as the peak `P10`.
    pub fn build(&self, p1: f64) -> DrivePulse {
        let envelope = match self.envelope {
            EnvelopeSpec::Constant => Envelope::Constant { p1 },
            EnvelopeSpec::Gaussian { sigma } => Envelope::Gaussian { p10: p1, sigma },
        };
        DrivePulse {
            envelope,
            truncation_tau: self.truncation_tau,
        }
    }
}

fn default_rel_tol() -> f64 {
    1e-8
}
fn default_abs_tol() -> f64 {
    1e-10
}
fn default_c_buffer() -> u32 {
    12
}
fn default_weight_cutoff() -> f64 {
    1e-4
}
fn default_n_samples() -> usize {
    10_000
}

/// Numerical knobs; all optional with documented defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Numerics {
    /// Basis cut in `l`; default `ceil(1.5 l_f)`.
    pub l_max: Option<u32>,
    /// Basis cut in `C = l - m` for ground full runs; default 12 in the
    /// ladder-climbing regime, otherwise unrestricted.
    pub c_max: Option<u32>,
    /// Thermal full runs use `C <= (l0 - m0) + c_buffer` per member.
    pub c_buffer: u32,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub snapshot_every: Option<f64>,
    /// Diagonal coupling shift; default on for full modes, off for RWA.
    pub include_c0_shift: Option<bool>,
    pub weight_cutoff: f64,
    pub l0_max: Option<u32>,
    pub n_samples: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            l_max: None,
            c_max: None,
            c_buffer: default_c_buffer(),
            rel_tol: default_rel_tol(),
            abs_tol: default_abs_tol(),
            snapshot_every: None,
            include_c0_shift: None,
            weight_cutoff: default_weight_cutoff(),
            l0_max: None,
            n_samples: default_n_samples(),
        }
    }
}

/// Which artifacts to write per point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputFlags {
    /// Final `P(l)` distribution CSVs.
    pub distributions: bool,
    /// Trajectory CSVs `(tau, l, P)`; needs `numerics.snapshot_every`.
    pub trajectory: bool,
    /// NDJSON snapshots of the full `(l, m)` grid.
    pub lm_snapshots: bool,
    /// Thermal runs: NDJSON per-member records.
    pub per_member: bool,
    /// Classical runs: NDJSON per-sample final states.
    pub per_sample: bool,
}

impl Default for OutputFlags {
    fn default() -> Self {
        OutputFlags {
            distributions: true,
            trajectory: false,
            lm_snapshots: false,
            per_member: false,
            per_sample: false,
        }
    }
}

/// One named run of a config document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub mode: Mode,
    pub params: ParamsSpec,
    #[serde(default)]
    pub pulse: Option<PulseSpec>,
    #[serde(default)]
    pub tau_f: Option<f64>,
    /// Exactly one of `tau_f` / `l_f` must be set; the other is derived
    /// through `tau_f = P2 (2 l_f - 1)`.
    #[serde(default)]
    pub l_f: Option<f64>,
    #[serde(default)]
    pub l_c: Option<f64>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub outputs: OutputFlags,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        match (self.tau_f, self.l_f) {
            (Some(_), Some(_)) => bail!("exactly one of tau_f / l_f may be given, not both"),
            (None, None) => bail!("one of tau_f / l_f is required"),
            (Some(t), None) if !(t > 0.0) => bail!("tau_f must be > 0"),
            (None, Some(l)) if !(l > 0.5) => bail!("l_f must be > 1/2"),
            _ => {}
        }
        if matches!(
            self.mode,
            Mode::ThermalRwa | Mode::ThermalFull | Mode::ClassicalMc
        ) && self.l_c.is_none()
        {
            bail!("mode {} requires l_c", self.mode.as_str());
        }
        if let Some(l_c) = self.l_c {
            if !(l_c >= 0.0) {
                bail!("l_c must be >= 0");
            }
        }
        if !(self.numerics.rel_tol > 0.0 && self.numerics.abs_tol > 0.0) {
            bail!("tolerances must be > 0");
        }
        if self.outputs.trajectory && self.numerics.snapshot_every.is_none() {
            bail!("outputs.trajectory requires numerics.snapshot_every");
        }
        self.params.p1.values()?;
        self.params.p2.values()?;
        Ok(())
    }

    /// Final time for a grid point (`l_f` resolved against its `p2`).
    pub fn tau_f_at(&self, p2: f64) -> f64 {
        match (self.tau_f, self.l_f) {
            (Some(t), _) => t,
            (None, Some(l_f)) => tau_for_target(l_f, p2),
            _ => unreachable!("validated"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedScenario {
    pub name: String,
    #[serde(flatten)]
    pub scenario: Scenario,
}

/// Top-level config document: either one scenario or a `runs` list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigDoc {
    pub schema: u32,
    #[serde(default)]
    pub seed: u64,
    pub runs: Vec<NamedScenario>,
}

impl ConfigDoc {
    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            bail!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                self.schema
            );
        }
        if self.runs.is_empty() {
            bail!("config contains no runs");
        }
        let mut names: Vec<&str> = self.runs.iter().map(|r| r.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.runs.len() {
            bail!("run names must be unique");
        }
        for r in &self.runs {
            r.scenario
                .validate()
                .with_context(|| format!("run '{}'", r.name))?;
        }
        Ok(())
    }
}

/// Parse a config document; a bare scenario object is wrapped as a single
/// run named "run".
pub fn parse_config(text: &str) -> Result<ConfigDoc> {
    let value: serde_json::Value =
        serde_json::from_str(text).context("config is not valid JSON")?;
    doc_from_value(value)
}

pub fn doc_from_value(value: serde_json::Value) -> Result<ConfigDoc> {
    let doc: ConfigDoc = if value.get("runs").is_some() {
        serde_json::from_value(value).context("invalid config document")?
    } else {
        let schema = value
            .get("schema")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| anyhow!("config missing schema version"))? as u32;
        let seed = value.get("seed").and_then(|v| v.as_u64()).unwrap_or(0);
        let mut inner = value;
        if let Some(obj) = inner.as_object_mut() {
            obj.remove("schema");
            obj.remove("seed");
        }
        let scenario: Scenario =
            serde_json::from_value(inner).context("invalid scenario object")?;
        ConfigDoc {
            schema,
            seed,
            runs: vec![NamedScenario {
                name: "run".to_string(),
                scenario,
            }],
        }
    };
    doc.validate()?;
    Ok(doc)
}

/// Apply `key=value` overrides (dotted JSON paths, applied to every run;
/// `seed=N` targets the document).
pub fn apply_overrides(text: &str, overrides: &[String]) -> Result<String> {
    let mut value: serde_json::Value =
        serde_json::from_str(text).context("config is not valid JSON")?;
    for ov in overrides {
        let (path, raw) = ov
            .split_once('=')
            .ok_or_else(|| anyhow!("override '{ov}' is not key=value"))?;
        let new: serde_json::Value = serde_json::from_str(raw)
            .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
        let segments: Vec<&str> = path.split('.').collect();
        if value.get("runs").is_some() && segments[0] != "seed" && segments[0] != "schema" {
            let runs = value
                .get_mut("runs")
                .and_then(|r| r.as_array_mut())
                .ok_or_else(|| anyhow!("runs is not an array"))?;
            for run in runs.iter_mut() {
                set_path(run, &segments, new.clone())?;
            }
        } else {
            set_path(&mut value, &segments, new)?;
        }
    }
    Ok(serde_json::to_string(&value)?)
}

fn set_path(
    value: &mut serde_json::Value,
    segments: &[&str],
    new: serde_json::Value,
) -> Result<()> {
    let mut cur = value;
    for seg in &segments[..segments.len() - 1] {
        cur = cur
            .as_object_mut()
            .ok_or_else(|| anyhow!("path segment '{seg}' is not an object"))?
            .entry(seg.to_string())
            .or_insert_with(|| serde_json::json!({}));
    }
    cur.as_object_mut()
        .ok_or_else(|| anyhow!("cannot set key on non-object"))?
        .insert(segments[segments.len() - 1].to_string(), new);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bare_scenario_is_wrapped() {
        let doc = parse_config(
            r#"{"schema":1,"seed":7,"mode":"ground_rwa","params":{"p1":3.0,"p2":10.0},"l_f":20}"#,
        )
        .unwrap();
        assert_eq!(doc.runs.len(), 1);
        assert_eq!(doc.seed, 7);
        assert_eq!(doc.runs[0].scenario.mode, Mode::GroundRwa);
        let tau = doc.runs[0].scenario.tau_f_at(10.0);
        assert!((tau - 390.0).abs() < 1e-12);
    }

    #[test]
    fn grid_axes_expand() {
        let lin = AxisSpec::Grid {
            min: 1.0,
            max: 3.0,
            steps: 5,
            scale: GridScale::Linear,
        };
        assert_eq!(lin.values().unwrap(), vec![1.0, 1.5, 2.0, 2.5, 3.0]);
        let log = AxisSpec::Grid {
            min: 0.1,
            max: 10.0,
            steps: 3,
            scale: GridScale::Log,
        };
        let v = log.values().unwrap();
        assert!((v[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tau_and_lf_are_mutually_exclusive() {
        let err = parse_config(
            r#"{"schema":1,"mode":"ground_rwa","params":{"p1":3.0,"p2":10.0},"l_f":20,"tau_f":5.0}"#,
        )
        .unwrap_err();
        assert!(format!("{err:#}").contains("exactly one"));
        assert!(
            parse_config(r#"{"schema":1,"mode":"ground_rwa","params":{"p1":3.0,"p2":10.0}}"#)
                .is_err()
        );
    }

    #[test]
    fn thermal_requires_lc_and_schema_checked() {
        assert!(parse_config(
            r#"{"schema":1,"mode":"thermal_rwa","params":{"p1":3.0,"p2":10.0},"l_f":20}"#
        )
        .is_err());
        assert!(parse_config(
            r#"{"schema":9,"mode":"ground_rwa","params":{"p1":3.0,"p2":10.0},"l_f":20}"#
        )
        .is_err());
    }

    #[test]
    fn overrides_rewrite_runs() {
        let text =
            r#"{"schema":1,"seed":1,"mode":"ground_rwa","params":{"p1":3.0,"p2":10.0},"l_f":20}"#;
        let patched =
            apply_overrides(text, &["numerics.rel_tol=1e-6".into(), "seed=9".into()]).unwrap();
        let doc = parse_config(&patched).unwrap();
        assert_eq!(doc.seed, 9);
        assert_eq!(doc.runs[0].scenario.numerics.rel_tol, 1e-6);
    }
}
