#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0)` also rejects NaN

//! Command-line front end: scenario runs, regime classification,
//! thresholds, convergence checks and coupling-table dumps.

mod config;
mod output;
mod presets;
mod runner;

use std::fs;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use centrifuge::basis::Parity;
use centrifuge::theory::{classify_regime, efficient_lc_threshold};

const EXIT_PARTIAL: u8 = 1;
const EXIT_INVALID_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(
    name = "centrifuge",
    version,
    about = "Chirped-drive rotational excitation: quantum ladder climbing and classical autoresonance"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigSource {
    /// Path to a JSON config document.
    #[arg(long, conflicts_with = "preset")]
    config: Option<String>,
    /// Bundled preset name (fig1 .. fig6).
    #[arg(long)]
    preset: Option<String>,
    /// Dotted-path overrides applied to every run, e.g. numerics.rel_tol=1e-6.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigSource {
    fn load(&self) -> Result<(config::ConfigDoc, serde_json::Value)> {
        let text = match (&self.config, &self.preset) {
            (Some(path), None) => {
                fs::read_to_string(path).with_context(|| format!("reading config {path}"))?
            }
            (None, Some(name)) => presets::preset(name)
                .ok_or_else(|| {
                    anyhow!(
                        "unknown preset '{name}' (available: {})",
                        presets::preset_names().join(", ")
                    )
                })?
                .to_string(),
            _ => bail!("exactly one of --config / --preset is required"),
        };
        let mut overrides = self.overrides.clone();
        if let Some(seed) = self.seed {
            overrides.push(format!("seed={seed}"));
        }
        let text = config::apply_overrides(&text, &overrides)?;
        let echo: serde_json::Value = serde_json::from_str(&text)?;
        let doc = config::parse_config(&text)?;
        Ok((doc, echo))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario config or preset and write its artifacts.
    Run {
        #[command(flatten)]
        source: ConfigSource,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: String,
        /// Worker threads (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Classify a (P1, P2) point against the regime boundaries.
    Classify {
        #[arg(long)]
        p1: f64,
        #[arg(long)]
        p2: f64,
    },
    /// P1 threshold for 50% climbing efficiency up to l_hat.
    Threshold {
        #[arg(long)]
        l_hat: u32,
    },
    /// Re-run a sample point per run with doubled cuts and tighter
    /// tolerances; report efficiency shifts.
    Convergence {
        #[command(flatten)]
        source: ConfigSource,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Dump the coupling table as CSV (l, m, dl, dm, value).
    DumpCoupling {
        #[arg(long)]
        l_max: u32,
        /// Bound on C = l - m (default: unrestricted).
        #[arg(long)]
        c_max: Option<u32>,
        #[arg(long, value_enum, default_value_t = ParityArg::Any)]
        parity_l: ParityArg,
        #[arg(long, value_enum, default_value_t = ParityArg::Any)]
        parity_m: ParityArg,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ParityArg {
    Even,
    Odd,
    Any,
}

impl From<ParityArg> for Option<Parity> {
    fn from(p: ParityArg) -> Self {
        match p {
            ParityArg::Even => Some(Parity::Even),
            ParityArg::Odd => Some(Parity::Odd),
            ParityArg::Any => None,
        }
    }
}

fn init_workers(workers: Option<usize>) -> Result<()> {
    if let Some(n) = workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("initializing worker pool")?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_PARTIAL)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run {
            source,
            out,
            workers,
        } => {
            init_workers(workers)?;
            let (doc, echo) = match source.load() {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("invalid config: {e:#}");
                    return Ok(ExitCode::from(EXIT_INVALID_CONFIG));
                }
            };
            let summaries = runner::run_scenario(&doc, echo, &out)?;
            let mut failed = 0usize;
            for s in &summaries {
                println!("run {}: {} points, {} failed", s.run, s.points, s.failed);
                failed += s.failed;
            }
            println!("outputs in {out}/ (manifest.json lists files and hashes)");
            Ok(if failed > 0 {
                ExitCode::from(EXIT_PARTIAL)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Classify { p1, p2 } => {
            let report = match classify_regime(p1, p2) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("invalid input: {e}");
                    return Ok(ExitCode::from(EXIT_INVALID_CONFIG));
                }
            };
            println!(
                "{}",
                serde_json::json!({
                    "p1": p1,
                    "p2": p2,
                    "lc_boundary_value": report.lc_boundary_value,
                    "ar_product": report.ar_product,
                    "classification": report.classification,
                })
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Threshold { l_hat } => {
            let p1 = match efficient_lc_threshold(l_hat) {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("invalid input: {e}");
                    return Ok(ExitCode::from(EXIT_INVALID_CONFIG));
                }
            };
            println!(
                "{}",
                serde_json::json!({ "l_hat": l_hat, "p1_threshold": p1 })
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Convergence { source, workers } => {
            init_workers(workers)?;
            let (doc, _) = match source.load() {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("invalid config: {e:#}");
                    return Ok(ExitCode::from(EXIT_INVALID_CONFIG));
                }
            };
            let reports = runner::convergence_check(&doc)?;
            println!("{}", serde_json::to_string_pretty(&reports)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::DumpCoupling {
            l_max,
            c_max,
            parity_l,
            parity_m,
            out,
        } => {
            let csv = runner::dump_coupling_csv(
                l_max,
                c_max.unwrap_or(2 * l_max),
                parity_l.into(),
                parity_m.into(),
            )?;
            match out {
                Some(path) => fs::write(&path, csv).with_context(|| format!("writing {path}"))?,
                None => print!("{csv}"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
