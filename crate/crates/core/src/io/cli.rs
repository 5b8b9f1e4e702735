//! The `chaoslab` command line. Exit codes: 0 success, 1 configuration or
//! usage error, 2 runtime failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::error::{LabError, Result};
use crate::io::config::{parse_config, ExperimentKind, RunConfig};
use crate::io::runner::{execute, rerun_from_manifest, sub_run_count};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "chaoslab", version, about = "Propagation-of-chaos experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// JSON run configuration; without it the built-in preset is used.
    #[arg(long, env = "CHAOSLAB_CONFIG")]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, env = "CHAOSLAB_OUT")]
    out: Option<PathBuf>,
    /// Master seed; replaces any explicit seed list.
    #[arg(long, env = "CHAOSLAB_SEED")]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, env = "CHAOSLAB_JOBS")]
    jobs: Option<usize>,
    /// Print the resolved configuration and sub-run count, run nothing.
    #[arg(long, env = "CHAOSLAB_DRY_RUN")]
    dry_run: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decay of the compensated sup-W1 statistic in N.
    ChaosRate(Common),
    /// Uniform statistic over a finite Hölder field net.
    GcSup(Common),
    /// Triangle decompositions through the frozen-field couplings.
    CouplingDecomp(Common),
    /// Sorting drift that defeats the uniform statistic.
    Counterexample(Common),
    /// Two solutions of a non-Lipschitz SDE driven by one Brownian path.
    Nonuniqueness(Common),
    /// Tail of the Hölder norm of the empirical drift.
    TimeRegularity(Common),
    /// Kernel-weighted uniform law of large numbers.
    UllnKernel(Common),
    /// Covering-number lemmas and Lipschitz-ball net growth.
    EntropyCheck {
        #[command(flatten)]
        common: Common,
        /// Comma-separated radii, e.g. 0.4,0.2,0.1.
        #[arg(long, value_delimiter = ',', env = "CHAOSLAB_EPS")]
        eps: Option<Vec<f64>>,
    },
    /// Weighted energy estimate for pairs of net fields.
    EnergyCheck(Common),
    /// Heat-flow variance, mass conservation and grid refinement.
    PdeSelftest(Common),
    /// Re-run the configuration of a manifest and compare every digest.
    Rerun {
        manifest: PathBuf,
        /// Directory for the new run (default: `rerun` next to the manifest).
        #[arg(long, env = "CHAOSLAB_OUT")]
        out: Option<PathBuf>,
        #[arg(long, env = "CHAOSLAB_JOBS")]
        jobs: Option<usize>,
    },
}

fn exit_code(e: &LabError) -> i32 {
    if e.is_config_error() {
        EXIT_CONFIG
    } else {
        EXIT_RUNTIME
    }
}

fn resolve(kind: ExperimentKind, common: &Common, eps: Option<Vec<f64>>) -> Result<RunConfig> {
    let mut c = match &common.config {
        Some(path) => {
            let c = parse_config(path)?;
            if c.experiment != kind {
                return Err(LabError::Config(format!(
                    "config is for `{}` but the subcommand is `{}`",
                    c.experiment.name(),
                    kind.name()
                )));
            }
            c
        }
        None => RunConfig::preset(kind),
    };
    if let Some(seed) = common.seed {
        c.master_seed = seed;
        c.seeds = None;
    }
    if let Some(out) = &common.out {
        c.output = Some(out.clone());
    }
    if let Some(eps) = eps {
        c.entropy.eps = eps;
    }
    c.validate()?;
    Ok(c)
}

fn in_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match jobs {
        None => f(),
        Some(0) => Err(LabError::Config("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| LabError::Experiment(e.to_string()))?
            .install(f),
    }
}

fn run_experiment(kind: ExperimentKind, common: Common, eps: Option<Vec<f64>>, out: &mut dyn Write) -> Result<()> {
    let c = resolve(kind, &common, eps)?;
    if common.dry_run {
        let text = serde_json::to_string_pretty(&json!({
            "config": c,
            "config_hash": c.hash()?,
            "seeds": c.resolved_seeds(),
            "sub_runs": sub_run_count(&c),
        }))?;
        writeln!(out, "{text}")?;
        return Ok(());
    }
    let dir = c.output_dir();
    let manifest = in_pool(common.jobs, || execute(&c, &dir))?;
    let summary = std::fs::read_to_string(dir.join("summary.json"))?;
    write!(out, "{summary}")?;
    writeln!(out, "wrote {} artifacts and manifest.json to {}", manifest.artifacts.len(), dir.display())?;
    Ok(())
}

fn rerun(manifest: PathBuf, dir: Option<PathBuf>, jobs: Option<usize>, out: &mut dyn Write) -> Result<bool> {
    let dir = dir.unwrap_or_else(|| manifest.parent().map(|p| p.join("rerun")).unwrap_or_else(|| "rerun".into()));
    let (_, checks) = in_pool(jobs, || rerun_from_manifest(&manifest, &dir))?;
    for c in &checks {
        let status = if c.matches() { "match" } else { "DIFFERS" };
        writeln!(out, "{status} {} {}", c.path, c.expected)?;
    }
    Ok(checks.iter().all(|c| c.matches()))
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_CONFIG
                }
            };
        }
    };
    let result = match cli.command {
        Command::ChaosRate(c) => run_experiment(ExperimentKind::ChaosRate, c, None, out),
        Command::GcSup(c) => run_experiment(ExperimentKind::GcSup, c, None, out),
        Command::CouplingDecomp(c) => run_experiment(ExperimentKind::CouplingDecomp, c, None, out),
        Command::Counterexample(c) => run_experiment(ExperimentKind::Counterexample, c, None, out),
        Command::Nonuniqueness(c) => run_experiment(ExperimentKind::Nonuniqueness, c, None, out),
        Command::TimeRegularity(c) => run_experiment(ExperimentKind::TimeRegularity, c, None, out),
        Command::UllnKernel(c) => run_experiment(ExperimentKind::UllnKernel, c, None, out),
        Command::EntropyCheck { common, eps } => run_experiment(ExperimentKind::EntropyCheck, common, eps, out),
        Command::EnergyCheck(c) => run_experiment(ExperimentKind::EnergyCheck, c, None, out),
        Command::PdeSelftest(c) => run_experiment(ExperimentKind::PdeSelftest, c, None, out),
        Command::Rerun { manifest, out: dir, jobs } => match rerun(manifest, dir, jobs, out) {
            Ok(true) => Ok(()),
            Ok(false) => {
                let _ = writeln!(err, "error: re-run digests differ from the manifest");
                return EXIT_RUNTIME;
            }
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("chaoslab").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn unknown_flag_and_subcommand_give_usage() {
        let (code, _, err) = call(&["chaos-rate", "--bogus"]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(err.contains("Usage"), "{err}");
        let (code, _, err) = call(&["frobnicate"]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(err.contains("Usage"));
        assert_eq!(call(&[]).0, EXIT_CONFIG);
        assert_eq!(call(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn dry_run_reports_sub_runs() {
        let dir = tempfile::tempdir().unwrap();
        let out_dir = dir.path().join("never");
        let (code, out, _) = call(&["gc-sup", "--dry-run", "--seed", "3", "--out", out_dir.to_str().unwrap()]);
        assert_eq!(code, EXIT_OK);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["sub_runs"], 4 * 16);
        assert_eq!(v["config"]["master_seed"], 3);
        assert!(!out_dir.exists());
    }

    #[test]
    fn config_errors_exit_one() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"experiment":"chaos-rate","kernel":{"family":"holder_power","alpha":1.5}}"#).unwrap();
        let (code, _, err) = call(&["chaos-rate", "--config", path.to_str().unwrap(), "--dry-run"]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(err.contains("alpha must lie in (0,1]"), "{err}");
        let (code, _, err) = call(&["gc-sup", "--config", path.to_str().unwrap()]);
        assert_eq!(code, EXIT_CONFIG, "{err}");
    }
}
