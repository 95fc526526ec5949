//! Command-line front end: `run`, `validate`, `compare`, and
//! `presets list|show`.
//!
//! Success prints a result summary as JSON on stdout and exits 0. Every
//! failure prints one machine-readable JSON object on stderr
//! (`{"error": <kind>, "message": ..., "issues": [...]}`) and exits
//! nonzero: 1 for runtime/IO failures, 2 for invalid configs or flag
//! usage, 3 when `compare` ran but the deviation exceeded the tolerance.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{parse_config, ConfigError, ExperimentConfig, ProtocolConfig};
use crate::output::{compare_files, write_run, OutputError};
use crate::presets;
use crate::protocols::RunFrame;

// ---------------------------------------------------------------------------
// Argument grammar
// ---------------------------------------------------------------------------

#[derive(Debug, Parser)]
#[command(
    name = "neoqed",
    version,
    about = "Driven, dissipative electron-qubit/resonator simulations",
    propagate_version = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Execute an experiment config and write CSV results plus a manifest.
    Run(RunArgs),
    /// Parse a config and report every validation problem at once.
    Validate(SourceArgs),
    /// Compare two result files observable by observable.
    Compare(CompareArgs),
    /// List or print the bundled example configurations.
    Presets(PresetsArgs),
}

/// Where a config comes from: a TOML file or a bundled preset.
#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Path to an experiment config in TOML.
    #[arg(long, value_name = "FILE", conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Name of a bundled preset (see `presets list`).
    #[arg(long, value_name = "NAME")]
    pub preset: Option<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Directory for results (overrides the config's `output.dir`).
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Size of the worker thread pool (also settable via NEOQED_THREADS).
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
    /// Integration frame; `lab` keeps the full carrier oscillation and is
    /// supported for the rabi-length protocol on the reduced model.
    #[arg(long, value_enum)]
    pub frame: Option<FrameArg>,
    /// Integrate with fixed-step RK4 at this step (µs); runs become
    /// bit-for-bit reproducible.
    #[arg(long, value_name = "DT_US")]
    pub fixed_step: Option<f64>,
    /// Validate, resolve amplitudes, and report the work plan; write
    /// nothing and integrate nothing.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FrameArg {
    Rotating,
    Lab,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Baseline result file (CSV).
    pub file_a: PathBuf,
    /// Candidate result file (CSV).
    pub file_b: PathBuf,
    /// Maximum allowed per-value |Δ|.
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
}

#[derive(Debug, Args)]
pub struct PresetsArgs {
    #[command(subcommand)]
    pub action: PresetsAction,
}

#[derive(Debug, Subcommand)]
pub enum PresetsAction {
    /// List the bundled presets with one-line summaries.
    List,
    /// Print a preset's TOML (pipe to a file to use it as a template).
    Show {
        /// Preset name, as printed by `presets list`.
        name: String,
    },
}

// ---------------------------------------------------------------------------
// Error reporting
// ---------------------------------------------------------------------------

/// A CLI failure: rendered as one JSON object on stderr, maps to an exit
/// code.
#[derive(Debug, Serialize)]
pub struct CliError {
    pub error: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub issues: Vec<String>,
    #[serde(skip)]
    pub exit_code: i32,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            error: "usage",
            message: message.into(),
            issues: Vec::new(),
            exit_code: 2,
        }
    }

    fn invalid_config(issues: Vec<String>) -> Self {
        Self {
            error: "invalid-config",
            message: format!(
                "configuration has {} problem{}",
                issues.len(),
                if issues.len() == 1 { "" } else { "s" }
            ),
            issues,
            exit_code: 2,
        }
    }

    fn runtime(kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            error: kind,
            message: message.into(),
            issues: Vec::new(),
            exit_code: 1,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Syntax(msg) => Self {
                error: "syntax",
                message: msg,
                issues: Vec::new(),
                exit_code: 2,
            },
            ConfigError::Invalid(issues) => Self::invalid_config(issues),
        }
    }
}

impl From<OutputError> for CliError {
    fn from(e: OutputError) -> Self {
        let kind = match &e {
            OutputError::Io { .. } => "io",
            OutputError::Format { .. } => "format",
            OutputError::ShapeMismatch(_) => "shape-mismatch",
        };
        Self::runtime(kind, e.to_string())
    }
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

/// Parse argv and run; returns the process exit code. stdout carries the
/// result, stderr carries errors (as JSON) only.
pub fn main_from_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders --help/--version and usage errors itself.
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!(
                "{}",
                serde_json::to_string(&err).unwrap_or_else(|_| err.message.clone())
            );
            err.exit_code
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Validate(source) => cmd_validate(&source),
        Command::Compare(args) => cmd_compare(&args),
        Command::Presets(args) => cmd_presets(&args),
    }
}

/// Load and fully validate the config named by `--config`/`--preset`.
fn load_config(source: &SourceArgs) -> Result<ExperimentConfig, CliError> {
    match (&source.config, &source.preset) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::runtime("io", format!("{}: {e}", path.display()))
            })?;
            Ok(parse_config(&text)?)
        }
        (None, Some(name)) => {
            let preset = presets::find(name).ok_or_else(|| {
                CliError::usage(format!(
                    "unknown preset {name:?}; `presets list` shows the available names"
                ))
            })?;
            Ok(parse_config(preset.toml)?)
        }
        (None, None) => Err(CliError::usage("pass --config <file> or --preset <name>")),
        (Some(_), Some(_)) => unreachable!("clap rejects --config with --preset"),
    }
}

fn configure_threads(flag: Option<usize>) -> Result<(), CliError> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("NEOQED_THREADS") {
            Ok(v) => Some(v.parse::<usize>().map_err(|_| {
                CliError::usage(format!(
                    "NEOQED_THREADS = {v:?} is not a thread count"
                ))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(CliError::usage("thread count must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::runtime("threads", e.to_string()))?;
    }
    Ok(())
}

fn apply_frame(config: &mut ExperimentConfig, frame: FrameArg) -> Result<(), CliError> {
    match (&mut config.protocol, frame) {
        (ProtocolConfig::RabiLength(p), FrameArg::Lab) => {
            p.options.frame = RunFrame::Lab;
            Ok(())
        }
        (ProtocolConfig::RabiLength(p), FrameArg::Rotating) => {
            p.options.frame = RunFrame::Rotating;
            Ok(())
        }
        (_, FrameArg::Rotating) => Ok(()), // every other protocol already integrates there
        (other, FrameArg::Lab) => Err(CliError::usage(format!(
            "--frame lab is only supported for the rabi-length protocol (this config runs {})",
            other.name()
        ))),
    }
}

fn apply_fixed_step(config: &mut ExperimentConfig, dt_us: f64) -> Result<(), CliError> {
    if !(dt_us > 0.0) {
        return Err(CliError::usage(format!(
            "--fixed-step {dt_us} must be a positive step in µs"
        )));
    }
    let step = Some(dt_us);
    match &mut config.protocol {
        ProtocolConfig::TwoTone(p) => p.options.integration.fixed_step_us = step,
        ProtocolConfig::PulsedSpectroscopy(p) => p.options.integration.fixed_step_us = step,
        ProtocolConfig::RabiLength(p) => p.options.integration.fixed_step_us = step,
        ProtocolConfig::RabiAmplitude(p) => p.options.integration.fixed_step_us = step,
        ProtocolConfig::ReadoutSwap(p) => p.options.integration.fixed_step_us = step,
        ProtocolConfig::Relaxation(p) => p.options.integration.fixed_step_us = step,
        ProtocolConfig::Ramsey(p) => p.options.integration.fixed_step_us = step,
        ProtocolConfig::EigenDiagram(_) => {
            return Err(CliError::usage(
                "--fixed-step has no meaning for eigen-diagram (nothing is integrated)",
            ));
        }
    }
    Ok(())
}

/// `--out-dir` beats `output.dir` beats the current directory; the
/// basename defaults to the protocol name.
fn resolve_destination(config: &ExperimentConfig, out_dir: Option<&Path>) -> (PathBuf, String) {
    let dir = out_dir
        .map(Path::to_path_buf)
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let basename = config
        .output
        .basename
        .clone()
        .unwrap_or_else(|| config.protocol.name().to_string());
    (dir, basename)
}

fn cmd_run(args: RunArgs) -> Result<i32, CliError> {
    let mut config = load_config(&args.source)?;
    if let Some(frame) = args.frame {
        apply_frame(&mut config, frame)?;
    }
    if let Some(dt) = args.fixed_step {
        apply_fixed_step(&mut config, dt)?;
    }
    // Flag overrides can invalidate a config that parsed clean (e.g.
    // `--frame lab` on a full-model run), so validate the final form.
    let issues = config.validation_issues();
    if !issues.is_empty() {
        return Err(CliError::invalid_config(issues));
    }
    let (dir, basename) = resolve_destination(&config, args.out_dir.as_deref());

    if args.dry_run {
        #[derive(Serialize)]
        struct DryRun<'a> {
            status: &'a str,
            protocol: &'a str,
            #[serde(skip_serializing_if = "Option::is_none")]
            title: &'a Option<String>,
            estimated_cells: usize,
            out_dir: &'a Path,
            basename: &'a str,
            resolved_amplitudes_mhz: std::collections::BTreeMap<String, Vec<f64>>,
        }
        println!(
            "{}",
            serde_json::to_string_pretty(&DryRun {
                status: "dry-run",
                protocol: config.protocol.name(),
                title: &config.title,
                estimated_cells: config.estimated_cells(),
                out_dir: &dir,
                basename: &basename,
                resolved_amplitudes_mhz: config.resolved_amplitudes_mhz(),
            })
            .expect("plan serializes")
        );
        return Ok(0);
    }

    configure_threads(args.threads)?;
    let started = Instant::now();
    let output = config
        .execute()
        .map_err(|e| CliError::runtime("run-failed", e.to_string()))?;
    let wall_time_s = started.elapsed().as_secs_f64();
    let artifacts = write_run(&config, &output, &dir, &basename, wall_time_s)?;

    #[derive(Serialize)]
    struct RunSummary<'a> {
        status: &'a str,
        protocol: &'a str,
        #[serde(skip_serializing_if = "Option::is_none")]
        title: &'a Option<String>,
        wall_time_s: f64,
        cell_failures: usize,
        files: Vec<&'a Path>,
        manifest: &'a Path,
    }
    let cell_failures = match &output {
        crate::config::RunOutput::Sweep(s) => s.failures.len(),
        _ => 0,
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&RunSummary {
            status: "ok",
            protocol: config.protocol.name(),
            title: &config.title,
            wall_time_s,
            cell_failures,
            files: artifacts.data_paths.iter().map(PathBuf::as_path).collect(),
            manifest: &artifacts.manifest_path,
        })
        .expect("summary serializes")
    );
    Ok(0)
}

fn cmd_validate(source: &SourceArgs) -> Result<i32, CliError> {
    let config = load_config(source)?;
    #[derive(Serialize)]
    struct Valid<'a> {
        status: &'a str,
        protocol: &'a str,
        #[serde(skip_serializing_if = "Option::is_none")]
        title: &'a Option<String>,
        estimated_cells: usize,
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&Valid {
            status: "valid",
            protocol: config.protocol.name(),
            title: &config.title,
            estimated_cells: config.estimated_cells(),
        })
        .expect("report serializes")
    );
    Ok(0)
}

fn cmd_compare(args: &CompareArgs) -> Result<i32, CliError> {
    if !(args.tolerance >= 0.0) {
        return Err(CliError::usage("--tolerance must be a number ≥ 0"));
    }
    let report = compare_files(&args.file_a, &args.file_b, args.tolerance)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );
    Ok(if report.pass { 0 } else { 3 })
}

fn cmd_presets(args: &PresetsArgs) -> Result<i32, CliError> {
    match &args.action {
        PresetsAction::List => {
            let all = presets::all();
            let width = all.iter().map(|p| p.name.len()).max().unwrap_or(0);
            for preset in all {
                println!("{:width$}  {}", preset.name, preset.summary);
            }
            Ok(0)
        }
        PresetsAction::Show { name } => {
            let preset = presets::find(name).ok_or_else(|| {
                CliError::usage(format!(
                    "unknown preset {name:?}; `presets list` shows the available names"
                ))
            })?;
            print!("{}", preset.toml);
            Ok(0)
        }
    }
}

// ---------------------------------------------------------------------------
// Tests (pure argument plumbing; end-to-end runs live in tests/cli.rs)
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::SweepModel;

    fn preset_config(name: &str) -> ExperimentConfig {
        presets::load(name).unwrap()
    }

    #[test]
    fn frame_flag_only_fits_rabi_length() {
        let mut rabi = preset_config("two_qubit_tableS1");
        apply_frame(&mut rabi, FrameArg::Lab).unwrap();
        let ProtocolConfig::RabiLength(p) = &rabi.protocol else {
            panic!("preset is rabi-length");
        };
        assert_eq!(p.options.frame, RunFrame::Lab);
        // The lab branch demands the reduced model, so the combined
        // config stays valid only when that already holds.
        assert_eq!(p.options.model, SweepModel::Reduced);
        assert!(rabi.validation_issues().is_empty());

        let mut swap = preset_config("readout_swap");
        let err = apply_frame(&mut swap, FrameArg::Lab).unwrap_err();
        assert_eq!(err.error, "usage");
        assert!(err.message.contains("readout-swap"), "{}", err.message);
        // An explicit `--frame rotating` is always acceptable.
        apply_frame(&mut swap, FrameArg::Rotating).unwrap();
    }

    #[test]
    fn fixed_step_reaches_every_integrating_protocol() {
        for preset in presets::all() {
            let mut config = preset_config(preset.name);
            let result = apply_fixed_step(&mut config, 0.002);
            if matches!(config.protocol, ProtocolConfig::EigenDiagram(_)) {
                assert!(result.is_err(), "{} should reject --fixed-step", preset.name);
            } else {
                result.unwrap_or_else(|e| panic!("{}: {}", preset.name, e.message));
                let json = serde_json::to_value(&config.protocol).unwrap();
                assert_eq!(
                    json["options"]["integration"]["fixed_step_us"], 0.002,
                    "{} did not record the step",
                    preset.name
                );
            }
        }
        let mut config = preset_config("relaxation_qb");
        assert!(apply_fixed_step(&mut config, 0.0).is_err());
        assert!(apply_fixed_step(&mut config, -1.0).is_err());
    }

    #[test]
    fn destination_resolution_order() {
        let mut config = preset_config("ramsey_qd");
        config.output.dir = None;
        config.output.basename = None;
        let (dir, base) = resolve_destination(&config, None);
        assert_eq!(dir, PathBuf::from("."));
        assert_eq!(base, "ramsey");

        config.output.dir = Some(PathBuf::from("results"));
        config.output.basename = Some("fringes".into());
        let (dir, base) = resolve_destination(&config, None);
        assert_eq!(dir, PathBuf::from("results"));
        assert_eq!(base, "fringes");

        let (dir, _) = resolve_destination(&config, Some(Path::new("elsewhere")));
        assert_eq!(dir, PathBuf::from("elsewhere"));
    }

    #[test]
    fn cli_grammar_parses() {
        let cli = Cli::try_parse_from([
            "neoqed", "run", "--preset", "relaxation_qb", "--out-dir", "/tmp/x", "--threads",
            "2", "--frame", "rotating", "--fixed-step", "0.01", "--dry-run",
        ])
        .unwrap();
        let Command::Run(args) = cli.command else {
            panic!("expected run");
        };
        assert_eq!(args.source.preset.as_deref(), Some("relaxation_qb"));
        assert_eq!(args.threads, Some(2));
        assert_eq!(args.frame, Some(FrameArg::Rotating));
        assert_eq!(args.fixed_step, Some(0.01));
        assert!(args.dry_run);

        // --config and --preset are mutually exclusive.
        assert!(Cli::try_parse_from([
            "neoqed", "run", "--config", "a.toml", "--preset", "relaxation_qb"
        ])
        .is_err());

        let cli =
            Cli::try_parse_from(["neoqed", "compare", "a.csv", "b.csv", "--tolerance", "1e-3"])
                .unwrap();
        let Command::Compare(args) = cli.command else {
            panic!("expected compare");
        };
        assert_eq!(args.tolerance, 1e-3);

        assert!(Cli::try_parse_from(["neoqed", "presets", "list"]).is_ok());
        assert!(Cli::try_parse_from(["neoqed", "presets", "show", "readout_swap"]).is_ok());
    }
}
