use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use lmsf_core::montecarlo::with_threads;
use lmsf_core::{run_experiment, sweep, EstimatorConfig, MseTrace, SweepParameter};

use crate::config::{ExperimentArgs, Settings};
use crate::error::{CliError, Result};
use crate::output::{
    emit_manifest_json, emit_mse_csv, emit_penalty_csv, emit_summary_json, sweep_columns,
    RunManifest, Summary, SweepDefinition, MANIFEST_FILE, MSE_FILE, PENALTY_FILE, SUMMARY_FILE,
};

/// Sparse channel estimation experiments with LMS/F-type adaptive filters.
#[derive(Debug, Parser)]
#[command(name = "lmsf", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one Monte-Carlo experiment and write mse.csv, summary.json, manifest.json
    #[command(allow_negative_numbers = true)]
    Run(ExperimentArgs),

    /// Repeat the experiment over values of phi, K or snr_db
    #[command(allow_negative_numbers = true)]
    Sweep(SweepArgs),

    /// Write the three zero-attractor curves over w in [-1, 1] to penalty.csv
    #[command(name = "penalty-curve", allow_negative_numbers = true)]
    PenaltyCurve(PenaltyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Parameter to sweep: phi, K or snr_db
    #[arg(long)]
    pub param: String,

    /// Comma-separated parameter values
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,

    #[command(flatten)]
    pub experiment: ExperimentArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PenaltyArgs {
    /// RZA reweighting factor
    #[arg(long, default_value_t = EstimatorConfig::DEFAULT_EPSILON)]
    pub epsilon: f64,

    /// RL1 weight offset
    #[arg(long, default_value_t = EstimatorConfig::DEFAULT_DELTA)]
    pub delta: f64,

    /// Number of grid points over [-1, 1]
    #[arg(long, default_value_t = 201)]
    pub grid: usize,

    /// Output directory
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn diverged_counts(traces: &[MseTrace]) -> BTreeMap<String, usize> {
    traces
        .iter()
        .map(|t| (t.label.clone(), t.diverged_runs))
        .collect()
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => run(&args),
        Command::Sweep(args) => run_sweep(&args),
        Command::PenaltyCurve(args) => {
            prepare_dir(&args.out)?;
            emit_penalty_csv(
                args.epsilon,
                args.delta,
                args.grid,
                &args.out.join(PENALTY_FILE),
            )
        }
    }
}

fn run(args: &ExperimentArgs) -> Result<()> {
    let settings = Settings::resolve(args)?;
    let spec = settings.to_spec()?;
    let threads = settings.worker_threads();
    let traces = with_threads(threads, || run_experiment(&spec))??;

    let mut replay = vec!["run".to_string()];
    replay.extend(settings.to_args());
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command: "run".into(),
        args: replay,
        spec: spec.clone(),
        base_seed: spec.base_seed,
        threads,
        sweep: None,
        timestamp_unix: timestamp(),
        diverged_runs: diverged_counts(&traces),
    };
    let summary = Summary::for_run(&spec, &traces)?;

    prepare_dir(&args.out)?;
    emit_mse_csv(&traces, &args.out.join(MSE_FILE))?;
    emit_summary_json(&manifest, &summary, &args.out.join(SUMMARY_FILE))?;
    emit_manifest_json(&manifest, &args.out.join(MANIFEST_FILE))
}

fn run_sweep(args: &SweepArgs) -> Result<()> {
    let parameter: SweepParameter = args.param.parse()?;
    let settings = Settings::resolve(&args.experiment)?;
    let spec = settings.to_spec()?;
    let threads = settings.worker_threads();
    let result = with_threads(threads, || sweep(&spec, parameter, &args.values))??;
    let columns = sweep_columns(&result);

    let mut replay = vec![
        "sweep".to_string(),
        "--param".to_string(),
        parameter.name().to_string(),
        "--values".to_string(),
        args.values
            .iter()
            .map(|v| format!("{v:?}"))
            .collect::<Vec<_>>()
            .join(","),
    ];
    replay.extend(settings.to_args());
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command: "sweep".into(),
        args: replay,
        spec: spec.clone(),
        base_seed: spec.base_seed,
        threads,
        sweep: Some(SweepDefinition {
            parameter,
            values: args.values.clone(),
        }),
        timestamp_unix: timestamp(),
        diverged_runs: diverged_counts(&columns),
    };
    let summary = Summary::for_sweep(&spec, &result)?;

    let out = &args.experiment.out;
    prepare_dir(out)?;
    emit_mse_csv(&columns, &out.join(MSE_FILE))?;
    emit_summary_json(&manifest, &summary, &out.join(SUMMARY_FILE))?;
    emit_manifest_json(&manifest, &out.join(MANIFEST_FILE))
}
