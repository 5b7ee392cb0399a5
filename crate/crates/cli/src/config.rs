//! Experiment settings: defaults, config file layer and flag layer.
//!
//! Precedence is flags > config file > defaults. The config file is flat
//! `key = value` text using the long flag names as keys:
//!
//! ```text
//! # K = 12 channel, 1000 runs
//! K = 12
//! runs = 1000
//! algos = za,rl1
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use lmsf_core::{EstimatorConfig, EstimatorKind, ExperimentSpec, NoiseSpec, SparseChannelSpec};
use serde::Serialize;

use crate::error::{CliError, Result};

/// Flags shared by `run` and `sweep`. Unset flags fall back to the config
/// file, then to the reference parameters.
#[derive(Debug, Clone, Default, Args)]
pub struct ExperimentArgs {
    /// Channel length N
    #[arg(long = "N", value_name = "N")]
    pub n_taps: Option<usize>,

    /// Number of nonzero taps K
    #[arg(long = "K", value_name = "K")]
    pub n_nonzero: Option<usize>,

    /// Signal-to-noise ratio in dB
    #[arg(long = "snr-db")]
    pub snr_db: Option<f64>,

    /// Step size
    #[arg(long)]
    pub mu: Option<f64>,

    /// LMS/F threshold parameter
    #[arg(long)]
    pub phi: Option<f64>,

    /// ZA-LMS/F regularization weight
    #[arg(long = "lambda-za")]
    pub lambda_za: Option<f64>,

    /// RZA-LMS/F regularization weight
    #[arg(long = "lambda-rza")]
    pub lambda_rza: Option<f64>,

    /// RL1-LMS/F regularization weight
    #[arg(long = "lambda-rl1")]
    pub lambda_rl1: Option<f64>,

    /// RZA reweighting factor
    #[arg(long)]
    pub epsilon: Option<f64>,

    /// RL1 weight offset
    #[arg(long)]
    pub delta: Option<f64>,

    /// Monte-Carlo runs
    #[arg(long)]
    pub runs: Option<usize>,

    /// Samples per run
    #[arg(long)]
    pub iters: Option<usize>,

    /// Base seed for per-run random streams
    #[arg(long)]
    pub seed: Option<u64>,

    /// Worker threads (default: available cores)
    #[arg(long)]
    pub threads: Option<usize>,

    /// Comma-separated algorithms: lmsf, za, rza, rl1
    #[arg(long)]
    pub algos: Option<String>,

    /// Flat key = value config file
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Output directory
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

/// Fully resolved experiment parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub n_taps: usize,
    pub n_nonzero: usize,
    pub snr_db: f64,
    pub mu: f64,
    pub phi: f64,
    pub lambda_za: f64,
    pub lambda_rza: f64,
    pub lambda_rl1: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub runs: usize,
    pub iters: usize,
    pub seed: u64,
    pub threads: Option<usize>,
    pub algos: Vec<EstimatorKind>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            n_taps: ExperimentSpec::DEFAULT_TAPS,
            n_nonzero: ExperimentSpec::DEFAULT_NONZERO,
            snr_db: ExperimentSpec::DEFAULT_SNR_DB,
            mu: EstimatorConfig::DEFAULT_MU,
            phi: EstimatorConfig::DEFAULT_PHI,
            lambda_za: EstimatorConfig::DEFAULT_LAMBDA_ZA,
            lambda_rza: EstimatorConfig::DEFAULT_LAMBDA_RZA,
            lambda_rl1: EstimatorConfig::DEFAULT_LAMBDA_RL1,
            epsilon: EstimatorConfig::DEFAULT_EPSILON,
            delta: EstimatorConfig::DEFAULT_DELTA,
            runs: ExperimentSpec::DEFAULT_RUNS,
            iters: ExperimentSpec::DEFAULT_ITERATIONS,
            seed: ExperimentSpec::DEFAULT_SEED,
            threads: None,
            algos: EstimatorKind::ALL.to_vec(),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| CliError::Config(format!("cannot parse `{key}` value `{value}`: {e}")))
}

pub fn parse_algos(list: &str) -> Result<Vec<EstimatorKind>> {
    let kinds = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<EstimatorKind>().map_err(CliError::from))
        .collect::<Result<Vec<_>>>()?;
    if kinds.is_empty() {
        return Err(CliError::Range {
            field: "algos".into(),
            reason: "at least one algorithm is required".into(),
        });
    }
    Ok(kinds)
}

fn algos_arg(kinds: &[EstimatorKind]) -> String {
    kinds
        .iter()
        .map(|k| match k {
            EstimatorKind::PlainLmsf => "lmsf",
            EstimatorKind::Za => "za",
            EstimatorKind::Rza => "rza",
            EstimatorKind::Rl1 => "rl1",
        })
        .collect::<Vec<_>>()
        .join(",")
}

impl Settings {
    /// Defaults, then the config file (if any), then explicit flags.
    pub fn resolve(args: &ExperimentArgs) -> Result<Self> {
        let mut settings = Settings::default();
        if let Some(path) = &args.config {
            settings.apply_file(path)?;
        }
        settings.apply_args(args)?;
        settings.validate()?;
        Ok(settings)
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        self.apply_config_text(&text)
    }

    pub fn apply_config_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            self.set(key.trim().trim_start_matches("--"), value.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "N" => self.n_taps = parse_value(key, value)?,
            "K" => self.n_nonzero = parse_value(key, value)?,
            "snr-db" => self.snr_db = parse_value(key, value)?,
            "mu" => self.mu = parse_value(key, value)?,
            "phi" => self.phi = parse_value(key, value)?,
            "lambda-za" => self.lambda_za = parse_value(key, value)?,
            "lambda-rza" => self.lambda_rza = parse_value(key, value)?,
            "lambda-rl1" => self.lambda_rl1 = parse_value(key, value)?,
            "epsilon" => self.epsilon = parse_value(key, value)?,
            "delta" => self.delta = parse_value(key, value)?,
            "runs" => self.runs = parse_value(key, value)?,
            "iters" => self.iters = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "threads" => self.threads = Some(parse_value(key, value)?),
            "algos" => self.algos = parse_algos(value)?,
            other => return Err(CliError::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    pub fn apply_args(&mut self, args: &ExperimentArgs) -> Result<()> {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = args.$field { self.$field = v; })*
            };
        }
        take!(
            n_taps, n_nonzero, snr_db, mu, phi, lambda_za, lambda_rza, lambda_rl1, epsilon, delta,
            runs, iters, seed
        );
        if args.threads.is_some() {
            self.threads = args.threads;
        }
        if let Some(list) = &args.algos {
            self.algos = parse_algos(list)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let range = |field: &str, reason: String| {
            Err(CliError::Range {
                field: field.to_string(),
                reason,
            })
        };
        let positive = |v: f64| v > 0.0 && v.is_finite();
        let nonneg = |v: f64| v >= 0.0 && v.is_finite();

        if self.n_taps == 0 {
            return range("N", "must be at least 1".into());
        }
        if self.n_nonzero == 0 || self.n_nonzero > self.n_taps {
            return range(
                "K",
                format!(
                    "must satisfy 1 <= K <= N = {}, got {}",
                    self.n_taps, self.n_nonzero
                ),
            );
        }
        if !self.snr_db.is_finite() {
            return range("snr-db", "must be finite".into());
        }
        for (name, v) in [
            ("mu", self.mu),
            ("phi", self.phi),
            ("epsilon", self.epsilon),
            ("delta", self.delta),
        ] {
            if !positive(v) {
                return range(name, format!("must be > 0, got {v}"));
            }
        }
        for (name, v) in [
            ("lambda-za", self.lambda_za),
            ("lambda-rza", self.lambda_rza),
            ("lambda-rl1", self.lambda_rl1),
        ] {
            if !nonneg(v) {
                return range(name, format!("must be >= 0, got {v}"));
            }
        }
        if self.runs == 0 {
            return range("runs", "must be at least 1".into());
        }
        if self.iters == 0 {
            return range("iters", "must be at least 1".into());
        }
        if self.threads == Some(0) {
            return range("threads", "must be at least 1".into());
        }
        if self.algos.is_empty() {
            return range("algos", "at least one algorithm is required".into());
        }
        Ok(())
    }

    pub fn estimator(&self, kind: EstimatorKind) -> EstimatorConfig {
        let lambda = match kind {
            EstimatorKind::PlainLmsf => 0.0,
            EstimatorKind::Za => self.lambda_za,
            EstimatorKind::Rza => self.lambda_rza,
            EstimatorKind::Rl1 => self.lambda_rl1,
        };
        EstimatorConfig {
            kind,
            mu: self.mu,
            phi: self.phi,
            lambda,
            epsilon: self.epsilon,
            delta: self.delta,
        }
    }

    pub fn to_spec(&self) -> Result<ExperimentSpec> {
        self.validate()?;
        let spec = ExperimentSpec {
            channel: SparseChannelSpec::new(self.n_taps, self.n_nonzero)?,
            noise: NoiseSpec::from_snr(self.snr_db, 1.0)?,
            algorithms: self.algos.iter().map(|&k| self.estimator(k)).collect(),
            n_iterations: self.iters,
            n_runs: self.runs,
            base_seed: self.seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn worker_threads(&self) -> usize {
        self.threads.unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
    }

    /// Flags that reproduce these settings without any config file.
    pub fn to_args(&self) -> Vec<String> {
        [
            ("--N", self.n_taps.to_string()),
            ("--K", self.n_nonzero.to_string()),
            ("--snr-db", format!("{:?}", self.snr_db)),
            ("--mu", format!("{:?}", self.mu)),
            ("--phi", format!("{:?}", self.phi)),
            ("--lambda-za", format!("{:?}", self.lambda_za)),
            ("--lambda-rza", format!("{:?}", self.lambda_rza)),
            ("--lambda-rl1", format!("{:?}", self.lambda_rl1)),
            ("--epsilon", format!("{:?}", self.epsilon)),
            ("--delta", format!("{:?}", self.delta)),
            ("--runs", self.runs.to_string()),
            ("--iters", self.iters.to_string()),
            ("--seed", self.seed.to_string()),
            ("--algos", algos_arg(&self.algos)),
        ]
        .into_iter()
        .flat_map(|(k, v)| [k.to_string(), v])
        .collect()
    }
}
