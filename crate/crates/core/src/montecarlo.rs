//! Seeded Monte-Carlo trials and MSE aggregation.
//!
//! Every run draws one channel and one training/noise stream from a random
//! source seeded by [`derive_run_seed`], and all configured estimators are
//! replayed over that same stream. Runs are independent, so they are spread
//! over the ambient rayon pool; partial sums are always folded in run-index
//! order, which makes the aggregate independent of the worker count.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    generate_channel, observe, training_symbol, ChannelVector, NoiseSpec, RegressorWindow,
    SparseChannelSpec,
};
use crate::error::{Error, Result};
use crate::estimators::{EstimatorConfig, EstimatorKind, EstimatorState};

/// Runs aggregated per parallel batch; bounds peak memory for large run counts.
const BATCH_RUNS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub channel: SparseChannelSpec,
    pub noise: NoiseSpec,
    pub algorithms: Vec<EstimatorConfig>,
    pub n_iterations: usize,
    pub n_runs: usize,
    pub base_seed: u64,
}

impl ExperimentSpec {
    pub const DEFAULT_TAPS: usize = 128;
    pub const DEFAULT_NONZERO: usize = 4;
    pub const DEFAULT_SNR_DB: f64 = 10.0;
    pub const DEFAULT_ITERATIONS: usize = 2000;
    pub const DEFAULT_RUNS: usize = 200;
    pub const DEFAULT_SEED: u64 = 1;

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        if self.n_iterations == 0 {
            return Err(Error::invalid("iters", "must be at least 1"));
        }
        if self.n_runs == 0 {
            return Err(Error::invalid("runs", "must be at least 1"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::invalid(
                "algos",
                "at least one algorithm is required",
            ));
        }
        if !(self.noise.sigma_n >= 0.0 && self.noise.sigma_n.is_finite()) {
            return Err(Error::invalid("sigma_n", "must be finite and >= 0"));
        }
        for cfg in &self.algorithms {
            cfg.validate()?;
        }
        Ok(())
    }

    pub fn labels(&self) -> Vec<&'static str> {
        self.algorithms.iter().map(|a| a.label()).collect()
    }
}

impl Default for ExperimentSpec {
    /// Reference setup: N = 128, K = 4, 10 dB SNR, all four estimators.
    fn default() -> Self {
        Self {
            channel: SparseChannelSpec::new(Self::DEFAULT_TAPS, Self::DEFAULT_NONZERO)
                .expect("default channel spec is valid"),
            noise: NoiseSpec::from_snr(Self::DEFAULT_SNR_DB, 1.0)
                .expect("default noise spec is valid"),
            algorithms: EstimatorKind::ALL
                .iter()
                .map(|&k| EstimatorConfig::reference(k))
                .collect(),
            n_iterations: Self::DEFAULT_ITERATIONS,
            n_runs: Self::DEFAULT_RUNS,
            base_seed: Self::DEFAULT_SEED,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-run seed: `splitmix64(splitmix64(base_seed) ^ run_index)`.
pub fn derive_run_seed(base_seed: u64, run_index: u64) -> u64 {
    splitmix64(splitmix64(base_seed) ^ run_index)
}

/// One estimator's raw record for a single run.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmRun {
    /// `‖w − w̃(k+1)‖₂²` after each update.
    pub squared_error: Vec<f64>,
    /// Mean `|w̃_i|` over the true channel's zero taps after each update
    /// (0 when the channel has no zero taps).
    pub zero_support_magnitude: Vec<f64>,
    /// Digest of the `(x(k), d(k))` pairs this estimator consumed.
    pub stream_digest: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub run_index: u64,
    pub channel: ChannelVector,
    /// One entry per configured algorithm, in spec order. A diverged
    /// estimator yields its divergence error.
    pub algorithms: Vec<Result<AlgorithmRun>>,
}

impl TrialOutcome {
    pub fn diverged(&self) -> bool {
        self.algorithms.iter().any(|a| a.is_err())
    }
}

fn fnv_mix(hash: u64, bits: u64) -> u64 {
    const PRIME: u64 = 0x0000_0100_0000_01B3;
    bits.to_le_bytes()
        .iter()
        .fold(hash, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

const FNV_OFFSET: u64 = 0xCBF2_9CE4_8422_2325;

/// The random draws of one run: true channel, training symbols `x(k)` and
/// noisy observations `d(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub channel: ChannelVector,
    pub inputs: Vec<f64>,
    pub desired: Vec<f64>,
}

/// Draws the channel and sample stream shared by all estimators in a run.
pub fn draw_realization(spec: &ExperimentSpec, run_index: u64) -> Result<Realization> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_run_seed(spec.base_seed, run_index));
    let channel = generate_channel(&spec.channel, &mut rng)?;

    let mut inputs = Vec::with_capacity(spec.n_iterations);
    let mut desired = Vec::with_capacity(spec.n_iterations);
    let mut window = RegressorWindow::zeros(spec.channel.n_taps);
    for _ in 0..spec.n_iterations {
        let s = training_symbol(&mut rng);
        window.push(s);
        inputs.push(s);
        desired.push(observe(&channel, &window, &spec.noise, &mut rng)?);
    }
    Ok(Realization {
        channel,
        inputs,
        desired,
    })
}

/// Runs every configured estimator over one shared channel and sample stream.
pub fn run_trial(spec: &ExperimentSpec, run_index: u64) -> Result<TrialOutcome> {
    let Realization {
        channel,
        inputs,
        desired,
    } = draw_realization(spec, run_index)?;
    let zero_support = channel.zero_support();
    let algorithms = spec
        .algorithms
        .iter()
        .map(|cfg| replay(cfg, &channel, &zero_support, &inputs, &desired))
        .collect();

    Ok(TrialOutcome {
        run_index,
        channel,
        algorithms,
    })
}

fn replay(
    cfg: &EstimatorConfig,
    channel: &ChannelVector,
    zero_support: &[usize],
    inputs: &[f64],
    desired: &[f64],
) -> Result<AlgorithmRun> {
    let n = channel.len();
    let mut state = EstimatorState::new(n);
    let mut window = RegressorWindow::zeros(n);
    let mut squared_error = Vec::with_capacity(inputs.len());
    let mut zero_support_magnitude = Vec::with_capacity(inputs.len());
    let mut digest = FNV_OFFSET;

    for (&s, &d) in inputs.iter().zip(desired) {
        window.push(s);
        digest = fnv_mix(fnv_mix(digest, s.to_bits()), d.to_bits());
        state.advance(&window, d, cfg)?;
        squared_error.push(state.current().squared_distance(channel)?);
        let est = state.current().taps();
        let off = if zero_support.is_empty() {
            0.0
        } else {
            zero_support.iter().map(|&i| est[i].abs()).sum::<f64>() / zero_support.len() as f64
        };
        zero_support_magnitude.push(off);
    }

    Ok(AlgorithmRun {
        squared_error,
        zero_support_magnitude,
        stream_digest: digest,
    })
}

/// Run-averaged learning curve for one algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseTrace {
    pub label: String,
    /// Mean over non-diverged runs of `‖w − w̃(k)‖₂²`, one value per iteration.
    pub values: Vec<f64>,
    /// Mean over non-diverged runs of the off-support tap magnitude.
    pub zero_support_magnitude: Vec<f64>,
    pub n_runs: usize,
    pub diverged_runs: usize,
}

impl MseTrace {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

struct Accumulator {
    mse: Vec<f64>,
    off: Vec<f64>,
    used: usize,
    diverged: usize,
}

/// Averages per-iteration squared error over all runs of `spec`.
///
/// Diverged runs are dropped from an algorithm's mean and counted in
/// [`MseTrace::diverged_runs`]. Runs execute on the current rayon pool.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<MseTrace>> {
    spec.validate()?;
    let n_alg = spec.algorithms.len();
    let mut acc: Vec<Accumulator> = (0..n_alg)
        .map(|_| Accumulator {
            mse: vec![0.0; spec.n_iterations],
            off: vec![0.0; spec.n_iterations],
            used: 0,
            diverged: 0,
        })
        .collect();

    let runs = spec.n_runs as u64;
    let mut start = 0u64;
    while start < runs {
        let end = (start + BATCH_RUNS as u64).min(runs);
        let batch: Vec<TrialOutcome> = (start..end)
            .into_par_iter()
            .map(|r| run_trial(spec, r))
            .collect::<Result<_>>()?;
        for outcome in &batch {
            for (a, result) in acc.iter_mut().zip(&outcome.algorithms) {
                match result {
                    Ok(run) => {
                        a.mse
                            .iter_mut()
                            .zip(&run.squared_error)
                            .for_each(|(s, v)| *s += v);
                        a.off
                            .iter_mut()
                            .zip(&run.zero_support_magnitude)
                            .for_each(|(s, v)| *s += v);
                        a.used += 1;
                    }
                    Err(Error::Divergence { .. }) => a.diverged += 1,
                    Err(e) => return Err(e.clone()),
                }
            }
        }
        start = end;
    }

    spec.algorithms
        .iter()
        .zip(acc)
        .map(|(cfg, a)| {
            if a.used == 0 {
                return Err(Error::AllRunsDiverged {
                    label: cfg.label().to_string(),
                });
            }
            let scale = 1.0 / a.used as f64;
            Ok(MseTrace {
                label: cfg.label().to_string(),
                values: a.mse.into_iter().map(|v| v * scale).collect(),
                zero_support_magnitude: a.off.into_iter().map(|v| v * scale).collect(),
                n_runs: a.used,
                diverged_runs: a.diverged,
            })
        })
        .collect()
}

/// Runs `f` inside a dedicated rayon pool with `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid("threads", e.to_string()))?;
    Ok(pool.install(f))
}

fn tail_len(len: usize) -> Result<usize> {
    if len < 10 {
        return Err(Error::TraceTooShort { min: 10, len });
    }
    Ok(len / 10)
}

/// Mean of the final 10% of a sequence (at least ten values).
pub fn steady_state(values: &[f64]) -> Result<f64> {
    let tail = tail_len(values.len())?;
    Ok(values[values.len() - tail..].iter().sum::<f64>() / tail as f64)
}

/// Steady-state MSE of a trace: the mean of its final 10%.
pub fn steady_state_mse(trace: &MseTrace) -> Result<f64> {
    steady_state(&trace.values)
}

/// Steady-state off-support magnitude of a trace.
pub fn steady_state_zero_support(trace: &MseTrace) -> Result<f64> {
    steady_state(&trace.zero_support_magnitude)
}

/// First iteration at which the trace drops to `factor` × its steady state.
pub fn iterations_to_converge(trace: &MseTrace, factor: f64) -> Result<usize> {
    let level = factor * steady_state_mse(trace)?;
    Ok(trace
        .values
        .iter()
        .position(|&v| v <= level)
        .unwrap_or(trace.values.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParameter {
    #[serde(rename = "phi")]
    Phi,
    #[serde(rename = "K")]
    NonzeroTaps,
    #[serde(rename = "snr_db")]
    SnrDb,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Phi => "phi",
            SweepParameter::NonzeroTaps => "K",
            SweepParameter::SnrDb => "snr_db",
        }
    }

    /// Copy of `base` with this parameter set to `value`.
    pub fn apply(self, base: &ExperimentSpec, value: f64) -> Result<ExperimentSpec> {
        let mut spec = base.clone();
        match self {
            SweepParameter::Phi => spec.algorithms.iter_mut().for_each(|a| a.phi = value),
            SweepParameter::NonzeroTaps => {
                if !(value >= 1.0 && value.fract() == 0.0 && value <= usize::MAX as f64) {
                    return Err(Error::invalid(
                        "K",
                        format!("{value} is not a positive integer"),
                    ));
                }
                spec.channel = SparseChannelSpec::new(spec.channel.n_taps, value as usize)?;
            }
            SweepParameter::SnrDb => spec.noise = NoiseSpec::from_snr(value, base.noise.es)?,
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phi" => Ok(SweepParameter::Phi),
            "K" | "k" => Ok(SweepParameter::NonzeroTaps),
            "snr_db" | "snr-db" | "snr" => Ok(SweepParameter::SnrDb),
            other => Err(Error::UnknownSweepParameter(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub value: f64,
    pub trace: MseTrace,
    pub steady_state: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    /// Value-major: all algorithms for `values[0]`, then `values[1]`, ….
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, value_index: usize, algorithm_index: usize) -> &SweepCell {
        let per_value = self.cells.len() / self.values.len();
        &self.cells[value_index * per_value + algorithm_index]
    }
}

/// Re-runs the experiment once per value, keeping seeds and everything else fixed.
pub fn sweep(
    spec: &ExperimentSpec,
    parameter: SweepParameter,
    values: &[f64],
) -> Result<SweepResult> {
    if values.is_empty() {
        return Err(Error::invalid("values", "sweep needs at least one value"));
    }
    let mut cells = Vec::with_capacity(values.len() * spec.algorithms.len());
    for &value in values {
        let cell_spec = parameter.apply(spec, value)?;
        for trace in run_experiment(&cell_spec)? {
            let steady_state = steady_state_mse(&trace)?;
            cells.push(SweepCell {
                value,
                trace,
                steady_state,
            });
        }
    }
    Ok(SweepResult {
        parameter,
        values: values.to_vec(),
        cells,
    })
}
