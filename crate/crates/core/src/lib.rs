//! Adaptive sparse channel estimation with the LMS/F family.
//!
//! The crate is split into three layers:
//!
//! - [`channel`]: sparse FIR channel generation, training symbols, noisy
//!   observations and Hoyer's sparseness measure.
//! - [`estimators`]: the per-sample update of plain LMS/F and its
//!   zero-attracting (ZA), reweighted zero-attracting (RZA) and reweighted
//!   ℓ1 (RL1) penalized variants, plus the standalone penalty functions.
//! - [`montecarlo`]: seeded, paired Monte-Carlo trials, MSE aggregation and
//!   parameter sweeps.

pub mod channel;
pub mod error;
pub mod estimators;
pub mod montecarlo;

pub use channel::{
    generate_channel, observe, sparseness, training_symbol, ChannelVector, NoiseSpec,
    RegressorWindow, SparseChannelSpec,
};
pub use error::{Error, Result};
pub use estimators::{
    innovation_error, lmsf_gain, penalty_curve, penalty_rl1, penalty_rza, penalty_za, step,
    EstimatorConfig, EstimatorKind, EstimatorState, PenaltyRow,
};
pub use montecarlo::{
    derive_run_seed, draw_realization, iterations_to_converge, run_experiment, run_trial,
    steady_state, steady_state_mse, steady_state_zero_support, sweep, with_threads, AlgorithmRun,
    ExperimentSpec, MseTrace, Realization, SweepCell, SweepParameter, SweepResult, TrialOutcome,
};
