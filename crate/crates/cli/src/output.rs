//! Deterministic CSV and JSON artifacts.
//!
//! Floats are written with Rust's shortest round-trip formatting, so parsing
//! a file recovers every value bit for bit and identical inputs give
//! identical bytes.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use lmsf_core::montecarlo::{iterations_to_converge, steady_state_zero_support};
use lmsf_core::{
    penalty_curve, steady_state_mse, EstimatorKind, ExperimentSpec, MseTrace, PenaltyRow,
    SweepParameter, SweepResult,
};
use serde::Serialize;

use crate::error::{CliError, Result};

pub const MSE_FILE: &str = "mse.csv";
pub const PENALTY_FILE: &str = "penalty.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Convergence time is measured to this multiple of the steady-state MSE.
pub const CONVERGENCE_FACTOR: f64 = 2.0;

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

/// `iteration,<label1>,<label2>,…` followed by one row per iteration,
/// starting at iteration 1 (the estimate after the first update).
pub fn write_mse_csv<W: Write>(traces: &[MseTrace], mut out: W) -> std::io::Result<()> {
    write!(out, "iteration")?;
    for t in traces {
        write!(out, ",{}", t.label)?;
    }
    writeln!(out)?;
    let len = traces.first().map_or(0, |t| t.values.len());
    for k in 0..len {
        write!(out, "{}", k + 1)?;
        for t in traces {
            write!(out, ",{:?}", t.values[k])?;
        }
        writeln!(out)?;
    }
    out.flush()
}

pub fn emit_mse_csv(traces: &[MseTrace], path: &Path) -> Result<()> {
    let first = traces
        .first()
        .ok_or_else(|| CliError::Config("no traces to write".into()))?;
    if let Some(t) = traces.iter().find(|t| t.values.len() != first.values.len()) {
        return Err(CliError::Config(format!(
            "trace `{}` has {} values, `{}` has {}",
            t.label,
            t.values.len(),
            first.label,
            first.values.len()
        )));
    }
    write_mse_csv(traces, create(path)?).map_err(|e| CliError::io(path, e))
}

pub fn write_penalty_csv<W: Write>(rows: &[PenaltyRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "w,zeta_za,zeta_rza,zeta_rl1")?;
    for r in rows {
        writeln!(
            out,
            "{:?},{:?},{:?},{:?}",
            r.w, r.zeta_za, r.zeta_rza, r.zeta_rl1
        )?;
    }
    out.flush()
}

pub fn emit_penalty_csv(epsilon: f64, delta: f64, grid: usize, path: &Path) -> Result<()> {
    let rows = penalty_curve(epsilon, delta, grid)?;
    write_penalty_csv(&rows, create(path)?).map_err(|e| CliError::io(path, e))
}

/// Formats a swept value for labels: integers without a fraction.
pub fn format_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:?}")
    }
}

/// Traces relabelled `<algorithm>[<parameter>=<value>]`, value-major.
pub fn sweep_columns(result: &SweepResult) -> Vec<MseTrace> {
    result
        .cells
        .iter()
        .map(|c| MseTrace {
            label: format!(
                "{}[{}={}]",
                c.trace.label,
                result.parameter.name(),
                format_value(c.value)
            ),
            ..c.trace.clone()
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepDefinition {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

/// Everything needed to regenerate an output directory.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    /// Flags that reproduce the run (`lmsf <command> <args…>`).
    pub args: Vec<String>,
    pub spec: ExperimentSpec,
    pub base_seed: u64,
    pub threads: usize,
    pub sweep: Option<SweepDefinition>,
    pub timestamp_unix: u64,
    /// Diverged-run count per output column.
    pub diverged_runs: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyStateEntry {
    pub parameter_value: Option<f64>,
    pub algorithm: String,
    pub steady_state_mse: f64,
    pub steady_state_zero_support: f64,
    pub iterations_to_converge: usize,
    pub n_runs: usize,
    pub diverged_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingVerdict {
    pub parameter_value: Option<f64>,
    /// Algorithms sorted by ascending steady-state MSE.
    pub ranking: Vec<String>,
    /// RL1 < RZA < ZA < LMSF over the algorithms present (needs two or more).
    pub expected_order_holds: Option<bool>,
    /// Every sparse variant below plain LMS/F (needs LMSF plus one variant).
    pub sparse_beats_plain: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub tool_version: String,
    pub command: String,
    pub spec: ExperimentSpec,
    pub sweep_parameter: Option<SweepParameter>,
    pub convergence_factor: f64,
    pub entries: Vec<SteadyStateEntry>,
    pub verdicts: Vec<OrderingVerdict>,
}

const EXPECTED_ORDER: [EstimatorKind; 4] = [
    EstimatorKind::Rl1,
    EstimatorKind::Rza,
    EstimatorKind::Za,
    EstimatorKind::PlainLmsf,
];

fn verdict(parameter_value: Option<f64>, entries: &[SteadyStateEntry]) -> OrderingVerdict {
    let mut sorted: Vec<&SteadyStateEntry> = entries.iter().collect();
    sorted.sort_by(|a, b| a.steady_state_mse.total_cmp(&b.steady_state_mse));
    let level = |kind: EstimatorKind| {
        entries
            .iter()
            .find(|e| e.algorithm == kind.label())
            .map(|e| e.steady_state_mse)
    };
    let ordered: Vec<f64> = EXPECTED_ORDER.iter().filter_map(|&k| level(k)).collect();
    let expected_order_holds =
        (ordered.len() >= 2).then(|| ordered.windows(2).all(|p| p[0] < p[1]));
    let sparse_beats_plain = level(EstimatorKind::PlainLmsf).and_then(|plain| {
        let sparse: Vec<f64> = EXPECTED_ORDER[..3]
            .iter()
            .filter_map(|&k| level(k))
            .collect();
        (!sparse.is_empty()).then(|| sparse.iter().all(|&s| s < plain))
    });
    OrderingVerdict {
        parameter_value,
        ranking: sorted.iter().map(|e| e.algorithm.clone()).collect(),
        expected_order_holds,
        sparse_beats_plain,
    }
}

fn entry(parameter_value: Option<f64>, t: &MseTrace) -> Result<SteadyStateEntry> {
    Ok(SteadyStateEntry {
        parameter_value,
        algorithm: t.label.clone(),
        steady_state_mse: steady_state_mse(t)?,
        steady_state_zero_support: steady_state_zero_support(t)?,
        iterations_to_converge: iterations_to_converge(t, CONVERGENCE_FACTOR)?,
        n_runs: t.n_runs,
        diverged_runs: t.diverged_runs,
    })
}

impl Summary {
    pub fn for_run(spec: &ExperimentSpec, traces: &[MseTrace]) -> Result<Self> {
        let entries = traces
            .iter()
            .map(|t| entry(None, t))
            .collect::<Result<Vec<_>>>()?;
        let verdicts = vec![verdict(None, &entries)];
        Ok(Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: "run".into(),
            spec: spec.clone(),
            sweep_parameter: None,
            convergence_factor: CONVERGENCE_FACTOR,
            entries,
            verdicts,
        })
    }

    pub fn for_sweep(spec: &ExperimentSpec, result: &SweepResult) -> Result<Self> {
        let per_value = result.cells.len() / result.values.len();
        let mut entries = Vec::with_capacity(result.cells.len());
        let mut verdicts = Vec::with_capacity(result.values.len());
        for group in result.cells.chunks(per_value) {
            let value = Some(group[0].value);
            let group_entries = group
                .iter()
                .map(|c| entry(value, &c.trace))
                .collect::<Result<Vec<_>>>()?;
            verdicts.push(verdict(value, &group_entries));
            entries.extend(group_entries);
        }
        Ok(Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: "sweep".into(),
            spec: spec.clone(),
            sweep_parameter: Some(result.parameter),
            convergence_factor: CONVERGENCE_FACTOR,
            entries,
            verdicts,
        })
    }
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::io(path, std::io::Error::other(e)))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Writes `summary`. The manifest is passed to check the summary describes
/// the same spec; its timestamp is not copied so the file stays reproducible.
pub fn emit_summary_json(manifest: &RunManifest, summary: &Summary, path: &Path) -> Result<()> {
    if manifest.spec != summary.spec {
        return Err(CliError::Config(
            "summary and manifest describe different experiments".into(),
        ));
    }
    write_json(summary, path)
}

pub fn emit_manifest_json(manifest: &RunManifest, path: &Path) -> Result<()> {
    write_json(manifest, path)
}
