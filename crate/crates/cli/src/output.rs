//! On-disk formats: CSV traces and JSON summaries.
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! reading a file back reproduces the in-memory values exactly.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use adaptive_pt::adaptation::{IterationRow, RunRecord};
use serde::{Deserialize, Serialize};

use crate::CliError;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |e| CliError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn numbered(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}_{i}"))
}

/// Header of a trace for a ladder of `chains` betas.
pub fn trace_header(chains: usize) -> Vec<String> {
    let pairs = chains.saturating_sub(1);
    ["t", "epsilon", "reward", "advantage"]
        .into_iter()
        .map(String::from)
        .chain(numbered("D", pairs))
        .chain(numbered("beta", chains))
        .chain(numbered("rate", pairs))
        .collect()
}

pub fn write_trace(path: &Path, chains: usize, rows: &[IterationRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(trace_header(chains)).map_err(csv_err(path))?;
    for row in rows {
        let mut rec = vec![
            row.t.to_string(),
            row.epsilon.to_string(),
            row.reward.to_string(),
            row.advantage.to_string(),
        ];
        rec.extend(row.log_diffs.iter().map(f64::to_string));
        rec.extend(row.betas.iter().map(f64::to_string));
        rec.extend(row.rates.iter().map(f64::to_string));
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn parse_f64(path: &Path, line: usize, field: &str) -> Result<f64, CliError> {
    field.parse().map_err(|_| CliError::Format {
        path: path.to_path_buf(),
        message: format!("row {line}: `{field}` is not a number"),
    })
}

pub fn read_trace(path: &Path) -> Result<Vec<IterationRow>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?.clone();
    let chains = header.iter().filter(|h| h.starts_with("beta_")).count();
    let expected = trace_header(chains);
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(CliError::Format {
            path: path.to_path_buf(),
            message: "unexpected trace header".into(),
        });
    }
    let pairs = chains.saturating_sub(1);
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let nums = rec
            .iter()
            .skip(1)
            .map(|f| parse_f64(path, line, f))
            .collect::<Result<Vec<_>, _>>()?;
        let t = rec[0].parse().map_err(|_| CliError::Format {
            path: path.to_path_buf(),
            message: format!("row {line}: bad iteration `{}`", &rec[0]),
        })?;
        rows.push(IterationRow {
            t,
            epsilon: nums[0],
            reward: nums[1],
            advantage: nums[2],
            log_diffs: nums[3..3 + pairs].to_vec(),
            betas: nums[3 + pairs..3 + pairs + chains].to_vec(),
            rates: nums[3 + pairs + chains..].to_vec(),
        });
    }
    Ok(rows)
}

/// Per-trial summary, joined across trials by `config_hash`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config_hash: String,
    pub trial: usize,
    pub seed: u64,
    pub mean_act: Option<f64>,
    pub act_fallbacks: usize,
    pub initial_betas: Vec<f64>,
    pub final_betas: Vec<f64>,
    /// Log-beta differences of the final ladder; `null` toward a zero beta.
    pub final_log_diffs: Vec<Option<f64>>,
    pub final_theta: Option<Vec<f64>>,
    /// Pair acceptance rates over the final sampling phase.
    pub sampling_rates: Option<Vec<f64>>,
    pub sampling_omega_mean: Option<f64>,
    pub iterations: usize,
}

impl Summary {
    pub fn from_record(config_hash: &str, trial: usize, rec: &RunRecord, iterations: usize) -> Self {
        Self {
            config_hash: config_hash.to_string(),
            trial,
            seed: rec.seed,
            mean_act: rec.mean_act,
            act_fallbacks: rec.act_fallbacks,
            initial_betas: rec.initial_betas.clone(),
            final_betas: rec.final_betas.clone(),
            final_log_diffs: rec
                .final_log_diffs
                .iter()
                .map(|d| d.is_finite().then_some(*d))
                .collect(),
            final_theta: rec.final_theta.clone(),
            sampling_rates: rec.sampling.as_ref().map(|s| s.rates.clone()),
            sampling_omega_mean: rec.sampling.as_ref().map(|s| s.omega_mean),
            iterations,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    text.push('\n');
    let mut f = File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// `step, nll` for the final sampling phase.
pub fn write_nll(path: &Path, values: &[f64]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["step", "nll"]).map_err(csv_err(path))?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([(i + 1).to_string(), v.to_string()])
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterRow {
    pub ladder_id: usize,
    pub omega_mean: f64,
    pub act_mean: f64,
    pub log_diffs: Vec<f64>,
}

pub fn write_scatter(path: &Path, pairs: usize, rows: &[ScatterRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let header: Vec<String> = ["ladder_id", "omega_mean", "act_mean"]
        .into_iter()
        .map(String::from)
        .chain(numbered("D", pairs))
        .collect();
    w.write_record(&header).map_err(csv_err(path))?;
    for row in rows {
        let mut rec = vec![
            row.ladder_id.to_string(),
            row.omega_mean.to_string(),
            row.act_mean.to_string(),
        ];
        rec.extend(row.log_diffs.iter().map(f64::to_string));
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_scatter(path: &Path) -> Result<Vec<ScatterRow>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let nums = rec
            .iter()
            .skip(1)
            .map(|f| parse_f64(path, line, f))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(ScatterRow {
            ladder_id: rec[0].parse().map_err(|_| CliError::Format {
                path: path.to_path_buf(),
                message: format!("row {line}: bad ladder id"),
            })?,
            omega_mean: nums[0],
            act_mean: nums[1],
            log_diffs: nums[2..].to_vec(),
        });
    }
    Ok(rows)
}

pub fn trial_dir(root: &Path, trial: usize) -> PathBuf {
    root.join(format!("trial_{trial}"))
}
