//! The three experiment commands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use adaptive_pt::adaptation::{run_adaptive, sample_fixed_ladder};
use adaptive_pt::diagnostics::{cold_chain_series, mean_act_bounded, nll_trace, spearman};
use adaptive_pt::ensemble::StretchConfig;
use adaptive_pt::rng::{stream_rng, Stream};
use adaptive_pt::targets::Target;
use adaptive_pt::tempering::{ladder_from_log_diffs, LogDiffAction, PtState};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{AdapterKind, ExperimentConfig};
use crate::output::{
    trial_dir, write_json, write_nll, write_scatter, write_trace, ScatterRow, Summary,
};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Run,
    Baseline,
    Correlate,
}

#[derive(Debug, Serialize)]
struct Timing {
    wall_seconds: f64,
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn in_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match threads {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config {
                    key: "threads".into(),
                    message: e.to_string(),
                })?;
            Ok(pool.install(job))
        }
    }
}

fn build_target(cfg: &ExperimentConfig) -> Result<Box<dyn Target>, CliError> {
    cfg.target.build().map_err(|e| CliError::Config {
        key: "target".into(),
        message: e.to_string(),
    })
}

pub fn execute(command: Command, cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    match command {
        Command::Run => run_trials(cfg),
        Command::Baseline => {
            if cfg.adapter == AdapterKind::PolicyGradient {
                return Err(CliError::Config {
                    key: "adapter".into(),
                    message: "baseline needs `geometric` or `vousden`".into(),
                });
            }
            run_trials(cfg)
        }
        Command::Correlate => correlate(cfg),
    }
}

/// Run every trial and write `trial_<k>/{trace.csv, summary.json,
/// timing.json, nll.csv}` under the output directory.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let run_cfg = cfg.run_config()?;
    let target = build_target(cfg)?;
    let hash = cfg.hash();
    let root = cfg.output_dir.clone();
    create_dir(&root)?;
    in_pool(cfg.threads, || {
        (0..cfg.trials)
            .into_par_iter()
            .map(|k| {
                let seed = cfg.seed.wrapping_add(k as u64);
                let started = Instant::now();
                let rec = run_adaptive(target.as_ref(), &run_cfg, seed)
                    .map_err(|e| CliError::Run { trial: k, source: e })?;
                let wall_seconds = started.elapsed().as_secs_f64();
                let dir = trial_dir(&root, k);
                create_dir(&dir)?;
                write_trace(&dir.join("trace.csv"), cfg.chains, &rec.rows)?;
                let summary = Summary::from_record(&hash, k, &rec, rec.rows.len());
                write_json(&dir.join("summary.json"), &summary)?;
                if rec.sampling.is_some() {
                    let nll = nll_trace(&rec).map_err(|e| CliError::Run { trial: k, source: e })?;
                    write_nll(&dir.join("nll.csv"), &nll.values)?;
                }
                write_json(&dir.join("timing.json"), &Timing { wall_seconds })
            })
            .collect::<Result<Vec<()>, CliError>>()
    })??;
    Ok(root)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelateSummary {
    pub config_hash: String,
    pub seed: u64,
    pub memory: usize,
    pub spearman_rho: Option<f64>,
    pub n: usize,
    pub act_fallbacks: usize,
}

/// Score one random ladder: `(omega_mean, act_mean, fallbacks)`.
fn score_ladder(
    cfg: &ExperimentConfig,
    target: &dyn Target,
    action: &LogDiffAction,
    seed: u64,
    steps: usize,
) -> Result<(f64, f64, usize), adaptive_pt::Error> {
    let ladder = ladder_from_log_diffs(action, cfg.top_mode());
    let stretch = StretchConfig::new(cfg.stretch_a)?;
    let mut state = PtState::initialize(target, ladder.clone(), cfg.walkers, seed)?;
    let mut swap_rng = stream_rng(seed, Stream::Swap);
    let trace = sample_fixed_ladder(&mut state, target, ladder, steps, &stretch, &cfg.omega(), &mut swap_rng)?;
    let (act, fallbacks) = mean_act_bounded(&cold_chain_series(&trace), cfg.act_window_c)?;
    Ok((trace.omega_mean, act, fallbacks))
}

/// Draw random ladders (each log-difference log-uniform on the action
/// box), run fixed-ladder tempering on each, and correlate the mean swap
/// mean-distance with the mean ACT.
pub fn correlate(cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let spec = cfg.correlate.ok_or_else(|| CliError::Config {
        key: "correlate".into(),
        message: "missing `correlate` section with `ladder_count` and `steps`".into(),
    })?;
    let target = build_target(cfg)?;
    let bounds = cfg.pg.bounds().map_err(|e| CliError::Config {
        key: "pg".into(),
        message: e.to_string(),
    })?;
    let dim = cfg.top_mode().action_dim(cfg.chains);
    let (lo, hi) = (bounds.d_min.ln(), bounds.d_max.ln());
    let mut ladder_rng = stream_rng(cfg.seed, Stream::Ladder);
    let actions: Vec<LogDiffAction> = (0..spec.ladder_count)
        .map(|_| LogDiffAction::clipped((0..dim).map(|_| ladder_rng.random_range(lo..=hi).exp()), &bounds))
        .collect();

    let root = cfg.output_dir.clone();
    create_dir(&root)?;
    let scored = in_pool(cfg.threads, || {
        actions
            .par_iter()
            .enumerate()
            .map(|(k, action)| {
                let seed = cfg.seed.wrapping_add(1 + k as u64);
                score_ladder(cfg, target.as_ref(), action, seed, spec.steps)
                    .map_err(|e| CliError::Run { trial: k, source: e })
            })
            .collect::<Result<Vec<_>, _>>()
    })??;

    let rows: Vec<ScatterRow> = scored
        .iter()
        .zip(&actions)
        .enumerate()
        .map(|(k, ((omega, act, _), action))| ScatterRow {
            ladder_id: k,
            omega_mean: *omega,
            act_mean: *act,
            log_diffs: action.diffs().to_vec(),
        })
        .collect();
    write_scatter(&root.join("scatter.csv"), dim, &rows)?;
    let omegas: Vec<f64> = rows.iter().map(|r| r.omega_mean).collect();
    let acts: Vec<f64> = rows.iter().map(|r| r.act_mean).collect();
    let summary = CorrelateSummary {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        memory: cfg.memory,
        // fewer than 3 ladders or constant columns leave rho undefined
        spearman_rho: spearman(&omegas, &acts).ok(),
        n: rows.len(),
        act_fallbacks: scored.iter().map(|s| s.2).sum(),
    };
    write_json(&root.join("correlate.json"), &summary)?;
    Ok(root)
}
