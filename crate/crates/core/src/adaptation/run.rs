//! The adaptation loop: alternate observation windows of parallel
//! tempering with ladder updates, then sample at the frozen final ladder.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{PolicyConfig, PolicyState, VousdenConfig, VousdenState};
use crate::diagnostics::{cold_chain_series, mean_act_bounded, MIN_ACT_LENGTH};
use crate::ensemble::StretchConfig;
use crate::rewards::{ColdHistory, OmegaConfig, RewardKind, WindowStats};
use crate::rng::{stream_rng, Stream};
use crate::targets::Target;
use crate::tempering::{
    geometric_ladder, ladder_from_log_diffs, LogDiffAction, PtState, TemperatureLadder, TopMode,
};
use crate::{Error, Result};

/// How the ladder is chosen for each window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdapterConfig {
    PolicyGradient(PolicyConfig),
    Vousden(VousdenConfig),
    /// A fixed ladder with constant ratio down to `beta_min`.
    Geometric { beta_min: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub chains: usize,
    pub walkers: usize,
    pub top_mode: TopMode,
    pub stretch: StretchConfig,
    pub reward: RewardKind,
    pub omega: OmegaConfig,
    /// Number of adaptation iterations `L`.
    pub iterations: u64,
    /// Sampler steps per observation window `N`.
    pub window: usize,
    /// Steps sampled at the final ladder; 0 skips the phase.
    pub final_samples: usize,
    pub thinning: u64,
    pub adapter: AdapterConfig,
    pub parallel_sweeps: bool,
    pub act_window_c: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            chains: 15,
            walkers: crate::ensemble::DEFAULT_WALKERS,
            top_mode: TopMode::Finite,
            stretch: StretchConfig::default(),
            reward: RewardKind::default(),
            omega: OmegaConfig::default(),
            iterations: 4000,
            window: 500,
            final_samples: 10_000,
            thinning: 100,
            adapter: AdapterConfig::PolicyGradient(PolicyConfig::default()),
            parallel_sweeps: false,
            act_window_c: crate::diagnostics::DEFAULT_WINDOW_C,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains < 2 {
            return Err(Error::invalid("chains", format!("need at least 2, got {}", self.chains)));
        }
        if self.top_mode == TopMode::Infinite && self.chains < 3 {
            if let AdapterConfig::Vousden(_) = self.adapter {
                return Err(Error::invalid("chains", "an infinite top needs at least 3 chains"));
            }
        }
        if self.walkers < 2 {
            return Err(Error::TooFewWalkers(self.walkers));
        }
        if self.window == 0 {
            return Err(Error::invalid("window", "must be at least 1"));
        }
        if self.thinning == 0 {
            return Err(Error::invalid("thinning", "must be at least 1"));
        }
        if self.final_samples != 0 && self.final_samples < MIN_ACT_LENGTH {
            return Err(Error::invalid(
                "final_samples",
                format!("must be 0 or at least {MIN_ACT_LENGTH}, got {}", self.final_samples),
            ));
        }
        if self.omega.memory == 0 {
            return Err(Error::invalid("memory", "must be at least 1"));
        }
        if !(self.act_window_c > 0.0) {
            return Err(Error::invalid("act_window_c", "must be positive"));
        }
        Ok(())
    }

    /// Number of free log-differences the adapter controls.
    pub fn action_dim(&self) -> usize {
        self.top_mode.action_dim(self.chains)
    }
}

/// One logged adaptation iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRow {
    pub t: u64,
    /// Exploration factor the window's ladder was drawn with (0 for
    /// non-learning adapters).
    pub epsilon: f64,
    pub reward: f64,
    pub advantage: f64,
    /// Log-beta differences of the ladder used in the window.
    pub log_diffs: Vec<f64>,
    pub betas: Vec<f64>,
    pub rates: Vec<f64>,
}

/// Cold-chain output of a fixed-ladder sampling phase.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingTrace {
    /// `[step][walker][coordinate]`.
    pub cold_positions: Vec<Vec<Vec<f64>>>,
    /// `[step][walker]` untempered log-densities.
    pub cold_logpi: Vec<Vec<f64>>,
    pub rates: Vec<f64>,
    /// Mean swap mean-distance over every cold-pair attempt.
    pub omega_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub initial_betas: Vec<f64>,
    pub rows: Vec<IterationRow>,
    /// Largest absolute `theta` change per iteration (policy gradient only).
    pub theta_steps: Vec<f64>,
    pub final_betas: Vec<f64>,
    pub final_log_diffs: Vec<f64>,
    pub final_theta: Option<Vec<f64>>,
    pub sampling: Option<SamplingTrace>,
    pub mean_act: Option<f64>,
    /// Cold-chain series whose ACT needed the bounded fallback.
    pub act_fallbacks: usize,
}

enum Adapter {
    Policy(PolicyState),
    Vousden(VousdenState),
    Fixed(TemperatureLadder),
}

fn initial_ladder(cfg: &RunConfig) -> Result<(Adapter, TemperatureLadder)> {
    match &cfg.adapter {
        AdapterConfig::PolicyGradient(pg) => {
            let policy = PolicyState::new(pg, cfg.action_dim(), cfg.iterations)?;
            let ladder = ladder_from_log_diffs(&policy.mean_action(), cfg.top_mode);
            Ok((Adapter::Policy(policy), ladder))
        }
        AdapterConfig::Vousden(v) => {
            let diffs = vec![v.initial_log_diff; cfg.action_dim()];
            let start = ladder_from_log_diffs(
                &LogDiffAction::clipped(diffs, &Default::default()),
                cfg.top_mode,
            );
            let state = VousdenState::from_ladder(&start, v)?;
            let ladder = state.ladder()?;
            Ok((Adapter::Vousden(state), ladder))
        }
        AdapterConfig::Geometric { beta_min } => {
            let ladder = geometric_ladder(cfg.chains, *beta_min)?;
            Ok((Adapter::Fixed(ladder.clone()), ladder))
        }
    }
}

/// Run `steps` sampler steps at `ladder`, resetting swap counters first.
/// Returns the window statistics.
fn run_window<T: Target + ?Sized, R: Rng + ?Sized>(
    state: &mut PtState,
    history: &mut ColdHistory,
    target: &T,
    ladder: TemperatureLadder,
    steps: usize,
    stretch: &StretchConfig,
    swap_rng: &mut R,
    mut on_step: impl FnMut(&PtState),
) -> Result<WindowStats> {
    state.set_ladder(ladder.clone())?;
    state.reset_swap_stats();
    let mut cold_attempts = Vec::new();
    for _ in 0..steps {
        let records = state.step(target, stretch, swap_rng)?;
        cold_attempts.extend(history.observe(&records, state.cold())?);
        on_step(state);
    }
    Ok(WindowStats {
        ladder,
        rates: state.acceptance_rates()?,
        cold_attempts,
    })
}

/// Sample `steps` steps at a fixed ladder, recording the target chain.
pub fn sample_fixed_ladder<T: Target + ?Sized, R: Rng + ?Sized>(
    state: &mut PtState,
    target: &T,
    ladder: TemperatureLadder,
    steps: usize,
    stretch: &StretchConfig,
    omega: &OmegaConfig,
    swap_rng: &mut R,
) -> Result<SamplingTrace> {
    let mut history = ColdHistory::new(omega, state.cold())?;
    let mut cold_positions = Vec::with_capacity(steps);
    let mut cold_logpi = Vec::with_capacity(steps);
    let stats = run_window(state, &mut history, target, ladder, steps, stretch, swap_rng, |s| {
        cold_positions.push(s.cold().positions().to_vec());
        cold_logpi.push(s.cold().logpi().to_vec());
    })?;
    let omega_mean = if stats.cold_attempts.is_empty() {
        0.0
    } else {
        stats.cold_attempts.iter().map(|a| a.omega).sum::<f64>() / stats.cold_attempts.len() as f64
    };
    Ok(SamplingTrace {
        cold_positions,
        cold_logpi,
        rates: stats.rates,
        omega_mean,
    })
}

/// Adapt the ladder for `cfg.iterations` windows, then sample at the
/// final ladder. The walkers are never reset between windows.
pub fn run_adaptive<T: Target + ?Sized>(target: &T, cfg: &RunConfig, seed: u64) -> Result<RunRecord> {
    cfg.validate()?;
    let (mut adapter, ladder) = initial_ladder(cfg)?;
    if ladder.len() != cfg.chains {
        return Err(Error::InvalidLadder(format!(
            "adapter built {} betas for {} chains",
            ladder.len(),
            cfg.chains
        )));
    }
    let initial_betas = ladder.betas().to_vec();
    let mut state =
        PtState::initialize(target, ladder, cfg.walkers, seed)?.with_parallel_sweeps(cfg.parallel_sweeps);
    let mut swap_rng = stream_rng(seed, Stream::Swap);
    let mut policy_rng = stream_rng(seed, Stream::Policy);
    let mut history = ColdHistory::new(&cfg.omega, state.cold())?;
    let mut rows = Vec::new();
    let mut theta_steps = Vec::new();

    for t in 1..=cfg.iterations {
        let (ladder, action, epsilon) = match &adapter {
            Adapter::Policy(p) => {
                let eps = p.epsilon();
                let action = p.sample_action(&mut policy_rng);
                (ladder_from_log_diffs(&action, cfg.top_mode), Some(action), eps)
            }
            Adapter::Vousden(v) => (v.ladder()?, None, 0.0),
            Adapter::Fixed(l) => (l.clone(), None, 0.0),
        };
        let stats = run_window(
            &mut state,
            &mut history,
            target,
            ladder,
            cfg.window,
            &cfg.stretch,
            &mut swap_rng,
            |_| {},
        )?;
        let reward = cfg
            .reward
            .evaluate(&stats)
            .map_err(|e| e.context(format!("reward at iteration {t}")))?;
        let advantage = match (&mut adapter, &action) {
            (Adapter::Policy(p), Some(a)) => {
                let update = p.update(a, reward)?;
                theta_steps.push(update.step_norm);
                update.advantage
            }
            (Adapter::Vousden(v), _) => {
                v.update(&stats.rates)?;
                0.0
            }
            _ => 0.0,
        };
        if t % cfg.thinning == 0 || t == cfg.iterations {
            rows.push(IterationRow {
                t,
                epsilon,
                reward,
                advantage,
                log_diffs: stats.ladder.log_diffs(),
                betas: stats.ladder.betas().to_vec(),
                rates: stats.rates,
            });
        }
    }

    let (final_ladder, final_theta) = match &adapter {
        Adapter::Policy(p) => (
            ladder_from_log_diffs(&p.mean_action(), cfg.top_mode),
            Some(p.theta().to_vec()),
        ),
        Adapter::Vousden(v) => (v.ladder()?, None),
        Adapter::Fixed(l) => (l.clone(), None),
    };

    let mut record = RunRecord {
        seed,
        initial_betas,
        rows,
        theta_steps,
        final_betas: final_ladder.betas().to_vec(),
        final_log_diffs: final_ladder.log_diffs(),
        final_theta,
        sampling: None,
        mean_act: None,
        act_fallbacks: 0,
    };
    if cfg.final_samples > 0 {
        let trace = sample_fixed_ladder(
            &mut state,
            target,
            final_ladder,
            cfg.final_samples,
            &cfg.stretch,
            &cfg.omega,
            &mut swap_rng,
        )?;
        let (act, fallbacks) = mean_act_bounded(&cold_chain_series(&trace), cfg.act_window_c)?;
        record.mean_act = Some(act);
        record.act_fallbacks = fallbacks;
        record.sampling = Some(trace);
    }
    Ok(record)
}
