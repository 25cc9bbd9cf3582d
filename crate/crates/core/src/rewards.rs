//! Window rewards for the ladder learner.
//!
//! Three signals computed over one observation window: the swap
//! mean-distance of cold-chain swap proposals, the expected squared jump in
//! beta, and the negative spread of adjacent acceptance rates.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::ensemble::Ensemble;
use crate::tempering::{SwapRecord, TemperatureLadder};
use crate::{Error, Result};

/// Default number of past cold-chain states a proposal is compared with.
pub const DEFAULT_MEMORY: usize = 50;

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// The last `capacity` positions of one cold-chain walker, newest first.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRing {
    capacity: usize,
    buf: VecDeque<Vec<f64>>,
}

impl HistoryRing {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::invalid("memory", "history length must be positive"));
        }
        Ok(Self {
            capacity,
            buf: VecDeque::with_capacity(capacity),
        })
    }

    pub fn push(&mut self, x: Vec<f64>) {
        if self.buf.len() == self.capacity {
            self.buf.pop_back();
        }
        self.buf.push_front(x);
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.buf.iter()
    }
}

/// Mean Euclidean distance from `y` to every stored state. A ring that is
/// not yet full averages over what it holds.
pub fn swap_mean_distance(ring: &HistoryRing, y: &[f64]) -> Result<f64> {
    let first = ring.buf.front().ok_or(Error::EmptyHistory)?;
    if first.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: first.len(),
            actual: y.len(),
        });
    }
    let total: f64 = ring.iter().map(|x| euclidean(x, y)).sum();
    Ok(total / ring.len() as f64)
}

/// Which state a cold-pair attempt is scored at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaState {
    /// The state the cold walker holds after the attempt: the incoming
    /// hot state when accepted, its own current state when rejected.
    #[default]
    Realized,
    /// The hot state offered, whether or not the swap was accepted.
    Proposed,
}

/// History length and scoring rule of the swap mean-distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OmegaConfig {
    pub memory: usize,
    pub scored_at: OmegaState,
}

impl Default for OmegaConfig {
    fn default() -> Self {
        Self {
            memory: DEFAULT_MEMORY,
            scored_at: OmegaState::default(),
        }
    }
}

/// A swap proposal made to the target chain, with its swap mean-distance
/// measured against the receiving walker's history at the time of the
/// attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct ColdSwapAttempt {
    pub walker: usize,
    pub proposed: Vec<f64>,
    pub accepted: bool,
    pub omega: f64,
}

/// Per-walker trajectories of the target chain.
#[derive(Debug, Clone)]
pub struct ColdHistory {
    rings: Vec<HistoryRing>,
    scored_at: OmegaState,
}

impl ColdHistory {
    /// Start each walker's history at its current position.
    pub fn new(cfg: &OmegaConfig, cold: &Ensemble) -> Result<Self> {
        let OmegaConfig { memory, scored_at } = *cfg;
        let rings = cold
            .positions()
            .iter()
            .map(|x| {
                let mut ring = HistoryRing::new(memory)?;
                ring.push(x.clone());
                Ok(ring)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { rings, scored_at })
    }

    pub fn scored_at(&self) -> OmegaState {
        self.scored_at
    }

    pub fn rings(&self) -> &[HistoryRing] {
        &self.rings
    }

    /// Score this step's cold-pair attempts against the histories, then
    /// append every walker's post-step position (which is the incoming
    /// state after an accepted swap).
    ///
    /// The cold pair is the last one visited in a swap round and each cold
    /// walker is offered exactly one state, so a walker's post-step
    /// position is the state it held during a rejected attempt.
    pub fn observe(&mut self, records: &[SwapRecord], cold: &Ensemble) -> Result<Vec<ColdSwapAttempt>> {
        if cold.walkers() != self.rings.len() {
            return Err(Error::WalkerCountMismatch(self.rings.len(), cold.walkers()));
        }
        let attempts = records
            .iter()
            .filter(|r| r.pair == 0)
            .map(|r| {
                let scored = match self.scored_at {
                    OmegaState::Proposed => &r.proposed_state,
                    OmegaState::Realized if r.accepted => &r.proposed_state,
                    OmegaState::Realized => &cold.positions()[r.cold_walker],
                };
                Ok(ColdSwapAttempt {
                    walker: r.cold_walker,
                    omega: swap_mean_distance(&self.rings[r.cold_walker], scored)?,
                    proposed: r.proposed_state.clone(),
                    accepted: r.accepted,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        for (ring, x) in self.rings.iter_mut().zip(cold.positions()) {
            ring.push(x.clone());
        }
        Ok(attempts)
    }
}

/// Everything a reward may look at for one observation window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowStats {
    pub ladder: TemperatureLadder,
    pub rates: Vec<f64>,
    pub cold_attempts: Vec<ColdSwapAttempt>,
}

/// Mean swap mean-distance over all cold-pair attempts, accepted or not.
pub fn reward_swap_mean_distance(stats: &WindowStats) -> Result<f64> {
    if stats.cold_attempts.is_empty() {
        return Err(Error::NoColdAttempts);
    }
    let total: f64 = stats.cold_attempts.iter().map(|a| a.omega).sum();
    Ok(total / stats.cold_attempts.len() as f64)
}

/// Mean over adjacent pairs of `(beta_i - beta_{i+1})^2 * rate_i`.
pub fn reward_esjd(ladder: &TemperatureLadder, rates: &[f64]) -> Result<f64> {
    let gaps: Vec<f64> = ladder.betas().windows(2).map(|w| w[0] - w[1]).collect();
    if gaps.len() != rates.len() {
        return Err(Error::DimensionMismatch {
            expected: gaps.len(),
            actual: rates.len(),
        });
    }
    if gaps.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = gaps.iter().zip(rates).map(|(g, r)| g * g * r).sum();
    Ok(total / gaps.len() as f64)
}

/// Population standard deviation of `values`.
pub(crate) fn population_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// Negative population standard deviation of the acceptance rates.
pub fn reward_neg_acc_std(rates: &[f64]) -> Result<f64> {
    if rates.is_empty() {
        return Err(Error::invalid("rates", "need at least one acceptance rate"));
    }
    Ok(-population_std(rates))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardKind {
    #[default]
    SwapMeanDistance,
    Esjd,
    NegAccStd,
}

impl RewardKind {
    pub fn evaluate(self, stats: &WindowStats) -> Result<f64> {
        match self {
            RewardKind::SwapMeanDistance => reward_swap_mean_distance(stats),
            RewardKind::Esjd => reward_esjd(&stats.ladder, &stats.rates),
            RewardKind::NegAccStd => reward_neg_acc_std(&stats.rates),
        }
    }
}
