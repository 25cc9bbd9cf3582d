//! Temperature ladders, replica-exchange swaps and the joint PT state.
//!
//! Chains are indexed coldest first: chain 0 runs at `beta = 1`. Adjacent
//! pair `p` couples chains `p` and `p + 1`, so pair 0 always involves the
//! target chain.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{Ensemble, StretchConfig};
use crate::rng::{stream_rng, Stream, StreamRng};
use crate::targets::{uniform_init, Target};
use crate::{Error, Result};

pub const DEFAULT_D_MIN: f64 = 0.01;
pub const DEFAULT_D_MAX: f64 = 10.0;

/// Inverse temperatures `1 = beta_0 > beta_1 > ... >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TemperatureLadder {
    betas: Vec<f64>,
}

impl TemperatureLadder {
    pub fn new(betas: Vec<f64>) -> Result<Self> {
        match betas.first() {
            None => return Err(Error::InvalidLadder("empty ladder".into())),
            Some(b) if *b != 1.0 => {
                return Err(Error::InvalidLadder(format!("first beta is {b}, not 1")))
            }
            _ => {}
        }
        for w in betas.windows(2) {
            if !(w[1] < w[0]) {
                return Err(Error::InvalidLadder(format!(
                    "betas not strictly decreasing: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        let last = betas[betas.len() - 1];
        if !(last >= 0.0) {
            return Err(Error::InvalidLadder(format!("last beta {last} is negative")));
        }
        Ok(Self { betas })
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `log beta_i - log beta_{i+1}` per adjacent pair; `+inf` for a pair
    /// ending at `beta = 0`.
    pub fn log_diffs(&self) -> Vec<f64> {
        self.betas
            .windows(2)
            .map(|w| w[0].ln() - w[1].ln())
            .collect()
    }

    /// Temperatures `1 / beta`; `+inf` at `beta = 0`.
    pub fn temperatures(&self) -> Vec<f64> {
        self.betas.iter().map(|b| b.recip()).collect()
    }

    pub fn top_is_infinite(&self) -> bool {
        self.betas[self.betas.len() - 1] == 0.0
    }
}

/// Box `[d_min, d_max]` for every log-beta difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionBounds {
    pub d_min: f64,
    pub d_max: f64,
}

impl ActionBounds {
    pub fn new(d_min: f64, d_max: f64) -> Result<Self> {
        if !(d_min > 0.0 && d_min < d_max && d_max.is_finite()) {
            return Err(Error::invalid(
                "d_min/d_max",
                format!("need 0 < d_min < d_max < inf, got [{d_min}, {d_max}]"),
            ));
        }
        Ok(Self { d_min, d_max })
    }

    pub fn clip(&self, v: f64) -> f64 {
        v.clamp(self.d_min, self.d_max)
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.d_min && v <= self.d_max
    }
}

impl Default for ActionBounds {
    fn default() -> Self {
        Self {
            d_min: DEFAULT_D_MIN,
            d_max: DEFAULT_D_MAX,
        }
    }
}

/// A point of the action space: one log-beta difference per free gap.
#[derive(Debug, Clone, PartialEq)]
pub struct LogDiffAction {
    diffs: Vec<f64>,
}

impl LogDiffAction {
    pub fn new(diffs: Vec<f64>, bounds: &ActionBounds) -> Result<Self> {
        if let Some(bad) = diffs.iter().find(|d| !bounds.contains(**d)) {
            return Err(Error::invalid(
                "action",
                format!("log-diff {bad} outside [{}, {}]", bounds.d_min, bounds.d_max),
            ));
        }
        Ok(Self { diffs })
    }

    /// Project arbitrary values onto the action box.
    pub fn clipped(raw: impl IntoIterator<Item = f64>, bounds: &ActionBounds) -> Self {
        Self {
            diffs: raw.into_iter().map(|v| bounds.clip(v)).collect(),
        }
    }

    pub fn diffs(&self) -> &[f64] {
        &self.diffs
    }

    pub fn len(&self) -> usize {
        self.diffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diffs.is_empty()
    }
}

/// Whether the hottest chain sits at a finite beta set by the last
/// log-difference, or is pinned at `beta = 0` on top of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopMode {
    #[default]
    Finite,
    Infinite,
}

impl TopMode {
    /// Number of free log-differences for a ladder of `chains` betas.
    pub fn action_dim(self, chains: usize) -> usize {
        match self {
            TopMode::Finite => chains.saturating_sub(1),
            TopMode::Infinite => chains.saturating_sub(2),
        }
    }
}

pub fn ladder_from_log_diffs(action: &LogDiffAction, top: TopMode) -> TemperatureLadder {
    let mut betas = Vec::with_capacity(action.len() + 2);
    betas.push(1.0);
    let mut log_beta = 0.0;
    for d in action.diffs() {
        log_beta -= d;
        betas.push(log_beta.exp());
    }
    if top == TopMode::Infinite {
        betas.push(0.0);
    }
    TemperatureLadder { betas }
}

/// `beta_i = beta_min^(i / (M - 1))`: constant ratio between neighbours.
pub fn geometric_ladder(chains: usize, beta_min: f64) -> Result<TemperatureLadder> {
    if chains < 2 {
        return Err(Error::invalid("chains", format!("need at least 2, got {chains}")));
    }
    if !(beta_min > 0.0 && beta_min < 1.0) {
        return Err(Error::invalid(
            "beta_min",
            format!("must lie in (0, 1), got {beta_min}"),
        ));
    }
    let step = beta_min.ln() / (chains - 1) as f64;
    let betas = (0..chains).map(|i| (step * i as f64).exp()).collect();
    TemperatureLadder::new(betas)
}

/// Log acceptance of exchanging `x` (held by the colder chain at
/// `beta_cold`) with `y` (held by the hotter chain at `beta_hot`).
///
/// A state of zero density never moves: any `-inf` input rejects.
pub fn swap_log_accept(logpi_x: f64, logpi_y: f64, beta_cold: f64, beta_hot: f64) -> f64 {
    if logpi_x == f64::NEG_INFINITY || logpi_y == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let gap = beta_cold - beta_hot;
    if gap == 0.0 {
        return 0.0;
    }
    (gap * (logpi_y - logpi_x)).min(0.0)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SwapCounter {
    pub attempts: u64,
    pub accepts: u64,
}

/// One attempted exchange between walker `cold_walker` of chain `pair` and
/// walker `hot_walker` of chain `pair + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapRecord {
    pub pair: usize,
    pub cold_walker: usize,
    pub hot_walker: usize,
    pub accepted: bool,
    /// The hotter chain's state offered to the colder chain.
    pub proposed_state: Vec<f64>,
}

/// Joint state of all tempered ensembles.
///
/// Each ensemble owns a dedicated random stream, so the outcome of a sweep
/// does not depend on whether ensembles are swept sequentially or in
/// parallel.
#[derive(Debug, Clone)]
pub struct PtState {
    ladder: TemperatureLadder,
    ensembles: Vec<Ensemble>,
    swap_stats: Vec<SwapCounter>,
    step_count: u64,
    sweep_rngs: Vec<StreamRng>,
    parallel_sweeps: bool,
}

impl PtState {
    pub fn new(ladder: TemperatureLadder, ensembles: Vec<Ensemble>, seed: u64) -> Result<Self> {
        if ensembles.len() != ladder.len() {
            return Err(Error::InvalidLadder(format!(
                "{} betas for {} ensembles",
                ladder.len(),
                ensembles.len()
            )));
        }
        let walkers = ensembles[0].walkers();
        let dim = ensembles[0].dim();
        for e in &ensembles[1..] {
            if e.walkers() != walkers {
                return Err(Error::WalkerCountMismatch(walkers, e.walkers()));
            }
            if e.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: e.dim(),
                });
            }
        }
        let sweep_rngs = (0..ensembles.len())
            .map(|k| stream_rng(seed, Stream::Ensemble(k)))
            .collect();
        Ok(Self {
            swap_stats: vec![SwapCounter::default(); ladder.len() - 1],
            ladder,
            ensembles,
            step_count: 0,
            sweep_rngs,
            parallel_sweeps: false,
        })
    }

    /// Fresh state with every walker drawn uniformly from the target's box.
    pub fn initialize<T: Target + ?Sized>(
        target: &T,
        ladder: TemperatureLadder,
        walkers: usize,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = stream_rng(seed, Stream::Init);
        let ensembles = (0..ladder.len())
            .map(|_| Ensemble::new(uniform_init(target.domain(), walkers, &mut rng), target))
            .collect::<Result<Vec<_>>>()?;
        Self::new(ladder, ensembles, seed)
    }

    pub fn with_parallel_sweeps(mut self, parallel: bool) -> Self {
        self.parallel_sweeps = parallel;
        self
    }

    pub fn ladder(&self) -> &TemperatureLadder {
        &self.ladder
    }

    /// Replace the ladder, keeping every walker where it is.
    pub fn set_ladder(&mut self, ladder: TemperatureLadder) -> Result<()> {
        if ladder.len() != self.ensembles.len() {
            return Err(Error::InvalidLadder(format!(
                "ladder has {} betas, state has {} chains",
                ladder.len(),
                self.ensembles.len()
            )));
        }
        self.ladder = ladder;
        Ok(())
    }

    pub fn ensembles(&self) -> &[Ensemble] {
        &self.ensembles
    }

    pub fn cold(&self) -> &Ensemble {
        &self.ensembles[0]
    }

    pub fn chains(&self) -> usize {
        self.ensembles.len()
    }

    pub fn walkers(&self) -> usize {
        self.ensembles[0].walkers()
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn swap_stats(&self) -> &[SwapCounter] {
        &self.swap_stats
    }

    pub fn reset_swap_stats(&mut self) {
        self.swap_stats.fill(SwapCounter::default());
    }

    /// One stretch sweep per ensemble at its own beta. Returns accepted
    /// moves per chain.
    pub fn sweep_all<T: Target + ?Sized>(&mut self, target: &T, cfg: &StretchConfig) -> Result<Vec<usize>> {
        let betas = &self.ladder.betas;
        if self.parallel_sweeps {
            self.ensembles
                .par_iter_mut()
                .zip(self.sweep_rngs.par_iter_mut())
                .zip(betas.par_iter())
                .map(|((e, rng), beta)| e.stretch_sweep(target, *beta, cfg, rng))
                .collect()
        } else {
            self.ensembles
                .iter_mut()
                .zip(self.sweep_rngs.iter_mut())
                .zip(betas)
                .map(|((e, rng), beta)| e.stretch_sweep(target, *beta, cfg, rng))
                .collect()
        }
    }

    /// Attempt one exchange per walker for every adjacent pair, hottest
    /// pair first, under a fresh uniform matching of the two ensembles'
    /// walkers.
    pub fn swap_round<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Vec<SwapRecord>> {
        let chains = self.chains();
        if chains < 2 {
            return Ok(Vec::new());
        }
        let walkers = self.walkers();
        let mut records = Vec::with_capacity(walkers * (chains - 1));
        let mut matching: Vec<usize> = (0..walkers).collect();
        for pair in (0..chains - 1).rev() {
            let (cold_part, hot_part) = self.ensembles.split_at_mut(pair + 1);
            let cold = &mut cold_part[pair];
            let hot = &mut hot_part[0];
            if cold.walkers() != hot.walkers() {
                return Err(Error::WalkerCountMismatch(cold.walkers(), hot.walkers()));
            }
            let beta_cold = self.ladder.betas[pair];
            let beta_hot = self.ladder.betas[pair + 1];
            matching.shuffle(rng);
            for (cold_walker, &hot_walker) in matching.iter().enumerate() {
                let log_accept = swap_log_accept(
                    cold.logpi()[cold_walker],
                    hot.logpi()[hot_walker],
                    beta_cold,
                    beta_hot,
                );
                let u: f64 = rng.random();
                let accepted = u.ln() < log_accept;
                records.push(SwapRecord {
                    pair,
                    cold_walker,
                    hot_walker,
                    accepted,
                    proposed_state: hot.positions()[hot_walker].clone(),
                });
                let counter = &mut self.swap_stats[pair];
                counter.attempts += 1;
                if accepted {
                    counter.accepts += 1;
                    cold.exchange(cold_walker, hot, hot_walker);
                }
            }
        }
        Ok(records)
    }

    /// Sweep every ensemble, then run one swap round.
    pub fn step<T: Target + ?Sized, R: Rng + ?Sized>(
        &mut self,
        target: &T,
        cfg: &StretchConfig,
        swap_rng: &mut R,
    ) -> Result<Vec<SwapRecord>> {
        self.sweep_all(target, cfg)?;
        let records = self.swap_round(swap_rng)?;
        self.step_count += 1;
        Ok(records)
    }

    /// Accepted over attempted swaps per pair since the last reset.
    pub fn acceptance_rates(&self) -> Result<Vec<f64>> {
        self.swap_stats
            .iter()
            .enumerate()
            .map(|(pair, c)| {
                if c.attempts == 0 {
                    Err(Error::EmptySwapWindow(pair))
                } else {
                    Ok(c.accepts as f64 / c.attempts as f64)
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::EggBox;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn egg_state(betas: Vec<f64>, walkers: usize, seed: u64) -> (EggBox, PtState) {
        let target = EggBox::new(2, 20.0).unwrap();
        let state = PtState::initialize(&target, TemperatureLadder::new(betas).unwrap(), walkers, seed).unwrap();
        (target, state)
    }

    #[test]
    fn ladder_from_diffs_finite_and_infinite() {
        let ln2 = 2f64.ln();
        let b = ActionBounds::default();
        let l = ladder_from_log_diffs(&LogDiffAction::new(vec![ln2, ln2], &b).unwrap(), TopMode::Finite);
        assert_eq!(l.len(), 3);
        for (got, want) in l.betas().iter().zip([1.0, 0.5, 0.25]) {
            assert!((got - want).abs() < 1e-15);
        }
        let l = ladder_from_log_diffs(&LogDiffAction::new(vec![], &b).unwrap(), TopMode::Finite);
        assert_eq!(l.betas(), &[1.0]);
        let l = ladder_from_log_diffs(&LogDiffAction::new(vec![ln2], &b).unwrap(), TopMode::Infinite);
        assert_eq!(l.len(), 3);
        assert!((l.betas()[1] - 0.5).abs() < 1e-15);
        assert_eq!(l.betas()[2], 0.0);
        assert!(TemperatureLadder::new(l.betas().to_vec()).is_ok());
        // beta = 0 on the hot side leaves only the colder chain's factor
        let v = swap_log_accept(-1.0, -3.0, l.betas()[1], l.betas()[2]);
        assert!((v - 0.5 * (-3.0 - -1.0)).abs() < 1e-15);
    }

    #[test]
    fn action_validation() {
        let b = ActionBounds::default();
        assert!(LogDiffAction::new(vec![0.001], &b).is_err());
        assert!(LogDiffAction::new(vec![11.0], &b).is_err());
        let a = LogDiffAction::clipped([0.0, 3.0, 50.0], &b);
        assert_eq!(a.diffs(), &[0.01, 3.0, 10.0]);
        assert!(ActionBounds::new(0.0, 1.0).is_err());
        assert!(ActionBounds::new(2.0, 1.0).is_err());
    }

    #[test]
    fn ladder_validation() {
        assert!(TemperatureLadder::new(vec![]).is_err());
        assert!(TemperatureLadder::new(vec![0.9, 0.5]).is_err());
        assert!(TemperatureLadder::new(vec![1.0, 0.5, 0.5]).is_err());
        assert!(TemperatureLadder::new(vec![1.0, -0.1]).is_err());
        assert!(TemperatureLadder::new(vec![1.0, 0.0]).is_ok());
    }

    #[test]
    fn geometric_examples() {
        let l = geometric_ladder(3, 0.25).unwrap();
        for (got, want) in l.betas().iter().zip([1.0, 0.5, 0.25]) {
            assert!((got - want).abs() < 1e-15);
        }
        let l = geometric_ladder(2, 0.1).unwrap();
        assert_eq!(l.betas()[0], 1.0);
        assert!((l.betas()[1] - 0.1).abs() < 1e-15);
        let d = geometric_ladder(15, 1e-3).unwrap().log_diffs();
        assert!(d.iter().all(|v| (v - d[0]).abs() < 1e-12));
        assert!(geometric_ladder(3, 1.0).is_err());
        assert!(geometric_ladder(1, 0.5).is_err());
    }

    #[test]
    fn swap_accept_examples() {
        assert_eq!(swap_log_accept(-4.0, -1.0, 0.7, 0.7), 0.0);
        assert_eq!(swap_log_accept(-2.0, -2.0, 1.0, 0.2), 0.0);
        assert!((swap_log_accept(0.0, -2.0, 1.0, 0.5) - (-1.0)).abs() < 1e-15);
        assert_eq!(swap_log_accept(f64::NEG_INFINITY, 0.0, 1.0, 0.5), f64::NEG_INFINITY);
        assert_eq!(swap_log_accept(0.0, f64::NEG_INFINITY, 1.0, 0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn swap_accept_frequency() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let log_a = swap_log_accept(0.0, -2.0, 1.0, 0.5);
        let n = 100_000;
        let hits = (0..n).filter(|_| rng.random::<f64>().ln() < log_a).count();
        let freq = hits as f64 / n as f64;
        assert!((freq - (-1f64).exp()).abs() < 0.01, "freq {freq}");
    }

    #[test]
    fn single_chain_round_is_noop() {
        let (_, mut state) = egg_state(vec![1.0], 4, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(state.swap_round(&mut rng).unwrap().is_empty());
        assert!(state.acceptance_rates().unwrap().is_empty());
    }

    #[test]
    fn equal_betas_always_swap() {
        let target = EggBox::new(2, 20.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ens: Vec<Ensemble> = (0..3)
            .map(|_| Ensemble::new(uniform_init(target.domain(), 5, &mut rng), &target).unwrap())
            .collect();
        // swap_round only reads betas, so an invalid (flat) ladder is fine here
        let mut state = PtState::new(TemperatureLadder::new(vec![1.0, 0.5, 0.25]).unwrap(), ens, 0).unwrap();
        state.ladder = TemperatureLadder {
            betas: vec![1.0, 1.0, 1.0],
        };
        let records = state.swap_round(&mut rng).unwrap();
        assert_eq!(records.len(), 10);
        assert!(records.iter().all(|r| r.accepted));
        assert_eq!(state.acceptance_rates().unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn round_order_is_hot_to_cold() {
        let (_, mut state) = egg_state(vec![1.0, 0.5, 0.1], 3, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pairs: Vec<usize> = state.swap_round(&mut rng).unwrap().iter().map(|r| r.pair).collect();
        assert_eq!(pairs, vec![1, 1, 1, 0, 0, 0]);
    }

    #[test]
    fn two_walker_matchings_are_fair() {
        let (_, mut state) = egg_state(vec![1.0, 0.5], 2, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let rounds = 10_000;
        let mut identity = 0;
        for _ in 0..rounds {
            let r = state.swap_round(&mut rng).unwrap();
            if r[0].hot_walker == 0 {
                assert_eq!(r[1].hot_walker, 1);
                identity += 1;
            } else {
                assert_eq!(r[1].hot_walker, 0);
            }
        }
        let f = identity as f64 / rounds as f64;
        assert!((f - 0.5).abs() < 0.02, "identity matching frequency {f}");
    }

    #[test]
    fn swap_conserves_positions_and_counts() {
        let (target, mut state) = egg_state(vec![1.0, 0.6, 0.3, 0.1], 6, 12);
        let cfg = StretchConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let windows = 7;
        for _ in 0..windows {
            state.sweep_all(&target, &cfg).unwrap();
            let mut before: Vec<Vec<Vec<f64>>> = state.ensembles().iter().map(|e| e.positions().to_vec()).collect();
            state.swap_round(&mut rng).unwrap();
            let mut after: Vec<Vec<Vec<f64>>> = state.ensembles().iter().map(|e| e.positions().to_vec()).collect();
            let key = |v: &mut Vec<Vec<Vec<f64>>>| {
                let mut flat: Vec<Vec<f64>> = v.drain(..).flatten().collect();
                flat.sort_by(|a, b| a.partial_cmp(b).unwrap());
                flat
            };
            assert_eq!(key(&mut before), key(&mut after));
        }
        for c in state.swap_stats() {
            assert_eq!(c.attempts, (6 * windows) as u64);
        }
        for e in state.ensembles() {
            for (x, lp) in e.positions().iter().zip(e.logpi()) {
                assert_eq!(target.log_density(x).unwrap(), *lp);
            }
        }
    }

    #[test]
    fn acceptance_rates_window() {
        let (_, mut state) = egg_state(vec![1.0, 0.5], 4, 1);
        assert_eq!(state.acceptance_rates(), Err(Error::EmptySwapWindow(0)));
        state.swap_stats[0] = SwapCounter {
            attempts: 10,
            accepts: 3,
        };
        assert_eq!(state.acceptance_rates().unwrap(), vec![0.3]);
        state.reset_swap_stats();
        assert!(state.acceptance_rates().is_err());
    }

    #[test]
    fn single_chain_step_is_a_sweep() {
        let (target, mut state) = egg_state(vec![1.0], 6, 4);
        let mut alone = state.ensembles()[0].clone();
        let mut rng = stream_rng(4, Stream::Ensemble(0));
        let cfg = StretchConfig::default();
        alone.stretch_sweep(&target, 1.0, &cfg, &mut rng).unwrap();
        let mut swap_rng = ChaCha8Rng::seed_from_u64(0);
        assert!(state.step(&target, &cfg, &mut swap_rng).unwrap().is_empty());
        assert_eq!(state.cold(), &alone);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn parallel_and_sequential_sweeps_agree() {
        let (target, seq) = egg_state(vec![1.0, 0.4, 0.1, 0.02], 8, 31);
        let mut seq = seq;
        let mut par = seq.clone().with_parallel_sweeps(true);
        let cfg = StretchConfig::default();
        let mut r1 = ChaCha8Rng::seed_from_u64(1);
        let mut r2 = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let a = seq.step(&target, &cfg, &mut r1).unwrap();
            let b = par.step(&target, &cfg, &mut r2).unwrap();
            assert_eq!(a, b);
        }
        assert_eq!(seq.ensembles(), par.ensembles());
    }

    #[test]
    fn mismatched_ladder_rejected() {
        let (_, mut state) = egg_state(vec![1.0, 0.5], 4, 1);
        assert!(state.set_ladder(TemperatureLadder::new(vec![1.0, 0.5, 0.2]).unwrap()).is_err());
    }

    proptest! {
        #[test]
        fn swap_accept_detailed_balance(
            lx in -50.0f64..5.0,
            ly in -50.0f64..5.0,
            bc in 0.0f64..1.0,
            frac in 0.0f64..1.0,
        ) {
            let bh = bc * frac;
            let forward = swap_log_accept(lx, ly, bc, bh);
            let backward = swap_log_accept(ly, lx, bc, bh);
            prop_assert!(forward <= 0.0 && backward <= 0.0);
            // f^bc(x) f^bh(y) A(x,y) = f^bc(y) f^bh(x) A(y,x), in logs
            let lhs = bc * lx + bh * ly + forward;
            let rhs = bc * ly + bh * lx + backward;
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        }

        #[test]
        fn ladders_from_actions_are_valid(diffs in prop::collection::vec(0.01f64..10.0, 0..12), inf in any::<bool>()) {
            let action = LogDiffAction::new(diffs, &ActionBounds::default()).unwrap();
            let top = if inf { TopMode::Infinite } else { TopMode::Finite };
            let ladder = ladder_from_log_diffs(&action, top);
            prop_assert!(TemperatureLadder::new(ladder.betas().to_vec()).is_ok());
            prop_assert_eq!(top.action_dim(ladder.len()), action.len());
        }
    }
}
