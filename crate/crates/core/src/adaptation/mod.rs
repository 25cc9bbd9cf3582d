//! Online ladder adaptation.
//!
//! [`PolicyState`] is a single-state policy-gradient learner over the box
//! of log-beta differences: each iteration samples an action from a
//! Gaussian centred at `theta`, the sampler runs one window with the
//! resulting ladder, and `theta` moves along the score-function estimate
//! of the reward gradient with a running-average baseline. The sampling
//! variance decays as `eps_t * sigma` so that adaptation diminishes.
//!
//! [`VousdenState`] is the acceptance-equalizing baseline that adjusts log
//! temperature gaps from neighbouring acceptance rates.

mod run;

pub use run::{
    run_adaptive, sample_fixed_ladder, AdapterConfig, IterationRow, RunConfig, RunRecord, SamplingTrace,
};

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rewards::population_std;
use crate::tempering::{ActionBounds, LogDiffAction, TemperatureLadder, TopMode};
use crate::{Error, Result};

const ADVANTAGE_STD_FLOOR: f64 = 1e-8;

/// `exp(-t / tau)`.
pub fn epsilon_schedule(t: u64, tau: f64) -> f64 {
    (-(t as f64) / tau).exp()
}

fn default_sigma() -> f64 {
    0.2
}
fn default_alpha() -> f64 {
    0.01
}
fn default_epsilon_floor() -> f64 {
    1e-4
}
fn default_grad_clip() -> f64 {
    1.0
}
fn default_buffer_len() -> usize {
    500
}
fn default_d_min() -> f64 {
    crate::tempering::DEFAULT_D_MIN
}
fn default_d_max() -> f64 {
    crate::tempering::DEFAULT_D_MAX
}
fn default_theta0() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    /// Per-coordinate policy variance before epsilon damping.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Decay constant of the exploration schedule; `None` means a quarter
    /// of the number of iterations.
    #[serde(default)]
    pub epsilon_tau: Option<f64>,
    #[serde(default = "default_epsilon_floor")]
    pub epsilon_floor: f64,
    #[serde(default = "default_grad_clip")]
    pub grad_clip: f64,
    #[serde(default = "default_buffer_len")]
    pub buffer_len: usize,
    #[serde(default = "default_d_min")]
    pub d_min: f64,
    #[serde(default = "default_d_max")]
    pub d_max: f64,
    #[serde(default = "default_theta0")]
    pub theta0: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            sigma: default_sigma(),
            alpha: default_alpha(),
            epsilon_tau: None,
            epsilon_floor: default_epsilon_floor(),
            grad_clip: default_grad_clip(),
            buffer_len: default_buffer_len(),
            d_min: default_d_min(),
            d_max: default_d_max(),
            theta0: default_theta0(),
        }
    }
}

impl PolicyConfig {
    pub fn bounds(&self) -> Result<ActionBounds> {
        ActionBounds::new(self.d_min, self.d_max)
    }

    pub fn tau_for(&self, iterations: u64) -> f64 {
        self.epsilon_tau
            .unwrap_or_else(|| (iterations as f64 / 4.0).max(1.0))
    }
}

/// Result of one policy update.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyUpdate {
    pub advantage: f64,
    /// Clipped score used for the step.
    pub gradient: Vec<f64>,
    /// Largest absolute change of any `theta` component.
    pub step_norm: f64,
}

#[derive(Debug, Clone)]
pub struct PolicyState {
    theta: Vec<f64>,
    sigma: f64,
    alpha: f64,
    tau: f64,
    epsilon_floor: f64,
    grad_clip: f64,
    bounds: ActionBounds,
    buffer: VecDeque<f64>,
    buffer_len: usize,
    t: u64,
}

impl PolicyState {
    /// Learner over `dim` log-differences, every component starting at
    /// `theta0`. `iterations` fixes the default decay constant.
    pub fn new(cfg: &PolicyConfig, dim: usize, iterations: u64) -> Result<Self> {
        let bounds = cfg.bounds()?;
        let positive = [
            ("sigma", cfg.sigma),
            ("alpha", cfg.alpha),
            ("grad_clip", cfg.grad_clip),
            ("epsilon_tau", cfg.tau_for(iterations)),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(cfg.epsilon_floor >= 0.0 && cfg.epsilon_floor <= 1.0) {
            return Err(Error::invalid("epsilon_floor", "must lie in [0, 1]"));
        }
        if cfg.buffer_len == 0 {
            return Err(Error::invalid("buffer_len", "must be positive"));
        }
        if !bounds.contains(cfg.theta0) {
            return Err(Error::invalid(
                "theta0",
                format!("{} outside [{}, {}]", cfg.theta0, cfg.d_min, cfg.d_max),
            ));
        }
        Ok(Self {
            theta: vec![cfg.theta0; dim],
            sigma: cfg.sigma,
            alpha: cfg.alpha,
            tau: cfg.tau_for(iterations),
            epsilon_floor: cfg.epsilon_floor,
            grad_clip: cfg.grad_clip,
            bounds,
            buffer: VecDeque::with_capacity(cfg.buffer_len),
            buffer_len: cfg.buffer_len,
            t: 0,
        })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn set_theta(&mut self, theta: Vec<f64>) -> Result<()> {
        if theta.len() != self.theta.len() {
            return Err(Error::DimensionMismatch {
                expected: self.theta.len(),
                actual: theta.len(),
            });
        }
        self.theta = theta.into_iter().map(|v| self.bounds.clip(v)).collect();
        Ok(())
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn bounds(&self) -> &ActionBounds {
        &self.bounds
    }

    pub fn iteration(&self) -> u64 {
        self.t
    }

    pub fn rewards(&self) -> &VecDeque<f64> {
        &self.buffer
    }

    /// Current exploration factor, floored.
    pub fn epsilon(&self) -> f64 {
        epsilon_schedule(self.t, self.tau).max(self.epsilon_floor)
    }

    /// The policy mean as an action.
    pub fn mean_action(&self) -> LogDiffAction {
        LogDiffAction::clipped(self.theta.iter().copied(), &self.bounds)
    }

    /// Draw `theta + sqrt(eps * sigma) * z`, clipped to the action box.
    pub fn sample_action<R: Rng + ?Sized>(&self, rng: &mut R) -> LogDiffAction {
        let scale = (self.epsilon() * self.sigma).sqrt();
        LogDiffAction::clipped(
            self.theta
                .iter()
                .map(|m| m + scale * rng.sample::<f64, _>(StandardNormal)),
            &self.bounds,
        )
    }

    /// Score of the Gaussian policy with respect to its mean,
    /// `(a - theta) / sigma`. Deliberately not rescaled by epsilon.
    pub fn log_grad(&self, action: &LogDiffAction) -> Result<Vec<f64>> {
        if action.len() != self.theta.len() {
            return Err(Error::DimensionMismatch {
                expected: self.theta.len(),
                actual: action.len(),
            });
        }
        Ok(action
            .diffs()
            .iter()
            .zip(&self.theta)
            .map(|(a, m)| (a - m) / self.sigma)
            .collect())
    }

    /// Record `reward` for `action` and take one ascent step.
    ///
    /// The reward joins the trailing buffer first; the advantage is its
    /// deviation from the buffer mean in units of the buffer's standard
    /// deviation (floored), so a lone reward has advantage zero.
    pub fn update(&mut self, action: &LogDiffAction, reward: f64) -> Result<PolicyUpdate> {
        if !reward.is_finite() {
            return Err(Error::NonFiniteReward(reward));
        }
        let score = self.log_grad(action)?;
        if self.buffer.len() == self.buffer_len {
            self.buffer.pop_front();
        }
        self.buffer.push_back(reward);
        let rewards: Vec<f64> = self.buffer.iter().copied().collect();
        let baseline = rewards.iter().sum::<f64>() / rewards.len() as f64;
        let spread = population_std(&rewards).max(ADVANTAGE_STD_FLOOR);
        let advantage = (reward - baseline) / spread;
        let gradient: Vec<f64> = score
            .iter()
            .map(|g| g.clamp(-self.grad_clip, self.grad_clip))
            .collect();
        let mut step_norm: f64 = 0.0;
        for (m, g) in self.theta.iter_mut().zip(&gradient) {
            let next = self.bounds.clip(*m + self.alpha * advantage * g);
            step_norm = step_norm.max((next - *m).abs());
            *m = next;
        }
        self.t += 1;
        Ok(PolicyUpdate {
            advantage,
            gradient,
            step_norm,
        })
    }
}

fn default_kappa0() -> f64 {
    1.0
}
fn default_t0() -> f64 {
    1000.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VousdenConfig {
    #[serde(default = "default_kappa0")]
    pub kappa0: f64,
    #[serde(default = "default_t0")]
    pub t0: f64,
    /// Every starting log-beta difference.
    #[serde(default = "default_theta0")]
    pub initial_log_diff: f64,
}

impl Default for VousdenConfig {
    fn default() -> Self {
        Self {
            kappa0: default_kappa0(),
            t0: default_t0(),
            initial_log_diff: default_theta0(),
        }
    }
}

/// Log temperature gaps `S_i = log(T_{i+1} - T_i)` between the finite
/// temperatures of a ladder, adapted from pair acceptance rates:
/// `S_i += kappa(t) (A_i - A_{i+1})` with `kappa(t) = kappa0 t0 / (t + t0)`.
///
/// A gap is adapted only when a hotter neighbouring pair exists, so with a
/// finite top temperature the hottest gap stays put.
#[derive(Debug, Clone, PartialEq)]
pub struct VousdenState {
    gaps: Vec<f64>,
    kappa0: f64,
    t0: f64,
    t: u64,
    infinite_top: bool,
}

impl VousdenState {
    pub fn from_ladder(ladder: &TemperatureLadder, cfg: &VousdenConfig) -> Result<Self> {
        if !(cfg.kappa0 > 0.0) || !(cfg.t0 > 0.0) {
            return Err(Error::invalid("vousden", "kappa0 and t0 must be positive"));
        }
        let infinite_top = ladder.top_is_infinite();
        let temps: Vec<f64> = ladder
            .temperatures()
            .into_iter()
            .filter(|t| t.is_finite())
            .collect();
        let gaps = temps.windows(2).map(|w| (w[1] - w[0]).ln()).collect();
        Ok(Self {
            gaps,
            kappa0: cfg.kappa0,
            t0: cfg.t0,
            t: 0,
            infinite_top,
        })
    }

    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    pub fn iteration(&self) -> u64 {
        self.t
    }

    pub fn kappa(&self) -> f64 {
        self.kappa0 * self.t0 / (self.t as f64 + self.t0)
    }

    pub fn top_mode(&self) -> TopMode {
        if self.infinite_top {
            TopMode::Infinite
        } else {
            TopMode::Finite
        }
    }

    /// Number of adjacent pairs of the ladder this state describes.
    pub fn pairs(&self) -> usize {
        self.gaps.len() + usize::from(self.infinite_top)
    }

    pub fn update(&mut self, rates: &[f64]) -> Result<()> {
        if rates.len() != self.pairs() {
            return Err(Error::DimensionMismatch {
                expected: self.pairs(),
                actual: rates.len(),
            });
        }
        let kappa = self.kappa();
        for (i, s) in self.gaps.iter_mut().enumerate() {
            if let Some(hotter) = rates.get(i + 1) {
                *s += kappa * (rates[i] - hotter);
            }
        }
        self.t += 1;
        Ok(())
    }

    pub fn ladder(&self) -> Result<TemperatureLadder> {
        let mut temp = 1.0;
        let mut betas = vec![1.0];
        for s in &self.gaps {
            temp += s.exp();
            betas.push(temp.recip());
        }
        if self.infinite_top {
            betas.push(0.0);
        }
        TemperatureLadder::new(betas)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tempering::ladder_from_log_diffs;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn policy(dim: usize) -> PolicyState {
        PolicyState::new(&PolicyConfig::default(), dim, 400).unwrap()
    }

    fn gaussian_log_pdf(a: &[f64], theta: &[f64], var: f64) -> f64 {
        a.iter()
            .zip(theta)
            .map(|(x, m)| -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (x - m) * (x - m) / (2.0 * var))
            .sum()
    }

    #[test]
    fn epsilon_schedule_values() {
        assert_eq!(epsilon_schedule(0, 10.0), 1.0);
        assert!((epsilon_schedule(10, 10.0) - (-1f64).exp()).abs() < 1e-15);
        let mut last = f64::INFINITY;
        for t in 0..1000 {
            let e = epsilon_schedule(t, 37.0);
            assert!(e <= last);
            last = e;
        }
    }

    #[test]
    fn default_tau_is_quarter_of_iterations() {
        let p = PolicyState::new(&PolicyConfig::default(), 2, 4000).unwrap();
        assert_eq!(p.tau, 1000.0);
    }

    #[test]
    fn zero_variance_limit_returns_clipped_theta() {
        let cfg = PolicyConfig {
            epsilon_floor: 0.0,
            epsilon_tau: Some(1e-3),
            ..Default::default()
        };
        let mut p = PolicyState::new(&cfg, 3, 10).unwrap();
        p.t = 100;
        assert_eq!(p.epsilon(), 0.0);
        p.theta = vec![0.5, 3.0, 9.0];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(p.sample_action(&mut rng).diffs(), &[0.5, 3.0, 9.0]);
    }

    #[test]
    fn samples_at_the_upper_bound_clip() {
        let mut p = policy(1);
        p.theta = vec![10.0];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let a = p.sample_action(&mut rng).diffs()[0];
            assert!(a <= 10.0);
        }
    }

    #[test]
    fn sample_variance_matches_eps_sigma() {
        let mut p = policy(2);
        p.theta = vec![4.0, 5.0];
        p.t = 100;
        let target = p.epsilon() * p.sigma();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 100_000;
        let draws: Vec<Vec<f64>> = (0..n).map(|_| p.sample_action(&mut rng).diffs().to_vec()).collect();
        for k in 0..2 {
            let mean = draws.iter().map(|d| d[k]).sum::<f64>() / n as f64;
            let var = draws.iter().map(|d| (d[k] - mean).powi(2)).sum::<f64>() / n as f64;
            assert!((var / target - 1.0).abs() < 0.03, "coord {k}: {var} vs {target}");
        }
    }

    #[test]
    fn log_grad_examples() {
        let p = policy(2);
        let at_mean = p.mean_action();
        assert_eq!(p.log_grad(&at_mean).unwrap(), vec![0.0, 0.0]);
        let cfg = PolicyConfig {
            sigma: 1.0,
            ..Default::default()
        };
        let p = PolicyState::new(&cfg, 2, 10).unwrap();
        let a = LogDiffAction::new(vec![1.5, 0.5], &ActionBounds::default()).unwrap();
        assert_eq!(p.log_grad(&a).unwrap(), vec![0.5, -0.5]);
    }

    #[test]
    fn log_grad_matches_finite_differences() {
        let mut p = policy(3);
        p.theta = vec![1.2, 0.7, 2.5];
        let a = LogDiffAction::new(vec![1.5, 0.4, 2.45], &ActionBounds::default()).unwrap();
        let g = p.log_grad(&a).unwrap();
        let h = 1e-5;
        for k in 0..3 {
            let mut up = p.theta.clone();
            let mut down = p.theta.clone();
            up[k] += h;
            down[k] -= h;
            let fd = (gaussian_log_pdf(a.diffs(), &up, p.sigma) - gaussian_log_pdf(a.diffs(), &down, p.sigma)) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-6, "coord {k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn first_update_leaves_theta() {
        let mut p = policy(2);
        let a = LogDiffAction::new(vec![1.3, 0.8], &ActionBounds::default()).unwrap();
        let u = p.update(&a, 5.0).unwrap();
        assert_eq!(u.advantage, 0.0);
        assert_eq!(p.theta(), &[1.0, 1.0]);
        assert_eq!(p.iteration(), 1);
    }

    #[test]
    fn reward_at_baseline_leaves_theta() {
        let mut p = policy(1);
        let a = LogDiffAction::new(vec![1.4], &ActionBounds::default()).unwrap();
        p.update(&a, 1.0).unwrap();
        p.update(&a, 3.0).unwrap();
        let before = p.theta().to_vec();
        let b = LogDiffAction::new(vec![1.2], &ActionBounds::default()).unwrap();
        // buffer {1, 3, 2} has mean 2
        let u = p.update(&b, 2.0).unwrap();
        assert_eq!(u.advantage, 0.0);
        assert_eq!(p.theta(), before.as_slice());
    }

    #[test]
    fn one_step_arithmetic() {
        // alpha 0.1, advantage 1, gradient 0.5 from theta 1.0
        let cfg = PolicyConfig {
            alpha: 0.1,
            sigma: 1.0,
            ..Default::default()
        };
        let mut p = PolicyState::new(&cfg, 1, 10).unwrap();
        let a = LogDiffAction::new(vec![1.5], &ActionBounds::default()).unwrap();
        // rewards {0, 2}: mean 1, population std 1, so the second has advantage 1
        p.update(&LogDiffAction::new(vec![1.0], &ActionBounds::default()).unwrap(), 0.0).unwrap();
        let u = p.update(&a, 2.0).unwrap();
        assert!((u.advantage - 1.0).abs() < 1e-15);
        assert_eq!(u.gradient, vec![0.5]);
        assert!((p.theta()[0] - 1.05).abs() < 1e-15);
    }

    #[test]
    fn gradient_is_clipped() {
        let mut p = policy(1);
        let far = LogDiffAction::new(vec![5.0], &ActionBounds::default()).unwrap();
        p.update(&far, 0.0).unwrap();
        let u = p.update(&far, 1.0).unwrap();
        assert_eq!(u.gradient, vec![1.0]);
    }

    #[test]
    fn non_finite_reward_rejected() {
        let mut p = policy(1);
        let a = p.mean_action();
        assert!(matches!(p.update(&a, f64::NAN), Err(Error::NonFiniteReward(_))));
        assert!(p.update(&a, f64::INFINITY).is_err());
    }

    #[test]
    fn buffer_is_bounded() {
        let cfg = PolicyConfig {
            buffer_len: 5,
            ..Default::default()
        };
        let mut p = PolicyState::new(&cfg, 1, 10).unwrap();
        let a = p.mean_action();
        for r in 0..20 {
            p.update(&a, r as f64).unwrap();
        }
        assert_eq!(p.rewards().iter().copied().collect::<Vec<_>>(), vec![15.0, 16.0, 17.0, 18.0, 19.0]);
    }

    #[test]
    fn config_validation() {
        let bad = PolicyConfig {
            theta0: 20.0,
            ..Default::default()
        };
        assert!(PolicyState::new(&bad, 2, 10).is_err());
        let bad = PolicyConfig {
            sigma: 0.0,
            ..Default::default()
        };
        assert!(PolicyState::new(&bad, 2, 10).is_err());
    }

    #[test]
    fn kappa_decay() {
        let cfg = VousdenConfig::default();
        let ladder = crate::tempering::geometric_ladder(4, 0.1).unwrap();
        let mut v = VousdenState::from_ladder(&ladder, &cfg).unwrap();
        assert_eq!(v.kappa(), 1.0);
        v.t = 1000;
        assert_eq!(v.kappa(), 0.5);
        v.t = u64::MAX / 2;
        assert!(v.kappa() < 1e-12);
    }

    #[test]
    fn vousden_roundtrips_ladder() {
        let ladder = crate::tempering::geometric_ladder(5, 0.05).unwrap();
        let v = VousdenState::from_ladder(&ladder, &VousdenConfig::default()).unwrap();
        assert_eq!(v.gaps().len(), 4);
        for (a, b) in v.ladder().unwrap().betas().iter().zip(ladder.betas()) {
            assert!((a - b).abs() < 1e-12);
        }
        let action = LogDiffAction::new(vec![1.0; 3], &ActionBounds::default()).unwrap();
        let inf = ladder_from_log_diffs(&action, TopMode::Infinite);
        let v = VousdenState::from_ladder(&inf, &VousdenConfig::default()).unwrap();
        assert_eq!(v.gaps().len(), 3);
        assert_eq!(v.pairs(), 4);
        let rebuilt = v.ladder().unwrap();
        assert_eq!(rebuilt.len(), 5);
        assert_eq!(rebuilt.betas()[4], 0.0);
    }

    #[test]
    fn vousden_equal_rates_hold_still() {
        let ladder = crate::tempering::geometric_ladder(4, 0.1).unwrap();
        let mut v = VousdenState::from_ladder(&ladder, &VousdenConfig::default()).unwrap();
        let before = v.gaps().to_vec();
        v.update(&[0.4, 0.4, 0.4]).unwrap();
        assert_eq!(v.gaps(), before.as_slice());
        assert!(v.update(&[0.4, 0.4]).is_err());
    }

    #[test]
    fn vousden_moves_toward_equal_rates() {
        let action = LogDiffAction::new(vec![1.0; 3], &ActionBounds::default()).unwrap();
        let ladder = ladder_from_log_diffs(&action, TopMode::Infinite);
        let mut v = VousdenState::from_ladder(&ladder, &VousdenConfig::default()).unwrap();
        let before = v.gaps().to_vec();
        // pair 0 swaps far more than pair 1: widen gap 0
        v.update(&[0.9, 0.2, 0.5, 0.5]).unwrap();
        assert!(v.gaps()[0] > before[0]);
        assert!(v.gaps()[1] < before[1]);
    }

    proptest! {
        #[test]
        fn theta_stays_in_box(rewards in prop::collection::vec(-100.0f64..100.0, 1..60), seed in any::<u64>()) {
            let mut p = policy(3);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for r in rewards {
                let a = p.sample_action(&mut rng);
                p.update(&a, r).unwrap();
                prop_assert!(p.theta().iter().all(|v| p.bounds().contains(*v)));
            }
        }

        #[test]
        fn vousden_keeps_temperatures_increasing(
            rates in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 4), 1..50),
            inf in any::<bool>(),
        ) {
            let top = if inf { TopMode::Infinite } else { TopMode::Finite };
            let chains = 5;
            let action = LogDiffAction::new(vec![0.7; top.action_dim(chains)], &ActionBounds::default()).unwrap();
            let ladder = ladder_from_log_diffs(&action, top);
            let mut v = VousdenState::from_ladder(&ladder, &VousdenConfig::default()).unwrap();
            for r in rates {
                v.update(&r).unwrap();
                let l = v.ladder().unwrap();
                prop_assert_eq!(l.len(), chains);
                let temps = l.temperatures();
                prop_assert!(temps.windows(2).all(|w| w[1] > w[0]));
            }
        }
    }
}
