//! Experiment configuration: one JSON document per experiment.

use std::path::{Path, PathBuf};

use adaptive_pt::adaptation::{AdapterConfig, PolicyConfig, RunConfig, VousdenConfig};
use adaptive_pt::ensemble::StretchConfig;
use adaptive_pt::rewards::{OmegaConfig, OmegaState, RewardKind};
use adaptive_pt::targets::TargetConfig;
use adaptive_pt::tempering::TopMode;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdapterKind {
    #[default]
    PolicyGradient,
    Vousden,
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometricConfig {
    /// Smallest beta; defaults to `e^-(M-1)`, the policy learner's
    /// starting ladder.
    #[serde(default)]
    pub beta_min: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    /// Adaptation iterations.
    #[serde(rename = "L", default = "default_iterations")]
    pub iterations: u64,
    /// Sampler steps per adaptation window.
    #[serde(rename = "N", default = "default_window")]
    pub window: usize,
    #[serde(default = "default_final_samples")]
    pub final_samples: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            iterations: default_iterations(),
            window: default_window(),
            final_samples: default_final_samples(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelateConfig {
    pub ladder_count: usize,
    pub steps: usize,
}

fn default_iterations() -> u64 {
    4000
}
fn default_window() -> usize {
    500
}
fn default_final_samples() -> usize {
    10_000
}
fn default_memory() -> usize {
    adaptive_pt::rewards::DEFAULT_MEMORY
}
fn default_chains() -> usize {
    15
}
fn default_walkers() -> usize {
    adaptive_pt::ensemble::DEFAULT_WALKERS
}
fn default_stretch_a() -> f64 {
    adaptive_pt::ensemble::DEFAULT_STRETCH_A
}
fn default_trials() -> usize {
    1
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("output")
}
fn default_thinning() -> u64 {
    100
}
fn default_act_window_c() -> f64 {
    adaptive_pt::diagnostics::DEFAULT_WINDOW_C
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub target: TargetConfig,
    #[serde(default)]
    pub adapter: AdapterKind,
    #[serde(default)]
    pub pg: PolicyConfig,
    #[serde(default)]
    pub vousden: VousdenConfig,
    #[serde(default)]
    pub geometric: GeometricConfig,
    #[serde(default)]
    pub reward: RewardKind,
    #[serde(default = "default_memory")]
    pub memory: usize,
    #[serde(default)]
    pub omega_state: OmegaState,
    #[serde(default = "default_chains")]
    pub chains: usize,
    #[serde(default = "default_walkers")]
    pub walkers: usize,
    /// Unset: infinite for the Vousden adapter, finite otherwise.
    #[serde(default)]
    pub top_mode: Option<TopMode>,
    #[serde(default = "default_stretch_a")]
    pub stretch_a: f64,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_thinning")]
    pub thinning: u64,
    #[serde(default)]
    pub parallel_sweeps: bool,
    /// Worker threads for trials and sweeps; unset uses all cores.
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default = "default_act_window_c")]
    pub act_window_c: f64,
    #[serde(default)]
    pub correlate: Option<CorrelateConfig>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            CliError::Config {
                key: if key == "." { "<root>".into() } else { key },
                message: e.into_inner().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_json(&text)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(dir) = &o.output_dir {
            self.output_dir = dir.clone();
        }
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(trials) = o.trials {
            self.trials = trials;
        }
        if let Some(threads) = o.threads {
            self.threads = Some(threads);
        }
        self.validate()
    }

    /// Field-level checks that name the offending key.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |key: &str, message: String| {
            Err(CliError::Config {
                key: key.into(),
                message,
            })
        };
        if self.chains < 2 {
            return bad("chains", format!("need at least 2 chains, got {}", self.chains));
        }
        if self.walkers < 2 {
            return bad("walkers", format!("need at least 2 walkers, got {}", self.walkers));
        }
        if self.trials == 0 {
            return bad("trials", "need at least 1 trial".into());
        }
        if self.schedule.window == 0 {
            return bad("schedule.N", "need at least 1 step per window".into());
        }
        let min = adaptive_pt::diagnostics::MIN_ACT_LENGTH;
        if self.schedule.final_samples != 0 && self.schedule.final_samples < min {
            return bad(
                "schedule.final_samples",
                format!("must be 0 or at least {min}, got {}", self.schedule.final_samples),
            );
        }
        if self.thinning == 0 {
            return bad("thinning", "must be at least 1".into());
        }
        if self.memory == 0 {
            return bad("memory", "must be at least 1".into());
        }
        if !(self.stretch_a > 1.0) {
            return bad("stretch_a", format!("must exceed 1, got {}", self.stretch_a));
        }
        if self.threads == Some(0) {
            return bad("threads", "must be at least 1".into());
        }
        if !(self.act_window_c > 0.0) {
            return bad("act_window_c", "must be positive".into());
        }
        if self.top_mode() == TopMode::Infinite && self.chains < 3 && self.adapter == AdapterKind::Vousden {
            return bad("chains", "an infinite top temperature needs at least 3 chains".into());
        }
        if let Some(b) = self.geometric.beta_min {
            if !(b > 0.0 && b < 1.0) {
                return bad("geometric.beta_min", format!("must lie in (0, 1), got {b}"));
            }
        }
        if let Err(e) = self.pg.bounds() {
            return bad("pg", e.to_string());
        }
        if let Some(c) = &self.correlate {
            if c.ladder_count == 0 {
                return bad("correlate.ladder_count", "need at least 1 ladder".into());
            }
            if c.steps < min {
                return bad("correlate.steps", format!("need at least {min} steps, got {}", c.steps));
            }
        }
        Ok(())
    }

    pub fn top_mode(&self) -> TopMode {
        self.top_mode.unwrap_or(match self.adapter {
            AdapterKind::Vousden => TopMode::Infinite,
            _ => TopMode::Finite,
        })
    }

    pub fn omega(&self) -> OmegaConfig {
        OmegaConfig {
            memory: self.memory,
            scored_at: self.omega_state,
        }
    }

    pub fn geometric_beta_min(&self) -> f64 {
        self.geometric
            .beta_min
            .unwrap_or_else(|| (-((self.chains - 1) as f64)).exp())
    }

    pub fn run_config(&self) -> Result<RunConfig, CliError> {
        let adapter = match self.adapter {
            AdapterKind::PolicyGradient => AdapterConfig::PolicyGradient(self.pg.clone()),
            AdapterKind::Vousden => AdapterConfig::Vousden(self.vousden),
            AdapterKind::Geometric => AdapterConfig::Geometric {
                beta_min: self.geometric_beta_min(),
            },
        };
        Ok(RunConfig {
            chains: self.chains,
            walkers: self.walkers,
            top_mode: self.top_mode(),
            stretch: StretchConfig::new(self.stretch_a).map_err(|e| CliError::Config {
                key: "stretch_a".into(),
                message: e.to_string(),
            })?,
            reward: self.reward,
            omega: self.omega(),
            iterations: self.schedule.iterations,
            window: self.schedule.window,
            final_samples: self.schedule.final_samples,
            thinning: self.thinning,
            adapter,
            parallel_sweeps: self.parallel_sweeps,
            act_window_c: self.act_window_c,
        })
    }

    /// SHA-256 of the canonical JSON of everything that affects results.
    /// The output directory and thread count are excluded.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("output_dir");
            map.remove("threads");
        }
        let canonical = serde_json::to_string(&value).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"target": {"kind": "eggbox", "dim": 2, "beta_power": 10}}"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.chains, 15);
        assert_eq!(cfg.schedule.iterations, 4000);
        assert_eq!(cfg.schedule.window, 500);
        assert_eq!(cfg.schedule.final_samples, 10_000);
        assert_eq!(cfg.thinning, 100);
        assert_eq!(cfg.memory, 50);
        assert_eq!(cfg.reward, RewardKind::SwapMeanDistance);
        assert_eq!(cfg.top_mode(), TopMode::Finite);
        assert_eq!(cfg.pg, PolicyConfig::default());
    }

    #[test]
    fn errors_name_the_key() {
        let cases = [
            (r#"{"target": {"kind": "eggbox", "dim": 2, "beta_power": 10}, "reward": "bogus"}"#, "reward"),
            (r#"{"target": {"kind": "eggbox", "dim": 2, "beta_power": 10}, "schedule": {"L": -1}}"#, "schedule.L"),
            (r#"{"target": {"kind": "eggbox", "dim": 2, "beta_power": 10}, "pg": {"sigmaa": 1}}"#, "pg.sigmaa"),
            (r#"{"target": {"kind": "eggbox", "dim": 2, "beta_power": 10}, "chains": 1}"#, "chains"),
            (
                r#"{"target": {"kind": "eggbox", "dim": 2, "beta_power": 10}, "correlate": {"ladder_count": 0, "steps": 100}}"#,
                "correlate.ladder_count",
            ),
            (r#"{"target": {"kind": "eggbox", "dim": 2, "beta_power": 10}, "colour": 1}"#, "colour"),
        ];
        for (text, key) in cases {
            match ExperimentConfig::from_json(text) {
                Err(CliError::Config { key: k, .. }) => assert_eq!(k, key, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn vousden_defaults_to_infinite_top() {
        let text = r#"{"target": {"kind": "eggbox", "dim": 2, "beta_power": 10}, "adapter": "vousden"}"#;
        assert_eq!(ExperimentConfig::from_json(text).unwrap().top_mode(), TopMode::Infinite);
    }

    #[test]
    fn hash_ignores_output_location_only() {
        let a = ExperimentConfig::from_json(MINIMAL).unwrap();
        let mut b = a.clone();
        b.apply(&Overrides {
            output_dir: Some("elsewhere".into()),
            threads: Some(2),
            ..Overrides::default()
        })
        .unwrap();
        assert_eq!(a.hash(), b.hash());
        b.seed = 9;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn overrides_are_validated() {
        let mut cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert!(cfg
            .apply(&Overrides {
                trials: Some(0),
                ..Overrides::default()
            })
            .is_err());
    }
}
