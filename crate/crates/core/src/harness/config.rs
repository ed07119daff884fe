use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{DiscretizerSpec, QParams};
use crate::rewards::{
    CenteringState, DiffRewardWeights, FieldSettings, GeneralRewardWeights, RewardSettings, RewardVariant,
};
use crate::world::RoadConfig;

pub const CONFIG_VERSION: u32 = 1;

/// Reward weights shared by every variant of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    pub general: GeneralRewardWeights,
    pub diff: DiffRewardWeights,
    pub field: FieldSettings,
    /// Training has no oracle mean, so the default is a running estimate.
    pub centering: CenteringState,
    pub high_speed_frac: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        let base = RewardSettings::default();
        Self {
            general: base.general,
            diff: base.diff,
            field: base.field,
            centering: CenteringState::running(0.0, 0.01),
            high_speed_frac: base.high_speed_frac,
        }
    }
}

impl RewardWeights {
    pub fn settings(&self, variant: RewardVariant) -> RewardSettings {
        RewardSettings {
            variant,
            general: self.general,
            diff: self.diff,
            field: self.field,
            centering: self.centering,
            high_speed_frac: self.high_speed_frac,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    /// Independent Q-learning, one table shared by all CAVs.
    #[default]
    Iql,
    /// Additive mixing of per-agent values with a joint TD error.
    Vdn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    pub params: QParams,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self { kind: LearnerKind::Iql, params: QParams::default() }
    }
}

/// Reward variant x penetration grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub variants: Vec<RewardVariant>,
    pub penetrations: Vec<f64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self { variants: RewardVariant::ALL.to_vec(), penetrations: vec![0.25, 0.5, 0.75, 1.0] }
    }
}

/// One JSON document describing a training cell or a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default)]
    pub road: RoadConfig,
    #[serde(default = "default_variant")]
    pub reward_variant: RewardVariant,
    #[serde(default)]
    pub weights: RewardWeights,
    #[serde(default)]
    pub learner: LearnerConfig,
    #[serde(default)]
    pub discretizer: DiscretizerSpec,
    #[serde(default = "default_episodes")]
    pub n_episodes: usize,
    /// Greedy evaluation every this many episodes; 0 disables.
    #[serde(default)]
    pub eval_every: usize,
    /// Episodes per greedy evaluation, including the final one.
    #[serde(default = "default_eval_episodes")]
    pub eval_episodes: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Trailing window of the smoothed return curve.
    #[serde(default = "default_window")]
    pub smoothing_window: usize,
    #[serde(default)]
    pub sweep: SweepGrid,
}

fn default_variant() -> RewardVariant {
    RewardVariant::DR
}

fn default_episodes() -> usize {
    1000
}

fn default_eval_episodes() -> usize {
    20
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

fn default_window() -> usize {
    100
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            road: RoadConfig::default(),
            reward_variant: default_variant(),
            weights: RewardWeights::default(),
            learner: LearnerConfig::default(),
            discretizer: DiscretizerSpec::default(),
            n_episodes: default_episodes(),
            eval_every: 0,
            eval_episodes: default_eval_episodes(),
            seeds: default_seeds(),
            output_dir: default_output(),
            smoothing_window: default_window(),
            sweep: SweepGrid::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!("unsupported config version {} (expected {CONFIG_VERSION})", self.version)));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        if self.n_episodes == 0 || self.smoothing_window == 0 {
            return Err(Error::Config("n_episodes and smoothing_window must be positive".into()));
        }
        if self.sweep.variants.is_empty() || self.sweep.penetrations.is_empty() {
            return Err(Error::Config("sweep grid must not be empty".into()));
        }
        if self.sweep.penetrations.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config("sweep penetrations must lie in [0, 1]".into()));
        }
        self.road.validate()?;
        self.weights.settings(self.reward_variant).validate()?;
        self.learner.params.validate()?;
        self.discretizer.validate()?;
        Ok(())
    }

    pub fn settings(&self) -> RewardSettings {
        self.weights.settings(self.reward_variant)
    }
}
