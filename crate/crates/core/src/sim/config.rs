use serde::{Deserialize, Serialize};

use super::SimError;
use crate::choice::ChoiceConfig;
use crate::data::SplitRatios;
use crate::par::Parallelism;
use crate::recommend::{ModelConfig, TrainingConfig};

/// Which popularity binning the headline popularity-miscalibration metric
/// uses. Both are always computed and written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PopularityMode {
    /// Re-binned on the dataset state of each iteration.
    #[default]
    Current,
    /// Binned once on the initial dataset.
    Frozen,
}

/// Every knob of the loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub iterations: u32,
    pub seed: u64,
    pub choice: ChoiceConfig,
    pub split: SplitRatios,
    pub model: ModelConfig,
    pub training: TrainingConfig,
    pub popularity: PopularityMode,
    /// Share of tracks in the HighPop and LowPop bins.
    pub popularity_high_share: f64,
    pub popularity_low_share: f64,
    pub parallelism: Parallelism,
    /// Start BPR from the previous iteration's parameters instead of a fresh
    /// initialization.
    pub warm_start: bool,
    /// Write a checkpoint every this many iterations.
    pub checkpoint_every: Option<u32>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            iterations: 100,
            seed: 42,
            choice: ChoiceConfig::default(),
            split: SplitRatios::default(),
            model: ModelConfig::Pop,
            training: TrainingConfig::default(),
            popularity: PopularityMode::default(),
            popularity_high_share: 0.2,
            popularity_low_share: 0.2,
            parallelism: Parallelism::default(),
            warm_start: false,
            checkpoint_every: None,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Config(m.to_string()));
        if self.iterations == 0 {
            return bad("iterations must be at least 1");
        }
        if self.choice.k == 0 {
            return bad("k must be at least 1");
        }
        if !self.choice.alpha.is_finite() {
            return bad("alpha must be finite");
        }
        if self.choice.alpha >= 0.0 {
            log::warn!(
                "alpha = {} >= 0: acceptance no longer prefers top ranks",
                self.choice.alpha
            );
        }
        self.split
            .validate()
            .map_err(|e| SimError::Config(e.to_string()))?;
        self.training
            .validate()
            .map_err(|e| SimError::Config(e.to_string()))?;
        let (h, l) = (self.popularity_high_share, self.popularity_low_share);
        if !(0.0..=1.0).contains(&h) || !(0.0..=1.0).contains(&l) || h + l > 1.0 {
            return bad("popularity shares must lie in [0, 1] and sum to at most 1");
        }
        if self.checkpoint_every == Some(0) {
            return bad("checkpoint_every must be at least 1");
        }
        Ok(())
    }
}
