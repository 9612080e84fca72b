use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::AdamConfig;
use crate::policy::DEFAULT_HIDDEN;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Manager/Worker rounds; each round is one epoch of each.
    pub epochs: usize,
    /// Episodes sampled per video per Worker epoch (`c`).
    pub episodes: usize,
    /// Weight of the diversity/representativeness reward against the
    /// subtask reward.
    pub alpha: f64,
    pub subtask_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub baseline_momentum: f64,
    pub hidden: usize,
    pub seed: u64,
    /// Also follow the direct derivative of the subtask reward with respect
    /// to the Worker scores. The score-function estimator alone assigns it
    /// zero gradient, since it does not depend on the sampled actions.
    #[serde(default = "enabled")]
    pub sub_reward_gradient: bool,
}

fn enabled() -> bool {
    true
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 60,
            episodes: 10,
            alpha: 0.5,
            subtask_size: 20,
            learning_rate: 1e-3,
            weight_decay: 0.0,
            baseline_momentum: 0.9,
            hidden: DEFAULT_HIDDEN,
            seed: 1,
            sub_reward_gradient: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.episodes == 0 {
            return fail("episodes per video must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return fail(format!("alpha must lie in [0, 1], got {}", self.alpha));
        }
        if self.subtask_size == 0 {
            return fail("subtask size must be positive".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return fail(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return fail(format!(
                "weight decay must be non-negative, got {}",
                self.weight_decay
            ));
        }
        if !(0.0..1.0).contains(&self.baseline_momentum) {
            return fail(format!(
                "baseline momentum must lie in [0, 1), got {}",
                self.baseline_momentum
            ));
        }
        if self.hidden == 0 {
            return fail("hidden size must be positive".into());
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            ..AdamConfig::default()
        }
    }
}
