//! Alternating optimization: a Manager epoch on weak labels, then a Worker
//! epoch of REINFORCE, repeated.

mod baseline;
mod config;
mod epochs;
mod run;

use serde::{Deserialize, Serialize};

use crate::data::Video;
use crate::error::Result;
use crate::nn::Adam;
use crate::policy::HierPolicy;
use crate::scalar::Real;

pub use baseline::BaselineState;
pub use config::TrainConfig;
pub use epochs::{
    add_sub_reward_grads, surrogate_logit_grads, train_manager_epoch, train_worker_epoch,
    WorkerStats,
};
pub use run::{
    checkpoint_path, crossval_split, log_path, read_fold_plan, train_run, FoldPlan, FoldSpec,
    DEFAULT_FOLDS, FOLDS_FILE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Manager,
    Worker,
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub epoch: usize,
    pub phase: Phase,
    #[serde(rename = "L_m", default, skip_serializing_if = "Option::is_none")]
    pub manager_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward: Option<f64>,
    #[serde(rename = "R_d", default, skip_serializing_if = "Option::is_none")]
    pub diversity: Option<f64>,
    #[serde(rename = "R_rep", default, skip_serializing_if = "Option::is_none")]
    pub representativeness: Option<f64>,
    #[serde(rename = "R_sub", default, skip_serializing_if = "Option::is_none")]
    pub sub: Option<f64>,
}

impl LogRecord {
    fn manager(epoch: usize, loss: f64) -> Self {
        LogRecord {
            epoch,
            phase: Phase::Manager,
            manager_loss: Some(loss),
            reward: None,
            diversity: None,
            representativeness: None,
            sub: None,
        }
    }

    fn worker(epoch: usize, stats: &WorkerStats) -> Self {
        let some = |v| (stats.videos > 0).then_some(v);
        LogRecord {
            epoch,
            phase: Phase::Worker,
            manager_loss: None,
            reward: some(stats.reward),
            diversity: some(stats.diversity),
            representativeness: some(stats.representativeness),
            sub: some(stats.sub),
        }
    }
}

/// Policy plus optimizer and baseline state between rounds.
#[derive(Debug, Clone)]
pub struct Trainer<S> {
    pub policy: HierPolicy<S>,
    config: TrainConfig,
    manager_opt: Adam<S>,
    worker_opt: Adam<S>,
    baseline: BaselineState<S>,
    epoch: usize,
}

impl<S: Real> Trainer<S> {
    pub fn new(feature_dim: usize, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let policy = HierPolicy::new(feature_dim, config.hidden, config.seed);
        let manager_opt = Adam::new(config.adam(), policy.manager.store());
        let worker_opt = Adam::new(config.adam(), policy.worker.store());
        let baseline = BaselineState::new(config.baseline_momentum);
        Ok(Trainer {
            policy,
            config,
            manager_opt,
            worker_opt,
            baseline,
            epoch: 0,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    /// Rounds completed so far.
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    /// One Manager epoch followed by one Worker epoch.
    pub fn round(&mut self, videos: &[&Video<S>]) -> Result<[LogRecord; 2]> {
        let epoch = self.epoch;
        let loss = train_manager_epoch(
            &mut self.policy.manager,
            &mut self.manager_opt,
            videos,
            self.config.subtask_size,
        )?;
        let stats = train_worker_epoch(
            &mut self.policy,
            &mut self.worker_opt,
            videos,
            &self.config,
            &mut self.baseline,
            epoch,
        )?;
        self.epoch += 1;
        Ok([
            LogRecord::manager(epoch + 1, loss.as_f64()),
            LogRecord::worker(epoch + 1, &stats),
        ])
    }
}

/// Runs `config.epochs` rounds and returns the trained policy. Every log
/// record is passed to `on_record` as it is produced.
pub fn train<S: Real>(
    videos: &[&Video<S>],
    feature_dim: usize,
    config: &TrainConfig,
    mut on_record: impl FnMut(&LogRecord) -> Result<()>,
) -> Result<HierPolicy<S>> {
    let mut trainer = Trainer::new(feature_dim, config.clone())?;
    for _ in 0..config.epochs {
        for record in trainer.round(videos)? {
            on_record(&record)?;
        }
    }
    Ok(trainer.policy)
}
