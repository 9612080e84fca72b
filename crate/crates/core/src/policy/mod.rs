//! Manager and Worker networks.

mod checkpoint;
mod episode;
mod manager;
mod worker;

use serde::{Deserialize, Serialize};

use crate::data::FeatureSequence;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::seeding::{stream_rng, Stream};

pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointHeader, ParamShape};
pub use episode::{sample_actions, Episode};
pub use manager::{manager_loss, ManagerNet, ManagerOutput, ManagerTape, Subgoal};
pub use worker::{WorkerNet, WorkerTape};

/// Default LSTM width for both networks.
pub const DEFAULT_HIDDEN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyShape {
    pub feature_dim: usize,
    pub hidden: usize,
}

/// The two-level policy. Manager and Worker keep separate parameter stores
/// so each can be optimized without touching the other.
#[derive(Debug, Clone, PartialEq)]
pub struct HierPolicy<S = f64> {
    shape: PolicyShape,
    seed: u64,
    pub manager: ManagerNet<S>,
    pub worker: WorkerNet<S>,
}

impl<S: Real> HierPolicy<S> {
    pub fn new(feature_dim: usize, hidden: usize, seed: u64) -> Self {
        assert!(
            feature_dim > 0 && hidden > 0,
            "policy dimensions must be positive"
        );
        let mut rng = stream_rng(seed, Stream::Init, &[]);
        let manager = ManagerNet::new(feature_dim, hidden, seed, &mut rng);
        let worker = WorkerNet::new(feature_dim, hidden, hidden, seed, &mut rng);
        HierPolicy {
            shape: PolicyShape {
                feature_dim,
                hidden,
            },
            seed,
            manager,
            worker,
        }
    }

    pub fn shape(&self) -> PolicyShape {
        self.shape
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub(crate) fn check_video(&self, video: &FeatureSequence<S>) -> Result<()> {
        if video.dim() != self.shape.feature_dim {
            return Err(Error::Config(format!(
                "model expects {}-dimensional features, video `{}` has {}",
                self.shape.feature_dim,
                video.video_id(),
                video.dim()
            )));
        }
        Ok(())
    }

    /// Deterministic inference: frame importance scores for every frame.
    pub fn greedy_scores(&self, video: &FeatureSequence<S>, subtask_size: usize) -> Result<Vec<S>> {
        self.check_video(video)?;
        let manager = self.manager.infer(video, subtask_size)?;
        self.worker.infer(video, &manager.subgoals, subtask_size)
    }

    /// Every parameter with its owning network as a name prefix.
    pub fn named_params(&self) -> impl Iterator<Item = (String, &crate::nn::Param<S>)> {
        self.manager
            .store()
            .iter()
            .map(|p| (format!("manager.{}", p.name), p))
            .chain(
                self.worker
                    .store()
                    .iter()
                    .map(|p| (format!("worker.{}", p.name), p)),
            )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    pub(crate) fn zero_params<S: Real>(policy: &mut HierPolicy<S>) {
        for p in policy
            .manager
            .store_mut()
            .iter_mut()
            .chain(policy.worker.store_mut().iter_mut())
        {
            p.value.iter_mut().for_each(|v| *v = S::zero());
        }
    }

    #[test]
    fn untrained_zero_model_scores_half() {
        let mut policy = HierPolicy::<f64>::new(3, 5, 1);
        zero_params(&mut policy);
        let video = FeatureSequence::new(
            "v",
            Array2::from_shape_fn((13, 3), |(i, j)| (i + j) as f64 * 0.1),
        )
        .unwrap();
        let scores = policy.greedy_scores(&video, 4).unwrap();
        assert_eq!(scores, vec![0.5; 13]);
    }

    #[test]
    fn greedy_is_deterministic_and_shaped() {
        let policy = HierPolicy::<f64>::new(3, 5, 9);
        let video = FeatureSequence::new(
            "v",
            Array2::from_shape_fn((50, 3), |(i, j)| ((i * 7 + j) % 5) as f64 * 0.3 - 0.5),
        )
        .unwrap();
        let a = policy.greedy_scores(&video, 20).unwrap();
        let b = policy.greedy_scores(&video, 20).unwrap();
        assert_eq!(a.len(), 50);
        assert_eq!(a, b);
        assert!(a.iter().all(|&p| p > 0.0 && p < 1.0));
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let policy = HierPolicy::<f64>::new(4, 5, 9);
        let video = FeatureSequence::new("v", Array2::<f64>::ones((5, 3))).unwrap();
        assert!(matches!(
            policy.greedy_scores(&video, 2),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn same_seed_same_init() {
        assert_eq!(
            HierPolicy::<f64>::new(4, 6, 3),
            HierPolicy::<f64>::new(4, 6, 3)
        );
        assert_ne!(
            HierPolicy::<f64>::new(4, 6, 3),
            HierPolicy::<f64>::new(4, 6, 4)
        );
    }

    #[test]
    fn single_precision_inference() {
        let policy = HierPolicy::<f32>::new(2, 3, 0);
        let video = FeatureSequence::new("v", Array2::<f32>::ones((7, 2))).unwrap();
        assert_eq!(policy.greedy_scores(&video, 3).unwrap().len(), 7);
    }
}
