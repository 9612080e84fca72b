use log::warn;
use rayon::prelude::*;

use crate::data::{derive_task_labels, Video};
use crate::error::{Error, Result};
use crate::nn::{Adam, Parameterized};
use crate::policy::{sample_actions, Episode, HierPolicy, ManagerNet};
use crate::rewards::{episode_rewards, sub_reward_grad, RewardBreakdown, RewardContext};
use crate::scalar::Real;
use crate::seeding::{stream_rng, Stream};

use super::baseline::BaselineState;
use super::config::TrainConfig;

/// Mean reward terms over the episodes of one Worker epoch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WorkerStats {
    pub reward: f64,
    pub diversity: f64,
    pub representativeness: f64,
    pub sub: f64,
    /// Videos that contributed an update.
    pub videos: usize,
    pub skipped: usize,
}

/// `d loss / d logit_t` for the surrogate loss `-sum_e w_e log pi(a_e)`.
///
/// Training uses `w_e = (R_e - b) / c`; an exact expectation uses
/// `w_e = P(a_e) (R_e - b)` over every action sequence.
pub fn surrogate_logit_grads<S: Real>(
    scores: &[S],
    episodes: &[Episode<S>],
    weights: &[S],
) -> Vec<S> {
    assert_eq!(episodes.len(), weights.len(), "one weight per episode");
    let mut grads = vec![S::zero(); scores.len()];
    for (ep, &w) in episodes.iter().zip(weights) {
        for (g, d) in grads.iter_mut().zip(ep.log_prob_grad_logits(scores)) {
            *g -= w * d;
        }
    }
    grads
}

/// Adds `-weight * d R_sub / d logit_t` to `grads`, given `d_sub`, the
/// derivative of the subtask reward with respect to each score.
pub fn add_sub_reward_grads<S: Real>(grads: &mut [S], scores: &[S], d_sub: &[S], weight: S) {
    for ((g, &d), &p) in grads.iter_mut().zip(d_sub).zip(scores) {
        *g -= weight * d * p * (S::one() - p);
    }
}

/// One pass of weak-label training over `videos`, one optimizer step per
/// video. Returns the mean loss.
pub fn train_manager_epoch<S: Real>(
    manager: &mut ManagerNet<S>,
    optimizer: &mut Adam<S>,
    videos: &[&Video<S>],
    subtask_size: usize,
) -> Result<S> {
    let mut total = S::zero();
    for video in videos {
        let labels = derive_task_labels(&video.annotations.keyframes, subtask_size);
        let loss = manager.loss_and_backward(&video.features, &labels, subtask_size)?;
        if !loss.is_finite() {
            return Err(Error::Training(format!(
                "non-finite manager loss on video `{}`",
                video.id()
            )));
        }
        optimizer.step(manager.params_mut())?;
        total += loss;
    }
    Ok(total / S::lit(videos.len().max(1) as f64))
}

/// One REINFORCE pass over `videos` with the Manager frozen, one optimizer
/// step per video. With `config.sub_reward_gradient` the step also follows
/// the subtask reward's direct dependence on the scores, which makes it an
/// estimate of the full gradient of the expected reward.
///
/// Episode `e` of the video at position `v` in epoch `epoch` draws from its
/// own random stream, so results do not depend on thread count.
pub fn train_worker_epoch<S: Real>(
    policy: &mut HierPolicy<S>,
    optimizer: &mut Adam<S>,
    videos: &[&Video<S>],
    config: &TrainConfig,
    baseline: &mut BaselineState<S>,
    epoch: usize,
) -> Result<WorkerStats> {
    let n = config.subtask_size;
    let alpha = S::lit(config.alpha);
    let c = config.episodes;
    let mut sums = [0.0f64; 4];
    let mut stats = WorkerStats::default();

    for (v, video) in videos.iter().enumerate() {
        let manager = policy.manager.infer(&video.features, n)?;
        let tape = policy
            .worker
            .forward(&video.features, &manager.subgoals, n)?;
        let scores = tape.scores().to_vec();
        let (sub, d_sub) =
            sub_reward_grad(&scores, &video.features.tiling(n), &manager.predictions)?;
        let context = RewardContext::new(video.features.view());

        let episodes = (0..c)
            .into_par_iter()
            .map(|e| {
                let mut rng = stream_rng(
                    config.seed,
                    Stream::Episodes,
                    &[epoch as u64, v as u64, e as u64],
                );
                let mut ep = sample_actions(&scores, &mut rng);
                ep.rewards = Some(episode_rewards(&context, &ep.selected, sub, alpha)?);
                Ok(ep)
            })
            .collect::<Result<Vec<Episode<S>>>>()?;

        if episodes.iter().all(|ep| ep.selected.is_empty()) {
            warn!(
                "every episode of video `{}` selected nothing; skipping it this epoch",
                video.id()
            );
            stats.skipped += 1;
            continue;
        }

        let rewards: Vec<RewardBreakdown<S>> = episodes
            .iter()
            .map(|ep| ep.rewards.expect("rewards filled above"))
            .collect();
        let inv_c = S::one() / S::lit(c as f64);
        let b = baseline.get(video.id());
        let weights: Vec<S> = rewards.iter().map(|r| (r.total - b) * inv_c).collect();
        let mut grads = surrogate_logit_grads(&scores, &episodes, &weights);
        if config.sub_reward_gradient {
            add_sub_reward_grads(&mut grads, &scores, &d_sub, S::one() - alpha);
        }
        policy.worker.backward(tape, &grads)?;
        optimizer.step(policy.worker.params_mut())?;

        let mean = |f: fn(&RewardBreakdown<S>) -> S| rewards.iter().map(f).sum::<S>() * inv_c;
        let mean_total = mean(|r| r.total);
        baseline.update(video.id(), mean_total);
        sums[0] += mean_total.as_f64();
        sums[1] += mean(|r| r.diversity).as_f64();
        sums[2] += mean(|r| r.representativeness).as_f64();
        sums[3] += mean(|r| r.sub).as_f64();
        stats.videos += 1;
    }

    if stats.videos > 0 {
        let k = stats.videos as f64;
        stats.reward = sums[0] / k;
        stats.diversity = sums[1] / k;
        stats.representativeness = sums[2] / k;
        stats.sub = sums[3] / k;
    }
    Ok(stats)
}
