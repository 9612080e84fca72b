use rand::Rng;

use crate::nn::{bernoulli_log_prob, bernoulli_log_prob_grad_logit};
use crate::rewards::RewardBreakdown;
use crate::scalar::Real;

/// One sampled selection over a whole video.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode<S> {
    pub actions: Vec<bool>,
    /// `sum_t ln(a_t p_t + (1 - a_t)(1 - p_t))`.
    pub log_prob: S,
    /// Frames with `a_t = 1`, ascending.
    pub selected: Vec<usize>,
    pub rewards: Option<RewardBreakdown<S>>,
}

impl<S: Real> Episode<S> {
    pub fn from_actions(scores: &[S], actions: Vec<bool>) -> Self {
        assert_eq!(scores.len(), actions.len(), "one action per frame");
        let log_prob = scores
            .iter()
            .zip(&actions)
            .map(|(&p, &a)| bernoulli_log_prob(p, a))
            .sum();
        let selected = actions
            .iter()
            .enumerate()
            .filter_map(|(t, &a)| a.then_some(t))
            .collect();
        Episode {
            actions,
            log_prob,
            selected,
            rewards: None,
        }
    }

    /// `d log_prob / d logit_t` for every frame.
    pub fn log_prob_grad_logits(&self, scores: &[S]) -> Vec<S> {
        scores
            .iter()
            .zip(&self.actions)
            .map(|(&p, &a)| bernoulli_log_prob_grad_logit(p, a))
            .collect()
    }
}

/// Draws `a_t ~ Bernoulli(p_t)` independently for every frame.
pub fn sample_actions<S: Real, R: Rng>(scores: &[S], rng: &mut R) -> Episode<S> {
    let actions = scores
        .iter()
        .map(|p| rng.random::<f64>() < p.as_f64())
        .collect();
    Episode::from_actions(scores, actions)
}
