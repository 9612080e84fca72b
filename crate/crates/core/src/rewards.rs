//! Episode rewards: diversity, representativeness and the subtask reward.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::Serialize;

use crate::data::SubtaskTiling;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RewardBreakdown<S> {
    pub diversity: S,
    pub representativeness: S,
    /// `(diversity + representativeness) / 2`
    pub dr: S,
    pub sub: S,
    /// `alpha * dr + (1 - alpha) * sub`
    pub total: S,
    pub alpha: S,
}

/// Cosine dissimilarity `1 - <x, y> / (|x| |y|)`, in `[0, 2]`.
pub fn dissimilarity<S: Real>(x: ArrayView1<'_, S>, y: ArrayView1<'_, S>) -> Result<S> {
    let nx = x.dot(&x).sqrt();
    let ny = y.dot(&y).sqrt();
    if nx == S::zero() || ny == S::zero() {
        return Err(Error::Numeric(
            "cosine dissimilarity of a zero vector".into(),
        ));
    }
    Ok(S::one() - x.dot(&y) / (nx * ny))
}

fn euclidean<S: Real>(x: ArrayView1<'_, S>, y: ArrayView1<'_, S>) -> S {
    x.iter()
        .zip(y.iter())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<S>()
        .sqrt()
}

/// Per-video precomputation shared by every episode of that video.
#[derive(Debug, Clone)]
pub struct RewardContext<'a, S> {
    features: ArrayView2<'a, S>,
    unit: Array2<S>,
    degenerate: Vec<bool>,
    /// Pairwise Euclidean distances, kept for videos up to `DISTANCE_CACHE_FRAMES`.
    distances: Option<Array2<S>>,
}

const DISTANCE_CACHE_FRAMES: usize = 4096;

impl<'a, S: Real> RewardContext<'a, S> {
    pub fn new(features: ArrayView2<'a, S>) -> Self {
        let norms: Array1<S> = features.map_axis(Axis(1), |row| row.dot(&row).sqrt());
        let degenerate = norms.iter().map(|&n| n == S::zero()).collect();
        let mut unit = features.to_owned();
        for (mut row, &n) in unit.rows_mut().into_iter().zip(norms.iter()) {
            if n > S::zero() {
                row.mapv_inplace(|v| v / n);
            }
        }
        let t = features.nrows();
        let distances = (t <= DISTANCE_CACHE_FRAMES).then(|| {
            let mut d = Array2::<S>::zeros((t, t));
            for a in 0..t {
                for b in a + 1..t {
                    let v = euclidean(features.row(a), features.row(b));
                    d[[a, b]] = v;
                    d[[b, a]] = v;
                }
            }
            d
        });
        RewardContext {
            features,
            unit,
            degenerate,
            distances,
        }
    }

    pub fn frames(&self) -> usize {
        self.features.nrows()
    }

    fn distance(&self, a: usize, b: usize) -> S {
        match &self.distances {
            Some(d) => d[[a, b]],
            None => euclidean(self.features.row(a), self.features.row(b)),
        }
    }

    /// Mean pairwise cosine dissimilarity within the selection; zero for
    /// fewer than two frames.
    pub fn diversity(&self, selected: &[usize]) -> Result<S> {
        let k = selected.len();
        if k < 2 {
            return Ok(S::zero());
        }
        if let Some(&t) = selected.iter().find(|&&t| self.degenerate[t]) {
            return Err(Error::Numeric(format!(
                "frame {t} has a zero feature vector"
            )));
        }
        // sum_{t != t'} <u_t, u_t'> = |sum_t u_t|^2 - k for unit vectors
        let mut sum = Array1::<S>::zeros(self.unit.ncols());
        for &t in selected {
            sum += &self.unit.row(t);
        }
        let kf = S::lit(k as f64);
        let pairs = kf * (kf - S::one());
        let cross = sum.dot(&sum) - kf;
        Ok(S::one() - cross / pairs)
    }

    /// `exp(-mean_t min_{t' in Y} |x_t - x_t'|)` over all `T` frames. An
    /// empty selection scores `exp(-max pairwise distance)`.
    pub fn representativeness(&self, selected: &[usize]) -> S {
        let t_total = self.frames();
        let mean_min = if selected.is_empty() {
            let mut worst = S::zero();
            for a in 0..t_total {
                for b in a + 1..t_total {
                    worst = worst.max(self.distance(a, b));
                }
            }
            worst
        } else {
            let mut total = S::zero();
            for t in 0..t_total {
                let mut best = S::infinity();
                for &s in selected {
                    best = best.min(self.distance(t, s));
                }
                total += best;
            }
            total / S::lit(t_total as f64)
        };
        (-mean_min).exp()
    }
}

pub fn diversity_reward<S: Real>(features: ArrayView2<'_, S>, selected: &[usize]) -> Result<S> {
    RewardContext::new(features).diversity(selected)
}

pub fn representativeness_reward<S: Real>(features: ArrayView2<'_, S>, selected: &[usize]) -> S {
    RewardContext::new(features).representativeness(selected)
}

/// Mean Worker score of each subtask, using the true subtask length.
pub fn subtask_means<S: Real>(scores: &[S], tiling: &SubtaskTiling) -> Vec<S> {
    tiling
        .iter()
        .map(|v| {
            let len = S::lit(v.len() as f64);
            scores[v.range].iter().copied().sum::<S>() / len
        })
        .collect()
}

/// `exp(-(1/N) sum_i |mean_i - prediction_i|)`.
pub fn sub_reward<S: Real>(subtask_means: &[S], predictions: &[S]) -> Result<S> {
    if subtask_means.len() != predictions.len() || predictions.is_empty() {
        return Err(Error::Shape(format!(
            "{} subtask means for {} manager predictions",
            subtask_means.len(),
            predictions.len()
        )));
    }
    let gap: S = subtask_means
        .iter()
        .zip(predictions)
        .map(|(&m, &y)| (m - y).abs())
        .sum();
    Ok((-gap / S::lit(predictions.len() as f64)).exp())
}

/// `R_sub` together with `d R_sub / d score_t` for every frame. The
/// absolute value has derivative 0 at a zero gap.
pub fn sub_reward_grad<S: Real>(
    scores: &[S],
    tiling: &SubtaskTiling,
    predictions: &[S],
) -> Result<(S, Vec<S>)> {
    let means = subtask_means(scores, tiling);
    let sub = sub_reward(&means, predictions)?;
    let scale = sub / S::lit(predictions.len() as f64);
    let mut grad = vec![S::zero(); scores.len()];
    for view in tiling.iter() {
        let gap = means[view.index] - predictions[view.index];
        let sign = if gap > S::zero() {
            S::one()
        } else if gap < S::zero() {
            -S::one()
        } else {
            S::zero()
        };
        let g = -scale * sign / S::lit(view.len() as f64);
        grad[view.range].iter_mut().for_each(|d| *d = g);
    }
    Ok((sub, grad))
}

pub fn combine<S: Real>(dr: S, sub: S, alpha: S) -> Result<S> {
    if !(alpha >= S::zero() && alpha <= S::one()) {
        return Err(Error::Config(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    Ok(alpha * dr + (S::one() - alpha) * sub)
}

/// All reward terms for one selection. `sub` depends only on the scores
/// and Manager predictions, so callers may compute it once per video.
pub fn episode_rewards<S: Real>(
    context: &RewardContext<'_, S>,
    selected: &[usize],
    sub: S,
    alpha: S,
) -> Result<RewardBreakdown<S>> {
    let diversity = context.diversity(selected)?;
    let representativeness = context.representativeness(selected);
    let half = S::lit(0.5);
    let dr = half * diversity + half * representativeness;
    let total = combine(dr, sub, alpha)?;
    Ok(RewardBreakdown {
        diversity,
        representativeness,
        dr,
        sub,
        total,
        alpha,
    })
}
