use std::collections::BTreeMap;

use crate::scalar::Real;

/// Per-video exponential moving average of episode rewards. The raw
/// average starts at 0; `get` divides by `1 - m^k` after `k` updates so the
/// zero start does not drag the baseline down early in training.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineState<S> {
    momentum: S,
    values: BTreeMap<String, (S, i32)>,
}

impl<S: Real> BaselineState<S> {
    pub fn new(momentum: f64) -> Self {
        BaselineState {
            momentum: S::lit(momentum),
            values: BTreeMap::new(),
        }
    }

    pub fn get(&self, video_id: &str) -> S {
        match self.values.get(video_id) {
            Some(&(raw, k)) if k > 0 => raw / (S::one() - self.momentum.powi(k)),
            _ => S::zero(),
        }
    }

    /// `b <- m b + (1 - m) mean_reward`. Non-finite observations are ignored.
    pub fn update(&mut self, video_id: &str, mean_reward: S) {
        if !mean_reward.is_finite() {
            return;
        }
        let m = self.momentum;
        let (raw, k) = self
            .values
            .entry(video_id.to_owned())
            .or_insert((S::zero(), 0));
        *raw = m * *raw + (S::one() - m) * mean_reward;
        *k += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moving_average() {
        let mut b = BaselineState::<f64>::new(0.9);
        assert_eq!(b.get("v"), 0.0);
        b.update("v", 1.0);
        assert!((b.get("v") - 1.0).abs() < 1e-15);
        b.update("v", 0.0);
        // raw 0.09 over 1 - 0.81
        assert!((b.get("v") - 0.09 / 0.19).abs() < 1e-15);
        b.update("v", f64::NAN);
        assert!((b.get("v") - 0.09 / 0.19).abs() < 1e-15);
        assert_eq!(b.get("w"), 0.0);
    }
}
