use crate::error::{Error, Result};
use crate::scalar::Real;

use super::types::SubtaskTiling;

/// Number of items covered by `fraction` of `total`, rounded up.
///
/// Products that land within 1e-9 of an integer snap to it, so `0.15 * 200`
/// yields 30 rather than 31.
pub fn fraction_count(fraction: f64, total: usize) -> usize {
    let x = fraction * total as f64;
    let nearest = x.round();
    let count = if (x - nearest).abs() < 1e-9 {
        nearest
    } else {
        x.ceil()
    };
    (count.max(0.0) as usize).min(total)
}

/// Marks the `ceil(budget_fraction * T)` highest scoring frames as keyframes.
///
/// Ties are broken toward the lower frame index.
pub fn derive_keyframes<S: Real>(mean_scores: &[S], budget_fraction: f64) -> Result<Vec<bool>> {
    if !(budget_fraction > 0.0 && budget_fraction < 1.0) {
        return Err(Error::Config(format!(
            "keyframe fraction must lie in (0, 1), got {budget_fraction}"
        )));
    }
    if mean_scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numeric("non-finite importance score".into()));
    }
    let k = fraction_count(budget_fraction, mean_scores.len());
    let mut order: Vec<usize> = (0..mean_scores.len()).collect();
    // stable sort keeps index order among equal scores
    order.sort_by(|&a, &b| mean_scores[b].partial_cmp(&mean_scores[a]).unwrap());
    let mut keyframes = vec![false; mean_scores.len()];
    for &t in &order[..k] {
        keyframes[t] = true;
    }
    Ok(keyframes)
}

/// Weak task-level labels: a subtask is positive iff it holds a keyframe.
pub fn derive_task_labels(keyframes: &[bool], subtask_size: usize) -> Vec<bool> {
    SubtaskTiling::new(keyframes.len(), subtask_size)
        .iter()
        .map(|view| keyframes[view.range].iter().any(|&k| k))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn top_one_by_score() {
        let p = derive_keyframes(&[0.1, 0.9, 0.5, 0.2], 0.25).unwrap();
        assert_eq!(p, vec![false, true, false, false]);
    }

    #[test]
    fn ties_go_to_lower_index() {
        let p = derive_keyframes(&[0.3; 4], 0.5).unwrap();
        assert_eq!(p, vec![true, true, false, false]);
    }

    #[test]
    fn random_count_matches_sort_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let scores: Vec<f64> = (0..100).map(|_| rng.random()).collect();
        let p = derive_keyframes(&scores, 0.15).unwrap();
        assert_eq!(p.iter().filter(|&&k| k).count(), 15);

        let mut sorted = scores.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let threshold = sorted[14];
        for (t, &s) in scores.iter().enumerate() {
            assert_eq!(p[t], s >= threshold);
        }
    }

    #[test]
    fn rejects_bad_fraction() {
        assert!(derive_keyframes(&[0.1, 0.2], 0.0).is_err());
        assert!(derive_keyframes(&[0.1, 0.2], 1.0).is_err());
        assert!(derive_keyframes(&[0.1, f64::NAN], 0.5).is_err());
    }

    #[test]
    fn fraction_count_snaps() {
        assert_eq!(fraction_count(0.15, 200), 30);
        assert_eq!(fraction_count(0.15, 100), 15);
        assert_eq!(fraction_count(0.15, 10), 2);
        assert_eq!(fraction_count(1.0, 7), 7);
    }

    #[test]
    fn task_labels() {
        assert_eq!(
            derive_task_labels(&[false, false, true, false], 2),
            vec![false, true]
        );
        assert_eq!(derive_task_labels(&[false; 7], 3), vec![false; 3]);
        assert_eq!(
            derive_task_labels(&[true, false, false, false, false], 2),
            vec![true, false, false]
        );
    }
}
