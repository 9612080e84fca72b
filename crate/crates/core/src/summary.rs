//! Keyshot selection: shot scores, a 0/1 knapsack under the length budget,
//! and the resulting frame mask.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::segment::{shot_scores, ShotPartition};

pub const DEFAULT_BUDGET: f64 = 0.15;

/// Values closer than this (scaled by the optimum) count as ties.
const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub selected_shots: Vec<usize>,
    pub frame_mask: Vec<bool>,
    pub budget_fraction: f64,
    pub selected_frames: usize,
}

impl Summary {
    pub fn to_file(&self, video_id: &str) -> SummaryFile {
        SummaryFile {
            video_id: video_id.to_owned(),
            budget_fraction: self.budget_fraction,
            selected_shots: self.selected_shots.clone(),
            frame_mask: self.frame_mask.iter().map(|&b| u8::from(b)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub video_id: String,
    pub budget_fraction: f64,
    pub selected_shots: Vec<usize>,
    pub frame_mask: Vec<u8>,
}

/// `floor(budget_fraction * T)`, snapping products within 1e-9 of an
/// integer.
pub fn budget_capacity(budget_fraction: f64, frames: usize) -> usize {
    let x = budget_fraction * frames as f64;
    let nearest = x.round();
    let cap = if (x - nearest).abs() < 1e-9 {
        nearest
    } else {
        x.floor()
    };
    (cap.max(0.0) as usize).min(frames)
}

/// Exact 0/1 knapsack. Among optimal sets, returns the lexicographically
/// smallest ascending index list (a proper prefix counts as smaller).
pub fn knapsack_select<S: Real>(
    values: &[S],
    lengths: &[usize],
    capacity: usize,
) -> Result<Vec<usize>> {
    if values.len() != lengths.len() {
        return Err(Error::Shape(format!(
            "{} shot values for {} shot lengths",
            values.len(),
            lengths.len()
        )));
    }
    if lengths.contains(&0) {
        return Err(Error::Shape("shot lengths must be positive".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite shot value".into()));
    }
    let n = values.len();
    // best[i][c]: optimum over items i.. with capacity c
    let mut best = vec![vec![S::zero(); capacity + 1]; n + 1];
    for i in (0..n).rev() {
        for c in 0..=capacity {
            let skip = best[i + 1][c];
            best[i][c] = if lengths[i] <= c {
                skip.max(values[i] + best[i + 1][c - lengths[i]])
            } else {
                skip
            };
        }
    }

    let target = best[0][capacity];
    let tol = S::lit(TIE_TOLERANCE) * target.abs().max(S::one());
    let mut chosen = Vec::new();
    let mut acc = S::zero();
    let mut c = capacity;
    for i in 0..n {
        if acc >= target - tol {
            break;
        }
        if lengths[i] <= c && acc + values[i] + best[i + 1][c - lengths[i]] >= target - tol {
            chosen.push(i);
            acc += values[i];
            c -= lengths[i];
        }
    }
    Ok(chosen)
}

/// Shot scores, knapsack selection, frame mask.
pub fn make_summary<S: Real>(
    frame_scores: &[S],
    partition: &ShotPartition,
    budget_fraction: f64,
) -> Result<Summary> {
    if !(budget_fraction > 0.0 && budget_fraction <= 1.0) {
        return Err(Error::Config(format!(
            "budget fraction must lie in (0, 1], got {budget_fraction}"
        )));
    }
    let values = shot_scores(partition, frame_scores)?;
    let shots = partition.shots();
    let lengths: Vec<usize> = shots.iter().map(|r| r.len()).collect();
    let capacity = budget_capacity(budget_fraction, partition.frames());
    let selected_shots = knapsack_select(&values, &lengths, capacity)?;
    let mut frame_mask = vec![false; partition.frames()];
    for &s in &selected_shots {
        frame_mask[shots[s].clone()]
            .iter_mut()
            .for_each(|m| *m = true);
    }
    let selected_frames = selected_shots.iter().map(|&s| lengths[s]).sum();
    Ok(Summary {
        selected_shots,
        frame_mask,
        budget_fraction,
        selected_frames,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn everything_fits() {
        assert_eq!(
            knapsack_select(&[0.2, 0.5, 0.1], &[1, 2, 3], 6).unwrap(),
            vec![0, 1, 2]
        );
    }

    #[test]
    fn tie_goes_to_smallest_index_set() {
        // {0} and {1, 2} both reach 0.9 with length 5.
        assert_eq!(
            knapsack_select(&[0.9, 0.8, 0.1], &[5, 3, 2], 5).unwrap(),
            vec![0]
        );
    }

    #[test]
    fn zero_capacity_and_errors() {
        assert!(knapsack_select(&[0.5], &[1], 0).unwrap().is_empty());
        assert!(knapsack_select(&[0.5], &[0], 3).is_err());
        assert!(knapsack_select(&[0.5, 0.1], &[1], 3).is_err());
    }

    #[test]
    fn full_budget_selects_all_frames() {
        let p = ShotPartition::from_change_points(10, vec![3, 7]).unwrap();
        let s = make_summary(&[0.4; 10], &p, 1.0).unwrap();
        assert!(s.frame_mask.iter().all(|&m| m));
        assert_eq!(s.selected_frames, 10);
    }

    #[test]
    fn top_shot_fitting_budget_exactly() {
        let p = ShotPartition::from_change_points(20, vec![3, 6, 10]).unwrap();
        let mut scores = vec![0.1; 20];
        scores[3..6].iter_mut().for_each(|s| *s = 0.9);
        let s = make_summary(&scores, &p, 0.15).unwrap();
        assert_eq!(s.selected_shots, vec![1]);
        assert_eq!(s.selected_frames, 3);
        assert!(make_summary(&scores, &p, 0.0).is_err());
    }

    #[test]
    fn capacity_snaps() {
        assert_eq!(budget_capacity(0.15, 200), 30);
        assert_eq!(budget_capacity(0.15, 100), 15);
        assert_eq!(budget_capacity(0.15, 21), 3);
    }

    proptest! {
        #[test]
        fn budget_respected(
            cps in proptest::collection::btree_set(1usize..60, 0..12),
            seed in proptest::collection::vec(0.0f64..1.0, 60),
            budget in 0.05f64..1.0,
        ) {
            let p = ShotPartition::from_change_points(60, cps.into_iter().collect()).unwrap();
            let s = make_summary(&seed, &p, budget).unwrap();
            prop_assert!(s.selected_frames <= budget_capacity(budget, 60));
            prop_assert_eq!(s.frame_mask.iter().filter(|&&m| m).count(), s.selected_frames);
        }

        #[test]
        fn raising_selected_value_keeps_it(
            values in proptest::collection::vec(0.0f64..1.0, 1..10),
            lengths in proptest::collection::vec(1usize..8, 10),
            capacity in 0usize..30,
            pick in 0usize..10,
            bump in 0.01f64..1.0,
        ) {
            let lengths = &lengths[..values.len()];
            let chosen = knapsack_select(&values, lengths, capacity).unwrap();
            prop_assume!(!chosen.is_empty());
            let target = chosen[pick % chosen.len()];
            let mut raised = values.clone();
            raised[target] += bump;
            let again = knapsack_select(&raised, lengths, capacity).unwrap();
            prop_assert!(again.contains(&target));
        }
    }
}
