//! Kernel temporal segmentation: shots from kernel change-point detection.
//!
//! With a linear kernel `K[s,t] = <x_s, x_t>`, the cost of a segment
//! `[a, b)` is its within-segment scatter
//! `sum_t K[t,t] - (1 / (b - a)) * sum_{s,t} K[s,t]`. Dynamic programming
//! gives the minimal total cost `L_m` for every shot count `m`, and the
//! chosen `m` minimizes `L_m + w * m * (ln(T / m) + 1)`.

use std::fs;
use std::ops::Range;
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Shots tiling `[0, T)` in order. `change_points` holds the zero-based
/// index of the first frame of every shot after the first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotPartition {
    frames: usize,
    change_points: Vec<usize>,
}

impl ShotPartition {
    pub fn from_change_points(frames: usize, change_points: Vec<usize>) -> Result<Self> {
        if frames == 0 {
            return Err(Error::Shape("cannot partition an empty sequence".into()));
        }
        let mut prev = 0;
        for &cp in &change_points {
            if cp <= prev || cp >= frames {
                return Err(Error::Shape(format!(
                    "change points must be strictly increasing inside (0, {frames}); got {change_points:?}"
                )));
            }
            prev = cp;
        }
        Ok(ShotPartition {
            frames,
            change_points,
        })
    }

    /// Single shot covering every frame.
    pub fn whole(frames: usize) -> Self {
        ShotPartition {
            frames,
            change_points: Vec::new(),
        }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn change_points(&self) -> &[usize] {
        &self.change_points
    }

    pub fn shot_count(&self) -> usize {
        self.change_points.len() + 1
    }

    pub fn shots(&self) -> Vec<Range<usize>> {
        let mut bounds = Vec::with_capacity(self.change_points.len() + 2);
        bounds.push(0);
        bounds.extend_from_slice(&self.change_points);
        bounds.push(self.frames);
        bounds.windows(2).map(|w| w[0]..w[1]).collect()
    }

    pub fn shot_lengths(&self) -> Vec<usize> {
        self.shots().iter().map(|r| r.len()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KtsConfig {
    /// Upper bound on shots; `None` means `max(1, T / 10)`.
    pub max_shots: Option<usize>,
    pub penalty_weight: f64,
}

impl Default for KtsConfig {
    fn default() -> Self {
        KtsConfig {
            max_shots: None,
            penalty_weight: 1.0,
        }
    }
}

impl KtsConfig {
    pub fn resolve_max_shots(&self, frames: usize) -> usize {
        self.max_shots.unwrap_or((frames / 10).max(1))
    }

    pub fn segment<S: Real>(&self, features: ArrayView2<'_, S>) -> Result<ShotPartition> {
        kts_segment(
            features,
            self.resolve_max_shots(features.nrows()),
            self.penalty_weight,
        )
    }
}

/// Constant-time segment costs from prefix sums of the Gram matrix.
struct ScatterTable<S> {
    diag: Vec<S>,
    block: Array2<S>,
}

impl<S: Real> ScatterTable<S> {
    fn new(features: ArrayView2<'_, S>) -> Self {
        let t = features.nrows();
        let gram = features.dot(&features.t());
        let mut diag = vec![S::zero(); t + 1];
        for i in 0..t {
            diag[i + 1] = diag[i] + gram[[i, i]];
        }
        // block[a][b] = sum_{s < a, u < b} K[s, u]
        let mut block = Array2::<S>::zeros((t + 1, t + 1));
        for a in 0..t {
            let mut row = S::zero();
            for b in 0..t {
                row += gram[[a, b]];
                block[[a + 1, b + 1]] = block[[a, b + 1]] + row;
            }
        }
        ScatterTable { diag, block }
    }

    fn cost(&self, a: usize, b: usize) -> S {
        let within =
            self.block[[b, b]] - self.block[[a, b]] - self.block[[b, a]] + self.block[[a, a]];
        let len = S::lit((b - a) as f64);
        self.diag[b] - self.diag[a] - within / len
    }
}

struct DpTable<S> {
    /// `cost[m - 1][t]`: best cost of `[0, t)` in exactly `m` segments.
    cost: Vec<Vec<S>>,
    back: Vec<Vec<usize>>,
}

fn solve<S: Real>(features: ArrayView2<'_, S>, max_shots: usize) -> DpTable<S> {
    let t = features.nrows();
    let table = ScatterTable::new(features);
    let inf = S::infinity();
    let mut cost = vec![vec![inf; t + 1]; max_shots];
    let mut back = vec![vec![0usize; t + 1]; max_shots];
    for (end, c) in cost[0].iter_mut().enumerate().skip(1) {
        *c = table.cost(0, end);
    }
    for m in 1..max_shots {
        for end in (m + 1)..=t {
            let mut best = inf;
            let mut arg = m;
            for (split, &prev) in cost[m - 1].iter().enumerate().take(end).skip(m) {
                let c = prev + table.cost(split, end);
                if c < best {
                    best = c;
                    arg = split;
                }
            }
            cost[m][end] = best;
            back[m][end] = arg;
        }
    }
    DpTable { cost, back }
}

fn backtrack<S>(dp: &DpTable<S>, frames: usize, shots: usize) -> Vec<usize> {
    let mut cps = Vec::with_capacity(shots - 1);
    let mut end = frames;
    for m in (1..shots).rev() {
        end = dp.back[m][end];
        cps.push(end);
    }
    cps.reverse();
    cps
}

fn check_input<S: Real>(features: ArrayView2<'_, S>, max_shots: usize) -> Result<usize> {
    if features.nrows() == 0 {
        return Err(Error::Shape("cannot segment an empty sequence".into()));
    }
    if max_shots == 0 {
        return Err(Error::Config("max_shots must be at least 1".into()));
    }
    Ok(max_shots.min(features.nrows()))
}

/// Minimal total scatter `L_m` for `m = 1..=max_shots` (clamped to `T`).
pub fn kts_cost_profile<S: Real>(features: ArrayView2<'_, S>, max_shots: usize) -> Result<Vec<S>> {
    let max_shots = check_input(features, max_shots)?;
    let t = features.nrows();
    let dp = solve(features, max_shots);
    Ok(dp.cost.iter().map(|row| row[t]).collect())
}

/// Best partition into exactly `shots` segments and its cost.
pub fn kts_fixed<S: Real>(features: ArrayView2<'_, S>, shots: usize) -> Result<(ShotPartition, S)> {
    let clamped = check_input(features, shots)?;
    let t = features.nrows();
    let dp = solve(features, clamped);
    let cps = backtrack(&dp, t, clamped);
    Ok((
        ShotPartition::from_change_points(t, cps)?,
        dp.cost[clamped - 1][t],
    ))
}

/// Penalized change-point selection. Ties in the shot count go to fewer
/// shots.
pub fn kts_segment<S: Real>(
    features: ArrayView2<'_, S>,
    max_shots: usize,
    penalty_weight: f64,
) -> Result<ShotPartition> {
    if penalty_weight.is_nan() || penalty_weight < 0.0 {
        return Err(Error::Config(format!(
            "penalty weight must be non-negative, got {penalty_weight}"
        )));
    }
    let max_shots = check_input(features, max_shots)?;
    let t = features.nrows();
    let dp = solve(features, max_shots);
    let weight = S::lit(penalty_weight);
    let frames = S::lit(t as f64);
    let mut best = S::infinity();
    let mut best_m = 1;
    for m in 1..=max_shots {
        let mf = S::lit(m as f64);
        let score = dp.cost[m - 1][t] + weight * mf * ((frames / mf).ln() + S::one());
        if score < best {
            best = score;
            best_m = m;
        }
    }
    ShotPartition::from_change_points(t, backtrack(&dp, t, best_m))
}

/// Mean frame score of every shot.
pub fn shot_scores<S: Real>(partition: &ShotPartition, frame_scores: &[S]) -> Result<Vec<S>> {
    if frame_scores.len() != partition.frames() {
        return Err(Error::Shape(format!(
            "{} frame scores for a {}-frame partition",
            frame_scores.len(),
            partition.frames()
        )));
    }
    Ok(partition
        .shots()
        .into_iter()
        .map(|r| {
            let len = S::lit(r.len() as f64);
            frame_scores[r].iter().copied().sum::<S>() / len
        })
        .collect())
}

/// Cached change points for one video.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionCache {
    pub video_id: String,
    pub change_points: Vec<usize>,
}

impl PartitionCache {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        crate::data::write_json_file(path, self)
    }

    pub fn into_partition(self, frames: usize) -> Result<ShotPartition> {
        ShotPartition::from_change_points(frames, self.change_points)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_features_single_shot() {
        let x = Array2::from_elem((30, 4), 0.7);
        let p = kts_segment(x.view(), 5, 0.5).unwrap();
        assert_eq!(p.shot_count(), 1);
        assert_eq!(p.shots(), vec![0..30]);
    }

    #[test]
    fn monotone_cost_profile() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = Array2::from_shape_fn((40, 3), |_| rng.random_range(-1.0..1.0));
        let costs = kts_cost_profile(x.view(), 8).unwrap();
        for w in costs.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn clamps_max_shots() {
        let x = Array2::from_shape_fn((3, 2), |(i, j)| (i * 3 + j) as f64);
        let costs = kts_cost_profile(x.view(), 10).unwrap();
        assert_eq!(costs.len(), 3);
        assert!(costs[2].abs() < 1e-12);
        assert!(kts_segment(x.view(), 0, 1.0).is_err());
    }

    #[test]
    fn shot_mean_scores() {
        let p = ShotPartition::whole(2);
        assert_eq!(
            shot_scores(&p, &[0.2, 0.4]).unwrap(),
            vec![0.30000000000000004]
        );
        let p = ShotPartition::from_change_points(5, vec![2, 3]).unwrap();
        assert_eq!(shot_scores(&p, &[0.6; 5]).unwrap(), vec![0.6; 3]);
        assert!(shot_scores(&p, &[0.1; 4]).is_err());
    }

    #[test]
    fn shot_scores_match_direct_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let scores: Vec<f64> = (0..37).map(|_| rng.random()).collect();
        let p = ShotPartition::from_change_points(37, vec![5, 6, 20, 31]).unwrap();
        let got = shot_scores(&p, &scores).unwrap();
        let bounds = [0, 5, 6, 20, 31, 37];
        for (k, w) in bounds.windows(2).enumerate() {
            let mut sum = 0.0;
            for s in &scores[w[0]..w[1]] {
                sum += s;
            }
            assert!((got[k] - sum / (w[1] - w[0]) as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn invalid_change_points() {
        assert!(ShotPartition::from_change_points(5, vec![0]).is_err());
        assert!(ShotPartition::from_change_points(5, vec![3, 3]).is_err());
        assert!(ShotPartition::from_change_points(5, vec![5]).is_err());
        let p = ShotPartition::from_change_points(5, vec![1, 4]).unwrap();
        assert_eq!(p.shot_lengths(), vec![1, 3, 1]);
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.json");
        let cache = PartitionCache {
            video_id: "v".into(),
            change_points: vec![4, 9],
        };
        cache.write(&path).unwrap();
        let back = PartitionCache::read(&path).unwrap();
        assert_eq!(back, cache);
        assert_eq!(back.into_partition(12).unwrap().shot_count(), 3);
    }
}
