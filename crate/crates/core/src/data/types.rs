use std::ops::Range;
use std::path::PathBuf;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::labels::{derive_keyframes, derive_task_labels};

/// Per-video frame features, one row per (already subsampled) frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence<S = f64> {
    video_id: String,
    features: Array2<S>,
}

impl<S: Real> FeatureSequence<S> {
    pub fn new(video_id: impl Into<String>, features: Array2<S>) -> Result<Self> {
        let video_id = video_id.into();
        let (t, d) = features.dim();
        if t == 0 || d == 0 {
            return Err(Error::validation(
                video_id,
                format!("feature matrix must be non-empty, got {t}x{d}"),
            ));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(
                video_id,
                format!("non-finite feature at frame {}, dim {}", pos / d, pos % d),
            ));
        }
        Ok(FeatureSequence { video_id, features })
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    /// Number of frames `T`.
    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.nrows() == 0
    }

    /// Feature dimension `D`.
    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn frame(&self, t: usize) -> ArrayView1<'_, S> {
        self.features.row(t)
    }

    pub fn view(&self) -> ArrayView2<'_, S> {
        self.features.view()
    }

    pub fn tiling(&self, subtask_size: usize) -> SubtaskTiling {
        SubtaskTiling::new(self.len(), subtask_size)
    }
}

/// One subtask: a contiguous frame range. `index` is zero-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubtaskView {
    pub index: usize,
    pub range: Range<usize>,
}

impl SubtaskView {
    pub fn len(&self) -> usize {
        self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }
}

/// Splits `T` frames into `ceil(T / n)` consecutive subtasks of `n` frames;
/// only the last one may be shorter. No padding is ever added.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubtaskTiling {
    frames: usize,
    size: usize,
}

impl SubtaskTiling {
    /// # Panics
    /// If `size` is zero.
    pub fn new(frames: usize, size: usize) -> Self {
        assert!(size >= 1, "subtask size must be positive");
        SubtaskTiling { frames, size }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Number of subtasks `N`.
    pub fn count(&self) -> usize {
        self.frames.div_ceil(self.size)
    }

    pub fn range(&self, index: usize) -> Range<usize> {
        let start = index * self.size;
        start..(start + self.size).min(self.frames)
    }

    /// Subtask containing frame `t`.
    pub fn subtask_of(&self, t: usize) -> usize {
        t / self.size
    }

    pub fn iter(&self) -> impl Iterator<Item = SubtaskView> + '_ {
        (0..self.count()).map(move |index| SubtaskView {
            index,
            range: self.range(index),
        })
    }
}

/// Human annotations for one video plus the labels derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationSet<S = f64> {
    pub per_user_scores: Array2<S>,
    pub mean_scores: Vec<S>,
    pub keyframes: Vec<bool>,
    pub task_labels: Vec<bool>,
    pub user_summaries: Option<Vec<Vec<bool>>>,
}

impl<S: Real> AnnotationSet<S> {
    /// Builds the derived fields (mean scores, keyframes, task labels) from
    /// raw per-user scores shaped `U x T`.
    pub fn derive(
        per_user_scores: Array2<S>,
        user_summaries: Option<Vec<Vec<bool>>>,
        subtask_size: usize,
        keyframe_fraction: f64,
    ) -> Result<Self> {
        if per_user_scores.nrows() == 0 || per_user_scores.ncols() == 0 {
            return Err(Error::Shape(
                "annotation needs at least one user and one frame".into(),
            ));
        }
        let mean_scores = per_user_scores
            .mean_axis(Axis(0))
            .expect("non-empty user axis")
            .to_vec();
        let keyframes = derive_keyframes(&mean_scores, keyframe_fraction)?;
        let task_labels = derive_task_labels(&keyframes, subtask_size);
        Ok(AnnotationSet {
            per_user_scores,
            mean_scores,
            keyframes,
            task_labels,
            user_summaries,
        })
    }

    pub fn len(&self) -> usize {
        self.mean_scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean_scores.is_empty()
    }

    /// Ground-truth summaries for F-score evaluation. Falls back to the
    /// derived keyframes when the dataset ships no user summaries.
    pub fn reference_summaries(&self) -> Vec<Vec<bool>> {
        match &self.user_summaries {
            Some(s) if !s.is_empty() => s.clone(),
            _ => vec![self.keyframes.clone()],
        }
    }
}

/// How per-user F scores combine into one number per video.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreAggregation {
    /// Best match over users (SumMe convention).
    Max,
    /// Average over users (TVSum convention).
    #[default]
    Mean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoEntry {
    pub id: String,
    pub features: PathBuf,
    pub annotations: PathBuf,
}

/// Resolved manifest: file paths are absolute or relative to the process,
/// not to the manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub name: String,
    pub feature_dim: usize,
    pub subtask_size: usize,
    pub keyframe_fraction: f64,
    pub f_aggregation: ScoreAggregation,
    pub videos: Vec<VideoEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Video<S = f64> {
    pub features: FeatureSequence<S>,
    pub annotations: AnnotationSet<S>,
}

impl<S: Real> Video<S> {
    pub fn id(&self) -> &str {
        self.features.video_id()
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<S = f64> {
    pub manifest: DatasetManifest,
    pub videos: Vec<Video<S>>,
}

impl<S: Real> Dataset<S> {
    pub fn feature_dim(&self) -> usize {
        self.manifest.feature_dim
    }

    pub fn subtask_size(&self) -> usize {
        self.manifest.subtask_size
    }

    pub fn len(&self) -> usize {
        self.videos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.videos.is_empty()
    }

    /// Mean number of task-level labels (subtasks) per video.
    pub fn labels_per_video(&self) -> f64 {
        if self.videos.is_empty() {
            return 0.0;
        }
        let total: usize = self
            .videos
            .iter()
            .map(|v| v.annotations.task_labels.len())
            .sum();
        total as f64 / self.videos.len() as f64
    }

    /// Appends the videos of `other`, e.g. to augment a training set with
    /// extra datasets. Task labels are re-derived at this dataset's subtask
    /// size.
    pub fn merge(mut self, other: Dataset<S>) -> Result<Self> {
        if other.feature_dim() != self.feature_dim() {
            return Err(Error::Config(format!(
                "cannot merge `{}` (D={}) into `{}` (D={})",
                other.manifest.name,
                other.feature_dim(),
                self.manifest.name,
                self.feature_dim()
            )));
        }
        let n = self.subtask_size();
        for mut video in other.videos {
            video.annotations.task_labels = derive_task_labels(&video.annotations.keyframes, n);
            self.videos.push(video);
        }
        self.manifest.videos.extend(other.manifest.videos);
        self.manifest.name = format!("{}+{}", self.manifest.name, other.manifest.name);
        Ok(self)
    }

    /// Subset by video index, preserving order.
    pub fn select(&self, indices: &[usize]) -> Dataset<S> {
        let videos = indices.iter().map(|&i| self.videos[i].clone()).collect();
        let mut manifest = self.manifest.clone();
        manifest.videos = indices
            .iter()
            .map(|&i| self.manifest.videos[i].clone())
            .collect();
        Dataset { manifest, videos }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn tiling_counts() {
        let t = SubtaskTiling::new(40, 20);
        assert_eq!(t.count(), 2);
        let t = SubtaskTiling::new(50, 20);
        assert_eq!(t.count(), 3);
        assert_eq!(t.range(2), 40..50);
    }

    #[test]
    fn rejects_non_finite_features() {
        let err = FeatureSequence::new("v", array![[1.0, f64::NAN]]).unwrap_err();
        assert!(matches!(err, Error::Validation { .. }));
        assert!(FeatureSequence::<f64>::new("v", Array2::zeros((0, 3))).is_err());
    }

    #[test]
    fn annotation_derivation() {
        let scores = array![[0.0, 1.0, 0.2, 0.0], [0.2, 0.8, 0.0, 0.0]];
        let ann = AnnotationSet::derive(scores, None, 2, 0.25).unwrap();
        assert_eq!(ann.mean_scores, vec![0.1, 0.9, 0.1, 0.0]);
        assert_eq!(ann.keyframes, vec![false, true, false, false]);
        assert_eq!(ann.task_labels, vec![true, false]);
        assert_eq!(ann.reference_summaries(), vec![ann.keyframes.clone()]);
    }

    proptest! {
        #[test]
        fn tiling_covers_frames(frames in 1usize..500, size in 1usize..40) {
            let tiling = SubtaskTiling::new(frames, size);
            let mut next = 0;
            for (i, view) in tiling.iter().enumerate() {
                prop_assert_eq!(view.index, i);
                prop_assert_eq!(view.range.start, next);
                prop_assert!(!view.is_empty());
                if i + 1 < tiling.count() {
                    prop_assert_eq!(view.len(), size);
                }
                for t in view.range.clone() {
                    prop_assert_eq!(tiling.subtask_of(t), i);
                }
                next = view.range.end;
            }
            prop_assert_eq!(next, frames);
        }

        #[test]
        fn labels_zero_outside_keyframes(
            scores in proptest::collection::vec(0.0f64..1.0, 1..120),
            size in 1usize..25,
        ) {
            let p = derive_keyframes(&scores, 0.15).unwrap();
            let y = derive_task_labels(&p, size);
            let tiling = SubtaskTiling::new(scores.len(), size);
            for view in tiling.iter() {
                let any = view.range.clone().any(|t| p[t]);
                prop_assert_eq!(y[view.index], any);
            }
        }
    }
}
