//! Synthetic datasets with linearly recoverable importance.
//!
//! Keyframes come from one Gaussian cluster and every other frame from a
//! second one. Both cluster centers are shared by all videos of a dataset,
//! so a model trained on some videos transfers to the rest. Keyframes are
//! laid out as a few contiguous blocks, which keeps task-level labels
//! informative.
//!
//! Frames are further grouped into scenes: every keyframe block and every
//! background run of roughly `scene_length` frames gets its own offset from
//! its cluster center. Shot boundaries therefore appear throughout the
//! video at similar spacing, and shot length alone says nothing about
//! importance.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};

use super::io::{
    write_annotation_file, write_feature_file, write_manifest, AnnotationFile, ManifestFile,
    ManifestVideo,
};
use super::labels::{derive_keyframes, fraction_count};

/// Longest contiguous run of keyframes.
const MAX_BLOCK: usize = 15;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub videos: usize,
    pub frames: usize,
    pub dim: usize,
    pub subtask_size: usize,
    pub keyframe_fraction: f64,
    pub users: usize,
    /// Per-coordinate standard deviation inside each cluster.
    pub cluster_std: f64,
    /// Distance between the two cluster centers.
    pub center_distance: f64,
    /// Typical number of background frames per scene.
    pub scene_length: usize,
    /// Expected norm of a scene's offset from its cluster center.
    pub scene_spread: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 7,
            videos: 20,
            frames: 200,
            dim: 16,
            subtask_size: 20,
            keyframe_fraction: 0.15,
            users: 5,
            cluster_std: 0.25,
            center_distance: 4.0,
            scene_length: 15,
            scene_spread: 1.5,
        }
    }
}

impl SyntheticConfig {
    fn validate(&self) -> Result<()> {
        let counts = [
            ("videos", self.videos),
            ("frames", self.frames),
            ("dim", self.dim),
            ("subtask_size", self.subtask_size),
            ("users", self.users),
            ("scene_length", self.scene_length),
        ];
        for (name, value) in counts {
            if value == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !(self.keyframe_fraction > 0.0 && self.keyframe_fraction < 1.0) {
            return Err(Error::Config("keyframe_fraction must lie in (0, 1)".into()));
        }
        if self.cluster_std.is_nan()
            || self.cluster_std <= 0.0
            || self.center_distance < 4.0 * self.cluster_std
        {
            return Err(Error::Config(
                "cluster centers must be at least 4 standard deviations apart".into(),
            ));
        }
        if !(self.scene_spread >= 0.0 && self.scene_spread.is_finite()) {
            return Err(Error::Config(
                "scene_spread must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Scene index per frame: each keyframe block is one scene, and background
/// runs are cut into pieces of `scene_length / 2 ..= 3 * scene_length / 2`
/// frames.
fn scene_layout(rng: &mut ChaCha8Rng, mask: &[bool], scene_length: usize) -> Vec<usize> {
    let (lo, hi) = ((scene_length / 2).max(1), (3 * scene_length / 2).max(1));
    let mut scenes = Vec::with_capacity(mask.len());
    let mut scene = 0;
    let mut left = 0;
    for (t, &key) in mask.iter().enumerate() {
        let boundary = t > 0 && key != mask[t - 1];
        if t > 0 && (boundary || (!key && left == 0)) {
            scene += 1;
        }
        if !key && (t == 0 || boundary || left == 0) {
            left = rng.random_range(lo..=hi);
        }
        if !key {
            left -= 1;
        }
        scenes.push(scene);
    }
    scenes
}
/// Two orthogonal centers of equal norm, `center_distance` apart.
fn cluster_centers(rng: &mut ChaCha8Rng, dim: usize, distance: f64) -> (Array1<f64>, Array1<f64>) {
    let gaussian = |rng: &mut ChaCha8Rng| -> Array1<f64> {
        Array1::from_iter((0..dim).map(|_| StandardNormal.sample(rng)))
    };
    let radius = distance / std::f64::consts::SQRT_2;
    let a = gaussian(rng);
    let a = &a / a.dot(&a).sqrt();
    if dim == 1 {
        // Only antipodal centers exist on a line.
        let half = distance / 2.0;
        return (&a * half, &a * -half);
    }
    let mut b = gaussian(rng);
    b = &b - &(&a * a.dot(&b));
    let b = &b / b.dot(&b).sqrt();
    (a * radius, b * radius)
}

/// Keyframe mask with `count` frames split into contiguous blocks of at
/// most `MAX_BLOCK` frames; the block count is random.
fn keyframe_layout(rng: &mut ChaCha8Rng, frames: usize, count: usize) -> Vec<bool> {
    let mut mask = vec![false; frames];
    if count == 0 {
        return mask;
    }
    let fewest = count.div_ceil(MAX_BLOCK);
    let most = fewest.max(count / (MAX_BLOCK / 2));
    let blocks = rng.random_range(fewest..=most).min(frames - count + 1);
    let sizes: Vec<usize> = (0..blocks)
        .map(|b| count / blocks + usize::from(b < count % blocks))
        .collect();
    // Distribute background frames into blocks + 1 gaps, interior gaps >= 1.
    let free = frames - count - (blocks - 1);
    let mut cuts: Vec<usize> = (0..blocks).map(|_| rng.random_range(0..=free)).collect();
    cuts.sort_unstable();
    let mut t = 0;
    for (b, size) in sizes.iter().enumerate() {
        let gap = if b == 0 {
            cuts[0]
        } else {
            cuts[b] - cuts[b - 1] + 1
        };
        t += gap;
        mask[t..t + size].iter_mut().for_each(|m| *m = true);
        t += size;
    }
    mask
}

/// Writes `manifest.json`, `features/*.vsf` and `annotations/*.json` into
/// `out_dir` and returns the manifest path. Output is a pure function of
/// the config.
pub fn generate_synthetic(config: &SyntheticConfig, out_dir: &Path) -> Result<PathBuf> {
    config.validate()?;
    let features_dir = out_dir.join("features");
    let annotations_dir = out_dir.join("annotations");
    for dir in [&features_dir, &annotations_dir] {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (key_center, background_center) =
        cluster_centers(&mut rng, config.dim, config.center_distance);
    let noise = Normal::new(0.0, config.cluster_std).expect("positive std");
    let scene_noise = Normal::new(0.0, config.scene_spread / (config.dim as f64).sqrt())
        .expect("non-negative std");
    let key_count = fraction_count(config.keyframe_fraction, config.frames);

    let mut entries = Vec::with_capacity(config.videos);
    for v in 0..config.videos {
        let id = format!("video_{v:03}");
        let mask = keyframe_layout(&mut rng, config.frames, key_count);
        let scenes = scene_layout(&mut rng, &mask, config.scene_length);
        let offsets =
            Array2::from_shape_simple_fn((scenes[config.frames - 1] + 1, config.dim), || {
                scene_noise.sample(&mut rng)
            });

        let mut features = Array2::<f64>::zeros((config.frames, config.dim));
        for (t, mut row) in features.rows_mut().into_iter().enumerate() {
            let center = if mask[t] {
                &key_center
            } else {
                &background_center
            };
            let center = center + &offsets.row(scenes[t]);
            for (x, c) in row.iter_mut().zip(center.iter()) {
                // stored as f32; round now so loaded values equal generated ones
                *x = (c + noise.sample(&mut rng)) as f32 as f64;
            }
        }

        let per_user_scores: Vec<Vec<f64>> = (0..config.users)
            .map(|_| {
                mask.iter()
                    .map(|&k| {
                        if k {
                            rng.random_range(0.6..1.0)
                        } else {
                            rng.random_range(0.0..0.4)
                        }
                    })
                    .collect()
            })
            .collect();
        let user_summaries = per_user_scores
            .iter()
            .map(|scores| {
                derive_keyframes(scores, config.keyframe_fraction)
                    .map(|m| m.into_iter().map(u8::from).collect())
            })
            .collect::<Result<Vec<Vec<u8>>>>()?;

        let feature_rel = format!("features/{id}.vsf");
        let annotation_rel = format!("annotations/{id}.json");
        write_feature_file(&out_dir.join(&feature_rel), features.view())?;
        write_annotation_file(
            &out_dir.join(&annotation_rel),
            &AnnotationFile {
                per_user_scores,
                user_summaries: Some(user_summaries),
            },
        )?;
        entries.push(ManifestVideo {
            id,
            features: feature_rel,
            annotations: annotation_rel,
        });
    }

    let manifest_path = out_dir.join("manifest.json");
    write_manifest(
        &manifest_path,
        &ManifestFile {
            name: "synthetic".into(),
            feature_dim: config.dim,
            subtask_size: config.subtask_size,
            keyframe_fraction: Some(config.keyframe_fraction),
            f_aggregation: None,
            videos: entries,
        },
    )?;
    Ok(manifest_path)
}
