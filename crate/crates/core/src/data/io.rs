//! Manifest, feature and annotation file formats.
//!
//! Feature files are binary: the magic `VSF1`, then `T` and `D` as
//! little-endian `u32`, then `T * D` little-endian `f32` values in row-major
//! order. Annotation and manifest files are JSON.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::types::{
    AnnotationSet, Dataset, DatasetManifest, FeatureSequence, ScoreAggregation, Video, VideoEntry,
};
use super::DEFAULT_KEYFRAME_FRACTION;

pub const FEATURE_MAGIC: &[u8; 4] = b"VSF1";
const HEADER_LEN: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestVideo {
    pub id: String,
    pub features: String,
    pub annotations: String,
}

/// Manifest as stored on disk. Video paths are relative to the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub name: String,
    pub feature_dim: usize,
    pub subtask_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keyframe_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_aggregation: Option<ScoreAggregation>,
    pub videos: Vec<ManifestVideo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationFile {
    pub per_user_scores: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_summaries: Option<Vec<Vec<u8>>>,
}

pub fn write_feature_file<S: Real>(
    path: &Path,
    features: ndarray::ArrayView2<'_, S>,
) -> Result<()> {
    let (t, d) = features.dim();
    let mut buf = Vec::with_capacity(HEADER_LEN + 4 * t * d);
    buf.extend_from_slice(FEATURE_MAGIC);
    buf.extend_from_slice(&(t as u32).to_le_bytes());
    buf.extend_from_slice(&(d as u32).to_le_bytes());
    for v in features.iter() {
        buf.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_feature_file<S: Real>(path: &Path) -> Result<Array2<S>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < HEADER_LEN || &bytes[..4] != FEATURE_MAGIC {
        return Err(Error::format(path, "missing VSF1 header"));
    }
    let t = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let expected = t
        .checked_mul(d)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::format(path, "header dimensions overflow"))?;
    if bytes.len() != expected {
        return Err(Error::format(
            path,
            format!(
                "expected {expected} bytes for {t}x{d} features, found {}",
                bytes.len()
            ),
        ));
    }
    let values: Vec<S> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| S::lit(f32::from_le_bytes(c.try_into().unwrap()) as f64))
        .collect();
    Ok(Array2::from_shape_vec((t, d), values).expect("length checked above"))
}

pub fn read_annotation_file(path: &Path) -> Result<AnnotationFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_annotation_file(path: &Path, annotations: &AnnotationFile) -> Result<()> {
    write_json_file(path, annotations)
}

pub fn write_manifest(path: &Path, manifest: &ManifestFile) -> Result<()> {
    write_json_file(path, manifest)
}

pub(crate) fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ManifestFile =
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    if file.subtask_size == 0 {
        return Err(Error::format(path, "subtask_size must be positive"));
    }
    if file.feature_dim == 0 {
        return Err(Error::format(path, "feature_dim must be positive"));
    }
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let resolve = |rel: &str| -> PathBuf { root.join(rel) };
    Ok(DatasetManifest {
        name: file.name,
        feature_dim: file.feature_dim,
        subtask_size: file.subtask_size,
        keyframe_fraction: file.keyframe_fraction.unwrap_or(DEFAULT_KEYFRAME_FRACTION),
        f_aggregation: file.f_aggregation.unwrap_or_default(),
        videos: file
            .videos
            .into_iter()
            .map(|v| VideoEntry {
                features: resolve(&v.features),
                annotations: resolve(&v.annotations),
                id: v.id,
            })
            .collect(),
    })
}

fn load_video<S: Real>(entry: &VideoEntry, manifest: &DatasetManifest) -> Result<Video<S>> {
    let matrix = read_feature_file::<S>(&entry.features)?;
    let features = FeatureSequence::new(entry.id.clone(), matrix)?;
    if features.dim() != manifest.feature_dim {
        return Err(Error::validation(
            &entry.id,
            format!(
                "feature dimension {} differs from manifest feature_dim {}",
                features.dim(),
                manifest.feature_dim
            ),
        ));
    }

    let file = read_annotation_file(&entry.annotations)?;
    let t = features.len();
    let users = file.per_user_scores.len();
    if users == 0 {
        return Err(Error::validation(&entry.id, "no per-user scores"));
    }
    for (u, row) in file.per_user_scores.iter().enumerate() {
        if row.len() != t {
            return Err(Error::validation(
                &entry.id,
                format!(
                    "user {u} has {} scores but the video has {t} frames",
                    row.len()
                ),
            ));
        }
        if row.iter().any(|s| !s.is_finite()) {
            return Err(Error::validation(
                &entry.id,
                format!("user {u} has a non-finite score"),
            ));
        }
    }
    let scores = Array2::from_shape_fn((users, t), |(u, i)| S::lit(file.per_user_scores[u][i]));

    let user_summaries = match file.user_summaries {
        None => None,
        Some(rows) => {
            let mut out = Vec::with_capacity(rows.len());
            for (u, row) in rows.into_iter().enumerate() {
                if row.len() != t {
                    return Err(Error::validation(
                        &entry.id,
                        format!("user summary {u} has {} entries, expected {t}", row.len()),
                    ));
                }
                if row.iter().any(|&b| b > 1) {
                    return Err(Error::validation(
                        &entry.id,
                        format!("user summary {u} is not binary"),
                    ));
                }
                out.push(row.into_iter().map(|b| b == 1).collect());
            }
            Some(out)
        }
    };

    let annotations = AnnotationSet::derive(
        scores,
        user_summaries,
        manifest.subtask_size,
        manifest.keyframe_fraction,
    )
    .map_err(|e| Error::validation(&entry.id, e.to_string()))?;
    Ok(Video {
        features,
        annotations,
    })
}

/// Reads a manifest and every video it references, validating shapes.
pub fn load_dataset<S: Real>(manifest_path: &Path) -> Result<Dataset<S>> {
    let manifest = read_manifest(manifest_path)?;
    let videos = manifest
        .videos
        .par_iter()
        .map(|entry| load_video(entry, &manifest))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { manifest, videos })
}
