//! Domain types, on-disk dataset format and ground-truth derivation.

mod io;
mod labels;
mod synthetic;
mod types;

pub(crate) use io::write_json_file;
pub use io::{
    load_dataset, read_annotation_file, read_feature_file, write_annotation_file,
    write_feature_file, write_manifest, AnnotationFile, ManifestFile, ManifestVideo, FEATURE_MAGIC,
};
pub use labels::{derive_keyframes, derive_task_labels, fraction_count};
pub use synthetic::{generate_synthetic, SyntheticConfig};
pub use types::{
    AnnotationSet, Dataset, DatasetManifest, FeatureSequence, ScoreAggregation, SubtaskTiling,
    SubtaskView, Video, VideoEntry,
};

/// Default share of frames treated as ground-truth keyframes.
pub const DEFAULT_KEYFRAME_FRACTION: f64 = 0.15;
