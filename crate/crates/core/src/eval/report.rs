use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ScoreAggregation, Video};
use crate::error::{Error, Result};
use crate::policy::{read_checkpoint, HierPolicy};
use crate::scalar::Real;
use crate::seeding::{stream_rng, Stream};
use crate::segment::{KtsConfig, ShotPartition};
use crate::summary::{make_summary, DEFAULT_BUDGET};
use crate::train::{checkpoint_path, read_fold_plan, FoldPlan};

use super::metrics::{f_score_multi, kendall_tau, spearman_rho};

pub const SETTING: &str = "canonical";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricSet {
    pub f: bool,
    pub tau: bool,
    pub rho: bool,
}

impl MetricSet {
    pub const ALL: MetricSet = MetricSet {
        f: true,
        tau: true,
        rho: true,
    };
}

impl Default for MetricSet {
    fn default() -> Self {
        MetricSet::ALL
    }
}

impl FromStr for MetricSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let none = MetricSet {
            f: false,
            tau: false,
            rho: false,
        };
        match s {
            "f" | "F" => Ok(MetricSet { f: true, ..none }),
            "tau" => Ok(MetricSet { tau: true, ..none }),
            "rho" => Ok(MetricSet { rho: true, ..none }),
            "all" => Ok(MetricSet::ALL),
            other => Err(Error::Config(format!(
                "unknown metric `{other}`; expected f, tau, rho or all"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub budget: f64,
    pub kts: KtsConfig,
    pub metrics: MetricSet,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            budget: DEFAULT_BUDGET,
            kts: KtsConfig::default(),
            metrics: MetricSet::ALL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoMetrics {
    pub video_id: String,
    #[serde(rename = "F", default, skip_serializing_if = "Option::is_none")]
    pub f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    #[serde(rename = "mean_F", default, skip_serializing_if = "Option::is_none")]
    pub mean_f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_rho: Option<f64>,
    pub videos: Vec<VideoMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub setting: String,
    pub per_fold: Vec<FoldReport>,
    /// Mean of the fold means.
    #[serde(rename = "mean_F", default, skip_serializing_if = "Option::is_none")]
    pub mean_f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_rho: Option<f64>,
    pub labels_per_video: f64,
}

/// Metrics for one video given its frame scores and shot partition.
pub fn evaluate_video<S: Real>(
    video: &Video<S>,
    scores: &[S],
    partition: &ShotPartition,
    options: &EvalOptions,
    aggregation: ScoreAggregation,
) -> Result<VideoMetrics> {
    let wanted = options.metrics;
    let f = if wanted.f {
        let summary = make_summary(scores, partition, options.budget)?;
        let users = video.annotations.reference_summaries();
        Some(f_score_multi(&users, &summary.frame_mask, aggregation)?)
    } else {
        None
    };
    let truth = &video.annotations.mean_scores;
    let tau = wanted.tau.then(|| kendall_tau(scores, truth)).transpose()?;
    let rho = wanted
        .rho
        .then(|| spearman_rho(scores, truth))
        .transpose()?;
    Ok(VideoMetrics {
        video_id: video.id().to_owned(),
        f,
        tau,
        rho,
    })
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let values: Option<Vec<f64>> = values.collect();
    values
        .filter(|v| !v.is_empty())
        .map(|v| v.iter().sum::<f64>() / v.len() as f64)
}

/// Evaluates the videos at `indices`, scoring each with `score(i, video)`.
/// Videos are processed in parallel; results keep `indices` order.
pub fn evaluate_fold_with<S, F>(
    dataset: &Dataset<S>,
    fold: usize,
    indices: &[usize],
    options: &EvalOptions,
    score: F,
) -> Result<FoldReport>
where
    S: Real,
    F: Fn(usize, &Video<S>) -> Result<Vec<S>> + Sync,
{
    let aggregation = dataset.manifest.f_aggregation;
    let videos = indices
        .par_iter()
        .map(|&i| {
            let video = &dataset.videos[i];
            let scores = score(i, video)?;
            let partition = options.kts.segment(video.features.view())?;
            evaluate_video(video, &scores, &partition, options, aggregation)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FoldReport {
        fold,
        mean_f: mean_of(videos.iter().map(|v| v.f)),
        mean_tau: mean_of(videos.iter().map(|v| v.tau)),
        mean_rho: mean_of(videos.iter().map(|v| v.rho)),
        videos,
    })
}

fn labels_per_video<S: Real>(dataset: &Dataset<S>, subtask_size: usize) -> f64 {
    if dataset.is_empty() {
        return 0.0;
    }
    let total: usize = dataset
        .videos
        .iter()
        .map(|v| v.len().div_ceil(subtask_size))
        .sum();
    total as f64 / dataset.len() as f64
}

fn assemble<S: Real>(
    dataset: &Dataset<S>,
    per_fold: Vec<FoldReport>,
    subtask_size: usize,
) -> EvalReport {
    EvalReport {
        dataset: dataset.manifest.name.clone(),
        setting: SETTING.into(),
        mean_f: mean_of(per_fold.iter().map(|f| f.mean_f)),
        mean_tau: mean_of(per_fold.iter().map(|f| f.mean_tau)),
        mean_rho: mean_of(per_fold.iter().map(|f| f.mean_rho)),
        per_fold,
        labels_per_video: labels_per_video(dataset, subtask_size),
    }
}

/// Evaluates `policies[k]` on the test videos of fold `k`.
pub fn evaluate_policies<S: Real>(
    dataset: &Dataset<S>,
    plan: &FoldPlan,
    policies: &[HierPolicy<S>],
    subtask_size: usize,
    options: &EvalOptions,
) -> Result<EvalReport> {
    if policies.len() != plan.folds.len() {
        return Err(Error::Config(format!(
            "{} models for {} folds",
            policies.len(),
            plan.folds.len()
        )));
    }
    let per_fold = plan
        .folds
        .iter()
        .zip(policies)
        .map(|(spec, policy)| {
            let indices = FoldPlan::resolve(dataset, &spec.test)?;
            evaluate_fold_with(dataset, spec.fold, &indices, options, |_, video| {
                policy.greedy_scores(&video.features, subtask_size)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(dataset, per_fold, subtask_size))
}

/// Loads the fold plan and every fold checkpoint from `run_dir`, then
/// evaluates. The subtask size comes from the checkpoint's training
/// configuration when recorded there.
pub fn evaluate_run<S: Real>(
    run_dir: &Path,
    dataset: &Dataset<S>,
    options: &EvalOptions,
) -> Result<EvalReport> {
    let plan = read_fold_plan(run_dir)?;
    let mut policies = Vec::with_capacity(plan.folds.len());
    let mut subtask_size = dataset.subtask_size();
    for spec in &plan.folds {
        let path = checkpoint_path(run_dir, spec.fold);
        if !path.exists() {
            return Err(Error::Config(format!(
                "missing checkpoint for fold {}: {}",
                spec.fold,
                path.display()
            )));
        }
        let (policy, header) = read_checkpoint::<S>(&path)?;
        if let Some(n) = header
            .hyperparameters
            .get("subtask_size")
            .and_then(|v| v.as_u64())
        {
            subtask_size = n as usize;
        }
        policies.push(policy);
    }
    evaluate_policies(dataset, &plan, &policies, subtask_size, options)
}

/// The same harness with uniform random frame scores in place of a model.
pub fn evaluate_random_baseline<S: Real>(
    dataset: &Dataset<S>,
    plan: &FoldPlan,
    seed: u64,
    options: &EvalOptions,
) -> Result<EvalReport> {
    let per_fold = plan
        .folds
        .iter()
        .map(|spec| {
            let indices = FoldPlan::resolve(dataset, &spec.test)?;
            evaluate_fold_with(dataset, spec.fold, &indices, options, |i, video| {
                let mut rng = stream_rng(seed, Stream::RandomScores, &[spec.fold as u64, i as u64]);
                Ok((0..video.len())
                    .map(|_| S::lit(rng.random::<f64>()))
                    .collect())
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(dataset, per_fold, dataset.subtask_size()))
}
