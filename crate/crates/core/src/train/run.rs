//! Cross-validation runs on disk: `folds.json`, then `fold_k.ckpt` and
//! `fold_k.log.jsonl` for every fold.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{write_json_file, Dataset, Video};
use crate::error::{Error, Result};
use crate::policy::{write_checkpoint, HierPolicy};
use crate::scalar::Real;
use crate::seeding::{stream_rng, Stream};

use super::config::TrainConfig;
use super::train;

pub const DEFAULT_FOLDS: usize = 5;
pub const FOLDS_FILE: &str = "folds.json";

pub fn checkpoint_path(run_dir: &Path, fold: usize) -> PathBuf {
    run_dir.join(format!("fold_{fold}.ckpt"))
}

pub fn log_path(run_dir: &Path, fold: usize) -> PathBuf {
    run_dir.join(format!("fold_{fold}.log.jsonl"))
}

/// Shuffled partition of `0..n_videos` into `folds` near-equal test sets,
/// each sorted ascending. Earlier folds take the remainder.
pub fn crossval_split(n_videos: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::Config(format!(
            "cross-validation needs at least 2 folds, got {folds}"
        )));
    }
    if n_videos < folds {
        return Err(Error::Config(format!(
            "{n_videos} videos cannot fill {folds} folds"
        )));
    }
    let mut order: Vec<usize> = (0..n_videos).collect();
    order.shuffle(&mut stream_rng(seed, Stream::Folds, &[]));
    let (base, extra) = (n_videos / folds, n_videos % folds);
    let mut start = 0;
    Ok((0..folds)
        .map(|k| {
            let size = base + usize::from(k < extra);
            let mut fold = order[start..start + size].to_vec();
            start += size;
            fold.sort_unstable();
            fold
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSpec {
    pub fold: usize,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Which videos each fold trains and tests on, by id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub dataset: String,
    pub seed: u64,
    pub folds: Vec<FoldSpec>,
}

impl FoldPlan {
    /// All `folds` rotations of a shuffled split.
    pub fn crossval<S: Real>(dataset: &Dataset<S>, folds: usize, seed: u64) -> Result<Self> {
        let tests = crossval_split(dataset.len(), folds, seed)?;
        let ids: Vec<String> = dataset.videos.iter().map(|v| v.id().to_owned()).collect();
        let folds = tests
            .iter()
            .enumerate()
            .map(|(k, test)| FoldSpec {
                fold: k,
                train: (0..ids.len())
                    .filter(|i| test.binary_search(i).is_err())
                    .map(|i| ids[i].clone())
                    .collect(),
                test: test.iter().map(|&i| ids[i].clone()).collect(),
            })
            .collect();
        Ok(FoldPlan {
            dataset: dataset.manifest.name.clone(),
            seed,
            folds,
        })
    }

    /// Only the first rotation: one train/test split.
    pub fn single<S: Real>(dataset: &Dataset<S>, folds: usize, seed: u64) -> Result<Self> {
        let mut plan = Self::crossval(dataset, folds, seed)?;
        plan.folds.truncate(1);
        Ok(plan)
    }

    /// Dataset positions of `ids`.
    pub fn resolve<S: Real>(dataset: &Dataset<S>, ids: &[String]) -> Result<Vec<usize>> {
        let index: HashMap<&str, usize> = dataset
            .videos
            .iter()
            .enumerate()
            .map(|(i, v)| (v.id(), i))
            .collect();
        ids.iter()
            .map(|id| {
                index.get(id.as_str()).copied().ok_or_else(|| {
                    Error::Config(format!(
                        "video `{id}` from the fold plan is not in dataset `{}`",
                        dataset.manifest.name
                    ))
                })
            })
            .collect()
    }
}

pub fn read_fold_plan(run_dir: &Path) -> Result<FoldPlan> {
    let path = run_dir.join(FOLDS_FILE);
    if !path.exists() {
        return Err(Error::Config(format!("no fold plan at {}", path.display())));
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))
}

fn check_unique_ids<S: Real>(videos: &[&Video<S>]) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for v in videos {
        if !seen.insert(v.id()) {
            return Err(Error::Config(format!("duplicate video id `{}`", v.id())));
        }
    }
    Ok(())
}

/// Trains every fold of `plan` (folds run in parallel) and writes the plan,
/// checkpoints and logs into `run_dir`. `augment` videos join every fold's
/// training set.
pub fn train_run<S: Real>(
    dataset: &Dataset<S>,
    augment: &[Video<S>],
    config: &TrainConfig,
    plan: &FoldPlan,
    run_dir: &Path,
) -> Result<Vec<HierPolicy<S>>> {
    config.validate()?;
    let all: Vec<&Video<S>> = dataset.videos.iter().chain(augment).collect();
    check_unique_ids(&all)?;
    if let Some(v) = augment
        .iter()
        .find(|v| v.features.dim() != dataset.feature_dim())
    {
        return Err(Error::Config(format!(
            "augmenting video `{}` has D={}, dataset has D={}",
            v.id(),
            v.features.dim(),
            dataset.feature_dim()
        )));
    }
    fs::create_dir_all(run_dir).map_err(|e| Error::io(run_dir, e))?;
    write_json_file(&run_dir.join(FOLDS_FILE), plan)?;
    let hyperparameters = serde_json::to_value(config).expect("serializable config");

    plan.folds
        .par_iter()
        .map(|spec| {
            let mut videos: Vec<&Video<S>> = FoldPlan::resolve(dataset, &spec.train)?
                .into_iter()
                .map(|i| &dataset.videos[i])
                .collect();
            videos.extend(augment);
            if videos.is_empty() {
                return Err(Error::Config(format!(
                    "fold {} has no training videos",
                    spec.fold
                )));
            }
            let log_file = log_path(run_dir, spec.fold);
            let mut log =
                BufWriter::new(File::create(&log_file).map_err(|e| Error::io(&log_file, e))?);
            let policy = train(&videos, dataset.feature_dim(), config, |record| {
                let line = serde_json::to_string(record).expect("serializable record");
                writeln!(log, "{line}").map_err(|e| Error::io(&log_file, e))
            })?;
            log.flush().map_err(|e| Error::io(&log_file, e))?;
            write_checkpoint(
                &checkpoint_path(run_dir, spec.fold),
                &policy,
                hyperparameters.clone(),
            )?;
            Ok(policy)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_sizes() {
        for (n, size) in [(25, 5), (50, 10)] {
            let folds = crossval_split(n, 5, 3).unwrap();
            assert!(folds.iter().all(|f| f.len() == size));
        }
        let folds = crossval_split(23, 5, 3).unwrap();
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![5, 5, 5, 4, 4]);
    }

    #[test]
    fn folds_partition_videos() {
        let folds = crossval_split(23, 5, 11).unwrap();
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
    }

    #[test]
    fn deterministic_by_seed() {
        assert_eq!(
            crossval_split(30, 5, 4).unwrap(),
            crossval_split(30, 5, 4).unwrap()
        );
        assert_ne!(
            crossval_split(30, 5, 4).unwrap(),
            crossval_split(30, 5, 5).unwrap()
        );
    }

    #[test]
    fn too_few_videos() {
        assert!(matches!(crossval_split(4, 5, 0), Err(Error::Config(_))));
        assert!(matches!(crossval_split(4, 1, 0), Err(Error::Config(_))));
    }
}
