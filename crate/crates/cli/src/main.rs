//! Command-line entry point: synthetic data, training, summarization and
//! evaluation.

use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use hiersum::data::{
    generate_synthetic, load_dataset, read_feature_file, Dataset, FeatureSequence, SyntheticConfig,
    Video,
};
use hiersum::eval::{evaluate_run, EvalOptions, MetricSet};
use hiersum::policy::read_checkpoint;
use hiersum::segment::{KtsConfig, PartitionCache};
use hiersum::summary::make_summary;
use hiersum::train::{train_run, FoldPlan, TrainConfig};

type CliResult<T = ()> = Result<T, Box<dyn Error>>;

/// Name of the flag echo written into every run directory.
const RUN_LOG: &str = "run.json";

#[derive(Parser)]
#[command(
    name = "hiersum",
    version,
    about = "Weakly supervised video summarization with a hierarchical Manager/Worker policy"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset: manifest, feature files and annotations
    GenSynthetic(GenSyntheticArgs),
    /// Train one policy per cross-validation fold
    Train(TrainArgs),
    /// Summarize one video with a trained checkpoint
    Summarize(SummarizeArgs),
    /// Evaluate every fold checkpoint of a run on its held-out videos
    Evaluate(EvaluateArgs),
}

#[derive(Args, Serialize)]
struct GenSyntheticArgs {
    #[arg(long, default_value_t = 20, value_parser = positive)]
    videos: usize,
    #[arg(long, default_value_t = 200, value_parser = positive)]
    frames: usize,
    #[arg(long, default_value_t = 16, value_parser = positive)]
    dim: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 20, value_parser = positive)]
    subtask_size: usize,
    #[arg(long, default_value_t = 0.15, value_parser = unit_interval)]
    keyframe_fraction: f64,
    #[arg(long, default_value_t = 5, value_parser = positive)]
    users: usize,
    #[arg(long, default_value_t = 0.25)]
    cluster_std: f64,
    #[arg(long, default_value_t = 4.0)]
    center_distance: f64,
    /// Typical number of background frames per scene
    #[arg(long, default_value_t = 15, value_parser = positive)]
    scene_length: usize,
    #[arg(long, default_value_t = 1.5)]
    scene_spread: f64,
    #[arg(long, default_value = "data")]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct TrainArgs {
    /// Dataset manifest
    #[arg(long)]
    dataset: PathBuf,
    /// Extra manifests whose videos join every fold's training set
    #[arg(long)]
    augment: Vec<PathBuf>,
    #[arg(long, default_value_t = 20, value_parser = positive)]
    subtask_size: usize,
    /// Episodes sampled per video and epoch
    #[arg(long, default_value_t = 10, value_parser = positive)]
    episodes: usize,
    /// Weight of the diversity/representativeness reward against the subtask reward
    #[arg(long, default_value_t = 0.5, value_parser = unit_interval)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 60)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 0.0)]
    weight_decay: f64,
    #[arg(long, default_value_t = 0.9)]
    baseline_momentum: f64,
    #[arg(long, default_value_t = 64, value_parser = positive)]
    hidden: usize,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Train only the first fold's split
    #[arg(long)]
    no_cv: bool,
    /// Drop the pathwise gradient of the subtask reward
    #[arg(long)]
    no_sub_reward_gradient: bool,
    #[arg(long, default_value_t = 1, value_parser = positive)]
    jobs: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct KtsArgs {
    /// Upper bound on shots per video (default: frames / 10)
    #[arg(long)]
    max_shots: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    kts_penalty: f64,
}

impl KtsArgs {
    fn config(&self) -> KtsConfig {
        KtsConfig {
            max_shots: self.max_shots,
            penalty_weight: self.kts_penalty,
        }
    }
}

#[derive(Args, Serialize)]
struct SummarizeArgs {
    /// Checkpoint file
    #[arg(long)]
    model: PathBuf,
    /// Feature file of the video
    #[arg(long)]
    video: PathBuf,
    /// Video id written into the summary (default: feature file stem)
    #[arg(long)]
    video_id: Option<String>,
    #[arg(long, default_value_t = 0.15, value_parser = budget)]
    budget: f64,
    /// Subtask size (default: the one the checkpoint was trained with)
    #[arg(long, value_parser = positive)]
    subtask_size: Option<usize>,
    #[command(flatten)]
    kts: KtsArgs,
    /// Shot boundary cache; read if present, written otherwise
    #[arg(long)]
    partition: Option<PathBuf>,
    /// Summary output (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the raw frame scores here
    #[arg(long)]
    scores_out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct EvaluateArgs {
    /// Run directory written by `train`
    #[arg(long)]
    run: PathBuf,
    /// Dataset manifest the run was trained on
    #[arg(long)]
    dataset: PathBuf,
    /// f, tau, rho or all
    #[arg(long, default_value = "all", value_parser = metric)]
    metric: String,
    #[arg(long, default_value_t = 0.15, value_parser = budget)]
    budget: f64,
    #[command(flatten)]
    kts: KtsArgs,
    #[arg(long, default_value_t = 1, value_parser = positive)]
    jobs: usize,
    /// Report output (default: <run>/report.json)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .parse()
        .map_err(|e: std::num::ParseFloatError| e.to_string())?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("must lie in [0, 1], got {v}"))
    }
}

fn budget(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .parse()
        .map_err(|e: std::num::ParseFloatError| e.to_string())?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("must lie in (0, 1], got {v}"))
    }
}

fn metric(s: &str) -> Result<String, String> {
    s.parse::<MetricSet>()
        .map(|_| s.to_owned())
        .map_err(|e| e.to_string())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| format!("{}: {e}", parent.display()))?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(())
}

fn set_jobs(jobs: usize) -> CliResult {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build_global()?;
    Ok(())
}

#[derive(Serialize)]
struct RunLog<'a, A> {
    command: &'a str,
    version: &'a str,
    flags: &'a A,
}

fn log_flags<A: Serialize>(command: &str, flags: &A) -> CliResult {
    log::info!("{command} {}", serde_json::to_string(flags)?);
    Ok(())
}

/// Writes the flags into the run directory so the run can be repeated.
fn echo_flags<A: Serialize>(dir: &Path, command: &str, flags: &A) -> CliResult {
    let log = RunLog {
        command,
        version: env!("CARGO_PKG_VERSION"),
        flags,
    };
    write_json(&dir.join(RUN_LOG), &log)
}

fn cmd_gen_synthetic(args: &GenSyntheticArgs) -> CliResult {
    let config = SyntheticConfig {
        seed: args.seed,
        videos: args.videos,
        frames: args.frames,
        dim: args.dim,
        subtask_size: args.subtask_size,
        keyframe_fraction: args.keyframe_fraction,
        users: args.users,
        cluster_std: args.cluster_std,
        center_distance: args.center_distance,
        scene_length: args.scene_length,
        scene_spread: args.scene_spread,
    };
    let manifest = generate_synthetic(&config, &args.out)?;
    println!("{}", manifest.display());
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> CliResult {
    set_jobs(args.jobs)?;
    let config = TrainConfig {
        epochs: args.epochs,
        episodes: args.episodes,
        alpha: args.alpha,
        subtask_size: args.subtask_size,
        learning_rate: args.lr,
        weight_decay: args.weight_decay,
        baseline_momentum: args.baseline_momentum,
        hidden: args.hidden,
        seed: args.seed,
        sub_reward_gradient: !args.no_sub_reward_gradient,
    };
    config.validate()?;
    let dataset: Dataset = load_dataset(&args.dataset)?;
    let mut augment: Vec<Video> = Vec::new();
    for path in &args.augment {
        augment.extend(load_dataset::<f64>(path)?.videos);
    }
    let plan = if args.no_cv {
        FoldPlan::single(&dataset, args.folds, args.seed)?
    } else {
        FoldPlan::crossval(&dataset, args.folds, args.seed)?
    };
    echo_flags(&args.out, "train", args)?;
    log::info!(
        "training {} fold(s) on {} videos",
        plan.folds.len(),
        dataset.len()
    );
    train_run(&dataset, &augment, &config, &plan, &args.out)?;
    println!("{}", args.out.display());
    Ok(())
}

#[derive(Serialize)]
struct ScoreFile<'a> {
    video_id: &'a str,
    scores: &'a [f64],
}

fn cmd_summarize(args: &SummarizeArgs) -> CliResult {
    let (policy, header) = read_checkpoint::<f64>(&args.model)?;
    let video_id = match &args.video_id {
        Some(id) => id.clone(),
        None => args
            .video
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .ok_or_else(|| format!("cannot derive a video id from {}", args.video.display()))?,
    };
    let video = FeatureSequence::new(video_id.as_str(), read_feature_file(&args.video)?)?;
    let subtask_size = args
        .subtask_size
        .or_else(|| {
            header
                .hyperparameters
                .get("subtask_size")
                .and_then(|v| v.as_u64())
                .map(|n| n as usize)
        })
        .unwrap_or(TrainConfig::default().subtask_size);
    let scores = policy.greedy_scores(&video, subtask_size)?;

    let partition = match &args.partition {
        Some(path) if path.exists() => {
            let cache = PartitionCache::read(path)?;
            if cache.video_id != video_id {
                log::warn!(
                    "partition cache {} is for `{}`, not `{video_id}`",
                    path.display(),
                    cache.video_id
                );
            }
            cache.into_partition(video.len())?
        }
        cached => {
            let partition = args.kts.config().segment(video.view())?;
            if let Some(path) = cached {
                PartitionCache {
                    video_id: video_id.clone(),
                    change_points: partition.change_points().to_vec(),
                }
                .write(path)?;
            }
            partition
        }
    };

    let summary = make_summary(&scores, &partition, args.budget)?.to_file(&video_id);
    if let Some(path) = &args.scores_out {
        write_json(
            path,
            &ScoreFile {
                video_id: &video_id,
                scores: &scores,
            },
        )?;
    }
    match &args.out {
        Some(path) => write_json(path, &summary)?,
        None => println!("{}", serde_json::to_string_pretty(&summary)?),
    }
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs) -> CliResult {
    set_jobs(args.jobs)?;
    let dataset: Dataset = load_dataset(&args.dataset)?;
    let options = EvalOptions {
        budget: args.budget,
        kts: args.kts.config(),
        metrics: args.metric.parse()?,
    };
    let report = evaluate_run(&args.run, &dataset, &options)?;
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| args.run.join("report.json"));
    write_json(&out, &report)?;
    println!("{}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HIERSUM_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::GenSynthetic(args) => {
            log_flags("gen-synthetic", args).and_then(|_| cmd_gen_synthetic(args))
        }
        Command::Train(args) => log_flags("train", args).and_then(|_| cmd_train(args)),
        Command::Summarize(args) => log_flags("summarize", args).and_then(|_| cmd_summarize(args)),
        Command::Evaluate(args) => log_flags("evaluate", args).and_then(|_| cmd_evaluate(args)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
