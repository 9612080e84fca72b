use std::path::Path;

use hiersum::data::{generate_synthetic, load_dataset, Dataset, SyntheticConfig, Video};
use hiersum::nn::Adam;
use hiersum::policy::{read_checkpoint, HierPolicy};
use hiersum::train::{
    checkpoint_path, train_manager_epoch, train_run, train_worker_epoch, BaselineState, FoldPlan,
    TrainConfig,
};

fn small_dataset(dir: &Path, seed: u64) -> Dataset {
    let config = SyntheticConfig {
        seed,
        videos: 6,
        frames: 60,
        dim: 6,
        subtask_size: 10,
        ..SyntheticConfig::default()
    };
    load_dataset(&generate_synthetic(&config, dir).unwrap()).unwrap()
}

fn small_config() -> TrainConfig {
    TrainConfig {
        epochs: 2,
        episodes: 4,
        subtask_size: 10,
        hidden: 8,
        seed: 3,
        ..TrainConfig::default()
    }
}

fn values(policy: &HierPolicy) -> Vec<(String, Vec<f64>)> {
    policy
        .named_params()
        .map(|(name, p)| (name, p.value.clone()))
        .collect()
}

#[test]
fn reward_equal_to_baseline_leaves_worker_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = small_dataset(dir.path(), 1);
    let videos: Vec<&Video> = dataset.videos.iter().take(1).collect();
    let config = TrainConfig {
        episodes: 1,
        baseline_momentum: 0.0,
        sub_reward_gradient: false,
        ..small_config()
    };
    let policy = HierPolicy::<f64>::new(dataset.feature_dim(), config.hidden, config.seed);

    // a first pass on a copy records this episode's reward as the baseline
    let mut baseline = BaselineState::new(0.0);
    let mut warmup = policy.clone();
    let mut warmup_opt = Adam::new(config.adam(), warmup.worker.store());
    train_worker_epoch(
        &mut warmup,
        &mut warmup_opt,
        &videos,
        &config,
        &mut baseline,
        0,
    )
    .unwrap();

    // replaying the same epoch samples the same episode, so R - b = 0
    let mut replay = policy.clone();
    let mut opt = Adam::new(config.adam(), replay.worker.store());
    train_worker_epoch(&mut replay, &mut opt, &videos, &config, &mut baseline, 0).unwrap();
    assert_eq!(values(&replay), values(&policy));
    assert_ne!(values(&warmup), values(&policy));
}

#[test]
fn phases_update_only_their_own_network() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = small_dataset(dir.path(), 2);
    let videos: Vec<&Video> = dataset.videos.iter().collect();
    let config = small_config();
    let mut policy = HierPolicy::<f64>::new(dataset.feature_dim(), config.hidden, config.seed);
    let initial = policy.clone();

    let mut manager_opt = Adam::new(config.adam(), policy.manager.store());
    train_manager_epoch(&mut policy.manager, &mut manager_opt, &videos, 10).unwrap();
    assert_eq!(policy.worker, initial.worker);
    assert_ne!(policy.manager, initial.manager);

    let after_manager = policy.manager.clone();
    let mut worker_opt = Adam::new(config.adam(), policy.worker.store());
    let mut baseline = BaselineState::new(config.baseline_momentum);
    train_worker_epoch(
        &mut policy,
        &mut worker_opt,
        &videos,
        &config,
        &mut baseline,
        0,
    )
    .unwrap();
    assert_eq!(policy.manager, after_manager);
    assert_ne!(policy.worker, initial.worker);
}

#[test]
fn manager_loss_does_not_climb_on_separable_data() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = small_dataset(dir.path(), 4);
    let videos: Vec<&Video> = dataset.videos.iter().collect();
    let config = small_config();
    let mut policy = HierPolicy::<f64>::new(dataset.feature_dim(), config.hidden, config.seed);
    let mut opt = Adam::new(config.adam(), policy.manager.store());
    let losses: Vec<f64> = (0..40)
        .map(|_| train_manager_epoch(&mut policy.manager, &mut opt, &videos, 10).unwrap())
        .collect();
    for pair in losses.windows(2) {
        assert!(pair[1] <= pair[0] * 1.05, "loss went up: {losses:?}");
    }
    assert!(losses[39] < losses[0], "{losses:?}");
}

fn run_checkpoints(dir: &Path, dataset: &Dataset, config: &TrainConfig) -> Vec<Vec<u8>> {
    let plan = FoldPlan::crossval(dataset, 2, 5).unwrap();
    train_run(dataset, &[], config, &plan, dir).unwrap();
    (0..2)
        .map(|k| std::fs::read(checkpoint_path(dir, k)).unwrap())
        .collect()
}

#[test]
fn zero_epochs_checkpoint_is_the_initialization() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = small_dataset(&dir.path().join("data"), 5);
    let config = TrainConfig {
        epochs: 0,
        ..small_config()
    };
    run_checkpoints(&dir.path().join("run"), &dataset, &config);
    let (loaded, header) =
        read_checkpoint::<f64>(&checkpoint_path(&dir.path().join("run"), 0)).unwrap();
    let fresh = HierPolicy::<f64>::new(dataset.feature_dim(), config.hidden, config.seed);
    assert_eq!(values(&loaded), values(&fresh));
    assert_eq!(header.hyperparameters["epochs"], 0);
}

#[test]
fn same_seed_same_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = small_dataset(&dir.path().join("data"), 6);
    let config = small_config();
    let a = run_checkpoints(&dir.path().join("a"), &dataset, &config);
    let b = run_checkpoints(&dir.path().join("b"), &dataset, &config);
    assert_eq!(a, b);
    let other = TrainConfig { seed: 4, ..config };
    let c = run_checkpoints(&dir.path().join("c"), &dataset, &other);
    assert_ne!(a, c);
}
