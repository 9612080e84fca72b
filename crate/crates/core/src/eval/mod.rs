//! Summary quality (F score) and rank correlation metrics, and the
//! per-fold evaluation harness.

mod metrics;
mod report;

pub use metrics::{average_ranks, f_score, f_score_multi, kendall_tau, spearman_rho, FScore};
pub use report::{
    evaluate_fold_with, evaluate_policies, evaluate_random_baseline, evaluate_run, evaluate_video,
    EvalOptions, EvalReport, FoldReport, MetricSet, VideoMetrics, SETTING,
};
