//! Experiment configuration, trace metrics, training, sweeps and lab reports.

mod config;
mod metrics;
mod report;
mod sweep;
mod train;

pub use config::{ExperimentConfig, LearnerConfig, LearnerKind, RewardWeights, SweepGrid, CONFIG_VERSION};
pub use metrics::{avg_speed, episode_min_gap, lc_frequency, min_gap, per_minute, success_rate, MetricsRecord};
pub use report::{batch_mdp, equivalence_reports, equivalence_setups, mdp_rows, summary_text, LabConfig, LabRow};
pub use sweep::{
    cells, mean_std, run_sweep, summarize, svg_log_x, write_curve, write_rows, Cell, CellRow, SummaryRow, SweepResult,
};
pub use train::{
    convergence_episode, episode_seed, eval_seed, evaluate, smooth, train_cell, EpisodeRow, GreedyPolicy, TrainOutcome,
};
