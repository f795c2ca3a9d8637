//! Experiment harness: configuration, staged pipeline, evaluation and reports.

pub mod config;
pub mod data;
pub mod episodes;
pub mod pipeline;
pub mod results;

pub use config::{CaeSection, DataConfig, ExperimentConfig, RnnSection, TuningConfig};
pub use episodes::{episode_specs, Condition, EpisodePlan};
pub use pipeline::{arm_recordings, run_episodes, Baselines, Calibration, ModelStats, TaskRun, Tuning, Workspace};
pub use results::{mean_sd, EpisodeSummary, Metric, ResultRow, ResultsTable};
