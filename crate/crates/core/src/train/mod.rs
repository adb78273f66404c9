//! Training, evaluation and reporting.

mod config;
mod eval;
mod latency;
mod loocv;
mod metrics;
mod report;
mod trainer;

pub use config::TrainConfig;
pub use eval::{estimate_samples, evaluate_model, evaluate_recording, HoldoutReport, RecordingEval};
pub use latency::{measure_latency, time_estimates, LatencyOptions, LatencyStats};
pub use loocv::{run_loocv, stats_sha256, FoldLatency, FoldResult, LatencyReport, LoocvOptions, LoocvReport, LoocvRun};
pub use metrics::{med, paired_t_test, MedReport, Summary, TTest};
pub use report::{render_holdout, render_latency, render_loocv, Published, PUBLISHED_LATENCY, PUBLISHED_MED};
pub use trainer::{evaluate_mse, train, train_with, EpochEnd, TrainOutcome};
