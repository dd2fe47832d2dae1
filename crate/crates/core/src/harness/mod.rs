//! Experiment harness: configuration, the closed-loop runner, metrics,
//! CSV/SVG output and the three-way strategy comparison.

mod compare;
mod config;
mod experiment;
mod metrics;
mod output;

pub use compare::{compare_strategies, write_comparison, ComparisonReport, StrategyResult};
pub use config::{parse_config, Disturbance, ExperimentConfig, ReferenceConfig, ReferenceShape};
pub use experiment::{reference_signal, run_experiment, ExperimentLog, LogRow, WeightSnapshot};
pub use metrics::{compute_metrics, compute_row_metrics, per_period_metrics, Metrics};
pub use output::{emit_plot, read_log_csv, write_csv, write_report_csv, write_weights_csv, LOG_SCHEMA};
