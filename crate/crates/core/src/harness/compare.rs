use std::path::Path;

use super::config::ExperimentConfig;
use super::experiment::ExperimentLog;
use super::metrics::{compute_metrics, Metrics};
use super::output::{write_csv, write_report_csv};
use crate::batch::run_batch;
use crate::control::ControlMode;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct StrategyResult {
    pub mode: ControlMode,
    pub metrics: Metrics,
    /// rmse relative to the PD_ONLY run.
    pub rmse_ratio: f64,
    pub max_error_ratio: f64,
    pub log: ExperimentLog,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub eval_window: (f64, f64),
    /// In [`ControlMode::ALL`] order, PD_ONLY first.
    pub entries: Vec<StrategyResult>,
}

impl ComparisonReport {
    pub fn get(&self, mode: ControlMode) -> Option<&StrategyResult> {
        self.entries.iter().find(|e| e.mode == mode)
    }
}

/// Runs the three strategies on the same reference, seed and initial weights,
/// and scores each over the evaluation window. Any divergence fails the
/// comparison.
pub fn compare_strategies(cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    let configs: Vec<ExperimentConfig> = ControlMode::ALL
        .iter()
        .map(|&mode| {
            let mut c = cfg.clone();
            c.control.mode = mode;
            c
        })
        .collect();
    let logs = run_batch(&configs)
        .into_iter()
        .map(|r| r.and_then(ExperimentLog::into_result))
        .collect::<Result<Vec<_>>>()?;

    let window = cfg.evaluation_window();
    let scored = logs
        .into_iter()
        .map(|log| Ok((compute_metrics(&log, window)?, log)))
        .collect::<Result<Vec<_>>>()?;
    let baseline = scored
        .iter()
        .find(|(_, log)| log.mode == ControlMode::PdOnly)
        .map(|(m, _)| m.clone())
        .ok_or_else(|| Error::contract("comparison needs a PD_ONLY run"))?;

    let entries = scored
        .into_iter()
        .map(|(metrics, log)| StrategyResult {
            mode: log.mode,
            rmse_ratio: metrics.rmse / baseline.rmse,
            max_error_ratio: metrics.max_abs_error / baseline.max_abs_error,
            metrics,
            log,
        })
        .collect();
    Ok(ComparisonReport {
        eval_window: window,
        entries,
    })
}

/// Writes `report.csv` and one `<mode>.csv` log per strategy into `dir`.
pub fn write_comparison(report: &ComparisonReport, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    write_report_csv(report, dir.join("report.csv"))?;
    for e in &report.entries {
        write_csv(&e.log.rows, dir.join(format!("{}.csv", e.mode.as_str().to_lowercase())))?;
    }
    Ok(())
}
