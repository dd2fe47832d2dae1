use serde::Serialize;

use super::experiment::{ExperimentLog, LogRow};
use crate::error::{Error, Result};

/// Tracking and activity summary over a half-open time window `[t0, t1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub t0: f64,
    pub t1: f64,
    pub samples: usize,
    pub rmse: f64,
    pub max_abs_error: f64,
    pub mean_abs_u_ff: f64,
    pub mean_abs_u_pd: f64,
    /// Spike totals in (MF, GR, PK, IO, DCN) order.
    pub spike_totals: [u64; 5],
    /// Frobenius norm between the first and last GR→PK snapshot inside the
    /// window; `None` without at least two snapshots.
    pub weight_drift: Option<f64>,
}

/// Metrics over raw rows (e.g. re-read from CSV); no weight information.
pub fn compute_row_metrics(rows: &[LogRow], (t0, t1): (f64, f64)) -> Result<Metrics> {
    let window: Vec<&LogRow> = rows.iter().filter(|r| r.t >= t0 && r.t < t1).collect();
    if window.is_empty() {
        return Err(Error::contract(format!("metrics window [{t0}, {t1}) holds no samples")));
    }
    let n = window.len() as f64;
    let mut spike_totals = [0u64; 5];
    for r in &window {
        for (total, c) in spike_totals.iter_mut().zip(r.spike_counts()) {
            *total += u64::from(c);
        }
    }
    let max_abs_error = window.iter().map(|r| r.error.abs()).fold(0.0, f64::max);
    let rmse = (window.iter().map(|r| r.error * r.error).sum::<f64>() / n).sqrt();
    Ok(Metrics {
        t0,
        t1,
        samples: window.len(),
        // rounding in the mean can push rmse an ulp past the maximum
        rmse: rmse.min(max_abs_error),
        max_abs_error,
        mean_abs_u_ff: window.iter().map(|r| r.u_ff.abs()).sum::<f64>() / n,
        mean_abs_u_pd: window.iter().map(|r| r.u_pd.abs()).sum::<f64>() / n,
        spike_totals,
        weight_drift: None,
    })
}

pub fn compute_metrics(log: &ExperimentLog, window: (f64, f64)) -> Result<Metrics> {
    let mut m = compute_row_metrics(&log.rows, window)?;
    let inside: Vec<_> = log
        .snapshots
        .iter()
        .filter(|s| s.t >= window.0 && s.t <= window.1)
        .collect();
    if let [first, .., last] = inside.as_slice() {
        let sq: f64 = first
            .weights
            .iter()
            .zip(&last.weights)
            .map(|(a, b)| (b - a) * (b - a))
            .sum();
        m.weight_drift = Some(sq.sqrt());
    }
    Ok(m)
}

/// Metrics for each of `count` consecutive windows of length `period` from t = 0.
pub fn per_period_metrics(log: &ExperimentLog, period: f64, count: usize) -> Result<Vec<Metrics>> {
    (0..count)
        .map(|k| compute_metrics(log, (k as f64 * period, (k + 1) as f64 * period)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::ValveMode;

    fn rows(errors: &[f64]) -> Vec<LogRow> {
        errors
            .iter()
            .enumerate()
            .map(|(k, &e)| LogRow {
                t: k as f64 * 1e-3,
                theta_des: 0.0,
                omega_des: 0.0,
                theta: -e,
                omega: 0.0,
                error: e,
                derror: 0.0,
                u_pd: 2.0 * e,
                u_ff: -e,
                p_ag: 0.0,
                p_ant: 0.0,
                p_ag_des: 0.0,
                p_ant_des: 0.0,
                valve_ag: ValveMode::Hold,
                valve_ant: ValveMode::Hold,
                spikes_mf: 1,
                spikes_gr: 2,
                spikes_pk: 3,
                spikes_io: 4,
                spikes_dcn: 5,
            })
            .collect()
    }

    #[test]
    fn zero_constant_and_alternating_errors() {
        let m = compute_row_metrics(&rows(&[0.0; 10]), (0.0, 1.0)).unwrap();
        assert_eq!((m.rmse, m.max_abs_error), (0.0, 0.0));

        let m = compute_row_metrics(&rows(&[0.1; 10]), (0.0, 1.0)).unwrap();
        assert!((m.rmse - 0.1).abs() < 1e-15 && m.max_abs_error == 0.1);

        let alt: Vec<f64> = (0..10).map(|k| if k % 2 == 0 { 0.1 } else { -0.1 }).collect();
        let m = compute_row_metrics(&rows(&alt), (0.0, 1.0)).unwrap();
        assert!((m.rmse - 0.1).abs() < 1e-15 && m.max_abs_error == 0.1);
        assert!(m.rmse <= m.max_abs_error);
        assert!((m.mean_abs_u_pd - 0.2).abs() < 1e-15);
        assert_eq!(m.spike_totals, [10, 20, 30, 40, 50]);
    }

    #[test]
    fn empty_window_is_an_error() {
        assert!(matches!(
            compute_row_metrics(&rows(&[0.1; 10]), (5.0, 6.0)),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn window_is_half_open() {
        let m = compute_row_metrics(&rows(&[0.1; 10]), (0.002, 0.005)).unwrap();
        assert_eq!(m.samples, 3);
    }
}
