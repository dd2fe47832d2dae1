//! CSV logs, weight snapshots, comparison reports and SVG tracking plots.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::compare::ComparisonReport;
use super::experiment::{ExperimentLog, LogRow};
use crate::error::{Error, Result};

/// First line of every log CSV; bump when the column set changes.
pub const LOG_SCHEMA: &str = "# cerebellar-pam log v1";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_owned(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_owned(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(path))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

/// Writes the schema comment, the header and one line per row. An empty log
/// still gets its header.
pub fn write_csv(rows: &[LogRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    writeln!(out, "{LOG_SCHEMA}").map_err(io_err(path))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(HEADER).map_err(csv_err(path))?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

const HEADER: [&str; 20] = [
    "t", "theta_des", "omega_des", "theta", "omega", "error", "derror", "u_pd", "u_ff", "p_ag",
    "p_ant", "p_ag_des", "p_ant_des", "valve_ag", "valve_ant", "spikes_mf", "spikes_gr",
    "spikes_pk", "spikes_io", "spikes_dcn",
];

pub fn read_log_csv(path: impl AsRef<Path>) -> Result<Vec<LogRow>> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(csv_err(path))?;
    rdr.deserialize().map(|r| r.map_err(csv_err(path))).collect()
}

/// GR→PK snapshots as `t,pre,w_0,...,w_{n_post-1}`, one line per GR row.
pub fn write_weights_csv(log: &ExperimentLog, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let (n_pre, n_post) = log.weight_shape;
    let mut line = String::new();
    line.push_str("t,pre");
    for j in 0..n_post {
        let _ = write!(line, ",w{j}");
    }
    writeln!(out, "{line}").map_err(io_err(path))?;
    for snap in &log.snapshots {
        for i in 0..n_pre {
            line.clear();
            let _ = write!(line, "{},{i}", snap.t);
            for w in &snap.weights[i * n_post..(i + 1) * n_post] {
                let _ = write!(line, ",{w}");
            }
            writeln!(out, "{line}").map_err(io_err(path))?;
        }
    }
    out.flush().map_err(io_err(path))
}

pub fn write_report_csv(report: &ComparisonReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    writeln!(
        out,
        "strategy,t0,t1,rmse,max_abs_error,mean_abs_u_ff,mean_abs_u_pd,rmse_ratio_vs_pd,\
         max_error_ratio_vs_pd,spikes_mf,spikes_gr,spikes_pk,spikes_io,spikes_dcn,weight_drift"
    )
    .map_err(io_err(path))?;
    for e in &report.entries {
        let m = &e.metrics;
        let [mf, gr, pk, io, dcn] = m.spike_totals;
        let drift = m.weight_drift.map(|d| d.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{mf},{gr},{pk},{io},{dcn},{drift}",
            e.mode,
            m.t0,
            m.t1,
            m.rmse,
            m.max_abs_error,
            m.mean_abs_u_ff,
            m.mean_abs_u_pd,
            e.rmse_ratio,
            e.max_error_ratio
        )
        .map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

/// Self-contained SVG: reference and measured angle on top, error below.
pub fn emit_plot(rows: &[LogRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let svg = render_svg(rows);
    let mut out = create(path)?;
    out.write_all(svg.as_bytes()).map_err(io_err(path))?;
    out.flush().map_err(io_err(path))
}

const WIDTH: f64 = 960.0;
const PANEL_H: f64 = 220.0;
const MARGIN: f64 = 60.0;
const MAX_POINTS: usize = 4000;

struct Panel {
    top: f64,
    t_range: (f64, f64),
    y_range: (f64, f64),
}

impl Panel {
    fn x(&self, t: f64) -> f64 {
        let (a, b) = self.t_range;
        MARGIN + (WIDTH - 2.0 * MARGIN) * if b > a { (t - a) / (b - a) } else { 0.0 }
    }

    fn y(&self, v: f64) -> f64 {
        let (lo, hi) = self.y_range;
        self.top + PANEL_H * (1.0 - if hi > lo { (v - lo) / (hi - lo) } else { 0.5 })
    }

    fn polyline(&self, rows: &[&LogRow], value: impl Fn(&LogRow) -> f64, style: &str, out: &mut String) {
        let _ = write!(out, "<polyline fill=\"none\" {style} points=\"");
        for r in rows {
            let _ = write!(out, "{:.2},{:.2} ", self.x(r.t), self.y(value(r)));
        }
        out.push_str("\"/>\n");
    }

    fn frame(&self, label: &str, out: &mut String) {
        let (lo, hi) = self.y_range;
        let _ = writeln!(
            out,
            "<rect x=\"{MARGIN}\" y=\"{}\" width=\"{}\" height=\"{PANEL_H}\" fill=\"none\" stroke=\"#888\"/>",
            self.top,
            WIDTH - 2.0 * MARGIN
        );
        let _ = writeln!(
            out,
            "<text x=\"{MARGIN}\" y=\"{}\" font-size=\"13\">{label}</text>",
            self.top - 6.0
        );
        for (v, anchor_y) in [(hi, self.top + 12.0), (lo, self.top + PANEL_H)] {
            let _ = writeln!(
                out,
                "<text x=\"{}\" y=\"{anchor_y}\" font-size=\"11\" text-anchor=\"end\">{v:.3}</text>",
                MARGIN - 4.0
            );
        }
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo.is_finite() {
        let pad = 0.05 * (hi - lo).max(1e-9);
        (lo - pad, hi + pad)
    } else {
        (-1.0, 1.0)
    }
}

fn render_svg(rows: &[LogRow]) -> String {
    let stride = rows.len().div_ceil(MAX_POINTS).max(1);
    let pts: Vec<&LogRow> = rows.iter().step_by(stride).collect();
    let t_range = match (rows.first(), rows.last()) {
        (Some(a), Some(b)) => (a.t, b.t),
        _ => (0.0, 1.0),
    };
    let angle = Panel {
        top: 40.0,
        t_range,
        y_range: range(pts.iter().flat_map(|r| [r.theta_des, r.theta])),
    };
    let error = Panel {
        top: 40.0 + PANEL_H + 60.0,
        t_range,
        y_range: range(pts.iter().map(|r| r.error)),
    };
    let height = error.top + PANEL_H + 50.0;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{height}\" \
         viewBox=\"0 0 {WIDTH} {height}\" font-family=\"sans-serif\">"
    );
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    angle.frame("joint angle (rad): reference dashed, measured solid", &mut s);
    angle.polyline(&pts, |r| r.theta_des, "stroke=\"#d62728\" stroke-dasharray=\"6,4\"", &mut s);
    angle.polyline(&pts, |r| r.theta, "stroke=\"#1f77b4\"", &mut s);
    error.frame("tracking error (rad)", &mut s);
    error.polyline(&pts, |r| r.error, "stroke=\"#2ca02c\"", &mut s);
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">t (s): {:.3} to {:.3}</text>",
        WIDTH / 2.0,
        height - 15.0,
        t_range.0,
        t_range.1
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::ValveMode;
    use proptest::prelude::*;

    fn row(k: usize, x: f64) -> LogRow {
        LogRow {
            t: k as f64 * 1e-3,
            theta_des: x.sin(),
            omega_des: x.cos(),
            theta: 0.9 * x.sin(),
            omega: 1.0 / 3.0,
            error: 0.1 * x.sin(),
            derror: -x,
            u_pd: x * 1e-7,
            u_ff: x * 1e7,
            p_ag: 2e5 + x,
            p_ant: 2e5 - x,
            p_ag_des: 2e5,
            p_ant_des: 2e5,
            valve_ag: ValveMode::Fill,
            valve_ant: ValveMode::Vent,
            spikes_mf: 3,
            spikes_gr: 0,
            spikes_pk: 7,
            spikes_io: 1,
            spikes_dcn: 160,
        }
    }

    #[test]
    fn empty_log_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("empty.csv");
        write_csv(&[], &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines, vec![LOG_SCHEMA, &HEADER.join(",")]);
        assert!(read_log_csv(&p).unwrap().is_empty());
    }

    #[test]
    fn thousand_rows_give_header_plus_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("log.csv");
        let rows: Vec<LogRow> = (0..1000).map(|k| row(k, k as f64 * 0.01)).collect();
        write_csv(&rows, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let data_lines = text.lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(data_lines, 1001);
        assert_eq!(text.lines().count(), 1002);
    }

    #[test]
    fn plot_contains_both_panels() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("plot.svg");
        let rows: Vec<LogRow> = (0..10_000).map(|k| row(k, k as f64 * 0.001)).collect();
        emit_plot(&rows, &p).unwrap();
        let svg = std::fs::read_to_string(&p).unwrap();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 3);
        emit_plot(&[], dir.path().join("empty.svg")).unwrap();
    }

    #[test]
    fn io_errors_carry_the_path() {
        let err = write_csv(&[], "/proc/definitely/not/writable.csv").unwrap_err();
        assert!(err.to_string().contains("/proc/definitely/not/writable.csv"));
        let err = read_log_csv("/nonexistent/log.csv").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/log.csv"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn csv_round_trip_is_exact(xs in proptest::collection::vec(-1e6f64..1e6, 1..50)) {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("rt.csv");
            let rows: Vec<LogRow> = xs.iter().enumerate().map(|(k, &x)| row(k, x)).collect();
            write_csv(&rows, &p).unwrap();
            prop_assert_eq!(read_log_csv(&p).unwrap(), rows);
        }
    }
}
