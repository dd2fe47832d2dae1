use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Result};
use cerebellar_pam::control::ControlMode;
use cerebellar_pam::harness::{
    compare_strategies, compute_metrics, compute_row_metrics, emit_plot, parse_config, read_log_csv, run_experiment,
    write_comparison, write_csv, write_weights_csv, ExperimentConfig, Metrics,
};
use clap::{Parser, Subcommand};

/// Spiking cerebellar controller for an antagonistic pneumatic-muscle joint.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop experiment and write log.csv, weights.csv and plot.svg.
    Run {
        /// TOML experiment file; built-in defaults when omitted.
        config: Option<PathBuf>,
        /// Override the control mode from the config.
        #[arg(long, value_parser = parse_mode)]
        mode: Option<ControlMode>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run PD_ONLY, FF_PLUS_FB and FF_ONLY on the same reference and seed.
    Compare {
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Recompute metrics over [t0, t1) from a log CSV.
    Metrics {
        csv: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        t0: f64,
        #[arg(long, default_value_t = f64::INFINITY)]
        t1: f64,
    },
    /// Render a log CSV as an SVG tracking plot.
    Plot {
        csv: PathBuf,
        #[arg(long, default_value = "plot.svg")]
        out: PathBuf,
    },
}

fn parse_mode(s: &str) -> Result<ControlMode, String> {
    ControlMode::ALL
        .into_iter()
        .find(|m| m.as_str().eq_ignore_ascii_case(s))
        .ok_or_else(|| format!("unknown mode {s:?}; expected PD_ONLY, FF_PLUS_FB or FF_ONLY"))
}

fn load(config: Option<&Path>) -> Result<ExperimentConfig> {
    match config {
        Some(path) => Ok(parse_config(path)?),
        None => Ok(ExperimentConfig::default()),
    }
}

fn print_metrics(label: &str, m: &Metrics) {
    let [mf, gr, pk, io, dcn] = m.spike_totals;
    println!(
        "{label:<10} rmse {:.5} rad  max {:.5} rad  |u_ff| {:.3}  |u_pd| {:.3}  spikes mf {mf} gr {gr} pk {pk} io {io} dcn {dcn}",
        m.rmse, m.max_abs_error, m.mean_abs_u_ff, m.mean_abs_u_pd
    );
    if let Some(d) = m.weight_drift {
        println!("{:<10} weight drift {d:.5}", "");
    }
}

fn run(config: Option<&Path>, mode: Option<ControlMode>, out: &Path) -> Result<()> {
    let mut cfg = load(config)?;
    if let Some(mode) = mode {
        cfg.control.mode = mode;
    }
    let log = run_experiment(&cfg)?;
    write_csv(&log.rows, out.join("log.csv"))?;
    write_weights_csv(&log, out.join("weights.csv"))?;
    emit_plot(&log.rows, out.join("plot.svg"))?;
    let log = log.into_result()?;
    let m = compute_metrics(&log, cfg.evaluation_window())?;
    println!("evaluation window [{}, {}) s", cfg.training_duration, cfg.duration);
    print_metrics(log.mode.as_str(), &m);
    println!("wrote {}", out.display());
    Ok(())
}

fn compare(config: Option<&Path>, out: &Path) -> Result<()> {
    let cfg = load(config)?;
    let report = compare_strategies(&cfg)?;
    write_comparison(&report, out)?;
    println!("evaluation window [{}, {}) s", report.eval_window.0, report.eval_window.1);
    for e in &report.entries {
        print_metrics(e.mode.as_str(), &e.metrics);
        println!("{:<10} rmse ratio vs PD_ONLY {:.3}", "", e.rmse_ratio);
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn metrics(csv: &Path, t0: f64, t1: f64) -> Result<()> {
    if t0.is_nan() || t1.is_nan() || t0 >= t1 {
        bail!("--t0 {t0} must be below --t1 {t1}");
    }
    let rows = read_log_csv(csv)?;
    let m = compute_row_metrics(&rows, (t0, t1))?;
    println!("{} samples in [{t0}, {t1})", m.samples);
    print_metrics("log", &m);
    Ok(())
}

fn plot(csv: &Path, out: &Path) -> Result<()> {
    let rows = read_log_csv(csv)?;
    emit_plot(&rows, out)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, mode, out } => run(config.as_deref(), *mode, out),
        Command::Compare { config, out } => compare(config.as_deref(), out),
        Command::Metrics { csv, t0, t1 } => metrics(csv, *t0, *t1),
        Command::Plot { csv, out } => plot(csv, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // library errors already embed their source in the message
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
