//! Runs the three strategies on the default experiment and prints a summary.
//!
//! `cargo run --release --example compare [config.toml]`

use cerebellar_pam::harness::{compare_strategies, parse_config, per_period_metrics, ExperimentConfig};

fn main() -> cerebellar_pam::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => parse_config(path)?,
        None => ExperimentConfig::default(),
    };
    let start = std::time::Instant::now();
    let report = compare_strategies(&cfg)?;
    println!("window {:?}, wall {:.1?}", report.eval_window, start.elapsed());
    for e in &report.entries {
        let m = &e.metrics;
        println!(
            "{:<10} rmse {:.4} max {:.4} ratio {:.3} |u_ff| {:.2} |u_pd| {:.2} spikes {:?}",
            e.mode, m.rmse, m.max_abs_error, e.rmse_ratio, m.mean_abs_u_ff, m.mean_abs_u_pd, m.spike_totals
        );
        let periods = per_period_metrics(&e.log, cfg.reference.period(), 8)?;
        let rmse: Vec<String> = periods.iter().map(|p| format!("{:.4}", p.rmse)).collect();
        let uff: Vec<String> = periods.iter().map(|p| format!("{:.2}", p.mean_abs_u_ff)).collect();
        println!("    period rmse  {}", rmse.join(" "));
        println!("    period |u_ff| {}", uff.join(" "));
    }
    Ok(())
}
