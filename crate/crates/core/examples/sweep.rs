//! Scores configuration variants on the three strategies.
//!
//! Each argument is one variant: space-separated `key=value` overrides of the
//! default experiment, e.g.
//!
//! `cargo run --release --example sweep -- "" "dcn_gain=2" "dcn_gain=2 nu_ltd=0.03"`
//!
//! Runs are batched (parallel with the `parallel` feature).

use cerebellar_pam::batch::run_batch;
use cerebellar_pam::control::ControlMode;
use cerebellar_pam::harness::{compute_metrics, per_period_metrics, ExperimentConfig};

fn apply(cfg: &mut ExperimentConfig, key: &str, v: f64) {
    let c = &mut cfg.cerebellum;
    match key {
        "dcn_gain" => c.dcn_gain = v,
        "tau_out" => c.tau_out = v,
        "io_max_rate" => c.io_max_rate = v,
        "io_error_saturation" => c.io_error_saturation = v,
        "nu_ltp" => c.stdp.nu_ltp = v,
        "nu_ltd" => c.stdp.nu_ltd = v,
        "tau_kernel" => c.stdp.tau_kernel = v,
        "w_pk_dcn" => c.w_pk_dcn = v,
        "w_mf_dcn" => c.w_mf_dcn = v,
        "w_gr_pk_init" => c.w_gr_pk_init = v,
        "w_gr_pk_jitter" => c.w_gr_pk_jitter = v,
        "w_mf_dcn_jitter" => c.w_mf_dcn_jitter = v,
        "mf_sigma" => c.mf_sigma = v,
        "pk_tau" => c.pk_lif.tau_m = v,
        "dcn_tau" => c.dcn_lif.tau_m = v,
        "seed" => cfg.seed = v as u64,
        "kp" => cfg.control.gains.kp = v,
        "kd" => cfg.control.gains.kd = v,
        "hysteresis" => cfg.control.hysteresis = v,
        _ => panic!("unknown key {key}"),
    }
}

fn main() -> cerebellar_pam::Result<()> {
    let variants: Vec<String> = std::env::args().skip(1).collect();
    let mut configs = Vec::new();
    for v in &variants {
        let mut base = ExperimentConfig::default();
        for kv in v.split_whitespace() {
            let (k, x) = kv.split_once('=').expect("key=value");
            apply(&mut base, k, x.parse().expect("numeric value"));
        }
        for mode in ControlMode::ALL {
            let mut c = base.clone();
            c.control.mode = mode;
            configs.push(c);
        }
    }
    let logs = run_batch(&configs);
    for (v, chunk) in variants.iter().zip(logs.chunks(3)) {
        let mut line = format!("{v:<40}");
        let mut pd = f64::NAN;
        for log in chunk {
            match log {
                Ok(log) if log.divergence.is_none() => {
                    let cfg = &configs[0];
                    let m = compute_metrics(log, cfg.evaluation_window())?;
                    let theta_ok = log.rows.iter().all(|r| r.theta.abs() < cfg.plant.arm.theta_max);
                    match log.mode {
                        ControlMode::PdOnly => pd = m.rmse,
                        ControlMode::FfPlusFb => {
                            let p = per_period_metrics(log, cfg.reference.period(), 5)?;
                            let up = p.windows(2).all(|w| w[1].mean_abs_u_ff >= w[0].mean_abs_u_ff);
                            let down = p[1..].windows(2).all(|w| w[1].rmse <= w[0].rmse);
                            let seq: Vec<String> = p.iter().map(|m| format!("{:.3}/{:.0}", m.rmse, m.mean_abs_u_ff)).collect();
                            line += &format!(
                                " FB {:.4} ({:.2}) c8 {}{} [{}]",
                                m.rmse,
                                m.rmse / pd,
                                if up { 'U' } else { '-' },
                                if down { 'D' } else { '-' },
                                seq.join(" ")
                            );
                        }
                        ControlMode::FfOnly => {
                            line += &format!(" FF {:.4} max {:.3} bound {}", m.rmse, m.max_abs_error, theta_ok)
                        }
                    }
                }
                Ok(log) => line += &format!(" {} diverged", log.mode),
                Err(e) => line += &format!(" error: {e}"),
            }
        }
        println!("{line}");
    }
    Ok(())
}
