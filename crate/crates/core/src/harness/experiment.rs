use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ReferenceConfig, ReferenceShape};
use crate::cerebellum::build_network;
use crate::control::{cascade_step, ControlMode, ControllerState, Reference};
use crate::error::{Error, Result};
use crate::plant::{PlantState, ValveMode};

/// Desired angle and velocity at time `t` (s).
pub fn reference_signal(cfg: &ReferenceConfig, t: f64) -> Reference {
    match cfg.shape {
        ReferenceShape::Sine => {
            let w = 2.0 * PI * cfg.frequency;
            Reference {
                theta: cfg.offset + cfg.amplitude * (w * t).sin(),
                omega: cfg.amplitude * w * (w * t).cos(),
            }
        }
        ReferenceShape::Step => Reference {
            theta: if t >= cfg.step_time {
                cfg.offset + cfg.amplitude
            } else {
                cfg.offset
            },
            omega: 0.0,
        },
        ReferenceShape::Hold => Reference {
            theta: cfg.offset,
            omega: 0.0,
        },
    }
}

/// One control tick. Column order is the CSV column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub t: f64,
    pub theta_des: f64,
    pub omega_des: f64,
    pub theta: f64,
    pub omega: f64,
    pub error: f64,
    pub derror: f64,
    pub u_pd: f64,
    pub u_ff: f64,
    pub p_ag: f64,
    pub p_ant: f64,
    pub p_ag_des: f64,
    pub p_ant_des: f64,
    pub valve_ag: ValveMode,
    pub valve_ant: ValveMode,
    pub spikes_mf: u32,
    pub spikes_gr: u32,
    pub spikes_pk: u32,
    pub spikes_io: u32,
    pub spikes_dcn: u32,
}

impl LogRow {
    pub fn spike_counts(&self) -> [u32; 5] {
        [
            self.spikes_mf,
            self.spikes_gr,
            self.spikes_pk,
            self.spikes_io,
            self.spikes_dcn,
        ]
    }
}

/// Flat pre-major GR→PK weights at time `t` (s).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSnapshot {
    pub t: f64,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentLog {
    pub mode: ControlMode,
    pub rows: Vec<LogRow>,
    pub snapshots: Vec<WeightSnapshot>,
    /// GR→PK matrix shape of the snapshots.
    pub weight_shape: (usize, usize),
    /// Set when the plant diverged; rows stop at the failing tick.
    pub divergence: Option<(f64, String)>,
}

impl ExperimentLog {
    /// Converts an aborted run into its divergence error.
    pub fn into_result(self) -> Result<Self> {
        match self.divergence {
            Some((t, detail)) => Err(Error::Divergence { t, detail }),
            None => Ok(self),
        }
    }
}

/// Runs the closed loop for `cfg.duration` seconds.
///
/// Configuration problems are returned as errors. A numerical divergence of the
/// plant ends the run early and is reported through
/// [`ExperimentLog::divergence`], keeping the rows logged so far.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentLog> {
    cfg.validate()?;
    let net_cfg = cfg.cerebellar_config();
    let mut net = build_network(&net_cfg)?;
    let mut ctrl = ControllerState::new(&net_cfg);
    let plant = cfg.plant;
    let p_max = plant.pneumatic.p_max();
    let dt = cfg.dt_seconds();
    let ticks = cfg.ticks();
    let snapshot_every = if cfg.snapshot_interval > 0.0 {
        ((cfg.snapshot_interval / dt).round() as usize).max(1)
    } else {
        usize::MAX
    };

    let mut log = ExperimentLog {
        mode: cfg.control.mode,
        rows: Vec::with_capacity(ticks),
        snapshots: Vec::new(),
        weight_shape: (net.gr_pk().n_pre(), net.gr_pk().n_post()),
        divergence: None,
    };
    let mut state = PlantState::at_rest(cfg.control.p_base);

    for k in 0..ticks {
        let t = k as f64 * dt;
        if k % snapshot_every == 0 {
            log.snapshots.push(WeightSnapshot {
                t,
                weights: net.gr_pk().weights().to_vec(),
            });
        }
        if cfg.freeze_after_training && t >= cfg.training_duration {
            net.set_plasticity(false);
        }

        let reference = reference_signal(&cfg.reference, t);
        let (cmd, d) = cascade_step(&mut ctrl, &mut net, reference, &state, &cfg.control, p_max)?;
        let [mf, gr, pk, io, dcn] = d.spikes.map(|n| n as u32);
        log.rows.push(LogRow {
            t,
            theta_des: reference.theta,
            omega_des: reference.omega,
            theta: state.theta,
            omega: state.omega,
            error: d.error,
            derror: d.derror,
            u_pd: d.u_pd,
            u_ff: d.u_ff,
            p_ag: state.p_ag,
            p_ant: state.p_ant,
            p_ag_des: d.p_ag_des,
            p_ant_des: d.p_ant_des,
            valve_ag: cmd.agonist,
            valve_ant: cmd.antagonist,
            spikes_mf: mf,
            spikes_gr: gr,
            spikes_pk: pk,
            spikes_io: io,
            spikes_dcn: dcn,
        });

        let torque = match &cfg.disturbance {
            Some(dist) if t >= dist.time && t < dist.time + dist.width => dist.torque,
            _ => 0.0,
        };
        match plant.step(&state, cmd, dt, cfg.control.plant_substeps, torque) {
            Ok(next) => state = PlantState { t: (k + 1) as f64 * dt, ..next },
            Err(Error::Divergence { t, detail }) => {
                log.divergence = Some((t, detail));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    log.snapshots.push(WeightSnapshot {
        t: log.rows.len() as f64 * dt,
        weights: net.gr_pk().weights().to_vec(),
    });
    Ok(log)
}
