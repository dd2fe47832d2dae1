//! Cascade controller: outer PD on joint angle plus the spiking feed-forward
//! term, a differential pressure split around a co-contraction baseline, and
//! an inner hysteresis (bang-bang) loop that drives the valves.

use serde::{Deserialize, Serialize};

use crate::cerebellum::{
    decode_dcn, encode_io_error, encode_mossy, CerebellarConfig, CerebellarNetwork, DcnDecoder,
    SpikeSource,
};
use crate::error::{Error, Result};
use crate::plant::{PlantState, ValveCommand, ValveMode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdGains {
    /// Command units per rad.
    pub kp: f64,
    /// Command units per rad/s.
    pub kd: f64,
}

impl Default for PdGains {
    fn default() -> Self {
        Self { kp: 20.0, kd: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ControlMode {
    /// Feedback only; the network runs but neither teaches nor commands.
    PdOnly,
    FfPlusFb,
    FfOnly,
}

impl ControlMode {
    pub const ALL: [ControlMode; 3] = [ControlMode::PdOnly, ControlMode::FfPlusFb, ControlMode::FfOnly];

    pub fn as_str(self) -> &'static str {
        match self {
            ControlMode::PdOnly => "PD_ONLY",
            ControlMode::FfPlusFb => "FF_PLUS_FB",
            ControlMode::FfOnly => "FF_ONLY",
        }
    }

    fn uses_feedback(self) -> bool {
        self != ControlMode::FfOnly
    }

    fn uses_network(self) -> bool {
        self != ControlMode::PdOnly
    }
}

impl std::fmt::Display for ControlMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlConfig {
    pub gains: PdGains,
    /// Co-contraction baseline (gauge Pa).
    pub p_base: f64,
    /// Differential pressure (Pa) per command unit.
    pub u_to_pressure: f64,
    /// Half-width of the valve deadband (Pa).
    pub hysteresis: f64,
    pub mode: ControlMode,
    /// Control tick (ms); also the network step.
    pub dt_control: f64,
    /// Error-derivative filter constant (ms).
    pub derivative_tau: f64,
    /// Plant integration sub-steps per control tick.
    pub plant_substeps: usize,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            gains: PdGains::default(),
            p_base: 200_000.0,
            u_to_pressure: 1_000.0,
            hysteresis: 5_000.0,
            mode: ControlMode::FfPlusFb,
            dt_control: 1.0,
            derivative_tau: 10.0,
            plant_substeps: 10,
        }
    }
}

impl ControlConfig {
    pub fn validate(&self, p_max: f64) -> Result<()> {
        if !(self.gains.kp >= 0.0 && self.gains.kd >= 0.0) {
            return Err(Error::config(format!("PD gains must be >= 0: {:?}", self.gains)));
        }
        if !(self.p_base > 0.0 && self.p_base < p_max) {
            return Err(Error::config(format!(
                "p_base {} must lie in (0, {p_max})",
                self.p_base
            )));
        }
        if !(self.hysteresis > 0.0) {
            return Err(Error::config(format!("hysteresis must be > 0, got {}", self.hysteresis)));
        }
        if !(self.dt_control > 0.0 && self.derivative_tau > 0.0 && self.u_to_pressure.is_finite()) {
            return Err(Error::config("dt_control and derivative_tau must be > 0"));
        }
        if self.plant_substeps == 0 {
            return Err(Error::config("plant_substeps must be >= 1"));
        }
        Ok(())
    }
}

pub fn pd_control(error: f64, derror: f64, gains: &PdGains) -> f64 {
    gains.kp * error + gains.kd * derror
}

/// Splits a scalar command into agonist/antagonist pressure targets around the
/// co-contraction baseline, each clamped to `[0, p_max]`.
pub fn pressure_setpoints(u_total: f64, cfg: &ControlConfig, p_max: f64) -> (f64, f64) {
    let dp = cfg.u_to_pressure * u_total;
    (
        (cfg.p_base + dp / 2.0).clamp(0.0, p_max),
        (cfg.p_base - dp / 2.0).clamp(0.0, p_max),
    )
}

/// Bang-bang valve law with a symmetric deadband around the target.
pub fn valve_controller(p_meas: f64, p_des: f64, hysteresis: f64) -> ValveMode {
    if p_meas < p_des - hysteresis {
        ValveMode::Fill
    } else if p_meas > p_des + hysteresis {
        ValveMode::Vent
    } else {
        ValveMode::Hold
    }
}

/// Desired joint angle and velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub theta: f64,
    pub omega: f64,
}

/// Controller memory between ticks.
#[derive(Debug, Clone)]
pub struct ControllerState {
    prev_error: Option<f64>,
    derror: f64,
    mossy: SpikeSource,
    olive: SpikeSource,
    decoder: DcnDecoder,
}

impl ControllerState {
    pub fn new(cfg: &CerebellarConfig) -> Self {
        Self {
            prev_error: None,
            derror: 0.0,
            mossy: SpikeSource::mossy(cfg),
            olive: SpikeSource::olive(cfg),
            decoder: DcnDecoder::new(cfg.n_dcn),
        }
    }

    pub fn derror(&self) -> f64 {
        self.derror
    }

    pub fn decoder(&self) -> &DcnDecoder {
        &self.decoder
    }

    /// First-order filtered finite difference of the error (rad/s).
    fn update_derivative(&mut self, error: f64, dt_ms: f64, tau_ms: f64) -> f64 {
        let raw = match self.prev_error {
            Some(prev) => (error - prev) / (dt_ms * 1e-3),
            None => 0.0,
        };
        self.prev_error = Some(error);
        self.derror += (raw - self.derror) * (1.0 - (-dt_ms / tau_ms).exp());
        self.derror
    }
}

/// Per-tick controller outputs kept for logging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub error: f64,
    pub derror: f64,
    pub u_pd: f64,
    pub u_ff: f64,
    pub p_ag_des: f64,
    pub p_ant_des: f64,
    /// Spike counts in (MF, GR, PK, IO, DCN) order.
    pub spikes: [usize; 5],
}

/// One control tick: PD, network step, feed-forward decode, pressure split and
/// valve decisions.
pub fn cascade_step(
    ctrl: &mut ControllerState,
    net: &mut CerebellarNetwork,
    reference: Reference,
    meas: &PlantState,
    cfg: &ControlConfig,
    p_max: f64,
) -> Result<(ValveCommand, Diagnostics)> {
    let dt = cfg.dt_control;
    let error = reference.theta - meas.theta;
    if !error.is_finite() {
        return Err(Error::contract(format!("non-finite tracking error {error}")));
    }
    let derror = ctrl.update_derivative(error, dt, cfg.derivative_tau);
    let u_pd = if cfg.mode.uses_feedback() {
        pd_control(error, derror, &cfg.gains)
    } else {
        0.0
    };

    let net_cfg = net.config().clone();
    let mf = encode_mossy(reference.theta, reference.omega, &net_cfg, &mut ctrl.mossy, dt)?;
    let teaching = if cfg.mode.uses_network() { error } else { 0.0 };
    let io = encode_io_error(teaching, &net_cfg, &mut ctrl.olive, dt)?;
    let spikes = net.step(&mf, &io, dt)?;
    let decoded = decode_dcn(&spikes.dcn, &mut ctrl.decoder, &net_cfg, dt)?;
    let u_ff = if cfg.mode.uses_network() { decoded } else { 0.0 };

    let (p_ag_des, p_ant_des) = pressure_setpoints(u_pd + u_ff, cfg, p_max);
    let cmd = ValveCommand {
        agonist: valve_controller(meas.p_ag, p_ag_des, cfg.hysteresis),
        antagonist: valve_controller(meas.p_ant, p_ant_des, cfg.hysteresis),
    };
    Ok((
        cmd,
        Diagnostics {
            error,
            derror,
            u_pd,
            u_ff,
            p_ag_des,
            p_ant_des,
            spikes: spikes.counts(),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cerebellum::build_network;
    use crate::plant::{pressure_step, PneumaticParams};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const P_MAX: f64 = 500_000.0;

    #[test]
    fn pd_examples() {
        let g = PdGains { kp: 10.0, kd: 1.0 };
        assert_eq!(pd_control(0.0, 0.0, &g), 0.0);
        assert_abs_diff_eq!(pd_control(0.1, -0.2, &g), 0.8, epsilon = 1e-12);
        assert_eq!(pd_control(-0.1, 0.2, &g), -pd_control(0.1, -0.2, &g));
    }

    #[test]
    fn setpoint_examples() {
        let cfg = ControlConfig::default();
        assert_eq!(pressure_setpoints(0.0, &cfg, P_MAX), (cfg.p_base, cfg.p_base));
        let (a, b) = pressure_setpoints(7.5, &cfg, P_MAX);
        assert_abs_diff_eq!(a - b, cfg.u_to_pressure * 7.5, epsilon = 1e-9);
        assert_eq!(pressure_setpoints(1e9, &cfg, P_MAX), (P_MAX, 0.0));
        assert_eq!(pressure_setpoints(-1e9, &cfg, P_MAX), (0.0, P_MAX));
    }

    #[test]
    fn valve_examples() {
        assert_eq!(valve_controller(2e5, 2e5, 5e3), ValveMode::Hold);
        assert_eq!(valve_controller(190e3, 200e3, 5e3), ValveMode::Fill);
        assert_eq!(valve_controller(206e3, 200e3, 5e3), ValveMode::Vent);
    }

    #[test]
    fn hysteresis_settles_without_chatter() {
        let pn = PneumaticParams::default();
        for (p0, target) in [(0.0, 2e5), (5e5, 2e5), (1.9e5, 2e5), (2e5, 2e5), (3e5, 1e4)] {
            let mut p = p0;
            let mut modes = Vec::new();
            for _ in 0..2000 {
                let m = valve_controller(p, target, 5e3);
                modes.push(m);
                p = pressure_step(p, m, &pn, 1e-3);
            }
            let changes = modes.windows(2).filter(|w| w[0] != w[1]).count();
            assert!(changes <= 2, "{changes} changes from {p0}");
            assert_eq!(*modes.last().unwrap(), ValveMode::Hold);
        }
    }

    #[test]
    fn config_validation() {
        let cfg = ControlConfig::default();
        cfg.validate(P_MAX).unwrap();
        assert!(ControlConfig { p_base: 0.0, ..cfg }.validate(P_MAX).is_err());
        assert!(ControlConfig { p_base: P_MAX, ..cfg }.validate(P_MAX).is_err());
        assert!(ControlConfig { hysteresis: 0.0, ..cfg }.validate(P_MAX).is_err());
    }

    #[test]
    fn pd_only_at_zero_error_holds_at_baseline() {
        let ccfg = CerebellarConfig::default();
        let mut net = build_network(&ccfg).unwrap();
        let mut ctrl = ControllerState::new(&ccfg);
        let cfg = ControlConfig {
            mode: ControlMode::PdOnly,
            ..ControlConfig::default()
        };
        let meas = PlantState::at_rest(cfg.p_base);
        for _ in 0..100 {
            let (cmd, d) = cascade_step(&mut ctrl, &mut net, Reference { theta: 0.0, omega: 0.0 }, &meas, &cfg, P_MAX).unwrap();
            assert_eq!(cmd, ValveCommand::HOLD);
            assert_eq!((d.u_pd, d.u_ff), (0.0, 0.0));
            assert_eq!(d.spikes[3], 0);
        }
    }

    type Trace = Vec<(ValveCommand, Diagnostics)>;

    fn run_modes(cfg_a: ControlConfig, cfg_b: ControlConfig, ccfg: &CerebellarConfig) -> (Trace, Trace) {
        let run = |cfg: ControlConfig| {
            let mut net = build_network(ccfg).unwrap();
            let mut ctrl = ControllerState::new(ccfg);
            (0..500)
                .map(|k| {
                    let t = k as f64 * 1e-3;
                    let meas = PlantState {
                        theta: 0.05 * (3.0 * t).sin(),
                        p_ag: 2e5 + 1e4 * (5.0 * t).cos(),
                        ..PlantState::at_rest(2e5)
                    };
                    let r = Reference { theta: 0.3 * (3.1 * t).sin(), omega: 0.93 * (3.1 * t).cos() };
                    cascade_step(&mut ctrl, &mut net, r, &meas, &cfg, P_MAX).unwrap()
                })
                .collect::<Vec<_>>()
        };
        (run(cfg_a), run(cfg_b))
    }

    #[test]
    fn zero_gain_feedforward_matches_pd_only() {
        let ccfg = CerebellarConfig {
            dcn_gain: 0.0,
            ..CerebellarConfig::default()
        };
        let (pd, ff) = run_modes(
            ControlConfig { mode: ControlMode::PdOnly, ..ControlConfig::default() },
            ControlConfig { mode: ControlMode::FfPlusFb, ..ControlConfig::default() },
            &ccfg,
        );
        for ((ca, da), (cb, db)) in pd.iter().zip(&ff) {
            assert_eq!(ca, cb);
            assert_eq!(da.u_pd.to_bits(), db.u_pd.to_bits());
            assert_eq!((da.p_ag_des, da.p_ant_des), (db.p_ag_des, db.p_ant_des));
            assert_eq!(db.u_ff, 0.0);
        }
        assert!(ff.iter().any(|(_, d)| d.spikes[3] > 0));
    }

    #[test]
    fn ff_only_uses_decoded_command_alone() {
        let ccfg = CerebellarConfig::default();
        let cfg = ControlConfig { mode: ControlMode::FfOnly, ..ControlConfig::default() };
        let mut net = build_network(&ccfg).unwrap();
        let mut ctrl = ControllerState::new(&ccfg);
        let mut nonzero = false;
        for k in 0..500 {
            let t = k as f64 * 1e-3;
            let r = Reference { theta: 0.3 * (3.1 * t).sin(), omega: 0.93 * (3.1 * t).cos() };
            let meas = PlantState::at_rest(2e5);
            let (_, d) = cascade_step(&mut ctrl, &mut net, r, &meas, &cfg, P_MAX).unwrap();
            assert_eq!(d.u_pd, 0.0);
            let (ag, ant) = ctrl.decoder().half_means();
            assert_eq!(d.u_ff, ccfg.dcn_gain * (ag - ant));
            let (a, b) = pressure_setpoints(d.u_ff, &cfg, P_MAX);
            assert_eq!((a, b), (d.p_ag_des, d.p_ant_des));
            nonzero |= d.u_ff != 0.0;
        }
        assert!(nonzero);
    }

    proptest! {
        #[test]
        fn setpoints_stay_in_range(u in -1e12f64..1e12) {
            let (a, b) = pressure_setpoints(u, &ControlConfig::default(), P_MAX);
            prop_assert!((0.0..=P_MAX).contains(&a) && (0.0..=P_MAX).contains(&b));
        }

        #[test]
        fn derivative_filter_is_bounded(errors in proptest::collection::vec(-1.0f64..1.0, 1..300)) {
            let mut ctrl = ControllerState::new(&CerebellarConfig::default());
            for e in errors {
                let d = ctrl.update_derivative(e, 1.0, 10.0);
                prop_assert!(d.is_finite() && d.abs() <= 2000.0);
            }
        }
    }
}
