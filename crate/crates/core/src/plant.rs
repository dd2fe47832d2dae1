//! One-joint arm actuated by an antagonistic pair of McKibben muscles.
//!
//! Muscle force follows the static braided-sleeve law
//! `F = p * (pi d0^2 / 4) * (a (1 - eps)^2 - b) - f_damp * l0 * deps/dt` with
//! `a = 3 / tan^2(theta0)` and `b = 1 / sin^2(theta0)`, floored at zero. Each
//! valve drives its muscle pressure as a first-order lag toward supply (FILL),
//! atmosphere (VENT) or holds it. The link is integrated with semi-implicit
//! Euler on sub-steps of the control tick.
//!
//! SI units throughout: pressures are gauge Pa, time is s.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PamParams {
    /// Braid diameter at rest (m).
    pub d0: f64,
    /// Initial braid angle (rad).
    pub theta0: f64,
    /// Rest length (m).
    pub l0: f64,
    /// Contraction at the neutral pose.
    pub eps_pre: f64,
    /// Viscous damping (N s/m).
    pub f_damp: f64,
}

impl Default for PamParams {
    fn default() -> Self {
        Self {
            d0: 0.01,
            theta0: 23f64.to_radians(),
            l0: 0.2,
            eps_pre: 0.05,
            f_damp: 50.0,
        }
    }
}

impl PamParams {
    /// `(a, b)` of the braid law.
    pub fn braid_coefficients(&self) -> (f64, f64) {
        let a = 3.0 / self.theta0.tan().powi(2);
        let b = 1.0 / self.theta0.sin().powi(2);
        (a, b)
    }

    pub fn area(&self) -> f64 {
        PI * self.d0 * self.d0 / 4.0
    }

    /// Contraction at which the static force vanishes for any pressure.
    pub fn eps_max(&self) -> f64 {
        let (a, b) = self.braid_coefficients();
        1.0 - (b / a).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta0 > 0.0 && self.theta0 < PI / 2.0) {
            return Err(Error::config(format!("theta0 must lie in (0, pi/2), got {}", self.theta0)));
        }
        if !(self.d0 > 0.0 && self.l0 > 0.0 && self.f_damp >= 0.0) {
            return Err(Error::config("d0 and l0 must be > 0 and f_damp >= 0"));
        }
        if !(self.eps_pre >= 0.0 && self.eps_pre < self.eps_max()) {
            return Err(Error::config(format!(
                "eps_pre {} must lie in [0, eps_max = {})",
                self.eps_pre,
                self.eps_max()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArmParams {
    /// Moment of inertia about the pivot (kg m^2).
    pub inertia: f64,
    /// Pulley radius / moment arm of both muscles (m).
    pub moment_arm: f64,
    pub mass: f64,
    /// Pivot to center-of-mass distance (m).
    pub com_distance: f64,
    /// Viscous joint friction (N m s).
    pub friction: f64,
    pub gravity: f64,
    /// Hard stops at `±theta_max` (rad).
    pub theta_max: f64,
}

impl Default for ArmParams {
    fn default() -> Self {
        Self {
            inertia: 0.01,
            moment_arm: 0.02,
            mass: 0.5,
            com_distance: 0.15,
            friction: 0.05,
            gravity: 9.81,
            theta_max: 0.6,
        }
    }
}

impl ArmParams {
    pub fn validate(&self, pam: &PamParams) -> Result<()> {
        let all = [
            self.inertia,
            self.moment_arm,
            self.mass,
            self.com_distance,
            self.friction,
            self.gravity,
            self.theta_max,
        ];
        if !all.iter().all(|&x| x > 0.0 && x.is_finite()) {
            return Err(Error::config(format!("arm parameters must all be positive: {self:?}")));
        }
        let swing = self.moment_arm * self.theta_max / pam.l0;
        if pam.eps_pre + swing >= pam.eps_max() {
            return Err(Error::config(format!(
                "theta_max {} drives the agonist to eps = {} beyond eps_max = {}",
                self.theta_max,
                pam.eps_pre + swing,
                pam.eps_max()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PneumaticParams {
    pub p_atm: f64,
    pub p_supply: f64,
    pub tau_fill: f64,
    pub tau_vent: f64,
}

impl Default for PneumaticParams {
    fn default() -> Self {
        Self {
            p_atm: 101_325.0,
            p_supply: 601_325.0,
            tau_fill: 0.05,
            tau_vent: 0.05,
        }
    }
}

impl PneumaticParams {
    /// Largest gauge pressure a muscle can hold.
    pub fn p_max(&self) -> f64 {
        self.p_supply - self.p_atm
    }

    pub fn validate(&self) -> Result<()> {
        if self.p_supply > self.p_atm && self.tau_fill > 0.0 && self.tau_vent > 0.0 {
            Ok(())
        } else {
            Err(Error::config(format!(
                "pneumatics need p_supply > p_atm and positive time constants: {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ValveMode {
    Fill,
    Hold,
    Vent,
}

impl ValveMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ValveMode::Fill => "FILL",
            ValveMode::Hold => "HOLD",
            ValveMode::Vent => "VENT",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValveCommand {
    pub agonist: ValveMode,
    pub antagonist: ValveMode,
}

impl ValveCommand {
    pub const HOLD: ValveCommand = ValveCommand {
        agonist: ValveMode::Hold,
        antagonist: ValveMode::Hold,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Agonist,
    Antagonist,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantState {
    pub theta: f64,
    pub omega: f64,
    pub p_ag: f64,
    pub p_ant: f64,
    pub t: f64,
}

impl PlantState {
    /// At rest at `theta = 0` with both muscles at `p`.
    pub fn at_rest(p: f64) -> Self {
        Self {
            theta: 0.0,
            omega: 0.0,
            p_ag: p,
            p_ant: p,
            t: 0.0,
        }
    }

    fn is_finite(&self) -> bool {
        self.theta.is_finite() && self.omega.is_finite() && self.p_ag.is_finite() && self.p_ant.is_finite()
    }
}

/// Contraction of one muscle at joint angle `theta` (cable over a pulley).
pub fn muscle_contraction(theta: f64, side: Side, arm: &ArmParams, pam: &PamParams) -> Result<f64> {
    if !(theta.abs() <= arm.theta_max) {
        return Err(Error::contract(format!(
            "joint angle {theta} outside ±{}",
            arm.theta_max
        )));
    }
    let swing = arm.moment_arm * theta / pam.l0;
    Ok(match side {
        Side::Agonist => pam.eps_pre + swing,
        Side::Antagonist => pam.eps_pre - swing,
    })
}

/// Muscle tension (N) at gauge pressure `p`, contraction `eps` and contraction rate.
pub fn pam_force(p: f64, eps: f64, pam: &PamParams, eps_rate: f64) -> Result<f64> {
    if !(eps < 1.0) {
        return Err(Error::contract(format!("contraction {eps} must be < 1")));
    }
    if !(p >= 0.0) {
        return Err(Error::contract(format!("gauge pressure {p} must be >= 0")));
    }
    let (a, b) = pam.braid_coefficients();
    let f = p * pam.area() * (a * (1.0 - eps).powi(2) - b) - pam.f_damp * pam.l0 * eps_rate;
    Ok(f.max(0.0))
}

/// Exact first-order valve response over `dt` seconds.
pub fn pressure_step(p: f64, cmd: ValveMode, pneu: &PneumaticParams, dt: f64) -> f64 {
    let p_max = pneu.p_max();
    let next = match cmd {
        ValveMode::Hold => p,
        ValveMode::Fill => p_max + (p - p_max) * (-dt / pneu.tau_fill).exp(),
        ValveMode::Vent => p * (-dt / pneu.tau_vent).exp(),
    };
    next.clamp(0.0, p_max)
}

/// Muscle pair, arm and valves.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Plant {
    pub arm: ArmParams,
    pub pam: PamParams,
    pub pneumatic: PneumaticParams,
}

impl Plant {
    pub fn validate(&self) -> Result<()> {
        self.pam.validate()?;
        self.arm.validate(&self.pam)?;
        self.pneumatic.validate()
    }

    /// Net joint torque at the given state plus an external torque.
    pub fn torque(&self, s: &PlantState, external: f64) -> Result<f64> {
        let (arm, pam) = (&self.arm, &self.pam);
        let eps_ag = muscle_contraction(s.theta, Side::Agonist, arm, pam)?;
        let eps_ant = muscle_contraction(s.theta, Side::Antagonist, arm, pam)?;
        let rate = arm.moment_arm * s.omega / pam.l0;
        let f_ag = pam_force(s.p_ag, eps_ag, pam, rate)?;
        let f_ant = pam_force(s.p_ant, eps_ant, pam, -rate)?;
        Ok(arm.moment_arm * (f_ag - f_ant)
            - arm.mass * arm.gravity * arm.com_distance * s.theta.sin()
            - arm.friction * s.omega
            + external)
    }

    /// Kinetic + gravitational + muscle elastic energy (J), for a state whose
    /// muscles are in their active (non-floored) region. Damping is excluded.
    pub fn energy(&self, s: &PlantState) -> Result<f64> {
        let (arm, pam) = (&self.arm, &self.pam);
        let (a, b) = pam.braid_coefficients();
        let elastic = |p: f64, eps: f64| p * pam.area() * pam.l0 * (a * (1.0 - eps).powi(3) / 3.0 + b * eps);
        let eps_ag = muscle_contraction(s.theta, Side::Agonist, arm, pam)?;
        let eps_ant = muscle_contraction(s.theta, Side::Antagonist, arm, pam)?;
        Ok(0.5 * arm.inertia * s.omega * s.omega
            + arm.mass * arm.gravity * arm.com_distance * (1.0 - s.theta.cos())
            + elastic(s.p_ag, eps_ag)
            + elastic(s.p_ant, eps_ant))
    }

    /// Advances the plant by `dt_outer` seconds in `n_substeps` semi-implicit
    /// Euler steps, with the valve command and external torque held.
    pub fn step(
        &self,
        state: &PlantState,
        cmd: ValveCommand,
        dt_outer: f64,
        n_substeps: usize,
        external_torque: f64,
    ) -> Result<PlantState> {
        if n_substeps == 0 {
            return Err(Error::contract("plant_step needs at least one substep"));
        }
        if !state.is_finite() {
            return Err(Error::Divergence {
                t: state.t,
                detail: format!("non-finite plant state {state:?}"),
            });
        }
        let h = dt_outer / n_substeps as f64;
        let theta_max = self.arm.theta_max;
        let mut s = *state;
        for _ in 0..n_substeps {
            s.p_ag = pressure_step(s.p_ag, cmd.agonist, &self.pneumatic, h);
            s.p_ant = pressure_step(s.p_ant, cmd.antagonist, &self.pneumatic, h);
            let alpha = self.torque(&s, external_torque)? / self.arm.inertia;
            s.omega += alpha * h;
            s.theta += s.omega * h;
            if !s.is_finite() {
                return Err(Error::Divergence {
                    t: s.t,
                    detail: format!("non-finite plant state {s:?}"),
                });
            }
            if s.theta.abs() > theta_max {
                s.theta = theta_max.copysign(s.theta);
                s.omega = 0.0;
            }
        }
        s.t = state.t + dt_outer;
        Ok(s)
    }
}

/// Free-function form of [`Plant::step`] without external torque.
pub fn plant_step(
    state: &PlantState,
    cmd: ValveCommand,
    plant: &Plant,
    dt_outer: f64,
    n_substeps: usize,
) -> Result<PlantState> {
    plant.step(state, cmd, dt_outer, n_substeps, 0.0)
}
