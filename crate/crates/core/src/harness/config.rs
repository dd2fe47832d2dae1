use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cerebellum::CerebellarConfig;
use crate::control::ControlConfig;
use crate::error::{Error, Result};
use crate::plant::Plant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceShape {
    Sine,
    /// `offset` before `step_time`, `offset + amplitude` after.
    Step,
    /// Constant `offset`.
    Hold,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceConfig {
    pub shape: ReferenceShape,
    /// rad
    pub amplitude: f64,
    /// Hz
    pub frequency: f64,
    /// rad
    pub offset: f64,
    /// s
    pub step_time: f64,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self {
            shape: ReferenceShape::Sine,
            amplitude: 0.35,
            frequency: 0.5,
            offset: 0.0,
            step_time: 0.5,
        }
    }
}

impl ReferenceConfig {
    /// Length of one reference period (s).
    pub fn period(&self) -> f64 {
        1.0 / self.frequency
    }
}

/// External torque pulse applied to the joint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Disturbance {
    /// Pulse start (s).
    pub time: f64,
    /// N m
    pub torque: f64,
    /// Pulse length (s).
    pub width: f64,
}

impl Default for Disturbance {
    fn default() -> Self {
        Self {
            time: 22.0,
            torque: 0.05,
            width: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Total simulated time (s).
    pub duration: f64,
    /// Online-learning phase before the evaluation window (s).
    pub training_duration: f64,
    pub seed: u64,
    /// Interval between GR→PK weight snapshots (s); 0 keeps only first and last.
    pub snapshot_interval: f64,
    /// Stop plasticity once training ends.
    pub freeze_after_training: bool,
    pub reference: ReferenceConfig,
    pub disturbance: Option<Disturbance>,
    pub plant: Plant,
    pub control: ControlConfig,
    pub cerebellum: CerebellarConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            duration: 44.0,
            training_duration: 40.0,
            seed: 42,
            snapshot_interval: 5.0,
            freeze_after_training: false,
            reference: ReferenceConfig::default(),
            disturbance: None,
            plant: Plant::default(),
            control: ControlConfig::default(),
            cerebellum: CerebellarConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Network configuration with the experiment seed applied.
    pub fn cerebellar_config(&self) -> CerebellarConfig {
        CerebellarConfig {
            rng_seed: self.seed,
            ..self.cerebellum.clone()
        }
    }

    /// Control period in seconds.
    pub fn dt_seconds(&self) -> f64 {
        self.control.dt_control * 1e-3
    }

    /// Number of control ticks in the run.
    pub fn ticks(&self) -> usize {
        (self.duration / self.dt_seconds()).round() as usize
    }

    /// `[training_duration, duration)`.
    pub fn evaluation_window(&self) -> (f64, f64) {
        (self.training_duration, self.duration)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::config(format!("duration must be > 0, got {}", self.duration)));
        }
        if !(self.training_duration >= 0.0 && self.training_duration < self.duration) {
            return Err(Error::config(format!(
                "training_duration {} must lie in [0, duration = {})",
                self.training_duration, self.duration
            )));
        }
        if !(self.snapshot_interval >= 0.0) {
            return Err(Error::config("snapshot_interval must be >= 0"));
        }
        self.plant.validate()?;
        self.control.validate(self.plant.pneumatic.p_max())?;
        self.cerebellum.validate()?;

        let r = &self.reference;
        let theta_max = self.plant.arm.theta_max;
        if !(r.amplitude >= 0.0) {
            return Err(Error::config(format!("amplitude must be >= 0, got {}", r.amplitude)));
        }
        if r.amplitude > theta_max {
            return Err(Error::config(format!(
                "reference amplitude {} exceeds theta_max {}",
                r.amplitude, theta_max
            )));
        }
        if r.offset.abs() + r.amplitude > theta_max {
            return Err(Error::config(format!(
                "reference offset {} plus amplitude {} exceeds theta_max {}",
                r.offset, r.amplitude, theta_max
            )));
        }
        if r.shape == ReferenceShape::Sine && !(r.frequency > 0.0) {
            return Err(Error::config(format!(
                "sine reference needs frequency > 0, got {}",
                r.frequency
            )));
        }
        if let Some(d) = &self.disturbance {
            if !(d.width >= 0.0 && d.time >= 0.0 && d.torque.is_finite()) {
                return Err(Error::config(format!("invalid disturbance {d:?}")));
            }
        }
        Ok(())
    }
}

/// Reads and validates a TOML experiment file. Every key is optional and
/// unknown keys are rejected.
pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    let cfg: ExperimentConfig = toml::from_str(&text).map_err(|source| Error::ConfigSyntax {
        path: path.to_owned(),
        source: Box::new(source),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::ControlMode;
    use std::io::Write;

    fn write(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn empty_file_gives_defaults() {
        let f = write("");
        let cfg = parse_config(f.path()).unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
    }

    #[test]
    fn nested_values_and_seed() {
        let f = write(
            "seed = 7\nduration = 2.0\ntraining_duration = 1.0\n\
             [control]\nmode = \"FF_ONLY\"\n[control.gains]\nkp = 5.0\nkd = 0.5\n\
             [cerebellum.stdp]\nnu_ltd = 0.03\n[disturbance]\ntime = 1.0\ntorque = 0.1\nwidth = 0.05\n",
        );
        let cfg = parse_config(f.path()).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.cerebellar_config().rng_seed, 7);
        assert_eq!(cfg.control.mode, ControlMode::FfOnly);
        assert_eq!(cfg.control.gains.kp, 5.0);
        assert_eq!(cfg.cerebellum.stdp.nu_ltd, 0.03);
        assert_eq!(cfg.cerebellum.stdp.nu_ltp, 0.002);
        assert_eq!(cfg.disturbance.unwrap().torque, 0.1);
    }

    #[test]
    fn distinct_errors() {
        let missing = parse_config("/nonexistent/experiment.toml").unwrap_err();
        assert!(matches!(missing, Error::Io { .. }));

        let malformed = parse_config(write("duration = = 3").path()).unwrap_err();
        assert!(matches!(malformed, Error::ConfigSyntax { .. }));

        let unknown = parse_config(write("durration = 3.0").path()).unwrap_err();
        assert!(matches!(unknown, Error::ConfigSyntax { .. }));
        assert!(unknown.to_string().contains("durration"));

        let too_wide = parse_config(write("[reference]\namplitude = 0.9").path()).unwrap_err();
        let msg = too_wide.to_string();
        assert!(matches!(too_wide, Error::Config(_)));
        assert!(msg.contains("0.9") && msg.contains("0.6"), "{msg}");

        let shape = parse_config(write("[reference]\nshape = \"triangle\"").path()).unwrap_err();
        assert!(matches!(shape, Error::ConfigSyntax { .. }));
    }
}
