//! Swing-equation simulator producing PMU-like frequency traces with a known
//! ground-truth inertia.
//!
//! Two models are provided: a single-mass centre-of-inertia model
//! ([`simulate_aggregate`]) and a classical multi-machine model on a star
//! network ([`simulate_multimachine`]). Both integrate with fixed-step RK4 and
//! sample every `output_dt / integration_step` steps. Discrete switches (the
//! event itself, governor activation) are evaluated at step starts, so the
//! event time must sit on the integration grid.

mod aggregate;
mod artifacts;
mod network;
mod rk4;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DisturbanceScenario;

pub use aggregate::{simulate_aggregate, simulate_aggregate_channels};
pub use artifacts::{channel_seed, inject_artifacts};
pub use network::{simulate_multimachine, BusSolution, MultimachineRun, StarNetwork};

/// First-order droop governor: `T * dp/dt = (1/R) * (f_n - f)/f_n - p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GovernorModel {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "GovernorModel::default_droop")]
    pub droop_r: f64,
    #[serde(default = "GovernorModel::default_time_constant")]
    pub time_constant: f64,
    /// Delay after the event before the governor starts acting, seconds.
    #[serde(default)]
    pub activation_delay: f64,
}

impl GovernorModel {
    fn default_droop() -> f64 {
        0.05
    }

    fn default_time_constant() -> f64 {
        5.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.enabled {
            if !(self.droop_r > 0.0) || !self.droop_r.is_finite() {
                return Err(Error::validation("sim.governor.droop_r", "must be > 0"));
            }
            if !(self.time_constant > 0.0) || !self.time_constant.is_finite() {
                return Err(Error::validation("sim.governor.time_constant", "must be > 0"));
            }
        }
        if !(self.activation_delay >= 0.0) || !self.activation_delay.is_finite() {
            return Err(Error::validation("sim.governor.activation_delay", "must be >= 0"));
        }
        Ok(())
    }
}

impl Default for GovernorModel {
    fn default() -> Self {
        GovernorModel {
            enabled: false,
            droop_r: Self::default_droop(),
            time_constant: Self::default_time_constant(),
            activation_delay: 0.0,
        }
    }
}

/// Phenomenological contamination of the first post-event second (uptick
/// plus damped back-swing oscillation) and white measurement noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArtifactModel {
    #[serde(default)]
    pub backswing_amplitude: f64,
    #[serde(default = "ArtifactModel::default_tau")]
    pub backswing_decay_tau: f64,
    #[serde(default)]
    pub backswing_osc_freq: f64,
    #[serde(default)]
    pub initial_uptick_hz: f64,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub rng_seed: u64,
}

impl ArtifactModel {
    fn default_tau() -> f64 {
        0.3
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.backswing_decay_tau > 0.0) || !self.backswing_decay_tau.is_finite() {
            return Err(Error::validation("sim.artifacts.backswing_decay_tau", "must be > 0"));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::validation("sim.artifacts.noise_sigma", "must be >= 0"));
        }
        for (name, v) in [
            ("backswing_amplitude", self.backswing_amplitude),
            ("backswing_osc_freq", self.backswing_osc_freq),
            ("initial_uptick_hz", self.initial_uptick_hz),
        ] {
            if !v.is_finite() {
                return Err(Error::validation(format!("sim.artifacts.{name}"), "must be finite"));
            }
        }
        Ok(())
    }

    /// True when injection leaves a trace unchanged.
    pub fn is_identity(&self) -> bool {
        self.backswing_amplitude == 0.0 && self.initial_uptick_hz == 0.0 && self.noise_sigma == 0.0
    }
}

impl Default for ArtifactModel {
    fn default() -> Self {
        ArtifactModel {
            backswing_amplitude: 0.0,
            backswing_decay_tau: Self::default_tau(),
            backswing_osc_freq: 0.0,
            initial_uptick_hz: 0.0,
            noise_sigma: 0.0,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default = "SimConfig::default_step")]
    pub integration_step: f64,
    pub duration: f64,
    #[serde(default = "SimConfig::default_output_dt")]
    pub output_dt: f64,
    #[serde(default)]
    pub governor: GovernorModel,
    #[serde(default)]
    pub artifacts: ArtifactModel,
}

impl SimConfig {
    fn default_step() -> f64 {
        0.001
    }

    fn default_output_dt() -> f64 {
        0.040
    }

    pub fn new(duration: f64) -> Self {
        SimConfig {
            integration_step: Self::default_step(),
            duration,
            output_dt: Self::default_output_dt(),
            governor: GovernorModel::default(),
            artifacts: ArtifactModel::default(),
        }
    }

    /// Checks the configuration on its own and against the scenario it is
    /// about to drive.
    pub fn validate(&self, scenario: &DisturbanceScenario) -> Result<()> {
        let h = self.integration_step;
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::validation("sim.integration_step", "must be > 0"));
        }
        if !(self.output_dt >= h) || !self.output_dt.is_finite() {
            return Err(Error::validation(
                "sim.output_dt",
                "must be finite and >= integration_step",
            ));
        }
        if !self.duration.is_finite() || self.duration <= scenario.event_time {
            return Err(Error::validation(
                "sim.duration",
                format!(
                    "must exceed the event time {} s, got {} s",
                    scenario.event_time, self.duration
                ),
            ));
        }
        if scenario.event_time < 0.0 {
            return Err(Error::validation("scenario.event_time", "must be >= 0 for simulation"));
        }
        grid_steps(self.output_dt, h)
            .ok_or_else(|| Error::validation("sim.output_dt", "must be an integer multiple of integration_step"))?;
        grid_steps(scenario.event_time, h)
            .ok_or_else(|| Error::validation("scenario.event_time", "must lie on the integration grid"))?;
        if self.governor.enabled {
            grid_steps(scenario.event_time + self.governor.activation_delay, h).ok_or_else(|| {
                Error::validation(
                    "sim.governor.activation_delay",
                    "event_time + activation_delay must lie on the integration grid",
                )
            })?;
        }
        self.governor.validate()?;
        self.artifacts.validate()
    }

    /// Steps per output sample, and number of output samples.
    pub(crate) fn sampling(&self) -> (usize, usize) {
        let stride = grid_steps(self.output_dt, self.integration_step).expect("validated");
        let n_out = (self.duration / self.output_dt + 1e-9).floor() as usize + 1;
        (stride, n_out)
    }
}

/// `value / step` as an integer if it is one to within 1e-9 relative.
fn grid_steps(value: f64, step: f64) -> Option<usize> {
    let ratio = value / step;
    let n = ratio.round();
    if n >= 0.0 && (ratio - n).abs() <= 1e-9 * n.max(1.0) {
        Some(n as usize)
    } else {
        None
    }
}

/// Which discrete regime a step runs in, fixed at the step start.
#[derive(Debug, Clone, Copy)]
struct Phase {
    post_event: bool,
    governor_active: bool,
}

impl Phase {
    fn at_step(k: usize, event_step: usize, governor_step: Option<usize>) -> Self {
        Phase {
            post_event: k >= event_step,
            governor_active: governor_step.is_some_and(|g| k >= g),
        }
    }
}
