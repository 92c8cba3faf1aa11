//! Domain types shared by the simulator and the estimator, plus the two
//! physical definitions everything else builds on: the inertia constant of
//! a rotating mass and the per-unit size of a power imbalance.
//!
//! Sign convention: a machine's imbalance is `P_m - P_e`. Losing generation
//! makes it negative and drives frequency down; estimators work with
//! magnitudes so inertia always comes out positive.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One synchronous machine in the classical model.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub id: String,
    /// Inertia constant on the machine's own rating, seconds.
    pub h_const: f64,
    /// Apparent-power rating, MVA.
    pub s_rated: f64,
    /// Mechanical power setpoint, MW.
    pub p_mech: f64,
    /// Internal EMF magnitude, per-unit.
    pub e_internal: f64,
    /// Reactance to the common bus, per-unit on the system base.
    pub x_reactance: f64,
    /// Initial rotor angle in radians. `None` lets the simulator solve for
    /// the pre-event equilibrium.
    pub delta0: Option<f64>,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        let field = |name: &str| format!("generator[{}].{name}", self.id);
        if self.id.is_empty() {
            return Err(Error::validation("generator.id", "must not be empty"));
        }
        positive(&field("h_const"), self.h_const)?;
        positive(&field("s_rated"), self.s_rated)?;
        positive(&field("x_reactance"), self.x_reactance)?;
        positive(&field("e_internal"), self.e_internal)?;
        if !(self.p_mech >= 0.0) || !self.p_mech.is_finite() {
            return Err(Error::validation(field("p_mech"), "must be finite and >= 0"));
        }
        if let Some(d) = self.delta0 {
            if !d.is_finite() {
                return Err(Error::validation(field("delta0"), "must be finite"));
            }
        }
        Ok(())
    }

    /// Stored kinetic energy at nominal speed, MJ (`H * S`).
    pub fn kinetic_energy(&self) -> f64 {
        self.h_const * self.s_rated
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub f_nominal: f64,
    /// System base power, MVA.
    pub s_base: f64,
    pub power_factor: f64,
    pub generators: Vec<GeneratorSpec>,
    /// Total constant-power load, MW.
    pub load_mw: f64,
    /// Load-frequency sensitivity, per-unit power per per-unit frequency.
    pub load_damping: f64,
}

impl SystemSpec {
    pub fn validate(&self) -> Result<()> {
        positive("system.f_nominal", self.f_nominal)?;
        positive("system.s_base", self.s_base)?;
        if !(self.power_factor > 0.0 && self.power_factor <= 1.0) {
            return Err(Error::validation(
                "system.power_factor",
                format!("must lie in (0, 1], got {}", self.power_factor),
            ));
        }
        if self.generators.is_empty() {
            return Err(Error::validation("system.generators", "must not be empty"));
        }
        let mut seen = std::collections::HashSet::new();
        for g in &self.generators {
            g.validate()?;
            if !seen.insert(g.id.as_str()) {
                return Err(Error::validation(
                    "system.generators",
                    format!("duplicate generator id `{}`", g.id),
                ));
            }
        }
        if !(self.load_mw >= 0.0) || !self.load_mw.is_finite() {
            return Err(Error::validation("system.load_mw", "must be finite and >= 0"));
        }
        if !(self.load_damping >= 0.0) || !self.load_damping.is_finite() {
            return Err(Error::validation("system.load_damping", "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn generator(&self, id: &str) -> Option<&GeneratorSpec> {
        self.generators.iter().find(|g| g.id == id)
    }

    /// Generators still connected after the scenario's event.
    pub fn surviving<'a>(&'a self, scenario: &'a DisturbanceScenario) -> impl Iterator<Item = &'a GeneratorSpec> + 'a {
        self.generators
            .iter()
            .filter(move |g| scenario.tripped_generator.as_deref() != Some(g.id.as_str()))
    }
}

/// Uniformly sampled frequency record of one channel. Sample `k` sits at
/// `t_start + k * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTrace {
    pub channel_id: String,
    pub t_start: f64,
    pub dt: f64,
    pub samples: Vec<f64>,
}

impl FrequencyTrace {
    pub fn new(channel_id: impl Into<String>, t_start: f64, dt: f64, samples: Vec<f64>) -> Result<Self> {
        let trace = FrequencyTrace {
            channel_id: channel_id.into(),
            t_start,
            dt,
            samples,
        };
        trace.validate()?;
        Ok(trace)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.t_start.is_finite() {
            return Err(Error::invalid("trace t_start must be finite"));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::invalid(format!("trace dt must be > 0, got {}", self.dt)));
        }
        if self.samples.is_empty() {
            return Err(Error::invalid(format!("trace `{}` has no samples", self.channel_id)));
        }
        if let Some(k) = self.samples.iter().position(|f| !f.is_finite()) {
            return Err(Error::invalid(format!(
                "trace `{}` sample {k} is not finite",
                self.channel_id
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time_at(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time_at(self.samples.len().saturating_sub(1))
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples.len()).map(|k| self.time_at(k))
    }

    /// Same start, step and length as `other`, bit for bit.
    pub fn same_grid(&self, other: &FrequencyTrace) -> bool {
        self.t_start == other.t_start && self.dt == other.dt && self.len() == other.len()
    }
}

/// Which total the lost power is normalised by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseConvention {
    /// Total generation (or load) before the event.
    PreEventTotal,
    /// Pre-event total minus the lost power.
    PostEventTotal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceScenario {
    pub event_time: f64,
    /// Generation lost, MW (positive).
    pub loss_mw: f64,
    pub pre_event_load_mw: f64,
    pub base_convention: BaseConvention,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tripped_generator: Option<String>,
}

impl DisturbanceScenario {
    pub fn validate(&self) -> Result<()> {
        if !self.event_time.is_finite() {
            return Err(Error::validation("scenario.event_time", "must be finite"));
        }
        if !(self.loss_mw >= 0.0) || !self.loss_mw.is_finite() {
            return Err(Error::validation("scenario.loss_mw", "must be finite and >= 0"));
        }
        positive("scenario.pre_event_load_mw", self.pre_event_load_mw)?;
        if self.base_convention == BaseConvention::PostEventTotal && self.loss_mw >= self.pre_event_load_mw {
            return Err(Error::validation(
                "scenario.loss_mw",
                "must be below pre_event_load_mw under the post-event base convention",
            ));
        }
        Ok(())
    }

    /// Base in MW before the power-factor conversion.
    pub fn base_mw(&self) -> f64 {
        match self.base_convention {
            BaseConvention::PreEventTotal => self.pre_event_load_mw,
            BaseConvention::PostEventTotal => self.pre_event_load_mw - self.loss_mw,
        }
    }
}

/// Output of the system-level estimation pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    /// Fitted slope, Hz/s, signed.
    pub rocof: f64,
    /// Estimated inertia constant, seconds.
    pub h_estimate: f64,
    /// Absolute window `(start, end)` in seconds.
    pub window: (f64, f64),
    pub n_samples_used: usize,
    pub r_squared: f64,
    /// Root-mean-square fit residual, Hz.
    pub rmse: f64,
}

/// `H = J * omega_r^2 / (2 * S_r)`, seconds. Inputs in SI units.
pub fn inertia_constant_from_physical(j_moment: f64, omega_rated: f64, s_rated: f64) -> Result<f64> {
    if !(omega_rated > 0.0) {
        return Err(Error::invalid(format!("omega_rated must be > 0, got {omega_rated}")));
    }
    if !(s_rated > 0.0) {
        return Err(Error::invalid(format!("s_rated must be > 0, got {s_rated}")));
    }
    if !(j_moment >= 0.0) {
        return Err(Error::invalid(format!(
            "moment of inertia must be >= 0, got {j_moment}"
        )));
    }
    Ok(0.5 * j_moment * omega_rated * omega_rated / s_rated)
}

/// Lost power as a fraction of the MVA base (`base_mw / power_factor`).
pub fn per_unit_imbalance(scenario: &DisturbanceScenario, power_factor: f64) -> Result<f64> {
    if !(power_factor > 0.0 && power_factor <= 1.0) {
        return Err(Error::invalid(format!(
            "power factor must lie in (0, 1], got {power_factor}"
        )));
    }
    let base_mw = scenario.base_mw();
    if !(base_mw > 0.0) {
        return Err(Error::DegenerateBase { base_mw });
    }
    Ok(scenario.loss_mw / (base_mw / power_factor))
}

fn positive(field: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(field, format!("must be finite and > 0, got {value}")))
    }
}
