use super::rk4::Rk4;
use super::{grid_steps, inject_artifacts, Phase, SimConfig};
use crate::error::{Error, Result};
use crate::estimator::{ground_truth_inertia, MvaBasis};
use crate::model::{per_unit_imbalance, DisturbanceScenario, FrequencyTrace, SystemSpec};

/// Channel id of the single trace produced by [`simulate_aggregate`].
pub const AGGREGATE_CHANNEL: &str = "coi";

/// Single-mass centre-of-inertia model:
///
/// `2 H_T / f_n * df/dt = -dP + p_gov + D * (f_n - f) / f_n` after the event,
/// zero before it. `H_T` is the rating-weighted inertia of the surviving
/// fleet and `dP` the per-unit loss on the scenario's base.
pub fn simulate_aggregate(
    system: &SystemSpec,
    scenario: &DisturbanceScenario,
    config: &SimConfig,
) -> Result<FrequencyTrace> {
    let clean = integrate(system, scenario, config, AGGREGATE_CHANNEL)?;
    Ok(inject_artifacts(&clean, &config.artifacts, scenario.event_time))
}

/// Runs the aggregate model once and replicates it over several channels,
/// each with its own artifact realisation (like a handful of PMUs that all see
/// the system frequency).
pub fn simulate_aggregate_channels(
    system: &SystemSpec,
    scenario: &DisturbanceScenario,
    config: &SimConfig,
    channel_ids: &[String],
) -> Result<Vec<FrequencyTrace>> {
    if channel_ids.is_empty() {
        return Err(Error::invalid("at least one output channel is required"));
    }
    let clean = integrate(system, scenario, config, AGGREGATE_CHANNEL)?;
    Ok(channel_ids
        .iter()
        .map(|id| {
            let mut trace = clean.clone();
            trace.channel_id = id.clone();
            inject_artifacts(&trace, &config.artifacts, scenario.event_time)
        })
        .collect())
}

fn integrate(
    system: &SystemSpec,
    scenario: &DisturbanceScenario,
    config: &SimConfig,
    channel: &str,
) -> Result<FrequencyTrace> {
    system.validate()?;
    scenario.validate()?;
    config.validate(scenario)?;

    let excluded: Vec<&str> = scenario.tripped_generator.iter().map(String::as_str).collect();
    let h_total = ground_truth_inertia(&system.generators, &excluded, MvaBasis::Rated)?;
    let dp = per_unit_imbalance(scenario, system.power_factor)?;
    let f_n = system.f_nominal;
    let damping = system.load_damping;
    let gov = &config.governor;

    let h = config.integration_step;
    let (stride, n_out) = config.sampling();
    let event_step = grid_steps(scenario.event_time, h).expect("validated");
    let governor_step = gov
        .enabled
        .then(|| grid_steps(scenario.event_time + gov.activation_delay, h).expect("validated"));

    // State: [frequency (Hz), governor power (pu)].
    let mut y = [f_n, 0.0];
    let mut rk = Rk4::new(2);
    let mut samples = Vec::with_capacity(n_out);
    samples.push(y[0]);
    let total_steps = (n_out - 1) * stride;
    for k in 0..total_steps {
        let phase = Phase::at_step(k, event_step, governor_step);
        let t = k as f64 * h;
        rk.step(t, h, &mut y, |_, s, ds| {
            let (f, p_gov) = (s[0], s[1]);
            let dev = (f_n - f) / f_n;
            let imbalance = if phase.post_event {
                -dp + p_gov + damping * dev
            } else {
                0.0
            };
            ds[0] = f_n * imbalance / (2.0 * h_total);
            ds[1] = if phase.governor_active {
                (dev / gov.droop_r - p_gov) / gov.time_constant
            } else {
                0.0
            };
            Ok(())
        })?;
        if (k + 1) % stride == 0 {
            samples.push(y[0]);
        }
    }
    FrequencyTrace::new(channel, 0.0, config.output_dt, samples)
}
