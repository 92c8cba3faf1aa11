//! Classical multi-machine model on a star network.
//!
//! Every generator is a constant EMF `E_i` behind a reactance `X_i` tied to one
//! common load bus at `V /_ theta`. Electrical output follows the power-angle
//! relation `P_ei = E_i V / X_i * sin(delta_i - theta)`. The bus voltage is
//! re-solved at every RK4 stage from active and reactive balance with the
//! constant-power load.

use std::f64::consts::PI;

use super::rk4::Rk4;
use super::{grid_steps, inject_artifacts, Phase, SimConfig};
use crate::error::{Error, Result};
use crate::model::{DisturbanceScenario, FrequencyTrace, SystemSpec};

const BUS_TOL: f64 = 1e-10;
const BUS_MAX_ITER: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BusSolution {
    /// Common-bus voltage magnitude, per-unit.
    pub v: f64,
    /// Common-bus angle, radians.
    pub theta: f64,
    pub iterations: usize,
}

/// Generators seen from the common bus: `(E_i, X_i)` for the connected set.
#[derive(Debug, Clone)]
pub struct StarNetwork {
    pub emf: Vec<f64>,
    pub reactance: Vec<f64>,
}

impl StarNetwork {
    /// Active and reactive mismatch at the bus, per-unit on the system base.
    fn mismatch(&self, angles: &[f64], v: f64, theta: f64, p_load: f64, q_load: f64) -> [f64; 2] {
        let mut p = 0.0;
        let mut q = 0.0;
        for ((&e, &x), &d) in self.emf.iter().zip(&self.reactance).zip(angles) {
            let (s, c) = (d - theta).sin_cos();
            p += e * v / x * s;
            q += (e * v * c - v * v) / x;
        }
        [p - p_load, q - q_load]
    }

    /// Newton solve of the 2x2 bus balance, warm-started from `guess`.
    pub fn solve(&self, angles: &[f64], p_load: f64, q_load: f64, guess: (f64, f64), time: f64) -> Result<BusSolution> {
        let (mut v, mut theta) = guess;
        let mut residual = f64::INFINITY;
        for it in 0..=BUS_MAX_ITER {
            let [f1, f2] = self.mismatch(angles, v, theta, p_load, q_load);
            residual = f1.abs().max(f2.abs());
            if residual < BUS_TOL {
                return Ok(BusSolution {
                    v,
                    theta,
                    iterations: it,
                });
            }
            if it == BUS_MAX_ITER || !residual.is_finite() {
                break;
            }
            let (mut j11, mut j12, mut j21, mut j22) = (0.0, 0.0, 0.0, 0.0);
            for ((&e, &x), &d) in self.emf.iter().zip(&self.reactance).zip(angles) {
                let (s, c) = (d - theta).sin_cos();
                j11 += e / x * s;
                j12 -= e * v / x * c;
                j21 += (e * c - 2.0 * v) / x;
                j22 += e * v / x * s;
            }
            let det = j11 * j22 - j12 * j21;
            if det == 0.0 || !det.is_finite() {
                break;
            }
            v -= (j22 * f1 - j12 * f2) / det;
            theta -= (-j21 * f1 + j11 * f2) / det;
        }
        Err(Error::NetworkSolveDiverged {
            time,
            iterations: BUS_MAX_ITER,
            residual,
        })
    }
}

/// Output of [`simulate_multimachine`].
#[derive(Debug, Clone, PartialEq)]
pub struct MultimachineRun {
    /// One trace per surviving generator, in system order.
    pub traces: Vec<FrequencyTrace>,
    /// Per-channel `P_m - P_e` on the machine's own rating, same grid as
    /// `traces`. Artifact-free.
    pub imbalance_pu: Vec<Vec<f64>>,
    /// Some machine drifted more than pi from the centre-of-inertia angle.
    pub synchronism_lost: bool,
    /// Largest `|delta_i - delta_coi|` seen at the output instants, radians.
    pub max_angle_spread: f64,
}

struct Machine {
    h_s: f64,
    s_rated: f64,
    p_mech_pu: f64,
    emf: f64,
    reactance: f64,
}

/// Integrates the multi-machine model. The tripped generator (if any) leaves
/// the network at `event_time`; with no tripped generator the loss is applied
/// as a load step of `loss_mw`.
pub fn simulate_multimachine(
    system: &SystemSpec,
    scenario: &DisturbanceScenario,
    config: &SimConfig,
) -> Result<MultimachineRun> {
    system.validate()?;
    scenario.validate()?;
    config.validate(scenario)?;

    let tripped =
        match &scenario.tripped_generator {
            Some(id) => {
                Some(system.generators.iter().position(|g| &g.id == id).ok_or_else(|| {
                    Error::validation("scenario.tripped_generator", format!("unknown generator `{id}`"))
                })?)
            }
            None => None,
        };
    if tripped.is_some() && system.generators.len() < 2 {
        return Err(Error::validation(
            "scenario.tripped_generator",
            "no generator would survive the trip",
        ));
    }

    let n = system.generators.len();
    let s_base = system.s_base;
    let f_n = system.f_nominal;
    let machines: Vec<Machine> = system
        .generators
        .iter()
        .map(|g| Machine {
            h_s: g.h_const * g.s_rated,
            s_rated: g.s_rated,
            p_mech_pu: g.p_mech / s_base,
            emf: g.e_internal,
            reactance: g.x_reactance,
        })
        .collect();
    let load_step = if tripped.is_none() {
        scenario.loss_mw / s_base
    } else {
        0.0
    };
    let p_load0 = system.load_mw / s_base;
    let q_load = p_load0 * (1.0 / system.power_factor.powi(2) - 1.0).max(0.0).sqrt();

    let network_for = |post_event: bool| StarNetwork {
        emf: machines
            .iter()
            .enumerate()
            .filter(|(i, _)| !(post_event && Some(*i) == tripped))
            .map(|(_, m)| m.emf)
            .collect(),
        reactance: machines
            .iter()
            .enumerate()
            .filter(|(i, _)| !(post_event && Some(*i) == tripped))
            .map(|(_, m)| m.reactance)
            .collect(),
    };
    let pre_net = network_for(false);
    let post_net = network_for(true);

    let (delta0, bus0) = initial_angles(system, &machines, &pre_net, p_load0, q_load)?;

    let h = config.integration_step;
    let (stride, n_out) = config.sampling();
    let event_step = grid_steps(scenario.event_time, h).expect("validated");
    let gov = &config.governor;
    let governor_step = gov
        .enabled
        .then(|| grid_steps(scenario.event_time + gov.activation_delay, h).expect("validated"));

    // State layout: [delta_0..n, f_0..n, p_gov_0..n]; p_gov in MW.
    let mut y = vec![0.0; 3 * n];
    y[..n].copy_from_slice(&delta0);
    y[n..2 * n].fill(f_n);
    let mut bus_guess = (bus0.v, bus0.theta);
    let mut active_angles = Vec::with_capacity(n);

    let surviving: Vec<usize> = (0..n).filter(|&i| Some(i) != tripped).collect();
    let mut freq_out: Vec<Vec<f64>> = vec![Vec::with_capacity(n_out); surviving.len()];
    let mut imb_out: Vec<Vec<f64>> = vec![Vec::with_capacity(n_out); surviving.len()];
    let mut max_spread: f64 = 0.0;

    // Electrical outputs (pu on system base) at a state, plus the bus solution.
    let mut electrical =
        |y: &[f64], post_event: bool, guess: (f64, f64), time: f64, p_e: &mut [f64]| -> Result<BusSolution> {
            let net = if post_event { &post_net } else { &pre_net };
            active_angles.clear();
            for i in 0..n {
                if !(post_event && Some(i) == tripped) {
                    active_angles.push(y[i]);
                }
            }
            let f_coi = {
                let (mut num, mut den) = (0.0, 0.0);
                for i in 0..n {
                    if !(post_event && Some(i) == tripped) {
                        num += machines[i].h_s * y[n + i];
                        den += machines[i].h_s;
                    }
                }
                num / den
            };
            let p_load = p_load0 + if post_event { load_step } else { 0.0 } - system.load_damping * (f_n - f_coi) / f_n;
            let bus = net.solve(&active_angles, p_load, q_load, guess, time)?;
            for i in 0..n {
                p_e[i] = if post_event && Some(i) == tripped {
                    0.0
                } else {
                    machines[i].emf * bus.v / machines[i].reactance * (y[i] - bus.theta).sin()
                };
            }
            Ok(bus)
        };

    let mut p_e = vec![0.0; n];
    let mut record = |y: &[f64], p_e: &[f64], post_event: bool, max_spread: &mut f64| {
        for (c, &i) in surviving.iter().enumerate() {
            freq_out[c].push(y[n + i]);
            let p_m = machines[i].p_mech_pu * s_base + y[2 * n + i];
            imb_out[c].push((p_m - p_e[i] * s_base) / machines[i].s_rated);
        }
        let active: Vec<usize> = (0..n).filter(|&i| !(post_event && Some(i) == tripped)).collect();
        let total: f64 = active.iter().map(|&i| machines[i].h_s).sum();
        let delta_coi: f64 = active.iter().map(|&i| machines[i].h_s * y[i]).sum::<f64>() / total;
        for &i in &active {
            *max_spread = max_spread.max((y[i] - delta_coi).abs());
        }
    };

    let bus = electrical(&y, false, bus_guess, 0.0, &mut p_e)?;
    bus_guess = (bus.v, bus.theta);
    record(&y, &p_e, event_step == 0, &mut max_spread);

    let mut rk = Rk4::new(3 * n);
    let total_steps = (n_out - 1) * stride;
    let omega_scale = 2.0 * PI;
    for k in 0..total_steps {
        let phase = Phase::at_step(k, event_step, governor_step);
        let t = k as f64 * h;
        let mut stage_pe = vec![0.0; n];
        let mut guess = bus_guess;
        rk.step(t, h, &mut y, |ts, s, ds| {
            let bus = electrical(s, phase.post_event, guess, ts, &mut stage_pe)?;
            guess = (bus.v, bus.theta);
            for i in 0..n {
                if phase.post_event && Some(i) == tripped {
                    ds[i] = 0.0;
                    ds[n + i] = 0.0;
                    ds[2 * n + i] = 0.0;
                    continue;
                }
                let m = &machines[i];
                let f = s[n + i];
                ds[i] = omega_scale * (f - f_n);
                let p_m = m.p_mech_pu + s[2 * n + i] / s_base;
                // (2 H_i S_i / (S_b f_n)) df_i/dt = P_m - P_e, pu on S_b.
                ds[n + i] = (p_m - stage_pe[i]) * s_base * f_n / (2.0 * m.h_s);
                ds[2 * n + i] = if phase.governor_active {
                    let target = m.s_rated / gov.droop_r * (f_n - f) / f_n;
                    (target - s[2 * n + i]) / gov.time_constant
                } else {
                    0.0
                };
            }
            Ok(())
        })?;
        bus_guess = guess;
        if (k + 1) % stride == 0 {
            let post = k + 1 >= event_step;
            let bus = electrical(&y, post, bus_guess, t + h, &mut p_e)?;
            bus_guess = (bus.v, bus.theta);
            record(&y, &p_e, post, &mut max_spread);
        }
    }

    let traces = surviving
        .iter()
        .zip(freq_out)
        .map(|(&i, samples)| {
            let clean = FrequencyTrace::new(system.generators[i].id.clone(), 0.0, config.output_dt, samples)?;
            Ok(inject_artifacts(&clean, &config.artifacts, scenario.event_time))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(MultimachineRun {
        traces,
        imbalance_pu: imb_out,
        synchronism_lost: max_spread > PI,
        max_angle_spread: max_spread,
    })
}

/// Initial rotor angles: taken from the specs when all are given, otherwise
/// the pre-event equilibrium with every machine delivering its setpoint.
fn initial_angles(
    system: &SystemSpec,
    machines: &[Machine],
    net: &StarNetwork,
    p_load: f64,
    q_load: f64,
) -> Result<(Vec<f64>, BusSolution)> {
    let given: Vec<Option<f64>> = system.generators.iter().map(|g| g.delta0).collect();
    if given.iter().all(Option::is_some) {
        let angles: Vec<f64> = given.into_iter().flatten().collect();
        let bus = net.solve(&angles, p_load, q_load, (1.0, 0.0), 0.0)?;
        return Ok((angles, bus));
    }
    if given.iter().any(Option::is_some) {
        return Err(Error::validation(
            "system.generators.delta0",
            "give delta0 for every generator or for none",
        ));
    }

    // With theta = 0 each machine sits at asin(P X / (E V)); solve the
    // reactive balance for V:
    //   g(V) = sum (sqrt(E^2 V^2 - (P X)^2) - V^2) / X - Q_load = 0.
    let g = |v: f64| -> Option<(f64, f64)> {
        let (mut val, mut der) = (-q_load, 0.0);
        for m in machines {
            let px = m.p_mech_pu * m.reactance;
            let r = (m.emf * v).powi(2) - px * px;
            if r <= 0.0 {
                return None;
            }
            let root = r.sqrt();
            val += (root - v * v) / m.reactance;
            der += (m.emf * m.emf * v / root - 2.0 * v) / m.reactance;
        }
        Some((val, der))
    };
    let mut v = machines.iter().map(|m| m.emf).fold(0.0, f64::max);
    let mut converged = false;
    for _ in 0..BUS_MAX_ITER {
        let Some((val, der)) = g(v) else { break };
        if val.abs() < BUS_TOL {
            converged = true;
            break;
        }
        if der == 0.0 {
            break;
        }
        v -= val / der;
    }
    if !converged {
        return Err(Error::NetworkSolveDiverged {
            time: 0.0,
            iterations: BUS_MAX_ITER,
            residual: g(v).map_or(f64::INFINITY, |(val, _)| val.abs()),
        });
    }
    let angles: Vec<f64> = machines
        .iter()
        .map(|m| (m.p_mech_pu * m.reactance / (m.emf * v)).asin())
        .collect();
    let bus = net.solve(&angles, p_load, q_load, (v, 0.0), 0.0)?;
    Ok((angles, bus))
}
