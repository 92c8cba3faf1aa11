#![allow(dead_code)]

use std::path::PathBuf;

use inertia_core::{
    load_scenario, ArtifactModel, BaseConvention, DisturbanceScenario, FrequencyTrace, GeneratorSpec, GovernorModel,
    ScenarioDocument, SystemSpec,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, One, ToPrimitive, Zero};

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

pub fn shipped(name: &str) -> ScenarioDocument {
    load_scenario(scenario_path(name)).expect("shipped scenario loads")
}

/// Published IEEE 39-bus generator table: (id, H s, MW).
pub const TABLE_ONE: [(&str, f64, f64); 10] = [
    ("G30", 4.2, 270.0),
    ("G31", 4.329, 585.0),
    ("G32", 4.475, 450.0),
    ("G33", 3.575, 632.0),
    ("G34", 4.433, 608.0),
    ("G35", 4.35, 1000.0),
    ("G36", 3.771, 560.0),
    ("G37", 3.471, 160.0),
    ("G38", 3.45, 245.0),
    ("G39", 5.0, 650.0),
];

pub fn table_one_generators() -> Vec<GeneratorSpec> {
    TABLE_ONE
        .iter()
        .map(|&(id, h, mw)| GeneratorSpec {
            id: id.into(),
            h_const: h,
            s_rated: mw / 0.9,
            p_mech: mw,
            e_internal: 1.05,
            x_reactance: 0.2,
            delta0: None,
        })
        .collect()
}

/// One machine of inertia `h` carrying a 5160 MW load at the given frequency.
pub fn lone_machine(h: f64, f_nominal: f64) -> SystemSpec {
    SystemSpec {
        f_nominal,
        s_base: 10000.0,
        power_factor: 0.9,
        generators: vec![GeneratorSpec {
            id: "G1".into(),
            h_const: h,
            s_rated: 6000.0,
            p_mech: 5160.0,
            e_internal: 1.05,
            x_reactance: 0.2,
            delta0: None,
        }],
        load_mw: 5160.0,
        load_damping: 0.0,
    }
}

/// 160 MW lost out of 5160 MW at t = 1 s, pre-event base.
pub fn ieee_loss() -> DisturbanceScenario {
    DisturbanceScenario {
        event_time: 1.0,
        loss_mw: 160.0,
        pre_event_load_mw: 5160.0,
        base_convention: BaseConvention::PreEventTotal,
        tripped_generator: None,
    }
}

/// Uptick plus back-swing over the first post-event second, with noise.
pub fn contamination(seed: u64, noise_sigma: f64) -> ArtifactModel {
    ArtifactModel {
        backswing_amplitude: 0.03,
        backswing_decay_tau: 0.3,
        backswing_osc_freq: 1.5,
        initial_uptick_hz: 0.04,
        noise_sigma,
        rng_seed: seed,
    }
}

/// Slow droop governor that engages 3 s after the event.
pub fn slow_governor() -> GovernorModel {
    GovernorModel {
        enabled: true,
        droop_r: 0.05,
        time_constant: 5.0,
        activation_delay: 3.0,
    }
}

pub fn pmu_ids(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("pmu{i}")).collect()
}

/// Exact least-squares slope from the 2x2 normal equations.
///
/// Every f64 is `m * 2^e`, so scaling all samples onto the smallest exponent
/// present turns them into integers. With `t_k = k * dt` the normal equations
/// are then solved in exact integer arithmetic; only the final quotient is
/// rounded.
pub fn exact_ols_slope(trace: &FrequencyTrace) -> f64 {
    let decoded: Vec<(BigInt, i16)> = trace
        .samples
        .iter()
        .map(|&f| {
            let (mantissa, exp, sign) = f.integer_decode();
            (BigInt::from(sign) * BigInt::from(mantissa), exp)
        })
        .collect();
    let min_exp = decoded.iter().map(|d| d.1).min().expect("non-empty");
    let values: Vec<BigInt> = decoded.into_iter().map(|(m, e)| m << (e - min_exp) as usize).collect();

    let n = BigInt::from(trace.len());
    let (mut sk, mut sf, mut skk, mut skf) = (BigInt::zero(), BigInt::zero(), BigInt::zero(), BigInt::zero());
    for (k, f) in values.iter().enumerate() {
        let k = BigInt::from(k);
        skk += &k * &k;
        skf += &k * f;
        sk += k;
        sf += f;
    }
    // slope = 2^min_exp / dt * (n skf - sk sf) / (n skk - sk^2)
    let num = &n * &skf - &sk * &sf;
    let den = &n * &skk - &sk * &sk;
    let (dt_m, dt_e, _) = trace.dt.integer_decode();
    let scale_exp = i32::from(min_exp) - i32::from(dt_e);
    let mut ratio = BigRational::new(num, den * BigInt::from(dt_m));
    if scale_exp >= 0 {
        ratio *= BigRational::from_integer(BigInt::one() << scale_exp as usize);
    } else {
        ratio /= BigRational::from_integer(BigInt::one() << (-scale_exp) as usize);
    }
    ratio.to_f64().expect("representable")
}
