use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::ArtifactModel;
use crate::model::FrequencyTrace;

/// Seed for one channel: the configured seed mixed with an FNV-1a hash of the
/// channel id, so channels sharing a seed still get independent noise.
pub fn channel_seed(rng_seed: u64, channel_id: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in channel_id.bytes() {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    rng_seed ^ hash
}

/// Adds the post-event uptick and back-swing over `[event_time, event_time + 1)`
/// and Gaussian noise everywhere. Deterministic for a given seed and channel.
pub fn inject_artifacts(trace: &FrequencyTrace, artifacts: &ArtifactModel, event_time: f64) -> FrequencyTrace {
    let mut out = trace.clone();
    if artifacts.is_identity() {
        return out;
    }
    let eps = 1e-9 * trace.dt;
    let tau = artifacts.backswing_decay_tau;
    let omega = 2.0 * PI * artifacts.backswing_osc_freq;
    for (k, f) in out.samples.iter_mut().enumerate() {
        let since = trace.time_at(k) - event_time;
        if since >= -eps && since < 1.0 - eps {
            let s = since.max(0.0);
            let envelope = (-s / tau).exp();
            *f += artifacts.initial_uptick_hz * envelope + artifacts.backswing_amplitude * envelope * (omega * s).sin();
        }
    }
    if artifacts.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(channel_seed(artifacts.rng_seed, &trace.channel_id));
        let normal = Normal::new(0.0, artifacts.noise_sigma).expect("sigma validated finite and > 0");
        for f in out.samples.iter_mut() {
            *f += normal.sample(&mut rng);
        }
    }
    out
}
