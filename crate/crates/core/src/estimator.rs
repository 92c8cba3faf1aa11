//! Inertia estimation from frequency traces.
//!
//! The system-level pipeline averages the channels into a centre-of-inertia
//! frequency, keeps only a post-event window, fits a straight line by
//! ordinary least squares and turns the slope into an inertia constant with
//! `H = f_n * dP / (2 * |df/dt|)`. Slopes are reported signed; inertia is
//! always computed from magnitudes, so a generation loss (falling frequency)
//! and a generation surplus give the same positive `H`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    per_unit_imbalance, DisturbanceScenario, EstimateResult, FrequencyTrace, GeneratorSpec, SystemSpec,
};

/// Slopes at or below this magnitude (Hz/s) are treated as flat.
pub const DEFAULT_ROCOF_FLOOR: f64 = 1e-6;

/// Channel id given to aggregated traces.
pub const COI_CHANNEL: &str = "coi";

/// Fit span relative to the event, seconds. Both ends are inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    #[serde(default = "WindowSpec::default_start")]
    pub offset_start: f64,
    #[serde(default = "WindowSpec::default_end")]
    pub offset_end: f64,
}

impl WindowSpec {
    fn default_start() -> f64 {
        1.0
    }

    fn default_end() -> f64 {
        4.0
    }

    pub fn new(offset_start: f64, offset_end: f64) -> Result<Self> {
        let w = WindowSpec {
            offset_start,
            offset_end,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.offset_start >= 0.0) || !self.offset_end.is_finite() || !(self.offset_start < self.offset_end) {
            return Err(Error::validation(
                "window",
                format!(
                    "need 0 <= offset_start < offset_end, got ({}, {})",
                    self.offset_start, self.offset_end
                ),
            ));
        }
        Ok(())
    }
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec {
            offset_start: Self::default_start(),
            offset_end: Self::default_end(),
        }
    }
}

/// How channels are combined into one system frequency.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum CoiMethod {
    /// Equal weights; the usual practice with a handful of PMUs.
    #[default]
    PlainAverage,
    /// Explicit per-channel weights (inertia, or inertia times rating).
    InertiaWeighted(Vec<(String, f64)>),
}

impl CoiMethod {
    /// Weights `H_i * S_i` for every generator in `system`.
    pub fn from_system(system: &SystemSpec) -> Self {
        CoiMethod::InertiaWeighted(
            system
                .generators
                .iter()
                .map(|g| (g.id.clone(), g.kinetic_energy()))
                .collect(),
        )
    }
}

/// Sample-wise weighted mean of channels sharing one grid.
pub fn coi_frequency(traces: &[FrequencyTrace], method: &CoiMethod) -> Result<FrequencyTrace> {
    let first = traces
        .first()
        .ok_or_else(|| Error::invalid("at least one trace is required"))?;
    let mut seen = std::collections::HashSet::new();
    for t in traces {
        if !t.same_grid(first) {
            return Err(Error::TraceGridMismatch {
                channel: t.channel_id.clone(),
                reason: format!(
                    "(t_start {}, dt {}, len {}) differs from (t_start {}, dt {}, len {})",
                    t.t_start,
                    t.dt,
                    t.len(),
                    first.t_start,
                    first.dt,
                    first.len()
                ),
            });
        }
        if !seen.insert(t.channel_id.as_str()) {
            return Err(Error::invalid(format!("duplicate channel `{}`", t.channel_id)));
        }
    }

    let raw: Vec<f64> = match method {
        CoiMethod::PlainAverage => vec![1.0; traces.len()],
        CoiMethod::InertiaWeighted(weights) => traces
            .iter()
            .map(|t| {
                let w = weights
                    .iter()
                    .find(|(id, _)| *id == t.channel_id)
                    .map(|(_, w)| *w)
                    .ok_or_else(|| Error::WeightMissing(t.channel_id.clone()))?;
                if w > 0.0 && w.is_finite() {
                    Ok(w)
                } else {
                    Err(Error::invalid(format!(
                        "weight for `{}` must be > 0, got {w}",
                        t.channel_id
                    )))
                }
            })
            .collect::<Result<_>>()?,
    };
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();

    let samples = (0..first.len())
        .map(|k| {
            let (lo, hi) = traces
                .iter()
                .map(|t| t.samples[k])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), f| (lo.min(f), hi.max(f)));
            // Deviation form keeps the mean exact for a single channel and
            // inside [min, max] up to rounding; the clamp removes that rounding.
            let dev: f64 = traces.iter().zip(&weights).map(|(t, w)| w * (t.samples[k] - lo)).sum();
            (lo + dev).clamp(lo, hi)
        })
        .collect();
    Ok(FrequencyTrace {
        channel_id: COI_CHANNEL.to_string(),
        t_start: first.t_start,
        dt: first.dt,
        samples,
    })
}

/// Samples with `event + offset_start <= t <= event + offset_end`.
pub fn extract_window(trace: &FrequencyTrace, event_time: f64, window: &WindowSpec) -> Result<FrequencyTrace> {
    window.validate()?;
    let lo = event_time + window.offset_start;
    let hi = event_time + window.offset_end;
    let eps = 1e-6 * trace.dt;
    if lo < trace.t_start - eps || hi > trace.t_end() + eps {
        return Err(Error::WindowOutOfRange {
            start: lo,
            end: hi,
            trace_start: trace.t_start,
            trace_end: trace.t_end(),
        });
    }
    let first = ((lo - trace.t_start) / trace.dt - 1e-6).ceil().max(0.0) as usize;
    let last = ((hi - trace.t_start) / trace.dt + 1e-6).floor() as usize;
    let last = last.min(trace.len() - 1);
    let found = (last + 1).saturating_sub(first);
    if found < 2 {
        return Err(Error::WindowTooSparse { found });
    }
    Ok(FrequencyTrace {
        channel_id: trace.channel_id.clone(),
        t_start: trace.time_at(first),
        dt: trace.dt,
        samples: trace.samples[first..=last].to_vec(),
    })
}

/// Straight-line fit of frequency against time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocofFit {
    /// Hz/s, negative for a falling frequency.
    pub slope: f64,
    /// Fitted frequency at the trace's first sample time, Hz.
    pub intercept: f64,
    pub r_squared: f64,
    pub rmse: f64,
}

impl RocofFit {
    pub fn value_at(&self, trace_start: f64, t: f64) -> f64 {
        self.intercept + self.slope * (t - trace_start)
    }
}

/// Ordinary least squares of frequency on time (centred two-pass form).
pub fn fit_rocof(trace: &FrequencyTrace) -> Result<RocofFit> {
    let n = trace.len();
    if n < 2 {
        return Err(Error::WindowTooSparse { found: n });
    }
    let nf = n as f64;
    // Time relative to the first sample; the fit is shift-invariant.
    let tau = |k: usize| k as f64 * trace.dt;
    let t_mean = (0..n).map(tau).sum::<f64>() / nf;
    let f_mean = trace.samples.iter().sum::<f64>() / nf;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (k, &f) in trace.samples.iter().enumerate() {
        let dt = tau(k) - t_mean;
        sxy += dt * (f - f_mean);
        sxx += dt * dt;
    }
    if !(sxx > 0.0) {
        return Err(Error::WindowTooSparse { found: n });
    }
    let slope = sxy / sxx;
    let intercept = f_mean - slope * t_mean;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (k, &f) in trace.samples.iter().enumerate() {
        let r = f - (intercept + slope * tau(k));
        ss_res += r * r;
        ss_tot += (f - f_mean) * (f - f_mean);
    }
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(RocofFit {
        slope,
        intercept,
        r_squared,
        rmse: (ss_res / nf).sqrt(),
    })
}

/// `H = f_n * dP / (2 |rocof|)`, seconds.
pub fn estimate_system_inertia(rocof: f64, dp_pu: f64, f_nominal: f64, rocof_floor: f64) -> Result<f64> {
    if !(dp_pu > 0.0) || !dp_pu.is_finite() {
        return Err(Error::invalid(format!("power imbalance must be > 0 pu, got {dp_pu}")));
    }
    if !(f_nominal > 0.0) {
        return Err(Error::invalid(format!(
            "nominal frequency must be > 0, got {f_nominal}"
        )));
    }
    if !(rocof.abs() > rocof_floor) {
        return Err(Error::DegenerateSlope {
            rocof: rocof.abs(),
            floor: rocof_floor,
        });
    }
    Ok(f_nominal * dp_pu / (2.0 * rocof.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QualityWarning {
    /// The imbalance series was zero throughout the window.
    ZeroImbalance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorEstimate {
    /// Median of the per-pair estimates, seconds.
    pub h_estimate: f64,
    pub pairs_used: usize,
    pub warning: Option<QualityWarning>,
}

/// Single-machine inertia from adjacent-sample ROCOF: for each consecutive
/// pair inside the window, `H_k = f_n |dP_k| / (2 |(f_{k+1} - f_k) / dt|)`;
/// the result is the median over pairs whose ROCOF clears the floor.
pub fn estimate_generator_inertia(
    freq: &FrequencyTrace,
    dp_pu_series: &[f64],
    f_nominal: f64,
    window: &WindowSpec,
    event_time: f64,
    rocof_floor: f64,
) -> Result<GeneratorEstimate> {
    if dp_pu_series.len() != freq.len() {
        return Err(Error::TraceGridMismatch {
            channel: freq.channel_id.clone(),
            reason: format!(
                "imbalance series has {} samples, frequency has {}",
                dp_pu_series.len(),
                freq.len()
            ),
        });
    }
    if !(f_nominal > 0.0) {
        return Err(Error::invalid("nominal frequency must be > 0"));
    }
    let win = extract_window(freq, event_time, window)?;
    let offset = ((win.t_start - freq.t_start) / freq.dt).round() as usize;
    let dp = &dp_pu_series[offset..offset + win.len()];

    let mut estimates: Vec<f64> = win
        .samples
        .windows(2)
        .zip(dp)
        .filter_map(|(pair, &p)| {
            let rocof = (pair[1] - pair[0]) / win.dt;
            (rocof.abs() > rocof_floor).then(|| f_nominal * p.abs() / (2.0 * rocof.abs()))
        })
        .collect();
    if estimates.is_empty() {
        return Err(Error::WindowTooSparse { found: 0 });
    }
    estimates.sort_by(f64::total_cmp);
    let m = estimates.len();
    let median = if m % 2 == 1 {
        estimates[m / 2]
    } else {
        0.5 * (estimates[m / 2 - 1] + estimates[m / 2])
    };
    let warning = dp.iter().all(|&p| p == 0.0).then_some(QualityWarning::ZeroImbalance);
    Ok(GeneratorEstimate {
        h_estimate: median,
        pairs_used: m,
        warning,
    })
}

/// Which MVA figure weights each machine in the fleet average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MvaBasis {
    /// The generator's `s_rated`.
    Rated,
    /// Actual output converted with one power factor: `p_mech / pf`.
    OutputOverPowerFactor(f64),
}

/// Fleet inertia `sum(H_i MVA_i) / sum(MVA_i)` over generators not listed in
/// `excluded`.
pub fn ground_truth_inertia(generators: &[GeneratorSpec], excluded: &[&str], basis: MvaBasis) -> Result<f64> {
    if let MvaBasis::OutputOverPowerFactor(pf) = basis {
        if !(pf > 0.0 && pf <= 1.0) {
            return Err(Error::invalid(format!("power factor must lie in (0, 1], got {pf}")));
        }
    }
    let (mut num, mut den) = (0.0, 0.0);
    let mut count = 0usize;
    for g in generators.iter().filter(|g| !excluded.contains(&g.id.as_str())) {
        let mva = match basis {
            MvaBasis::Rated => g.s_rated,
            MvaBasis::OutputOverPowerFactor(pf) => g.p_mech / pf,
        };
        num += g.h_const * mva;
        den += mva;
        count += 1;
    }
    if count == 0 {
        return Err(Error::invalid("no generators remain after exclusion"));
    }
    if !(den > 0.0) {
        return Err(Error::invalid("remaining generators have zero total MVA"));
    }
    Ok(num / den)
}

/// COI, window, fit, inertia: the full system-level estimate.
pub fn estimate_from_traces(
    traces: &[FrequencyTrace],
    scenario: &DisturbanceScenario,
    system: &SystemSpec,
    window: &WindowSpec,
    coi_method: &CoiMethod,
) -> Result<EstimateResult> {
    let coi = coi_frequency(traces, coi_method)?;
    let dp = per_unit_imbalance(scenario, system.power_factor)?;
    estimate_from_coi(
        &coi,
        scenario.event_time,
        dp,
        system.f_nominal,
        window,
        DEFAULT_ROCOF_FLOOR,
    )
}

/// Pipeline tail for an already aggregated trace.
pub fn estimate_from_coi(
    coi: &FrequencyTrace,
    event_time: f64,
    dp_pu: f64,
    f_nominal: f64,
    window: &WindowSpec,
    rocof_floor: f64,
) -> Result<EstimateResult> {
    let win = extract_window(coi, event_time, window)?;
    let fit = fit_rocof(&win)?;
    let h = estimate_system_inertia(fit.slope, dp_pu, f_nominal, rocof_floor)?;
    Ok(EstimateResult {
        rocof: fit.slope,
        h_estimate: h,
        window: (win.t_start, win.t_end()),
        n_samples_used: win.len(),
        r_squared: fit.r_squared,
        rmse: fit.rmse,
    })
}

/// One cell of a window sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub window: WindowSpec,
    pub outcome: std::result::Result<EstimateResult, String>,
    /// `|H - H_ref| / H_ref`, when a reference was given and the cell succeeded.
    pub relative_error: Option<f64>,
}

/// Estimates for every `(start, end)` combination with `start < end`, ordered
/// by start then end. Per-cell failures are recorded by error code.
pub fn sweep_windows(
    traces: &[FrequencyTrace],
    scenario: &DisturbanceScenario,
    system: &SystemSpec,
    start_grid: &[f64],
    end_grid: &[f64],
    reference_h: Option<f64>,
    coi_method: &CoiMethod,
) -> Result<Vec<SweepCell>> {
    if start_grid.is_empty() || end_grid.is_empty() {
        return Err(Error::invalid("window grids must not be empty"));
    }
    if let Some(r) = reference_h {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::invalid(format!("reference inertia must be > 0, got {r}")));
        }
    }
    let mut starts = start_grid.to_vec();
    let mut ends = end_grid.to_vec();
    starts.sort_by(f64::total_cmp);
    starts.dedup();
    ends.sort_by(f64::total_cmp);
    ends.dedup();

    let coi = coi_frequency(traces, coi_method)?;
    let dp = per_unit_imbalance(scenario, system.power_factor)?;
    let mut cells = Vec::new();
    for &s in &starts {
        for &e in ends.iter().filter(|&&e| s < e) {
            let window = WindowSpec {
                offset_start: s,
                offset_end: e,
            };
            let outcome = estimate_from_coi(
                &coi,
                scenario.event_time,
                dp,
                system.f_nominal,
                &window,
                DEFAULT_ROCOF_FLOOR,
            )
            .map_err(|err| err.code().to_string());
            let relative_error = match (&outcome, reference_h) {
                (Ok(r), Some(h_ref)) => Some((r.h_estimate - h_ref).abs() / h_ref),
                _ => None,
            };
            cells.push(SweepCell {
                window,
                outcome,
                relative_error,
            });
        }
    }
    if cells.is_empty() {
        return Err(Error::invalid("no (start, end) pair in the grids has start < end"));
    }
    Ok(cells)
}

/// Cell with the smallest relative error; ties keep the earliest cell.
pub fn best_window(cells: &[SweepCell]) -> Option<&SweepCell> {
    cells
        .iter()
        .filter(|c| c.relative_error.is_some())
        .min_by(|a, b| a.relative_error.unwrap().total_cmp(&b.relative_error.unwrap()))
}

impl Error {
    /// Stable short name of the error kind, used in tables.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::DegenerateBase { .. } => "DegenerateBase",
            Error::DegenerateSlope { .. } => "DegenerateSlope",
            Error::NetworkSolveDiverged { .. } => "NetworkSolveDiverged",
            Error::TraceGridMismatch { .. } => "TraceGridMismatch",
            Error::WeightMissing(_) => "WeightMissing",
            Error::WindowTooSparse { .. } => "WindowTooSparse",
            Error::WindowOutOfRange { .. } => "WindowOutOfRange",
            Error::Parse { .. } => "ParseError",
            Error::Grid(_) => "GridError",
            Error::Value { .. } => "ValueError",
            Error::Schema { .. } => "SchemaError",
            Error::Validation { .. } => "ValidationError",
            Error::Io { .. } => "IoError",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BaseConvention;
    use proptest::prelude::*;

    fn trace(id: &str, t0: f64, dt: f64, samples: Vec<f64>) -> FrequencyTrace {
        FrequencyTrace::new(id, t0, dt, samples).unwrap()
    }

    fn table_one() -> Vec<GeneratorSpec> {
        [
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
        ]
        .into_iter()
        .map(|(id, h, mw)| GeneratorSpec {
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

    #[test]
    fn coi_weighted_two_channels() {
        let a = trace("a", 0.0, 0.04, vec![50.0]);
        let b = trace("b", 0.0, 0.04, vec![49.9]);
        let m = CoiMethod::InertiaWeighted(vec![("a".into(), 2.0), ("b".into(), 4.0)]);
        let c = coi_frequency(&[a, b], &m).unwrap();
        assert!((c.samples[0] - 49.933333333).abs() < 1e-8);
    }

    #[test]
    fn coi_single_and_symmetric() {
        let a = trace("a", 0.5, 0.04, vec![50.01, 49.97, 49.5]);
        for m in [
            CoiMethod::PlainAverage,
            CoiMethod::InertiaWeighted(vec![("a".into(), 3.7)]),
        ] {
            assert_eq!(coi_frequency(std::slice::from_ref(&a), &m).unwrap().samples, a.samples);
        }
        let x = trace("x", 0.0, 0.04, vec![50.02]);
        let y = trace("y", 0.0, 0.04, vec![49.98]);
        let c = coi_frequency(&[x, y], &CoiMethod::PlainAverage).unwrap();
        assert!((c.samples[0] - 50.0).abs() < 1e-12);
    }

    #[test]
    fn coi_errors() {
        let a = trace("a", 0.0, 0.04, vec![50.0, 50.0]);
        let b = trace("b", 0.0, 0.05, vec![50.0, 50.0]);
        assert!(matches!(
            coi_frequency(&[a.clone(), b], &CoiMethod::PlainAverage),
            Err(Error::TraceGridMismatch { .. })
        ));
        let c = trace("c", 0.0, 0.04, vec![50.0, 50.0]);
        let m = CoiMethod::InertiaWeighted(vec![("a".into(), 1.0)]);
        assert!(matches!(coi_frequency(&[a, c], &m), Err(Error::WeightMissing(id)) if id == "c"));
    }

    #[test]
    fn window_counts_closed_interval() {
        let t = trace("a", 0.0, 0.04, vec![50.0; 301]);
        let w = extract_window(&t, 0.0, &WindowSpec::default()).unwrap();
        assert_eq!(w.len(), 76);
        assert!((w.t_start - 1.0).abs() < 1e-12);
        assert!((w.t_end() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn window_two_to_five_after_one_second_event() {
        let t = trace("a", 0.0, 0.04, vec![50.0; 301]);
        let w = extract_window(&t, 1.0, &WindowSpec::new(2.0, 5.0).unwrap()).unwrap();
        assert_eq!(w.len(), 76);
        assert!((w.t_start - 3.0).abs() < 1e-12);
    }

    #[test]
    fn window_errors() {
        let short = trace("a", 0.0, 0.04, vec![50.0; 76]); // ends at 3.0 s
        assert!(matches!(
            extract_window(&short, 0.0, &WindowSpec::default()),
            Err(Error::WindowOutOfRange { .. })
        ));
        let coarse = trace("a", 0.0, 1.0, vec![50.0; 10]);
        assert!(matches!(
            extract_window(&coarse, 0.0, &WindowSpec::new(1.2, 1.8).unwrap()),
            Err(Error::WindowTooSparse { found: 0 })
        ));
        assert!(WindowSpec::new(2.0, 1.0).is_err());
        assert!(WindowSpec::new(-0.5, 1.0).is_err());
    }

    #[test]
    fn fit_affine_trace() {
        let samples: Vec<f64> = (0..76).map(|k| 60.2 - 0.191 * (k as f64 * 0.04)).collect();
        let fit = fit_rocof(&trace("a", 2.0, 0.04, samples)).unwrap();
        assert!((fit.slope + 0.191).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(fit.rmse < 1e-12);
    }

    #[test]
    fn fit_flat_and_hand_computed() {
        let fit = fit_rocof(&trace("a", 0.0, 0.04, vec![50.0; 10])).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.r_squared, 1.0);
        let fit = fit_rocof(&trace("a", 0.0, 1.0, vec![50.00, 49.98, 49.96, 49.90])).unwrap();
        assert!((fit.slope + 0.032).abs() < 1e-12, "{}", fit.slope);
        assert!(matches!(
            fit_rocof(&trace("a", 0.0, 1.0, vec![50.0])),
            Err(Error::WindowTooSparse { found: 1 })
        ));
    }

    #[test]
    fn system_inertia_examples() {
        let h = estimate_system_inertia(0.191, 0.027907, 60.0, DEFAULT_ROCOF_FLOOR).unwrap();
        assert!((h - 4.383).abs() < 5e-4, "{h}");
        let h = estimate_system_inertia(0.02, 0.0077156, 50.0, DEFAULT_ROCOF_FLOOR).unwrap();
        assert!((h - 9.6445).abs() < 5e-4, "{h}");
        assert!(matches!(
            estimate_system_inertia(1e-9, 0.05, 60.0, DEFAULT_ROCOF_FLOOR),
            Err(Error::DegenerateSlope { .. })
        ));
        assert!(matches!(
            estimate_system_inertia(0.1, 0.0, 60.0, DEFAULT_ROCOF_FLOOR),
            Err(Error::InvalidParameter(_))
        ));
        assert_eq!(
            estimate_system_inertia(-0.191, 0.027907, 60.0, DEFAULT_ROCOF_FLOOR).unwrap(),
            estimate_system_inertia(0.191, 0.027907, 60.0, DEFAULT_ROCOF_FLOOR).unwrap()
        );
    }

    #[test]
    fn generator_inertia_adjacent_pair() {
        let f = trace("g", 0.0, 0.04, vec![60.000, 59.992]);
        let w = WindowSpec::new(0.0, 0.04).unwrap();
        let est = estimate_generator_inertia(&f, &[0.0287, 0.0287], 60.0, &w, 0.0, DEFAULT_ROCOF_FLOOR).unwrap();
        assert!((est.h_estimate - 4.305).abs() < 1e-9, "{}", est.h_estimate);
        assert_eq!(est.pairs_used, 1);
        assert_eq!(est.warning, None);
    }

    #[test]
    fn generator_inertia_zero_imbalance_warns() {
        let f = trace("g", 0.0, 0.04, (0..10).map(|k| 60.0 - 0.01 * k as f64).collect());
        let w = WindowSpec::new(0.0, 0.36).unwrap();
        let est = estimate_generator_inertia(&f, &[0.0; 10], 60.0, &w, 0.0, DEFAULT_ROCOF_FLOOR).unwrap();
        assert_eq!(est.h_estimate, 0.0);
        assert_eq!(est.warning, Some(QualityWarning::ZeroImbalance));
        let flat = trace("g", 0.0, 0.04, vec![60.0; 10]);
        assert!(matches!(
            estimate_generator_inertia(&flat, &[0.1; 10], 60.0, &w, 0.0, DEFAULT_ROCOF_FLOOR),
            Err(Error::WindowTooSparse { .. })
        ));
    }

    #[test]
    fn ground_truth_examples() {
        let gens = table_one();
        let h = ground_truth_inertia(&gens, &["G37"], MvaBasis::Rated).unwrap();
        assert!((h - 4.2384).abs() < 5e-5, "{h}");
        let h2 = ground_truth_inertia(&gens, &["G37"], MvaBasis::OutputOverPowerFactor(0.9)).unwrap();
        assert!((h - h2).abs() < 1e-12);
        let all = ground_truth_inertia(&gens, &[], MvaBasis::Rated).unwrap();
        assert!((all - 4.2146).abs() < 5e-5, "{all}");
        assert_eq!(ground_truth_inertia(&gens[..1], &[], MvaBasis::Rated).unwrap(), 4.2);
        let ids: Vec<&str> = gens.iter().map(|g| g.id.as_str()).collect();
        assert!(ground_truth_inertia(&gens, &ids, MvaBasis::Rated).is_err());
    }

    #[test]
    fn pipeline_rejects_mismatched_grids() {
        let sc = DisturbanceScenario {
            event_time: 0.0,
            loss_mw: 100.0,
            pre_event_load_mw: 1000.0,
            base_convention: BaseConvention::PreEventTotal,
            tripped_generator: None,
        };
        let sys = SystemSpec {
            f_nominal: 50.0,
            s_base: 100.0,
            power_factor: 0.9,
            generators: table_one(),
            load_mw: 5160.0,
            load_damping: 0.0,
        };
        let a = trace("a", 0.0, 0.04, vec![50.0; 200]);
        let b = trace("b", 0.0, 0.04, vec![50.0; 199]);
        assert!(matches!(
            estimate_from_traces(&[a, b], &sc, &sys, &WindowSpec::default(), &CoiMethod::PlainAverage),
            Err(Error::TraceGridMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn coi_within_channel_bounds(
            rows in prop::collection::vec(prop::collection::vec(45.0..55.0f64, 5), 1..6),
            weights in prop::collection::vec(0.01..100.0f64, 6),
        ) {
            let traces: Vec<FrequencyTrace> = rows.iter().enumerate()
                .map(|(i, s)| trace(&format!("c{i}"), 0.0, 0.04, s.clone()))
                .collect();
            let m = CoiMethod::InertiaWeighted(
                (0..rows.len()).map(|i| (format!("c{i}"), weights[i])).collect());
            let c = coi_frequency(&traces, &m).unwrap();
            for k in 0..5 {
                let lo = rows.iter().map(|r| r[k]).fold(f64::INFINITY, f64::min);
                let hi = rows.iter().map(|r| r[k]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(lo <= c.samples[k] && c.samples[k] <= hi);
            }
        }

        #[test]
        fn ground_truth_bounded_and_scale_free(
            hs in prop::collection::vec((0.5..12.0f64, 10.0..2000.0f64), 1..12),
            scale in 0.001..1000.0f64,
        ) {
            let gens: Vec<GeneratorSpec> = hs.iter().enumerate().map(|(i, &(h, s))| GeneratorSpec {
                id: format!("g{i}"), h_const: h, s_rated: s, p_mech: s * 0.9,
                e_internal: 1.0, x_reactance: 0.2, delta0: None,
            }).collect();
            let h = ground_truth_inertia(&gens, &[], MvaBasis::Rated).unwrap();
            let lo = hs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
            let hi = hs.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo - 1e-12 <= h && h <= hi + 1e-12);
            let scaled: Vec<GeneratorSpec> = gens.iter().cloned()
                .map(|mut g| { g.s_rated *= scale; g }).collect();
            let hs2 = ground_truth_inertia(&scaled, &[], MvaBasis::Rated).unwrap();
            prop_assert!((h - hs2).abs() <= 1e-12 * h);
        }
    }
}
