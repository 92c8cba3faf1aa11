use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use inertia_core::ingestion::format_sig9;
use inertia_core::{
    best_window, coi_frequency, estimate_from_coi, extract_window, fit_rocof, ground_truth_inertia, load_pmu_csv,
    load_scenario, per_unit_imbalance, simulate_aggregate, simulate_aggregate_channels, simulate_multimachine,
    sweep_windows, write_pmu_csv, write_results_csv, BaseConvention, CoiMethod, FrequencyTrace, MvaBasis, ResultsTable,
    ScenarioDocument, WindowSpec, DEFAULT_ROCOF_FLOOR,
};
use serde_json::json;

use crate::manifest::RunManifest;
use crate::{BaseChoice, CoiChoice, EstimateArgs, Model, SimulateArgs, SweepArgs, TruthArgs};

pub fn simulate(args: &SimulateArgs, argv: &[String]) -> Result<()> {
    let mut doc = load_scenario(&args.scenario)?;
    if let Some(d) = args.duration {
        doc.sim.duration = d;
    }
    if let Some(s) = args.seed {
        doc.sim.artifacts.rng_seed = s;
    }
    if let Some(sigma) = args.noise_sigma {
        doc.sim.artifacts.noise_sigma = sigma;
    }

    let traces = match args.model {
        Model::Aggregate => match args.channels {
            None => vec![simulate_aggregate(&doc.system, &doc.scenario, &doc.sim)?],
            Some(0) => bail!("--channels must be at least 1"),
            Some(n) => {
                let ids: Vec<String> = (1..=n).map(|i| format!("pmu{i}")).collect();
                simulate_aggregate_channels(&doc.system, &doc.scenario, &doc.sim, &ids)?
            }
        },
        Model::Multimachine => {
            if args.channels.is_some() {
                bail!("--channels applies to the aggregate model only; multimachine writes one channel per generator");
            }
            let run = simulate_multimachine(&doc.system, &doc.scenario, &doc.sim)?;
            if run.synchronism_lost {
                eprintln!(
                    "warning: synchronism lost (max rotor angle spread {} rad)",
                    format_sig9(run.max_angle_spread)
                );
            }
            run.traces
        }
    };

    let model = match args.model {
        Model::Aggregate => "aggregate",
        Model::Multimachine => "multimachine",
    };
    let mut meta = BTreeMap::new();
    meta.insert("model".to_string(), model.to_string());
    meta.insert("event_time".to_string(), format_sig9(doc.scenario.event_time));
    meta.insert("rng_seed".to_string(), doc.sim.artifacts.rng_seed.to_string());
    write_pmu_csv(&traces, &meta, &args.output)?;

    let mut manifest = RunManifest::new("simulate", argv);
    manifest.input(&args.scenario)?;
    manifest.parameters = json!({
        "model": model,
        "duration": doc.sim.duration,
        "integration_step": doc.sim.integration_step,
        "output_dt": doc.sim.output_dt,
        "channels": traces.iter().map(|t| t.channel_id.clone()).collect::<Vec<_>>(),
        "governor": doc.sim.governor,
        "artifacts": doc.sim.artifacts,
    });
    manifest.seeds = json!({ "rng_seed": doc.sim.artifacts.rng_seed });
    manifest.output(&args.output);
    manifest.write_sidecars()?;

    println!(
        "wrote {} channel(s) x {} samples to {}",
        traces.len(),
        traces.first().map_or(0, FrequencyTrace::len),
        args.output.display()
    );
    Ok(())
}

/// Scenario with the estimator overrides applied.
fn resolved_scenario(
    path: &Path,
    pf: Option<f64>,
    base: Option<BaseChoice>,
    f_nominal: Option<f64>,
) -> Result<ScenarioDocument> {
    let mut doc = load_scenario(path)?;
    if let Some(pf) = pf {
        doc.system.power_factor = pf;
    }
    if let Some(b) = base {
        doc.scenario.base_convention = match b {
            BaseChoice::Pre => BaseConvention::PreEventTotal,
            BaseChoice::Post => BaseConvention::PostEventTotal,
        };
    }
    if let Some(f) = f_nominal {
        if !(f.is_finite() && f > 0.0) {
            return Err(inertia_core::Error::Validation {
                field: "fn".into(),
                reason: format!("nominal frequency must be > 0, got {f}"),
            }
            .into());
        }
        doc.system.f_nominal = f;
    }
    Ok(doc)
}

fn coi_method(choice: CoiChoice, doc: &ScenarioDocument) -> CoiMethod {
    match choice {
        CoiChoice::Average => CoiMethod::PlainAverage,
        CoiChoice::Weighted => CoiMethod::from_system(&doc.system),
    }
}

fn coi_name(choice: CoiChoice) -> &'static str {
    match choice {
        CoiChoice::Average => "average",
        CoiChoice::Weighted => "weighted",
    }
}

fn base_name(b: BaseConvention) -> &'static str {
    match b {
        BaseConvention::PreEventTotal => "pre_event_total",
        BaseConvention::PostEventTotal => "post_event_total",
    }
}

pub fn estimate(args: &EstimateArgs, argv: &[String]) -> Result<()> {
    let dataset = load_pmu_csv(&args.trace)?;
    let doc = resolved_scenario(&args.scenario, args.pf, args.base, args.f_nominal)?;
    let window = WindowSpec::new(
        args.window_start.unwrap_or(doc.window.offset_start),
        args.window_end.unwrap_or(doc.window.offset_end),
    )?;
    let method = coi_method(args.coi, &doc);

    let coi = coi_frequency(&dataset.traces, &method)?;
    let dp = per_unit_imbalance(&doc.scenario, doc.system.power_factor)?;
    let result = estimate_from_coi(
        &coi,
        doc.scenario.event_time,
        dp,
        doc.system.f_nominal,
        &window,
        DEFAULT_ROCOF_FLOOR,
    )?;

    let mut manifest = RunManifest::new("estimate", argv);
    manifest.input(&args.trace)?;
    manifest.input(&args.scenario)?;
    manifest.parameters = json!({
        "window_offset_start": window.offset_start,
        "window_offset_end": window.offset_end,
        "coi": coi_name(args.coi),
        "power_factor": doc.system.power_factor,
        "base_convention": base_name(doc.scenario.base_convention),
        "f_nominal": doc.system.f_nominal,
        "event_time": doc.scenario.event_time,
        "dp_pu": dp,
        "rocof_floor": DEFAULT_ROCOF_FLOOR,
    });
    manifest.seeds = json!({});

    if let Some(out) = &args.output {
        write_results_csv(ResultsTable::Estimate(&result), out)?;
        manifest.output(out);
    }
    if let Some(plot) = &args.emit_plot {
        write_plot(&coi, doc.scenario.event_time, &window, plot)?;
        manifest.output(plot);
    }
    manifest.write_sidecars()?;
    if let Some(path) = &args.manifest {
        manifest.write(path)?;
    }

    println!("h_estimate: {}", format_sig9(result.h_estimate));
    println!("rocof: {}", format_sig9(result.rocof));
    println!("r_squared: {}", format_sig9(result.r_squared));
    println!(
        "window: [{}, {}] s, {} samples",
        format_sig9(result.window.0),
        format_sig9(result.window.1),
        result.n_samples_used
    );
    Ok(())
}

/// `t_s,f_hz,in_window,fit_hz` over the whole COI series. Values are written
/// with shortest round-trip formatting so they parse back to the exact f64
/// the estimator saw.
fn write_plot(coi: &FrequencyTrace, event_time: f64, window: &WindowSpec, path: &Path) -> Result<()> {
    let win = extract_window(coi, event_time, window)?;
    let fit = fit_rocof(&win)?;
    let first = ((win.t_start - coi.t_start) / coi.dt).round() as usize;
    let span = first..first + win.len();

    let mut text = String::from("t_s,f_hz,in_window,fit_hz\n");
    for (k, &f) in coi.samples.iter().enumerate() {
        let t = coi.time_at(k);
        if span.contains(&k) {
            writeln!(text, "{t},{f},1,{}", fit.value_at(win.t_start, t))?;
        } else {
            writeln!(text, "{t},{f},0,")?;
        }
    }
    fs::write(path, text).with_context(|| format!("writing plot data {}", path.display()))
}

pub fn sweep(args: &SweepArgs, argv: &[String]) -> Result<()> {
    let dataset = load_pmu_csv(&args.trace)?;
    let doc = load_scenario(&args.scenario)?;
    let method = coi_method(args.coi, &doc);
    let cells = sweep_windows(
        &dataset.traces,
        &doc.scenario,
        &doc.system,
        &args.starts,
        &args.ends,
        args.reference_h,
        &method,
    )?;
    write_results_csv(ResultsTable::Sweep(&cells), &args.output)?;

    let mut manifest = RunManifest::new("sweep", argv);
    manifest.input(&args.trace)?;
    manifest.input(&args.scenario)?;
    manifest.parameters = json!({
        "starts": args.starts,
        "ends": args.ends,
        "reference_h": args.reference_h,
        "coi": coi_name(args.coi),
    });
    manifest.seeds = json!({});
    manifest.output(&args.output);
    manifest.write_sidecars()?;

    let failed = cells.iter().filter(|c| c.outcome.is_err()).count();
    println!("cells: {} ({} failed)", cells.len(), failed);
    if args.reference_h.is_some() {
        match best_window(&cells) {
            Some(best) => {
                let r = best.outcome.as_ref().expect("best cell succeeded");
                println!(
                    "best window: [{}, {}] s after event, h_estimate {}, relative_error {}",
                    format_sig9(best.window.offset_start),
                    format_sig9(best.window.offset_end),
                    format_sig9(r.h_estimate),
                    format_sig9(best.relative_error.unwrap_or(f64::NAN)),
                );
            }
            None => println!("best window: none (no cell succeeded)"),
        }
    }
    Ok(())
}

pub fn truth(args: &TruthArgs, argv: &[String]) -> Result<()> {
    let doc = load_scenario(&args.scenario)?;
    let excluded: Vec<&str> = match (&doc.scenario.tripped_generator, args.include_tripped) {
        (Some(id), false) => vec![id.as_str()],
        _ => Vec::new(),
    };
    let h = ground_truth_inertia(&doc.system.generators, &excluded, MvaBasis::Rated)?;
    if let Some(path) = &args.manifest {
        let mut manifest = RunManifest::new("truth", argv);
        manifest.input(&args.scenario)?;
        manifest.parameters = json!({ "include_tripped": args.include_tripped, "excluded": excluded });
        manifest.seeds = json!({});
        manifest.write(path)?;
    }
    println!("{h:.6}");
    Ok(())
}
