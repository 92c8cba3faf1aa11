//! `inertia`: simulate disturbances, estimate system inertia from PMU traces,
//! sweep fitting windows and report fleet ground truth.
//!
//! Exit codes: 0 success, 2 bad input or validation failure, 3 numerical
//! failure (degenerate slope or base, diverged network solve).

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "inertia",
    version,
    about = "Power-system inertia estimation from frequency traces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a disturbance and write PMU-style frequency traces.
    Simulate(SimulateArgs),
    /// Estimate system inertia from a PMU trace file.
    Estimate(EstimateArgs),
    /// Estimate over a grid of fitting windows.
    Sweep(SweepArgs),
    /// Print the MVA-weighted fleet inertia of a scenario.
    Truth(TruthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Aggregate,
    Multimachine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CoiChoice {
    Average,
    Weighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaseChoice {
    Pre,
    Post,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario JSON file.
    pub scenario: PathBuf,
    #[arg(long, value_enum, default_value = "aggregate")]
    pub model: Model,
    /// Output PMU CSV; a `.manifest.json` sidecar is written next to it.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Override the simulated duration (s).
    #[arg(long)]
    pub duration: Option<f64>,
    /// Override the artifact RNG seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the measurement noise standard deviation (Hz).
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    /// Number of PMU channels for the aggregate model (ids pmu1..pmuN).
    #[arg(long)]
    pub channels: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// PMU CSV file.
    pub trace: PathBuf,
    /// Scenario JSON file supplying the disturbance and system data.
    pub scenario: PathBuf,
    /// Window start, seconds after the event (default: scenario window, else 1).
    #[arg(long)]
    pub window_start: Option<f64>,
    /// Window end, seconds after the event (default: scenario window, else 4).
    #[arg(long)]
    pub window_end: Option<f64>,
    #[arg(long, value_enum, default_value = "average")]
    pub coi: CoiChoice,
    /// Override the power factor.
    #[arg(long)]
    pub pf: Option<f64>,
    /// Override the per-unit base convention.
    #[arg(long, value_enum)]
    pub base: Option<BaseChoice>,
    /// Override the nominal frequency (Hz).
    #[arg(long = "fn")]
    pub f_nominal: Option<f64>,
    /// Results CSV.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Plot-data CSV of the centre-of-inertia series, window flag and fit line.
    #[arg(long)]
    pub emit_plot: Option<PathBuf>,
    /// Manifest path when no output file is requested.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub trace: PathBuf,
    pub scenario: PathBuf,
    /// Comma-separated window starts (s after the event).
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub starts: Vec<f64>,
    /// Comma-separated window ends (s after the event).
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub ends: Vec<f64>,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Reference inertia for relative errors; the best window is printed.
    #[arg(long)]
    pub reference_h: Option<f64>,
    #[arg(long, value_enum, default_value = "average")]
    pub coi: CoiChoice,
}

#[derive(Debug, Args)]
pub struct TruthArgs {
    pub scenario: PathBuf,
    /// Keep the tripped generator in the average.
    #[arg(long)]
    pub include_tripped: bool,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<inertia_core::Error>()) {
        Some(e) if e.is_numerical() => 3,
        _ => 2,
    }
}

/// Error chain joined with ": ", skipping causes already spelled out by
/// the message above them.
fn describe(err: &anyhow::Error) -> String {
    let mut text = String::new();
    for cause in err.chain() {
        let part = cause.to_string();
        if text.contains(&part) {
            continue;
        }
        if !text.is_empty() {
            text.push_str(": ");
        }
        text.push_str(&part);
    }
    text
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let argv: Vec<String> = std::env::args_os()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a, &argv),
        Command::Estimate(a) => commands::estimate(&a, &argv),
        Command::Sweep(a) => commands::sweep(&a, &argv),
        Command::Truth(a) => commands::truth(&a, &argv),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            match err.chain().find_map(|e| e.downcast_ref::<inertia_core::Error>()) {
                Some(core) => eprintln!("error [{}]: {}", core.code(), describe(&err)),
                None => eprintln!("error: {}", describe(&err)),
            }
            ExitCode::from(exit_code(&err))
        }
    }
}
