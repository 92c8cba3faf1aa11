//! Power-system inertia estimation from PMU frequency traces.
//!
//! After a sudden loss of generation the system frequency falls at a rate set
//! by the stored rotational energy of the machines still online. Fitting that
//! rate of change of frequency (ROCOF) over a post-event window and dividing
//! the per-unit power imbalance by it yields the system inertia constant.
//!
//! - [`model`]: domain types and the inertia / per-unit imbalance definitions
//! - [`simulator`]: swing-equation simulator with known ground truth
//! - [`estimator`]: COI aggregation, windowing, OLS ROCOF, inertia estimates
//! - [`ingestion`]: PMU CSV, scenario JSON and result table formats

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod estimator;
pub mod ingestion;
pub mod model;
pub mod simulator;

pub use error::{Error, Result};
pub use estimator::{
    best_window, coi_frequency, estimate_from_coi, estimate_from_traces, estimate_generator_inertia,
    estimate_system_inertia, extract_window, fit_rocof, ground_truth_inertia, sweep_windows, CoiMethod,
    GeneratorEstimate, MvaBasis, QualityWarning, RocofFit, SweepCell, WindowSpec, DEFAULT_ROCOF_FLOOR,
};
pub use ingestion::{
    load_pmu_csv, load_scenario, write_pmu_csv, write_results_csv, PmuDataset, ResultsTable, ScenarioDocument,
};
pub use model::{
    inertia_constant_from_physical, per_unit_imbalance, BaseConvention, DisturbanceScenario, EstimateResult,
    FrequencyTrace, GeneratorSpec, SystemSpec,
};
pub use simulator::{
    inject_artifacts, simulate_aggregate, simulate_aggregate_channels, simulate_multimachine, ArtifactModel,
    GovernorModel, MultimachineRun, SimConfig,
};
