//! Batch reproducibility surface: versioned configs, truth manifests,
//! the simulate / separate / evaluate / run-experiment commands and report
//! aggregation.
//!
//! All randomness derives from one master seed; scenario `i` uses
//! [`child_seed`]`(master, i)`.

mod commands;
mod config;
mod manifest;
mod report;

pub use commands::{
    evaluate, run_experiment, separate, simulate, write_separation, EvaluateRequest, ExperimentOutcome,
    RECORDS_FILE, SCENARIO_DIR, SUMMARY_FILE, SUMMARY_TABLE_FILE, TIMING_FILE,
};
pub use config::{
    child_seed, parse_config, read_config, scenario_id, BrirSource, DescriptorPreset, ExperimentSpec,
    GeneratorSpec, PlannedScenario, WeightsSpec, BRIR_ROOT_ENV, CONFIG_VERSION,
};
pub use manifest::{
    output_file, read_scenario, reference_file, synthetic_oracle, track_file, write_scenario, ScenarioFiles,
    TruthManifest, MANIFEST_VERSION, MIXTURE_FILE, ORACLE_FILE, TRUTH_FILE,
};
pub use report::{read_records, summarize, to_json_line, write_records, ErrorRecord, ReportLine, Summary, TimingReport};
