//! Experiment configuration, sweeps, reports and verification suites behind the CLI.

pub mod bandwidth;
pub mod config;
pub mod experiment;
pub mod output;
pub mod reports;
pub mod verify;

pub use bandwidth::{
    run_bandwidth_search, search_branch, BandwidthResult, BandwidthRow, RankProbe,
};
pub use config::{BandwidthSearchSpec, Branch, ExperimentConfig, Suite};
pub use experiment::{run_experiment, setup_trial, ExperimentOutput, ExperimentRow, SummaryRow};
pub use output::{csv_string, fmt_f64, write_csv, write_csv_to, CsvRecord};
pub use reports::{run_interactions, run_spectra, InteractionRow, SpectrumRow};
pub use verify::{run_suites, SuiteResult};
