//! Experiment harness: configuration, the four studies and result output.

pub mod config;
pub mod output;
pub mod studies;

pub use config::{DeltaSpec, Snr, SnrUnit, SystemConfig};
pub use output::{emit_results, to_csv, to_json, ExperimentResult, OutputFormat, Record, StageTiming};
pub use studies::{with_threads, Scenario, Study};
