//! Experiment harness around the scoring engine: config-file parsing, grid
//! execution with resumable CSV output, normalized reports and named
//! reproduction presets.

pub mod config;
pub mod error;
pub mod report;
pub mod repro;
pub mod rows;
pub mod runner;

pub use config::{load_config, parse_config, ExperimentConfig};
pub use error::{HarnessError, Result};
pub use report::{make_report, write_report_csv, ReportRow};
pub use rows::{read_results, ResultRow};
pub use runner::{run_experiment, RunOptions, RunOutcome};
