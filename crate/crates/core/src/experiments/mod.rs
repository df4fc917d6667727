//! Experiment harness: configuration, reference potentials, end-to-end runs
//! and CSV reports.

pub mod config;
pub mod report;
pub mod run;
pub mod truth;

pub use config::{ExperimentConfig, Scenario, TruthSource};
pub use report::{report_csv, report_series};
pub use run::{run_experiment, run_series, RunArtifacts};
pub use truth::{load_egm2008, random_potential};
