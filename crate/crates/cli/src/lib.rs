//! Configuration, pipeline and reporting for `smodal`.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod report;

pub use config::{parse_grid, Config, WAVE_DEMO};
pub use error::CliError;
pub use pipeline::{prepare, run_pipeline, Overrides, Prepared, Request};
pub use report::{OutputSink, RunReport};
