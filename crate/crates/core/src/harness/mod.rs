//! Experiment plumbing: configuration, result tables, rasters and the
//! acceptance suites.

pub mod commands;
pub mod config;
pub mod convergence;
pub mod egorov;
pub mod raster;
pub mod results;
pub mod suites;

pub use config::{config_template, ExperimentConfig};
pub use results::{ResultRow, ResultTable};
pub use commands::{run_command, Command, CommandOutput};
pub use suites::{Outcome, Suite};
