//! Command line, built-in suites and on-disk outputs.

pub mod cli;
pub mod output;
pub mod suite;

pub use cli::cli_main;
pub use output::emit_plot_data;
pub use suite::{run_suite, ExperimentSuite, SuiteName};
