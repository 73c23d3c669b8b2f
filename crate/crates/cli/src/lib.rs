//! Command-line pipeline for regional price-panel cointegration analysis:
//! TOML configuration, stage orchestration and table output.

pub mod app;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod report;

pub use error::CliError;
