//! Command-line front end for `shortap-core`: `key=value` configuration,
//! command dispatch and deterministic JSON reports.

pub mod commands;
pub mod config;
pub mod report;
pub mod suite;

pub use commands::{run, RunError};
pub use config::{parse_config, Command, ConfigError, RunConfig};
pub use report::{Report, ReportBody, SCHEMA_VERSION};
