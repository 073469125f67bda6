//! Config parsing, run orchestration and CSV export for the `qdgate` tool.

pub mod config;
pub mod run;

pub use config::{parse_config, parse_config_with_mode, render, ConfigError, Mode, RunSpec};
pub use run::{run, RunError, RunReport};
