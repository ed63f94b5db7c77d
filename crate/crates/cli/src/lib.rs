//! `qlax` command-line runner: configuration, suite execution and JSON reports.

pub mod cli;
pub mod config;
pub mod run;

pub use config::{ConfigError, ConfigFile, RunConfig, Suite};
pub use run::{run, RunReport, SCHEMA_VERSION};

/// Process exit codes.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const CHECKS_FAILED: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const IO: i32 = 3;
}
