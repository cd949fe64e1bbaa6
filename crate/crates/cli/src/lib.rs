//! Command-line front end: config loading, benchmarks and CSV output for the
//! `redo` crate.

pub mod bench;
pub mod commands;
pub mod config;
pub mod output;

use std::fmt;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Bad flags or config values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Exit status for a failed command.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return EXIT_CONFIG;
    }
    let numeric = err.downcast_ref::<redo::RedoError>().is_some()
        || err.downcast_ref::<redo::linalg::LinalgError>().is_some()
        || err.downcast_ref::<redo::spin::SpinError>().is_some()
        || err.downcast_ref::<redo::grape::GrapeError>().is_some()
        || err.downcast_ref::<redo::freeze::FreezeError>().is_some();
    if numeric {
        EXIT_NUMERIC
    } else {
        1
    }
}
