//! Batch front end for `hidim`: run configuration files, SVG charts and the
//! subcommand implementations shared by the binary and its tests.

pub mod commands;
pub mod config;
pub mod svg;

pub use config::{ConfigError, RunConfig};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILED: i32 = 1;
    pub const INVALID_CONFIG: i32 = 2;
    pub const INVALID_CELLS: i32 = 3;
    pub const UNWRITABLE_OUTPUT: i32 = 4;
    pub const INCONCLUSIVE: i32 = 5;
}

/// Environment variable overriding the configured thread count.
pub const THREADS_ENV: &str = "HIDIM_THREADS";
