//! Command-line harness for xqlab: run configuration, the self-play
//! training loop with population rotations, analysis and evaluation
//! commands, and the HTTP play service.

pub mod agents;
pub mod commands;
pub mod config;
pub mod service;
pub mod train;

/// Process exit codes of the `xqlab` binary.
pub mod exit {
    pub const OK: i32 = 0;
    /// A command failed at run time (I/O, bad data, engine failure).
    pub const FAILURE: i32 = 1;
    /// Bad command-line usage.
    pub const USAGE: i32 = 2;
    /// The configuration file is missing, malformed or invalid.
    pub const CONFIG: i32 = 3;
}
