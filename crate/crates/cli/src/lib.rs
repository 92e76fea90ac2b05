//! Config-driven front end: each run writes CSV tables stamped with the
//! config hash, and `regress` replays a golden directory.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod regress;

pub use commands::{run, RunFlags};
pub use config::{Command, RunConfig};
pub use error::{CliError, CliResult};
pub use semiclassical_core as core;
