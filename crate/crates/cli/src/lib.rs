//! Config-driven front end: parsing, command dispatch and file output.

pub mod check;
pub mod commands;
pub mod config;

pub use commands::{cmd_jacobian, cmd_optimize, cmd_workspace, CliError};
pub use config::{parse_config, parse_pose, RunConfig};
