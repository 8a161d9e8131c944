//! Command-line runner: config ingestion, subcommands and run folders.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod record;

pub use commands::{
    bound_pair, cmd_compare, cmd_exact1d, cmd_limit, cmd_optimize, cmd_solve, cmd_theta, quantile_resample, run,
    Command, Invocation,
};
pub use config::{apply_override, BallsSpec, FSpec, RunConfig};
pub use error::{CliError, CliResult};
pub use record::RunRecord;
