//! Library side of the `crowdstop` command-line tool: configuration loading
//! and the subcommand implementations.

pub mod commands;
pub mod config;

pub use commands::{
    cmd_check_stop, cmd_convert, cmd_run, cmd_sweep, oracle_from_curve, oracle_from_log,
    summary_table, OracleRow, SweepAxis, ORACLE_HEADER,
};
pub use config::{FileConfig, Overrides, DEFAULT_OUT, OUT_ENV};
