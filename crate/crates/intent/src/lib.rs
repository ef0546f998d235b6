//! File formats, scenario configuration and subcommands for the `intent`
//! command-line tool.

pub mod cmd;
pub mod config;
pub mod io;
pub mod report;
