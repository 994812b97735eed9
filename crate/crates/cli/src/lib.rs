//! Library side of the `marginalia` command-line tool: configuration,
//! per-document pipeline, reporting, and the subcommand implementations.

pub mod commands;
pub mod config;
pub mod pipeline;
pub mod report;
