//! Command-line harness: run configuration, experiment commands, run
//! directories and report emission.

pub mod cli;
pub mod commands;
pub mod config;
pub mod manifest;
pub mod svg;
