//! Library side of the `hybridgnn` command-line tool, split out so the
//! commands can be driven from tests.

pub mod artifact;
pub mod commands;
pub mod config;
