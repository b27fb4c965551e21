//! Library half of the `qcr` command-line tool.

pub mod cli;
pub mod commands;
pub mod input;
pub mod json;
pub mod report;
