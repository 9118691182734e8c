//! Scenario runner for `modscat-core`: TOML scenarios, initial data,
//! binary and CSV artifacts, reports and the `modscat` command line.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod config;
pub mod error;
pub mod formats;
pub mod init;
pub mod pipeline;
pub mod report;

pub use config::Scenario;
pub use error::{ErrorKind, RunError, RunResult};
