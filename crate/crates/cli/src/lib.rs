//! Command-line front end for `magbottle-core`: scenario configuration,
//! batch bound verification and CSV output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod run;

pub use config::{parse_config, ConfigError, RunConfig, Scenario};
pub use run::{run, write_outputs, Outcome, Status};
