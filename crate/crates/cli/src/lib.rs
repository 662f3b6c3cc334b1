//! Command-line front end: TOML run configs in, CSV and JSON artifacts out.

// `!(a > b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{RunConfig, Source};
pub use error::CliError;
pub use run::{execute, Invocation, Outcome, Status};
