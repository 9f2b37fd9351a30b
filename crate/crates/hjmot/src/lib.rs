//! File formats and command-line front end for [`hjmot_core`].
//!
//! Instances, solutions, certificate reports and generator specs are JSON;
//! reduced cost tables, Monge maps and probe output are CSV.

pub mod cli;
mod error;
pub mod export;
pub mod format;

pub use error::{Error, Result};
