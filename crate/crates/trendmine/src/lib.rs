//! File formats, run configuration, the batch command line and a read-only
//! report server on top of `trendmine-core`.

pub mod artifacts;
pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod serve;

pub use error::{Error, Result};
