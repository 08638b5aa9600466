//! File formats, HTTP backends, experiment export and the `maskfill` command
//! line, on top of [`maskfill_core`].

pub mod cli;
pub mod conformance;
pub mod error;
pub mod export;
pub mod format;
pub mod remote;
pub mod synthetic;

pub use error::{Error, Result};
pub use maskfill_core;
