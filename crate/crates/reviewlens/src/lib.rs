//! Files, providers, worker pool and command line around `reviewlens-core`.

pub mod cli;
pub mod error;
pub mod exec;
pub mod io;
pub mod logging;
pub mod par;
pub mod providers;

pub use error::{CliError, CliResult};
