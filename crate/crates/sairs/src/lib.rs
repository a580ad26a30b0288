//! Config files, CSV export, parallel ensembles and the command-line driver
//! for [`sairs_core`].

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod run;
pub mod verify;

pub use commands::{run_command, Command};
pub use config::{parse_config, Overrides, RunConfig};
pub use error::CliError;
