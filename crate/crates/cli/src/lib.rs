//! Configuration, experiment drivers and CSV output behind the `mr-qmem` binary.

pub mod config;
pub mod run;

pub use config::{ConfigError, RawConfig, RunConfig};
pub use run::{run, CliError, Command, RunReport};
