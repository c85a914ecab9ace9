//! Command-line driver: JSON configurations, figure presets and the
//! CSV/JSON/SVG writers behind the `commuteflow` binary.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod presets;

pub use cli::main_with_args;
pub use commands::{reproduce, run_config, Outcome};
pub use config::RunConfig;
pub use error::{CliError, CliResult};
pub use presets::{Preset, PresetId};
