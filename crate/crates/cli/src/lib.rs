//! Configuration, presets, orchestration and output for the `pom-qsd` binary.

pub mod config;
pub mod output;
pub mod presets;
pub mod runner;

pub use config::{parse_config, ConfigError, RunConfig};
pub use presets::FigurePreset;
