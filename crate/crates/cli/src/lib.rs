//! Configuration parsing, dataset emission and job execution behind the
//! `speckle-dop` binary.

pub mod config;
pub mod emit;
pub mod run;

pub use config::{parse_config, preset, serialize_config, RunConfig};
pub use emit::emit_figure_datasets;
pub use run::{execute, RunError};
