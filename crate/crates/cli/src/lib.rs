//! Named, reproducible experiments for the `ghopf` library.

pub mod config;
pub mod presets;
pub mod run;

pub use config::{ExperimentConfig, Overrides};
pub use run::{run, Check, Outcome};
