//! Configuration, experiment drivers and file formats behind the `lasso` CLI.

pub mod config;
pub mod experiments;
pub mod io;

pub use config::{ExperimentConfig, PotentialSpec, ToleranceConfig};
pub use experiments::{
    emit_plot_data, forward, run_check, run_forward, run_invert, run_roundtrip, run_subspectrum,
    RoundtripReport,
};
