//! Configuration-driven runner for desk-scale through-wall SAR experiments:
//! data simulation, offline reduced models, reconstructions and exports.

pub mod config;
pub mod experiment;
pub mod export;
pub mod noise;
pub mod offline;
pub mod simulate;

pub use config::{ExperimentConfig, ExperimentKind};
pub use experiment::{run_experiment, run_with_rom, Outcome, Summary};
