//! Experiment harness for the fairmab simulator: config files, scenario
//! presets, seeded parallel replication, and CSV artifact emission.

pub mod config;
pub mod harness;

pub use harness::{
    preset, run_experiment, simulate_run, ExperimentOutput, ExperimentSpec, HarnessError,
    PolicyAggregate, PolicyKind, PolicySpec, PresetSpec, RunOptions, ScenarioTemplate,
};
