//! Scenario files, runs, sweeps and their CSV/JSON outputs on top of
//! `solidify-core`.

pub mod config;
pub mod scenario;

pub use config::{emit_config, parse_config, ConfigError, ScenarioConfig, SweepParameter};
pub use scenario::{run_refinement, run_scenario, run_sweep, RunOutput, Summary, SweepRow};
