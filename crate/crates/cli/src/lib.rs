//! Scenario files, a runner for their assertions, and the subcommands behind `modclass`.

pub mod commands;
pub mod env;
pub mod report;
pub mod runner;
pub mod scenario;

pub use report::{Report, Verdict};
pub use runner::{run, RunOptions};
pub use scenario::{parse_scenario, Scenario, ScenarioError};
