//! Scenario-file front end for the compliant reference governor: parses
//! TOML scenarios, runs closed-loop simulations and writes trace CSVs,
//! JSON summaries and SVG plots.

pub mod commands;
pub mod config;
pub mod error;
pub mod expr;
pub mod output;
pub mod plant;
pub mod plot;

pub use config::{load, ScenarioConfig};
pub use error::{CliError, Result};
pub use plant::Plant;
