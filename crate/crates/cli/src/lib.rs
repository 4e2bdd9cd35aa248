//! Scenario-driven front end for the exact homological-algebra engine:
//! file formats, report serialization, and the check pipelines behind each
//! subcommand.

pub mod commands;
pub mod report;
pub mod scenario;
