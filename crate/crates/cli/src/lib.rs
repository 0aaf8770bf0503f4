//! Command-line front end for the two-species dislocation simulator.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{cmd_audit, cmd_preset, cmd_refine, cmd_run, load_config, AuditSummary, RunSummary};
pub use config::{parse_config, FieldKind, RunConfig};
pub use error::CliError;
