//! Fejér-regularized semi-implicit upwind solver for two interacting periodic
//! dislocation densities on the unit torus.

pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod fields;
pub mod io;
pub mod scheme;
pub mod spectral;

pub use error::{Error, Result};
pub use experiments::{preset, refinement_study, InitialProfile, Preset, RefinementReport};
pub use fields::{GridField, State};
pub use scheme::{run, CflMode, RunOutput, SimParams, StressKind, StressSpec};
