//! Experiment driver for the `savark-core` integrators: INI run
//! configurations, energy and snapshot output, temporal convergence studies,
//! tableau audits and the prediction-correction equivalence check.

pub mod audit;
pub mod config;
pub mod converge;
pub mod equiv;
pub mod error;
pub mod output;
pub mod registry;
pub mod run;

pub use config::{RunConfig, SnapshotFormat};
pub use error::{HarnessError, Result};
