//! Quantum phase synchronization and Gaussian correlations of two optically
//! coupled optomechanical oscillators.
//!
//! The classical mean-field limit cycle is integrated with fixed-step RK4, the
//! linearized fluctuations are carried as an 8x8 symmetrized covariance
//! matrix along that trajectory, and synchronization, discord and
//! logarithmic negativity of the two mechanical modes are read off in the
//! frame co-rotating with the classical phases.

pub mod error;
pub mod fluctuations;
pub mod meanfield;
pub mod measures;
pub mod model;
pub mod simulation;
pub mod sweep;

pub use error::{ConfigError, Error, Result};
pub use model::{standard_config, validate, SystemConfig, Topology};
pub use simulation::{simulate, RunSummary, Simulation};
