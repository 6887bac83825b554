//! Semi-Markov availability and reliability analysis of VM-based service
//! function chains with software aging and rejuvenation.
//!
//! The pipeline is: [`topology`] and [`statespace`] describe the system,
//! [`kernel`] turns holding-time laws into clock races, [`solver`] produces
//! steady-state availability and MTTF, [`sensitivity`] differentiates them,
//! and [`simulator`] checks them by Monte Carlo. [`ctmc`] is an independent
//! reference for all-exponential models.

pub mod cli;
pub mod config;
pub mod ctmc;
pub mod distributions;
pub mod error;
pub mod kernel;
pub mod plot;
pub mod quadrature;
pub mod report;
pub mod sensitivity;
pub mod simulator;
pub mod solver;
pub mod statespace;
pub mod topology;

pub use distributions::{Distribution, Family};
pub use error::{Error, Result};
pub use solver::{evaluate, evaluate_mttf, SolverOptions};
pub use topology::{ParameterSet, Topology};
