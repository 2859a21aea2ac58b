//! A numerical laboratory for multilayer QAOA and continuous quantum
//! annealing on random QUBO ensembles.
//!
//! The pipeline: sample fully connected Gaussian QUBO instances
//! ([`problems`]), simulate and optimize multilayer QAOA circuits exactly
//! ([`simulator`], [`optimizer`]), fit the output distributions to bimodal
//! pseudo-Boltzmann laws ([`thermofit`]), extract and rescale integrated-angle
//! trajectories ([`trajectory`]), integrate the equivalent continuous
//! annealing dynamics ([`annealer`]), and orchestrate seeded ensembles with
//! persisted rows and aggregate reports ([`ensemble`], [`report`]).
//!
//! Everything is deterministic: fixed seeds give bit-identical results for
//! any worker count. The `parallel` feature (default) enables rayon-based
//! data parallelism; disabling it selects a sequential fallback with
//! identical numerics.

pub mod annealer;
pub mod ensemble;
pub mod error;
pub mod exec;
pub mod numerics;
pub mod optimizer;
pub mod problems;
pub mod records;
pub mod report;
pub mod sampling;
pub mod simulator;
pub mod thermofit;
pub mod trajectory;

pub use error::{Error, Result};
