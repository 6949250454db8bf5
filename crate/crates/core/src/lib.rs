//! Distributed weighted-least-squares state estimation over sensor networks.
//!
//! Every node of a connected sensor network holds a local linear measurement
//! of a shared state. The nodes agree on the centralized weighted
//! least-squares estimate by running an ADMM consensus iteration that only
//! exchanges values between one-hop neighbors, and fuse their information
//! matrices with an average-consensus diffusion. The centralized information
//! filter is implemented alongside as the benchmark.
//!
//! Modules:
//! - [`models`]: system/sensor models, estimates, stacked WLS form
//! - [`cif`]: centralized information filter and closed-form WLS
//! - [`network`]: sensor-network topology and geometric graph generation
//! - [`consensus`]: ADMM and average-consensus iterations
//! - [`dwlse`]: the per-timestep distributed estimator
//! - [`sim`]: tracking scenario, Monte Carlo campaigns and metrics

pub mod cif;
pub mod consensus;
pub mod dwlse;
pub mod error;
pub mod linalg;
pub mod models;
pub mod network;
pub mod sim;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
pub use models::{
    stack_wls, validate_models, ModelBundle, SensorModel, StackedWlsProblem, StateEstimate,
    StateVector, SystemModel,
};
pub use network::NetworkTopology;
