//! Stochastic SAIRS epidemic model with two saturated incidences.
//!
//! The crate is `no_std` (with `alloc`) and carries no IO. It provides:
//!
//! - [`model`]: drift and diffusion of the deterministic, stochastic and
//!   controlled systems;
//! - [`thresholds`]: closed-form persistence and extinction thresholds;
//! - [`integrator`] and [`noise`]: seeded Milstein stepping, a classical RK4
//!   reference and reproducible Gaussian streams;
//! - [`ensemble`]: order-independent reduction of many trajectories;
//! - [`analysis`]: time averages, persistence/extinction verdicts and
//!   empirical stationary histograms;
//! - [`control`]: objective, Hamiltonian, adjoint dynamics, control
//!   projections and the forward-backward sweep.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod analysis;
pub mod control;
pub mod ensemble;
mod error;
pub mod integrator;
pub mod model;
pub mod noise;
pub mod thresholds;

pub use error::Error;
pub use model::{Component, ControlValue, ModelParams, State};

pub type Result<T, E = Error> = core::result::Result<T, E>;
