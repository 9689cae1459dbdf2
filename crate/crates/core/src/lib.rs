//! Movable-antenna full-duplex ISAC base station simulator.
//!
//! The crate models a mono-static sensing base station with movable transmit
//! and receive antennas serving uplink and downlink users, and jointly
//! optimizes beamformers, uplink powers and antenna positions for a weighted
//! sum of downlink rate, uplink rate and sensing mutual information.
//!
//! Module map:
//! - [`scenario`]: configuration, seeded channel realizations, initial layouts
//! - [`channel`]: steering vectors, multipath/SI channels and their position derivatives
//! - [`metrics`]: SINR, SCNR, rates and the weighted objective
//! - [`fp`]: quadratic-transform surrogate and closed-form auxiliary updates
//! - [`beamforming`]: closed-form block updates and the beamforming inner loop
//! - [`position`]: analytic position gradients, gradient ascent, alternating optimization
//! - [`pso`]: particle swarm over antenna layouts with per-particle refinement
//! - [`experiments`]: scheme runner, parameter sweeps and table output

pub mod beamforming;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod fp;
pub mod linalg;
pub mod metrics;
pub mod position;
pub mod pso;
pub mod rng;
pub mod scenario;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};

pub use num_complex::Complex64;

/// Complex column vector.
pub type CVec = nalgebra::DVector<Complex64>;
/// Complex dense matrix.
pub type CMat = nalgebra::DMatrix<Complex64>;
