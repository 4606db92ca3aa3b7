//! Monte Carlo estimation of small-target hitting probabilities for reflected
//! Brownian motion, together with the analytic machinery needed to verify the
//! estimates: Schwarz-Christoffel conformal maps, complete elliptic integrals,
//! closed-form harmonic measures, and a finite-difference Laplace oracle.
//!
//! The crate is organised around a catalog of simulation domains
//! ([`geometry::DomainSpec`]) whose boundaries are partitioned into a small
//! target, an absorbing part, and a reflecting part
//! ([`geometry::BoundaryPartition`]). The [`sde`] module simulates reflected
//! paths and estimates the probability of hitting the target before the
//! absorbing boundary; the [`conformal`] and [`oracles`] modules provide
//! independent reference values for those probabilities.

pub mod cli;
pub mod conformal;
pub mod geometry;
pub mod oracles;
pub mod rng;
pub mod sde;
pub mod stats;

pub use conformal::ComplexValue;
pub use geometry::{BoundaryClass, BoundaryPartition, DomainSpec};
pub use rng::{seed_path_rng, RngStream};
pub use sde::{HitEstimate, PathOutcome, SimConfig};
pub use stats::{binomial_estimate, Estimate};
