//! Numerical core for weakly self-avoiding walk networks and the 4-d
//! |φ|⁴ model near criticality.
//!
//! The crate is `no_std` (with `alloc`). It provides:
//!
//! * [`lattice`]: discrete tori, the lattice Laplacian and scale bookkeeping.
//! * [`greens`]: massive/massless lattice Green functions on tori and ℤ^d,
//!   a Neumann-series walk representation and the bubble diagram.
//! * [`covariance`]: heat-kernel slab decomposition of the Green function,
//!   per-scale moments and the perturbative difference operator.
//! * [`rgflow`]: bulk and observable coupling flows, exponents and
//!   correlation-amplitude predictions.
//! * [`models`]: exact tiny-volume oracles, Monte Carlo estimators for walk
//!   networks and the lattice spin model.
//!
//! Everything that touches the file system, threads or the command line
//! lives in the `critlog` companion crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod covariance;
pub mod error;
pub mod greens;
pub mod lattice;
pub mod models;
pub mod quad;
pub mod rgflow;
pub mod special;

pub use error::{Error, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
