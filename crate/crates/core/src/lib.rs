//! Numerics for the small-time behavior of the spectral heat content of a
//! one-dimensional symmetric alpha-stable process on a bounded interval.
//!
//! The crate provides four layers:
//!
//! * [`stable`] - the alpha-stable law itself: density inversion, tail
//!   probabilities, tail constants and Chambers-Mallows-Stuck sampling;
//! * [`heat`] - deterministic heat functionals on an interval: heat loss,
//!   fractional perimeter, the Dirichlet eigenseries at alpha = 2 and the
//!   per-regime limit constants;
//! * [`sim`] - a reproducible Monte Carlo engine for exit times, running
//!   extremes and the supremum/infimum decomposition of the heat content;
//! * [`asym`] / [`verify`] - closed-form supremum laws (Cauchy, Brownian),
//!   regime predictions and the convergence-verification pipeline.

pub mod asym;
pub mod error;
pub mod heat;
pub mod quad;
pub mod sim;
pub mod stable;
pub mod verify;

pub use error::{Error, Result};
pub use heat::Interval;
pub use sim::MCEstimate;
pub use stable::StableLaw;
