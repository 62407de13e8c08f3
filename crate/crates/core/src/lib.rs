//! Optimal sampling designs for a fractional Brownian motion under a hard
//! sample budget.
//!
//! Two design families are supported over a finite horizon `[0, T]`:
//!
//! * deterministic schedules, whose aggregate squared-error distortion has
//!   closed or quadrature form and is minimized by direct search
//!   ([`opt`]);
//! * level-triggered threshold policies, whose distortion is only
//!   observable through simulation and is optimized by Kiefer–Wolfowitz
//!   stochastic approximation ([`kw`]).
//!
//! [`fbm`] holds the process kernel (covariance, exact synthesis, Gaussian
//! conditioning), [`distortion`] the schedule functionals, [`level`] the
//! trigger semantics, per-path observables and the Monte Carlo oracle, and
//! [`tables`] the published reference values the harness reproduces.

pub mod distortion;
pub mod error;
pub mod fbm;
pub mod kw;
pub mod level;
pub mod opt;
pub mod quad;
pub mod tables;

pub use error::{Error, Result};
