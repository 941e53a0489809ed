//! SIS epidemic dynamics with a stochastically perturbed transmission rate.
//!
//! The infected count of the classic SIS model has an explicit solution that
//! depends on the transmission rate only through its time integral. Replacing
//! that integral by `beta t + Y_t` for a mean-reverting perturbation `Y` (or
//! a general drift-plus-noise process `Z`) yields a stochastic model that can
//! be evaluated three independent ways:
//!
//! - [`closedform`]: the exact solution formula, evaluated in the log domain
//!   so exponents of hundreds do not overflow;
//! - [`sde`]: Euler-Maruyama on the equivalent Ito system, driven by the same
//!   Brownian increments so the two routes can be compared pathwise;
//! - [`sde::integrate_wong_zakai`]: the smoothed random ODE over a polygonal
//!   noise skeleton, which converges to the same solution as the mesh
//!   shrinks.
//!
//! [`analysis`] adds trajectory classification (extinct / persistent /
//! inconclusive), reproducible Monte Carlo ensembles, and strong-convergence
//! studies; [`paths`] generates the underlying noise.

pub mod analysis;
pub mod closedform;
pub mod error;
pub mod grid;
pub mod logsumexp;
pub mod paths;
pub mod rng;
pub mod sde;

pub use analysis::{ClassifierConfig, Route, Scenario, TrajectoryVerdict, Verdict};
pub use closedform::ModelParams;
pub use error::Error;
pub use grid::{PathKind, SamplePath, TimeGrid};
pub use paths::{NoiseSpec, OuParams};
pub use sde::IntegratorConfig;

pub type Result<T> = std::result::Result<T, Error>;
