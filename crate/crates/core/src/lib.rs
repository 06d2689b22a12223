//! Nonholonomic mechanical systems realized by strong viscous friction.
//!
//! A linear velocity constraint `A(q) v = 0` carves an admissible subspace
//! (the distribution `D`) out of each tangent space. Replacing the ideal
//! constraint reaction with a viscous contact force of stiffness `1/eps`
//! turns the constrained system into a slow/fast one whose trajectories
//! relax onto an attractive slow manifold close to `D`. This crate builds
//! the geometric operators behind that picture (metric, Christoffel
//! symbols, covariant derivatives, projections, the friction operator and
//! its partial inverse) and uses them to evaluate recursive slip-velocity
//! approximations of the slow manifold, assemble reduced equations of
//! motion, and run convergence studies against the full stiff dynamics.
//!
//! Modules follow the pipeline:
//!
//! - [`geometry`]: metric fields, Christoffel data, covariant derivatives
//!   of vector fields, (1,1)-tensor fields and nonlinear bundle maps.
//! - [`constraints`]: distribution frames, the G-orthogonal projection
//!   pair, the Rayleigh friction operator and its partial inverse.
//! - [`slow_manifold`]: slip sections `h1`, `h2`, truncated slip maps and
//!   residuals of the generating/invariance equations.
//! - [`dynamics`]: right-hand sides for the full, zeroth- and first-order
//!   models plus a fixed-step RK4 integrator and energy diagnostics.
//! - [`systems`]: built-in vertical rolling disk (with closed-form oracle)
//!   and a config-driven system loader.
//! - [`validation`]: the invariant suites behind `nonholo validate`.
//! - [`cli`]: batch commands (`simulate`, `slip`, `convergence`,
//!   `validate`) emitting deterministic CSV.

pub mod cli;
pub mod config;
pub mod constraints;
mod diff;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod slow_manifold;
pub mod systems;
pub mod validation;

pub use error::{Error, Result};

/// Dense column vector of `f64`, used for configurations, velocities and
/// covectors alike (components are always coordinate-basis components).
pub type Vector = nalgebra::DVector<f64>;
/// Dense `f64` matrix.
pub type Matrix = nalgebra::DMatrix<f64>;
