//! Simulation of reflected Stratonovich (Marcus) SDEs with jumps.
//!
//! The solution pair `(X, K)` of
//!
//! ```text
//! X_t = X_0 + ∫ f(X_s) ∘ dZ_s + K_t,   X_t ∈ D̄
//! ```
//!
//! is approximated by projecting unreflected Marcus steps back onto the
//! closed domain. The crate is organised bottom-up:
//!
//! - [`geometry`]: domains, metric projection and inward normals;
//! - [`flow`]: coefficient fields and the unit-time ODE flow used for Marcus jumps;
//! - [`driver`]: driving paths, partitions, discretisation and quadratic variation;
//! - [`skorokhod`]: the discrete Skorokhod map and variation bookkeeping;
//! - [`schemes`]: projection, jump-adapted, Wong-Zakai and Marcus-Euler schemes;
//! - [`analysis`]: error metrics, convergence studies and the tangential-jump counterexample;
//! - [`cli`]: the config-driven experiment runner behind the `rsde` binary.

pub mod analysis;
pub mod cli;
pub mod driver;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod io;
pub mod schemes;
pub mod skorokhod;

pub use error::{Error, Result};

/// A point (or vector) of `R^d`.
pub type Point = nalgebra::DVector<f64>;

/// Builds a [`Point`] from a slice.
pub fn point(xs: &[f64]) -> Point {
    Point::from_column_slice(xs)
}
